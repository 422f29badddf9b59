//! Contention-free SR/SG/ACK protocol.
//!
//! A UE with a non-empty buffer sends a scheduling request every TTI. It
//! transmits only the TTI after it received a grant and deletes its oldest
//! SDU only after an ACK. The BS ACKs every decoded PDU and grants one of
//! the remaining requesters, chosen uniformly at random.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{
    BsAction, BsView, EnvAction, EnvError, EpisodeStats, SimConfig, UeAction, UeView,
};
use crate::rng::{self, streams, StreamRng};
use crate::rollout::{run_episode, Controller, TraceRow};

pub const UCM_NULL: usize = 0;
pub const UCM_SR: usize = 1;
pub const DCM_NULL: usize = 0;
pub const DCM_SG: usize = 1;
pub const DCM_ACK: usize = 2;

pub fn ue_policy(buffer_len: usize, last_dcm: usize) -> UeAction {
    let ucm = if buffer_len > 0 { UCM_SR } else { UCM_NULL };
    let env_action = match last_dcm {
        DCM_SG if buffer_len > 0 => EnvAction::Transmit,
        DCM_ACK if buffer_len > 0 => EnvAction::Delete,
        _ => EnvAction::Nothing,
    };
    UeAction { env_action, ucm }
}

/// `obs` is the BS channel observation (`u + 1` for a PDU decoded from UE
/// `u`). At most one SG is issued per TTI.
pub fn bs_policy(obs: usize, ucms: &[usize], rng: &mut StreamRng) -> BsAction {
    let n = ucms.len();
    let mut dcm = vec![DCM_NULL; n];
    let decoded = (1..=n).contains(&obs).then(|| obs - 1);
    if let Some(u) = decoded {
        dcm[u] = DCM_ACK;
    }
    let requesters: Vec<usize> = ucms
        .iter()
        .enumerate()
        .filter(|&(u, &m)| m == UCM_SR && Some(u) != decoded)
        .map(|(u, _)| u)
        .collect();
    match requesters.len() {
        0 => {}
        1 => dcm[requesters[0]] = DCM_SG,
        k => dcm[requesters[rng::index(rng, k)]] = DCM_SG,
    }
    BsAction { dcm }
}

pub fn check_vocabularies(config: &SimConfig) -> Result<(), EnvError> {
    if config.ul_vocab < 2 {
        return Err(EnvError::InvalidConfig(
            "baseline needs an uplink vocabulary of at least 2",
        ));
    }
    if config.dl_vocab < 3 {
        return Err(EnvError::InvalidConfig(
            "baseline needs a downlink vocabulary of at least 3",
        ));
    }
    Ok(())
}

/// The baseline as a [`Controller`]. Grant choices draw from the episode
/// seed's dedicated grant stream, leaving arrival and erasure draws identical
/// to any other controller run on the same seed.
#[derive(Debug, Clone)]
pub struct ContentionFree {
    grants: StreamRng,
}

impl Default for ContentionFree {
    fn default() -> Self {
        Self {
            grants: rng::stream(0, streams::GRANTS),
        }
    }
}

impl Controller for ContentionFree {
    fn begin_episode(&mut self, _config: &SimConfig, seed: u64) {
        self.grants = rng::stream(seed, streams::GRANTS);
    }

    fn ue_actions(&mut self, views: &[UeView]) -> Vec<UeAction> {
        views
            .iter()
            .map(|v| ue_policy(v.buffer_len, v.dcm))
            .collect()
    }

    fn bs_action(&mut self, view: &BsView<'_>) -> BsAction {
        bs_policy(view.obs, view.ucms, &mut self.grants)
    }
}

pub fn run_baseline_episode(config: &SimConfig, seed: u64) -> Result<EpisodeStats, EnvError> {
    check_vocabularies(config)?;
    run_episode(config, seed, &mut ContentionFree::default(), None)
}

pub fn run_baseline_episode_traced(
    config: &SimConfig,
    seed: u64,
    trace: &mut Vec<TraceRow>,
) -> Result<EpisodeStats, EnvError> {
    check_vocabularies(config)?;
    run_episode(config, seed, &mut ContentionFree::default(), Some(trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ue_policy_table() {
        assert_eq!(
            ue_policy(2, DCM_SG),
            UeAction::new(EnvAction::Transmit, UCM_SR)
        );
        assert_eq!(
            ue_policy(0, DCM_NULL),
            UeAction::new(EnvAction::Nothing, UCM_NULL)
        );
        assert_eq!(
            ue_policy(1, DCM_ACK),
            UeAction::new(EnvAction::Delete, UCM_SR)
        );
        // A grant with nothing to send is wasted.
        assert_eq!(
            ue_policy(0, DCM_SG),
            UeAction::new(EnvAction::Nothing, UCM_NULL)
        );
        assert_eq!(
            ue_policy(3, DCM_NULL),
            UeAction::new(EnvAction::Nothing, UCM_SR)
        );
    }

    #[test]
    fn grant_is_uniform_between_two_requesters() {
        let mut rng = rng::stream(9, streams::GRANTS);
        let trials = 20_000;
        let mut first = 0;
        for _ in 0..trials {
            let a = bs_policy(0, &[UCM_SR, UCM_SR], &mut rng);
            let sg: Vec<usize> = a.dcm.iter().map(|&d| (d == DCM_SG) as usize).collect();
            assert_eq!(sg.iter().sum::<usize>(), 1);
            assert!(a.dcm.iter().all(|&d| d == DCM_SG || d == DCM_NULL));
            first += sg[0];
        }
        let frac = first as f64 / trials as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn decoded_requester_gets_ack_not_grant() {
        let mut rng = rng::stream(0, streams::GRANTS);
        let a = bs_policy(1, &[UCM_SR, UCM_NULL], &mut rng);
        assert_eq!(a.dcm, [DCM_ACK, DCM_NULL]);
        let a = bs_policy(1, &[UCM_SR, UCM_SR], &mut rng);
        assert_eq!(a.dcm, [DCM_ACK, DCM_SG]);
        let a = bs_policy(2, &[UCM_NULL, UCM_NULL], &mut rng);
        assert_eq!(a.dcm, [DCM_NULL, DCM_ACK]);
    }

    #[test]
    fn silence_gets_silence() {
        let mut rng = rng::stream(0, streams::GRANTS);
        assert_eq!(bs_policy(0, &[UCM_NULL, UCM_NULL], &mut rng).dcm, [0, 0]);
        // Non-decodable energy acknowledges nobody.
        assert_eq!(bs_policy(3, &[UCM_NULL, UCM_NULL], &mut rng).dcm, [0, 0]);
    }

    #[test]
    fn vocabularies_must_fit_the_message_map() {
        let c = SimConfig {
            dl_vocab: 2,
            ..SimConfig::default()
        };
        assert!(run_baseline_episode(&c, 0).is_err());
    }
}
