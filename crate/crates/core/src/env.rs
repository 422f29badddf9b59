//! Single-cell uplink environment.
//!
//! `N` UEs share one uplink data channel (a packet erasure channel) and talk
//! to the base station over error-free control channels. Time advances in
//! TTIs; inside a TTI the order is fixed:
//!
//! 1. SDU arrivals,
//! 2. UE environment actions (transmit / delete the oldest buffered SDU),
//! 3. channel resolution,
//! 4. the BS observes the channel and this TTI's UCMs and answers with one
//!    DCM per UE, which the UEs see at the next TTI,
//! 5. the shared reward,
//! 6. `t += 1` and the termination check.
//!
//! UE indices are zero-based everywhere in the API. The BS observation keeps
//! the one-based convention (`0` idle, `u + 1` decoded from UE `u`, `N + 1`
//! non-decodable).

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::{self, streams, StreamRng};

/// Block error rates of the sweep grid.
pub const TBLER_GRID: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Index of the "no message" symbol in both control vocabularies.
pub const NULL_MESSAGE: usize = 0;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SimConfig {
    pub n_ue: usize,
    pub buffer_capacity: usize,
    pub total_sdus: usize,
    pub p_arrival: f64,
    pub tbler: f64,
    pub dl_vocab: usize,
    pub ul_vocab: usize,
    pub max_steps: u32,
    pub reward_param: u32,
}

impl Default for SimConfig {
    /// Two UEs, B = 5, P = 2, p = 0.5, TBLER = 0.1, |D| = 3, |U| = 2,
    /// T_max = 24, R = 3.
    fn default() -> Self {
        Self {
            n_ue: 2,
            buffer_capacity: 5,
            total_sdus: 2,
            p_arrival: 0.5,
            tbler: 0.1,
            dl_vocab: 3,
            ul_vocab: 2,
            max_steps: 24,
            reward_param: 3,
        }
    }
}

impl SimConfig {
    pub fn with_sdus(mut self, total_sdus: usize) -> Self {
        self.total_sdus = total_sdus;
        self
    }

    pub fn with_tbler(mut self, tbler: f64) -> Self {
        self.tbler = tbler;
        self
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let check = |ok: bool, what: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(EnvError::InvalidConfig(what))
            }
        };
        check(self.n_ue >= 1, "n_ue must be at least 1")?;
        check(
            self.buffer_capacity >= 1,
            "buffer_capacity must be at least 1",
        )?;
        check(self.total_sdus >= 1, "total_sdus must be at least 1")?;
        check(
            (0.0..=1.0).contains(&self.p_arrival),
            "p_arrival must lie in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.tbler),
            "tbler must lie in [0, 1]",
        )?;
        check(self.dl_vocab >= 1, "dl_vocab must be at least 1")?;
        check(self.ul_vocab >= 1, "ul_vocab must be at least 1")?;
        check(self.max_steps >= 1, "max_steps must be at least 1")?;
        check(self.reward_param >= 1, "reward_param must be at least 1")
    }

    /// Number of distinct BS observation values (`N + 2`).
    pub fn bs_obs_count(&self) -> usize {
        self.n_ue + 2
    }

    /// Nominal number of SDUs in an episode (`P * N`).
    pub fn nominal_sdus(&self) -> usize {
        self.total_sdus * self.n_ue
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvError {
    InvalidConfig(&'static str),
    InvalidUe { index: usize, n_ue: usize },
    ActionCount { expected: usize, got: usize },
    InvalidMessage { symbol: usize, vocab: usize },
    EpisodeOver,
    UndefinedMetric,
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::InvalidConfig(what) => write!(f, "invalid configuration: {what}"),
            EnvError::InvalidUe { index, n_ue } => {
                write!(f, "UE index {index} out of range for {n_ue} UEs")
            }
            EnvError::ActionCount { expected, got } => {
                write!(f, "expected {expected} actions, got {got}")
            }
            EnvError::InvalidMessage { symbol, vocab } => {
                write!(
                    f,
                    "message symbol {symbol} outside vocabulary of size {vocab}"
                )
            }
            EnvError::EpisodeOver => f.write_str("step called after the episode finished"),
            EnvError::UndefinedMetric => f.write_str("metric undefined for a zero-length episode"),
        }
    }
}

impl core::error::Error for EnvError {}

/// Environment action of a UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum EnvAction {
    #[default]
    Nothing = 0,
    /// Transmit the oldest SDU in the buffer.
    Transmit = 1,
    /// Delete the oldest SDU in the buffer.
    Delete = 2,
}

impl EnvAction {
    pub const COUNT: usize = 3;

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Self::Nothing),
            1 => Some(Self::Transmit),
            2 => Some(Self::Delete),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UeAction {
    pub env_action: EnvAction,
    pub ucm: usize,
}

impl UeAction {
    pub const fn new(env_action: EnvAction, ucm: usize) -> Self {
        Self { env_action, ucm }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsAction {
    pub dcm: Vec<usize>,
}

impl BsAction {
    pub fn null(n_ue: usize) -> Self {
        Self {
            dcm: vec![NULL_MESSAGE; n_ue],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOutcome {
    Idle,
    /// Zero-based index of the UE whose PDU was decoded.
    Decoded(usize),
    NonDecodable,
}

/// Resolve one TTI on the shared data channel.
///
/// Consumes exactly one variate from `rng` when exactly one UE transmits and
/// none otherwise.
pub fn resolve_channel(transmitters: &[usize], tbler: f64, rng: &mut StreamRng) -> ChannelOutcome {
    match transmitters {
        [] => ChannelOutcome::Idle,
        [u] => {
            if rng::bernoulli(rng, tbler) {
                ChannelOutcome::NonDecodable
            } else {
                ChannelOutcome::Decoded(*u)
            }
        }
        _ => ChannelOutcome::NonDecodable,
    }
}

/// BS observation value in `0..=N+1`.
pub fn bs_observation(outcome: ChannelOutcome, n_ue: usize) -> usize {
    match outcome {
        ChannelOutcome::Idle => 0,
        ChannelOutcome::Decoded(u) => u + 1,
        ChannelOutcome::NonDecodable => n_ue + 1,
    }
}

/// One SDU in the episode ledger.
///
/// `received_by_bs` is monotone. An SDU removed from the buffer while still
/// unreceived is a wrongful deletion; `dropped` marks arrivals that found the
/// buffer full and were never enqueued.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sdu {
    pub id: usize,
    pub owner: usize,
    pub generated_at: u32,
    pub received_by_bs: bool,
    pub in_buffer: bool,
    pub dropped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpisodeStats {
    /// Distinct SDUs received by the BS.
    pub n_rx: u32,
    /// Episode duration in TTIs.
    pub n_ttis: u32,
    pub n_generated: u32,
    pub wrongful_deletions: u32,
    pub correct_deletions: u32,
    pub collisions: u32,
    pub erasures: u32,
    /// Arrivals lost to a full buffer.
    pub dropped: u32,
    /// PDUs put on the data channel, including retransmissions.
    pub transmissions: u32,
}

/// Goodput in SDUs per TTI, retransmissions excluded.
pub fn goodput(stats: &EpisodeStats) -> Result<f64, EnvError> {
    if stats.n_ttis == 0 {
        return Err(EnvError::UndefinedMetric);
    }
    Ok(stats.n_rx as f64 / stats.n_ttis as f64)
}

/// Fraction of the nominal `P * N` SDUs received by the BS.
pub fn delivery_rate(stats: &EpisodeStats, config: &SimConfig) -> f64 {
    stats.n_rx as f64 / config.nominal_sdus() as f64
}

/// Reward-relevant events of one TTI.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Previously unreceived SDUs decoded this TTI (0 or 1).
    pub new_rx: u32,
    pub wrongful_deletions: u32,
    pub correct_deletions: u32,
    pub dropped_arrivals: u32,
    pub arrivals: u32,
    pub transmitters: u32,
    pub collision: bool,
    pub erasure: bool,
}

/// Shared reward: `+R` for a new reception, `-R` per wrongful deletion,
/// summed when both happen; `-1` when neither happened.
pub fn compute_reward(events: &StepEvents, reward_param: u32) -> i64 {
    if events.new_rx == 0 && events.wrongful_deletions == 0 {
        return -1;
    }
    let r = reward_param as i64;
    r * events.new_rx as i64 - r * events.wrongful_deletions as i64
}

/// What a UE knows at decision time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UeView {
    pub buffer_len: usize,
    /// DCM received from the BS (sent during the previous TTI).
    pub dcm: usize,
}

/// What the BS sees inside a TTI, after the UEs acted.
#[derive(Debug, Clone, Copy)]
pub struct BsView<'a> {
    pub t: u32,
    pub obs: usize,
    pub ucms: &'a [usize],
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Buffer lengths after the TTI.
    pub ue_obs: Vec<usize>,
    /// DCMs produced this TTI, delivered to the UEs at the next one.
    pub dcm: Vec<usize>,
    pub bs_obs: usize,
    pub channel: ChannelOutcome,
    pub reward: i64,
    pub done: bool,
    pub events: StepEvents,
}

#[derive(Debug, Clone)]
pub struct EnvState {
    config: SimConfig,
    t: u32,
    buffers: Vec<VecDeque<usize>>,
    ledger: Vec<Sdu>,
    generated_count: Vec<usize>,
    deleted_count: Vec<usize>,
    pending_dcm: Vec<usize>,
    last_outcome: ChannelOutcome,
    stats: EpisodeStats,
    done: bool,
    arrivals_rng: StreamRng,
    channel_rng: StreamRng,
}

/// Start an episode. Arrivals and erasures draw from separate streams of
/// `seed`, so the arrival process does not depend on the policy.
pub fn new_episode(config: SimConfig, seed: u64) -> Result<EnvState, EnvError> {
    config.validate()?;
    let n = config.n_ue;
    Ok(EnvState {
        t: 0,
        buffers: vec![VecDeque::with_capacity(config.buffer_capacity); n],
        ledger: Vec::with_capacity(config.nominal_sdus()),
        generated_count: vec![0; n],
        deleted_count: vec![0; n],
        pending_dcm: vec![NULL_MESSAGE; n],
        last_outcome: ChannelOutcome::Idle,
        stats: EpisodeStats::default(),
        done: false,
        arrivals_rng: rng::stream(seed, streams::ARRIVALS),
        channel_rng: rng::stream(seed, streams::CHANNEL),
        config,
    })
}

impl EnvState {
    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn stats(&self) -> &EpisodeStats {
        &self.stats
    }

    pub fn ledger(&self) -> &[Sdu] {
        &self.ledger
    }

    pub fn pending_dcm(&self) -> &[usize] {
        &self.pending_dcm
    }

    pub fn last_outcome(&self) -> ChannelOutcome {
        self.last_outcome
    }

    pub fn generated_count(&self, u: usize) -> usize {
        self.generated_count[u]
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Buffer length of UE `u`.
    pub fn ue_observation(&self, u: usize) -> Result<usize, EnvError> {
        self.buffers
            .get(u)
            .map(VecDeque::len)
            .ok_or(EnvError::InvalidUe {
                index: u,
                n_ue: self.config.n_ue,
            })
    }

    pub fn ue_views(&self) -> Vec<UeView> {
        self.buffers
            .iter()
            .zip(&self.pending_dcm)
            .map(|(b, &dcm)| UeView {
                buffer_len: b.len(),
                dcm,
            })
            .collect()
    }

    /// SDU ids buffered at UE `u`, oldest first.
    pub fn buffer(&self, u: usize) -> impl Iterator<Item = &Sdu> + '_ {
        self.buffers[u].iter().map(move |&id| &self.ledger[id])
    }

    /// One Bernoulli draw per UE that has not yet generated all its SDUs.
    /// Returns `(arrivals, dropped)`.
    pub fn arrival_step(&mut self) -> (u32, u32) {
        let mut arrivals = 0;
        let mut dropped = 0;
        for u in 0..self.config.n_ue {
            if self.generated_count[u] >= self.config.total_sdus {
                continue;
            }
            if !rng::bernoulli(&mut self.arrivals_rng, self.config.p_arrival) {
                continue;
            }
            let id = self.ledger.len();
            let full = self.buffers[u].len() >= self.config.buffer_capacity;
            self.ledger.push(Sdu {
                id,
                owner: u,
                generated_at: self.t,
                received_by_bs: false,
                in_buffer: !full,
                dropped: full,
            });
            if full {
                dropped += 1;
            } else {
                self.buffers[u].push_back(id);
            }
            self.generated_count[u] += 1;
            arrivals += 1;
        }
        self.stats.n_generated += arrivals;
        self.stats.dropped += dropped;
        (arrivals, dropped)
    }

    /// Advance one TTI. `bs` is called once, after the channel is resolved,
    /// with the BS observation and this TTI's UCMs.
    pub fn step<F>(&mut self, ue_actions: &[UeAction], bs: F) -> Result<StepOutcome, EnvError>
    where
        F: FnOnce(&BsView<'_>) -> BsAction,
    {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        let n = self.config.n_ue;
        if ue_actions.len() != n {
            return Err(EnvError::ActionCount {
                expected: n,
                got: ue_actions.len(),
            });
        }
        for a in ue_actions {
            if a.ucm >= self.config.ul_vocab {
                return Err(EnvError::InvalidMessage {
                    symbol: a.ucm,
                    vocab: self.config.ul_vocab,
                });
            }
        }

        let mut events = StepEvents::default();
        let (arrivals, dropped) = self.arrival_step();
        events.arrivals = arrivals;
        events.dropped_arrivals = dropped;

        let mut transmitters: Vec<usize> = Vec::new();
        let mut pdus: Vec<usize> = Vec::new();
        for (u, action) in ue_actions.iter().enumerate() {
            match action.env_action {
                EnvAction::Nothing => {}
                EnvAction::Transmit => {
                    if let Some(&id) = self.buffers[u].front() {
                        transmitters.push(u);
                        pdus.push(id);
                    }
                }
                EnvAction::Delete => {
                    if let Some(id) = self.buffers[u].pop_front() {
                        let sdu = &mut self.ledger[id];
                        sdu.in_buffer = false;
                        self.deleted_count[u] += 1;
                        if sdu.received_by_bs {
                            events.correct_deletions += 1;
                        } else {
                            events.wrongful_deletions += 1;
                        }
                    }
                }
            }
        }
        events.transmitters = transmitters.len() as u32;

        let outcome = resolve_channel(&transmitters, self.config.tbler, &mut self.channel_rng);
        match outcome {
            ChannelOutcome::Idle => {}
            ChannelOutcome::Decoded(_) => {
                let sdu = &mut self.ledger[pdus[0]];
                if !sdu.received_by_bs {
                    sdu.received_by_bs = true;
                    events.new_rx = 1;
                }
            }
            ChannelOutcome::NonDecodable => {
                if transmitters.len() > 1 {
                    events.collision = true;
                } else {
                    events.erasure = true;
                }
            }
        }
        self.last_outcome = outcome;

        let ucms: Vec<usize> = ue_actions.iter().map(|a| a.ucm).collect();
        let bs_obs = bs_observation(outcome, n);
        let bs_action = bs(&BsView {
            t: self.t,
            obs: bs_obs,
            ucms: &ucms,
        });
        if bs_action.dcm.len() != n {
            return Err(EnvError::ActionCount {
                expected: n,
                got: bs_action.dcm.len(),
            });
        }
        if let Some(&symbol) = bs_action.dcm.iter().find(|&&d| d >= self.config.dl_vocab) {
            return Err(EnvError::InvalidMessage {
                symbol,
                vocab: self.config.dl_vocab,
            });
        }
        self.pending_dcm.clone_from(&bs_action.dcm);

        let reward = compute_reward(&events, self.config.reward_param);

        let s = &mut self.stats;
        s.n_rx += events.new_rx;
        s.wrongful_deletions += events.wrongful_deletions;
        s.correct_deletions += events.correct_deletions;
        s.collisions += events.collision as u32;
        s.erasures += events.erasure as u32;
        s.transmissions += events.transmitters;

        self.t += 1;
        self.stats.n_ttis = self.t;
        self.done = self.episode_done();

        Ok(StepOutcome {
            ue_obs: self.buffers.iter().map(VecDeque::len).collect(),
            dcm: bs_action.dcm,
            bs_obs,
            channel: outcome,
            reward,
            done: self.done,
            events,
        })
    }

    /// True once every UE has generated all its SDUs, every non-dropped SDU
    /// has been received and every buffer is empty, or when `t` reaches
    /// `max_steps`.
    pub fn episode_done(&self) -> bool {
        if self.t >= self.config.max_steps {
            return true;
        }
        let all_generated = self
            .generated_count
            .iter()
            .all(|&g| g >= self.config.total_sdus);
        all_generated
            && self.buffers.iter().all(VecDeque::is_empty)
            && self.ledger.iter().all(|s| s.dropped || s.received_by_bs)
    }

    /// Per-UE `generated == in_buffer + deleted + dropped` and
    /// `received <= generated`.
    pub fn conservation_holds(&self) -> bool {
        (0..self.config.n_ue).all(|u| {
            let dropped = self
                .ledger
                .iter()
                .filter(|s| s.owner == u && s.dropped)
                .count();
            let received = self
                .ledger
                .iter()
                .filter(|s| s.owner == u && s.received_by_bs)
                .count();
            let generated = self.generated_count[u];
            generated == self.buffers[u].len() + self.deleted_count[u] + dropped
                && received <= generated
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_one() -> SimConfig {
        SimConfig::default()
    }

    fn null_bs(n: usize) -> impl FnOnce(&BsView<'_>) -> BsAction {
        move |_| BsAction::null(n)
    }

    const NOTHING: UeAction = UeAction::new(EnvAction::Nothing, 0);
    const TX: UeAction = UeAction::new(EnvAction::Transmit, 0);
    const DEL: UeAction = UeAction::new(EnvAction::Delete, 0);

    #[test]
    fn new_episode_starts_empty() {
        let s = new_episode(table_one(), 7).unwrap();
        assert_eq!(s.t(), 0);
        assert_eq!(s.ue_views().len(), 2);
        assert!(s.ue_views().iter().all(|v| v.buffer_len == 0 && v.dcm == 0));
        assert_eq!(s.stats(), &EpisodeStats::default());
        assert!(!s.episode_done());
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = table_one();
        c.n_ue = 0;
        assert!(matches!(new_episode(c, 0), Err(EnvError::InvalidConfig(_))));
        let mut c = table_one();
        c.tbler = 1.5;
        assert!(new_episode(c, 0).is_err());
        let mut c = table_one();
        c.p_arrival = -0.1;
        assert!(new_episode(c, 0).is_err());
        let mut c = table_one();
        c.reward_param = 0;
        assert!(new_episode(c, 0).is_err());
    }

    #[test]
    fn same_seed_same_state() {
        let mut a = new_episode(table_one(), 7).unwrap();
        let mut b = new_episode(table_one(), 7).unwrap();
        for _ in 0..10 {
            let ra = a.step(&[TX, NOTHING], null_bs(2)).unwrap();
            let rb = b.step(&[TX, NOTHING], null_bs(2)).unwrap();
            assert_eq!(ra, rb);
            if ra.done {
                break;
            }
        }
        assert_eq!(a.ledger(), b.ledger());
    }

    #[test]
    fn certain_and_impossible_arrivals() {
        let mut c = table_one();
        c.p_arrival = 1.0;
        let mut s = new_episode(c.clone(), 1).unwrap();
        assert_eq!(s.arrival_step(), (2, 0));
        assert_eq!(s.ue_observation(0), Ok(1));

        c.p_arrival = 0.0;
        let mut s = new_episode(c, 1).unwrap();
        assert_eq!(s.arrival_step(), (0, 0));
        assert_eq!(s.ue_observation(0), Ok(0));
        assert!(s.ledger().is_empty());
    }

    #[test]
    fn arrivals_stop_at_total_sdus() {
        let mut c = table_one();
        c.p_arrival = 1.0;
        let mut s = new_episode(c, 1).unwrap();
        s.arrival_step();
        s.arrival_step();
        assert_eq!(s.generated_count(0), 2);
        let before = s.ledger().len();
        assert_eq!(s.arrival_step(), (0, 0));
        assert_eq!(s.ledger().len(), before);
    }

    #[test]
    fn overflow_is_counted_and_dropped() {
        let mut c = table_one();
        c.p_arrival = 1.0;
        c.buffer_capacity = 1;
        c.total_sdus = 3;
        let mut s = new_episode(c, 1).unwrap();
        s.arrival_step();
        assert_eq!(s.arrival_step(), (2, 2));
        assert_eq!(s.ue_observation(0), Ok(1));
        assert_eq!(s.stats().dropped, 2);
        assert!(s.conservation_holds());
    }

    #[test]
    fn channel_resolution_cases() {
        let mut rng = rng::stream(0, 0);
        assert_eq!(resolve_channel(&[], 0.1, &mut rng), ChannelOutcome::Idle);
        assert_eq!(
            resolve_channel(&[0, 1], 0.0, &mut rng),
            ChannelOutcome::NonDecodable
        );
        assert_eq!(
            resolve_channel(&[0], 0.0, &mut rng),
            ChannelOutcome::Decoded(0)
        );
        assert_eq!(
            resolve_channel(&[0], 1.0, &mut rng),
            ChannelOutcome::NonDecodable
        );
    }

    #[test]
    fn collisions_and_idle_consume_no_variates() {
        let mut a = rng::stream(5, 1);
        let mut b = rng::stream(5, 1);
        resolve_channel(&[], 0.5, &mut a);
        resolve_channel(&[0, 1], 0.5, &mut a);
        assert_eq!(rng::unit(&mut a), rng::unit(&mut b));
    }

    #[test]
    fn bs_observation_encoding() {
        assert_eq!(bs_observation(ChannelOutcome::Idle, 2), 0);
        assert_eq!(bs_observation(ChannelOutcome::Decoded(1), 2), 2);
        assert_eq!(bs_observation(ChannelOutcome::NonDecodable, 2), 3);
    }

    #[test]
    fn ue_observation_bounds() {
        let mut c = table_one();
        c.p_arrival = 1.0;
        c.total_sdus = 10;
        let mut s = new_episode(c, 0).unwrap();
        assert_eq!(s.ue_observation(0), Ok(0));
        for _ in 0..3 {
            s.arrival_step();
        }
        assert_eq!(s.ue_observation(1), Ok(3));
        for _ in 0..5 {
            s.arrival_step();
        }
        assert_eq!(s.ue_observation(1), Ok(5));
        assert!(matches!(
            s.ue_observation(2),
            Err(EnvError::InvalidUe { .. })
        ));
    }

    #[test]
    fn reward_cases() {
        let new = StepEvents {
            new_rx: 1,
            ..Default::default()
        };
        let wrong = |n| StepEvents {
            wrongful_deletions: n,
            ..Default::default()
        };
        assert_eq!(compute_reward(&new, 3), 3);
        assert_eq!(compute_reward(&wrong(1), 3), -3);
        assert_eq!(compute_reward(&StepEvents::default(), 3), -1);
        assert_eq!(compute_reward(&wrong(2), 3), -6);
        let both = StepEvents {
            new_rx: 1,
            wrongful_deletions: 1,
            ..Default::default()
        };
        assert_eq!(compute_reward(&both, 3), 0);
    }

    fn primed(tbler: f64) -> EnvState {
        // Both UEs hold one SDU after the first TTI.
        let mut c = table_one();
        c.p_arrival = 1.0;
        c.total_sdus = 1;
        c.tbler = tbler;
        let mut s = new_episode(c, 3).unwrap();
        let out = s.step(&[NOTHING, NOTHING], null_bs(2)).unwrap();
        assert_eq!(out.ue_obs, [1, 1]);
        assert_eq!(out.reward, -1);
        s
    }

    #[test]
    fn simultaneous_transmissions_collide() {
        let mut s = primed(0.0);
        let out = s.step(&[TX, TX], null_bs(2)).unwrap();
        assert_eq!(out.channel, ChannelOutcome::NonDecodable);
        assert_eq!(out.bs_obs, 3);
        assert!(out.events.collision);
        assert_eq!(out.reward, -1);
        assert_eq!(s.stats().collisions, 1);
    }

    #[test]
    fn fresh_decode_pays_r() {
        let mut s = primed(0.0);
        let out = s.step(&[TX, NOTHING], null_bs(2)).unwrap();
        assert_eq!(out.channel, ChannelOutcome::Decoded(0));
        assert_eq!(out.reward, 3);
        // Retransmission of an already received SDU earns nothing.
        let out = s.step(&[TX, NOTHING], null_bs(2)).unwrap();
        assert_eq!(out.channel, ChannelOutcome::Decoded(0));
        assert_eq!(out.reward, -1);
        assert_eq!(s.stats().n_rx, 1);
        assert_eq!(s.stats().transmissions, 2);
    }

    #[test]
    fn wrongful_delete_and_decode_in_one_tti_sum_to_zero() {
        // Hand enumeration: UE 0 deletes its unreceived SDU (-3), UE 1's fresh
        // SDU is decoded (+3), so the reward is 0 and not -1.
        let mut s = primed(0.0);
        let out = s.step(&[DEL, TX], null_bs(2)).unwrap();
        assert_eq!(out.events.wrongful_deletions, 1);
        assert_eq!(out.events.new_rx, 1);
        assert_eq!(out.reward, 0);
        assert_eq!(s.ue_observation(0), Ok(0));
    }

    #[test]
    fn delete_on_empty_buffer_is_a_no_op() {
        let mut c = table_one();
        c.p_arrival = 0.0;
        let mut s = new_episode(c, 0).unwrap();
        let out = s.step(&[DEL, DEL], null_bs(2)).unwrap();
        assert_eq!(out.reward, -1);
        assert_eq!(out.events.wrongful_deletions, 0);
    }

    #[test]
    fn dcms_are_delivered_next_tti() {
        let mut s = primed(0.0);
        let out = s
            .step(&[NOTHING, NOTHING], |v| {
                assert_eq!(v.obs, 0);
                BsAction { dcm: vec![1, 2] }
            })
            .unwrap();
        assert_eq!(out.dcm, [1, 2]);
        let views = s.ue_views();
        assert_eq!((views[0].dcm, views[1].dcm), (1, 2));
    }

    #[test]
    fn bs_sees_this_ttis_ucms() {
        let mut s = primed(0.0);
        s.step(&[UeAction::new(EnvAction::Nothing, 1), NOTHING], |v| {
            assert_eq!(v.ucms, [1, 0]);
            BsAction::null(2)
        })
        .unwrap();
    }

    #[test]
    fn bad_actions_are_rejected() {
        let mut s = primed(0.0);
        assert!(matches!(
            s.step(&[NOTHING], null_bs(2)),
            Err(EnvError::ActionCount { .. })
        ));
        assert!(matches!(
            s.step(&[UeAction::new(EnvAction::Nothing, 2), NOTHING], null_bs(2)),
            Err(EnvError::InvalidMessage { .. })
        ));
        assert!(matches!(
            s.step(&[NOTHING, NOTHING], |_| BsAction { dcm: vec![0, 3] }),
            Err(EnvError::InvalidMessage { .. })
        ));
    }

    #[test]
    fn done_requires_receipt_and_empty_buffers() {
        let mut s = primed(0.0);
        s.step(&[TX, NOTHING], null_bs(2)).unwrap();
        s.step(&[NOTHING, TX], null_bs(2)).unwrap();
        // Everything received, buffers still hold both SDUs.
        assert!(!s.episode_done());
        let out = s.step(&[DEL, NOTHING], null_bs(2)).unwrap();
        assert!(!out.done);
        assert_eq!(out.events.correct_deletions, 1);
        let out = s.step(&[NOTHING, DEL], null_bs(2)).unwrap();
        assert!(out.done);
        assert_eq!(s.stats().n_ttis, 5);
        assert_eq!(s.stats().n_rx, 2);
        assert!(matches!(
            s.step(&[NOTHING, NOTHING], null_bs(2)),
            Err(EnvError::EpisodeOver)
        ));
    }

    #[test]
    fn truncation_at_max_steps() {
        let mut s = new_episode(table_one(), 11).unwrap();
        let mut steps = 0;
        loop {
            steps += 1;
            if s.step(&[NOTHING, NOTHING], null_bs(2)).unwrap().done {
                break;
            }
        }
        assert_eq!(steps, 24);
        assert!(s.episode_done());
    }

    #[test]
    fn metrics() {
        let stats = |n_rx, n_ttis| EpisodeStats {
            n_rx,
            n_ttis,
            ..Default::default()
        };
        assert_eq!(goodput(&stats(4, 10)), Ok(0.4));
        assert_eq!(goodput(&stats(0, 10)), Ok(0.0));
        assert_eq!(goodput(&stats(4, 24)), Ok(1.0 / 6.0));
        assert_eq!(goodput(&stats(1, 0)), Err(EnvError::UndefinedMetric));
        let c = table_one();
        assert_eq!(delivery_rate(&stats(4, 9), &c), 1.0);
        assert_eq!(delivery_rate(&stats(3, 9), &c), 0.75);
    }
}
