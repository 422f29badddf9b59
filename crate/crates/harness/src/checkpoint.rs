//! JSON checkpoints: the run configuration, the seed and every network as a
//! text parameter dump. Optimizer moments are not stored; a checkpoint
//! restores evaluation, not training.

use std::path::Path;

use emac_core::marl::{ActorCritic, Layout, RoleNets};
use emac_core::nn::mlp::Mlp;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};

pub const FORMAT: &str = "emac-checkpoint 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoleDump {
    pub heads: Vec<usize>,
    pub actor: String,
    pub critic: String,
    pub target_actor: String,
    pub target_critic: String,
}

impl RoleDump {
    fn from_nets(nets: &RoleNets) -> Self {
        Self {
            heads: nets.heads.clone(),
            actor: nets.actor.to_dump(),
            critic: nets.critic.to_dump(),
            target_actor: nets.target_actor.to_dump(),
            target_critic: nets.target_critic.to_dump(),
        }
    }

    fn to_nets(&self) -> Result<RoleNets> {
        let parse =
            |text: &str| Mlp::from_dump(text).map_err(|e| HarnessError::Checkpoint(e.to_string()));
        let mut nets = RoleNets::from_online(
            parse(&self.actor)?,
            parse(&self.critic)?,
            self.heads.clone(),
        );
        nets.target_actor = parse(&self.target_actor)?;
        nets.target_critic = parse(&self.target_critic)?;
        Ok(nets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub repetition: usize,
    /// Training episodes behind these parameters.
    pub episodes: usize,
    pub config: RunConfig,
    pub ue: RoleDump,
    pub bs: Option<RoleDump>,
}

impl Checkpoint {
    pub fn new(
        config: &RunConfig,
        seed: u64,
        repetition: usize,
        episodes: usize,
        nets: &ActorCritic,
    ) -> Self {
        Self {
            format: FORMAT.to_string(),
            seed,
            repetition,
            episodes,
            config: config.clone(),
            ue: RoleDump::from_nets(&nets.ue),
            bs: nets.bs.as_ref().map(RoleDump::from_nets),
        }
    }

    pub fn layout(&self) -> Layout {
        Layout::new(&self.config.sim, &self.config.train)
    }

    /// Rebuild the networks and check their shapes against the layout the
    /// stored configuration implies.
    pub fn networks(&self) -> Result<ActorCritic> {
        let nets = ActorCritic {
            ue: self.ue.to_nets()?,
            bs: self.bs.as_ref().map(RoleDump::to_nets).transpose()?,
        };
        let layout = self.layout();
        let h = self.config.train.hidden_units;
        let expected = ActorCritic::new(&layout, h, &mut emac_core::rng::stream(0, 0))?;
        let same_shape = |a: &RoleNets, b: &RoleNets| {
            a.heads == b.heads
                && a.actor.dims() == b.actor.dims()
                && a.critic.dims() == b.critic.dims()
                && a.target_actor.dims() == b.actor.dims()
                && a.target_critic.dims() == b.critic.dims()
        };
        let ok = same_shape(&nets.ue, &expected.ue)
            && match (&nets.bs, &expected.bs) {
                (Some(a), Some(b)) => same_shape(a, b),
                (None, None) => true,
                _ => false,
            };
        if !ok {
            return Err(HarnessError::Checkpoint(
                "network shapes do not match the stored configuration".into(),
            ));
        }
        Ok(nets)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Checkpoint(e.to_string()))?;
        if c.format != FORMAT {
            return Err(HarnessError::Checkpoint(format!(
                "unsupported format '{}'",
                c.format
            )));
        }
        c.config.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use emac_core::marl::{Ablation, TrainConfig};
    use emac_core::SimConfig;

    fn config(ablation: Ablation) -> RunConfig {
        RunConfig::new(
            SimConfig::default(),
            TrainConfig {
                hidden_units: 4,
                ablation,
                ..TrainConfig::default()
            },
        )
    }

    #[test]
    fn round_trip_restores_every_network() {
        for ablation in [Ablation::Full, Ablation::NoComm, Ablation::Ddpg] {
            let cfg = config(ablation);
            let layout = Layout::new(&cfg.sim, &cfg.train);
            let nets = ActorCritic::new(&layout, 4, &mut emac_core::rng::stream(9, 13)).unwrap();
            let ck = Checkpoint::new(&cfg, 9, 0, 0, &nets);
            let back = Checkpoint::from_json(&ck.to_json()).unwrap();
            assert_eq!(back, ck);
            let restored = back.networks().unwrap();
            assert_eq!(restored.ue.actor.params(), nets.ue.actor.params());
            assert_eq!(
                restored.ue.target_critic.params(),
                nets.ue.target_critic.params()
            );
            assert_eq!(restored.bs.is_some(), nets.bs.is_some());
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let cfg = config(Ablation::Full);
        let layout = Layout::new(&cfg.sim, &cfg.train);
        let nets = ActorCritic::new(&layout, 4, &mut emac_core::rng::stream(9, 13)).unwrap();
        let mut ck = Checkpoint::new(&cfg, 9, 0, 0, &nets);
        ck.config.train.ablation = Ablation::NoComm;
        assert!(ck.networks().is_err());
    }

    #[test]
    fn wrong_format_is_rejected() {
        let cfg = config(Ablation::Full);
        let layout = Layout::new(&cfg.sim, &cfg.train);
        let nets = ActorCritic::new(&layout, 4, &mut emac_core::rng::stream(9, 13)).unwrap();
        let mut ck = Checkpoint::new(&cfg, 9, 0, 0, &nets);
        ck.format = "emac-checkpoint 0".into();
        assert!(Checkpoint::from_json(&ck.to_json()).is_err());
    }
}
