use super::MarlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Ablation {
    /// Centralized critics with control messages.
    #[default]
    Full,
    /// No control messages: message blocks and heads are removed.
    NoComm,
    /// Per-agent critics over the agent's own state and action.
    Ddpg,
}

impl Ablation {
    pub fn communicates(self) -> bool {
        !matches!(self, Ablation::NoComm)
    }

    pub fn centralized(self) -> bool {
        !matches!(self, Ablation::Ddpg)
    }

    pub fn label(self) -> &'static str {
        match self {
            Ablation::Full => "maddpg",
            Ablation::NoComm => "maddpg-nocomm",
            Ablation::Ddpg => "ddpg",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    /// Number of history slices in an agent state.
    pub memory_length: usize,
    /// Read the history as `t..=t-k`, i.e. `memory_length + 1` slices.
    pub inclusive_history: bool,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Environment steps between update rounds.
    pub update_interval: usize,
    pub learning_rate: f64,
    pub discount: f64,
    pub policy_reg: f64,
    pub gumbel_temperature: f64,
    pub tau: f64,
    pub hidden_units: usize,
    pub episodes_train: usize,
    pub episodes_eval: usize,
    pub episodes_test: usize,
    /// Training episodes between greedy evaluations.
    pub eval_interval: usize,
    pub ablation: Ablation,
    /// Append a one-hot UE index to the shared UE actor's input.
    pub ue_identity: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            memory_length: 3,
            inclusive_history: false,
            replay_capacity: 100_000,
            batch_size: 1024,
            update_interval: 96,
            learning_rate: 1e-3,
            discount: 0.99,
            policy_reg: 1e-3,
            gumbel_temperature: 1.0,
            tau: 1e-3,
            hidden_units: 64,
            episodes_train: 300_000,
            episodes_eval: 500,
            episodes_test: 5000,
            eval_interval: 5000,
            ablation: Ablation::Full,
            ue_identity: false,
        }
    }
}

impl TrainConfig {
    /// Shortened schedule: 20k training episodes with an evaluation every
    /// 500. Updates come every 24 steps on batches of 256 with `tau = 0.01`;
    /// the full-scale cadence moves the targets too slowly to learn within
    /// 20k episodes.
    pub fn desk_scale() -> Self {
        Self {
            episodes_train: 20_000,
            eval_interval: 500,
            update_interval: 24,
            batch_size: 256,
            tau: 0.01,
            ..Self::default()
        }
    }

    pub fn history_slices(&self) -> usize {
        self.memory_length + self.inclusive_history as usize
    }

    pub fn validate(&self) -> Result<(), MarlError> {
        let check = |ok: bool, what: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(MarlError::Config(what))
            }
        };
        check(self.memory_length >= 1, "memory_length must be at least 1")?;
        check(
            self.replay_capacity >= 1,
            "replay_capacity must be at least 1",
        )?;
        check(self.batch_size >= 1, "batch_size must be at least 1")?;
        check(
            self.update_interval >= 1,
            "update_interval must be at least 1",
        )?;
        check(
            self.learning_rate >= 0.0 && self.learning_rate.is_finite(),
            "learning_rate must be finite and non-negative",
        )?;
        check(
            self.discount > 0.0 && self.discount <= 1.0,
            "discount must lie in (0, 1]",
        )?;
        check(
            self.policy_reg >= 0.0 && self.policy_reg.is_finite(),
            "policy_reg must be finite and non-negative",
        )?;
        check(
            self.gumbel_temperature > 0.0 && self.gumbel_temperature.is_finite(),
            "gumbel_temperature must be positive",
        )?;
        check((0.0..=1.0).contains(&self.tau), "tau must lie in [0, 1]")?;
        check(self.hidden_units >= 1, "hidden_units must be at least 1")?;
        check(self.episodes_eval >= 1, "episodes_eval must be at least 1")?;
        check(self.episodes_test >= 1, "episodes_test must be at least 1")?;
        check(self.eval_interval >= 1, "eval_interval must be at least 1")
    }
}
