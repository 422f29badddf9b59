//! MADDPG over the uplink environment.
//!
//! One actor/critic pair is shared by all UEs (parameter sharing) and one by
//! the BS, which owns a DCM head per UE. Critics are centralized: a UE's
//! critic sees the joint state and joint action, ordered with that UE first.
//! Two ablations reuse the same machinery: `NoComm` strips every message
//! block and head, `Ddpg` gives each agent a critic over its own state and
//! action only.

mod config;
mod encode;
pub mod gradcheck;
mod nets;
mod replay;
mod train;
mod update;

pub use config::{Ablation, TrainConfig};
pub use encode::{BsHistory, BsSlice, Layout, UeHistory, UeSlice};
pub use nets::{
    greedy_heads, select_heads, write_one_hots, ActionMode, ActorCritic, Agent, Role, RoleNets,
};
pub use replay::{ReplayBuffer, Transition};
pub use train::{
    evaluate, evaluate_controller, train_run, EpisodeMetrics, EvalPoint, EvalSummary,
    GreedyController, TrainOutput, Trainer,
};
pub use update::{
    actor_objective, actor_samples, actor_update, critic_loss, critic_samples, critic_update,
    ActorSample, CriticSample, UpdateReport,
};

use core::fmt;

use crate::env::EnvError;
use crate::nn::mlp::NnError;

#[derive(Debug, Clone, PartialEq)]
pub enum MarlError {
    Config(&'static str),
    Env(EnvError),
    Nn(NnError),
}

impl fmt::Display for MarlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarlError::Config(what) => write!(f, "invalid training configuration: {what}"),
            MarlError::Env(e) => write!(f, "environment: {e}"),
            MarlError::Nn(e) => write!(f, "network: {e}"),
        }
    }
}

impl core::error::Error for MarlError {}

impl From<EnvError> for MarlError {
    fn from(e: EnvError) -> Self {
        MarlError::Env(e)
    }
}

impl From<NnError> for MarlError {
    fn from(e: NnError) -> Self {
        MarlError::Nn(e)
    }
}
