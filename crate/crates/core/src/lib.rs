//! Core of the emergent-MAC workbench.
//!
//! Everything in this crate is pure computation over owned values: the
//! single-cell uplink environment, the hand-written contention-free
//! protocol, a small MLP substrate and the MADDPG learner built on it.
//! File formats, the CLI and experiment orchestration live in the
//! `emac-harness` crate.
#![no_std]

extern crate alloc;

pub mod baseline;
pub mod env;
pub mod marl;
pub mod nn;
pub mod rng;
pub mod rollout;

pub use env::{
    BsAction, BsView, ChannelOutcome, EnvAction, EnvError, EnvState, EpisodeStats, SimConfig,
    StepOutcome, UeAction, UeView,
};
pub use rollout::{run_episode, Controller, TraceRow};
