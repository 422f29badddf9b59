//! Experiment harness: configuration files, repetition campaigns,
//! checkpoints, TBLER sweeps and CSV reports.

pub mod campaign;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod report;
pub mod sweep;
pub mod trace;

use emac_core::baseline::{check_vocabularies, ContentionFree};
use emac_core::marl::{evaluate_controller, EvalSummary};
use emac_core::SimConfig;

pub use campaign::{run_campaign, select_best, Campaign, ProtocolRecord};
pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{HarnessError, Result};
pub use report::{emit_report, DetailRow, SummaryRow};
pub use sweep::{sweep_tbler, SweepRow, SweepSubject};

/// Contention-free baseline over `seeds`.
pub fn baseline_summary(sim: &SimConfig, seeds: &[u64]) -> Result<EvalSummary> {
    check_vocabularies(sim)?;
    Ok(evaluate_controller(
        &mut ContentionFree::default(),
        sim,
        seeds,
    )?)
}
