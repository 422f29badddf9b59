//! Goodput versus TBLER with a confidence interval across repetitions.

use emac_core::marl::{evaluate, EvalSummary};
use emac_core::rng::{seed_list, streams};
use emac_core::SimConfig;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::Result;
use crate::report::{mean_ci, BASELINE_SOLUTION, CI_METHOD};

#[derive(Debug, Clone)]
pub enum SweepSubject<'a> {
    /// Repetition `r` of the baseline uses test seeds derived from
    /// `base_seed + r`.
    Baseline { repetitions: usize, base_seed: u64 },
    /// Each checkpoint is one repetition, tested on seeds derived from its
    /// own training seed.
    Protocols(&'a [Checkpoint]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub solution: String,
    pub tbler: f64,
    #[serde(rename = "P")]
    pub sdus: usize,
    pub repetitions: usize,
    pub goodput: f64,
    pub goodput_ci_low: Option<f64>,
    pub goodput_ci_high: Option<f64>,
    pub delivery_rate: f64,
    pub duration: f64,
    pub ci_method: String,
}

fn row(solution: &str, sim: &SimConfig, runs: &[EvalSummary]) -> SweepRow {
    let goodputs: Vec<f64> = runs.iter().map(|s| s.mean_goodput).collect();
    let (goodput, ci) = mean_ci(&goodputs);
    let n = runs.len() as f64;
    SweepRow {
        solution: solution.to_string(),
        tbler: sim.tbler,
        sdus: sim.total_sdus,
        repetitions: runs.len(),
        goodput,
        goodput_ci_low: ci.map(|c| c.0),
        goodput_ci_high: ci.map(|c| c.1),
        delivery_rate: runs.iter().map(|s| s.mean_delivery_rate).sum::<f64>() / n,
        duration: runs.iter().map(|s| s.mean_duration).sum::<f64>() / n,
        ci_method: CI_METHOD.to_string(),
    }
}

/// One row per TBLER point: `episodes` greedy test episodes per repetition,
/// on `sim` with its TBLER replaced by the point. Protocols keep their own
/// environment settings apart from TBLER and P, which come from `sim`.
pub fn sweep_tbler(
    sim: &SimConfig,
    tblers: &[f64],
    episodes: usize,
    subject: &SweepSubject<'_>,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(tblers.len());
    for &tbler in tblers {
        let point = sim.clone().with_tbler(tbler);
        point.validate()?;
        match subject {
            SweepSubject::Baseline {
                repetitions,
                base_seed,
            } => {
                let runs = (0..*repetitions)
                    .map(|r| {
                        let seeds = seed_list(
                            base_seed.wrapping_add(r as u64),
                            streams::TEST_SEEDS,
                            episodes,
                        );
                        crate::baseline_summary(&point, &seeds)
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.push(row(BASELINE_SOLUTION, &point, &runs));
            }
            SweepSubject::Protocols(checkpoints) => {
                let mut runs = Vec::with_capacity(checkpoints.len());
                for ck in checkpoints.iter() {
                    let own = ck
                        .config
                        .sim
                        .clone()
                        .with_tbler(tbler)
                        .with_sdus(sim.total_sdus);
                    let seeds = seed_list(ck.seed, streams::TEST_SEEDS, episodes);
                    runs.push(evaluate(&ck.networks()?, &ck.layout(), &own, &seeds)?);
                }
                let solution = checkpoints
                    .first()
                    .map(|c| c.config.train.ablation.label())
                    .unwrap_or("none");
                rows.push(row(solution, &point, &runs));
            }
        }
    }
    Ok(rows)
}
