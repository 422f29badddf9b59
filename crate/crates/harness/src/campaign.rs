//! Repetition campaigns: independent training runs with derived seeds, a
//! greedy test phase per run, per-repetition files and best-run selection.

use std::path::{Path, PathBuf};

use emac_core::marl::{evaluate, train_run, EvalPoint, EvalSummary, Layout};
use emac_core::rng::{seed_list, streams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::report::{argmax_by_score, write_csv, DetailRow, BASELINE_SOLUTION};
use crate::trace::episode_rows;

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub config: RunConfig,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Where per-repetition files go; `None` keeps everything in memory.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; repetitions are independent, so any value gives the
    /// same records.
    pub jobs: usize,
}

impl Campaign {
    pub fn new(config: RunConfig, repetitions: usize, base_seed: u64) -> Self {
        Self {
            config,
            repetitions,
            base_seed,
            out_dir: None,
            jobs: 1,
        }
    }

    pub fn seed(&self, repetition: usize) -> u64 {
        self.base_seed.wrapping_add(repetition as u64)
    }

    pub fn solution(&self) -> &'static str {
        self.config.train.ablation.label()
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(HarnessError::Usage(
                "a campaign needs at least one repetition".into(),
            ));
        }
        if self.jobs == 0 {
            return Err(HarnessError::Usage("jobs must be at least 1".into()));
        }
        self.config.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestAggregate {
    pub episodes: usize,
    pub goodput: f64,
    pub delivery_rate: f64,
    pub duration: f64,
}

impl From<&EvalSummary> for TestAggregate {
    fn from(s: &EvalSummary) -> Self {
        Self {
            episodes: s.episodes.len(),
            goodput: s.mean_goodput,
            delivery_rate: s.mean_delivery_rate,
            duration: s.mean_duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRecord {
    pub repetition: usize,
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
    pub eval_trace: Vec<EvalPoint>,
    /// Mean goodput of the last evaluation (the final `episodes_eval`
    /// greedy episodes).
    pub final_goodput: f64,
    pub test: TestAggregate,
    /// Baseline on this repetition's evaluation seeds.
    pub baseline: TestAggregate,
    /// File-output failures of this repetition; the metrics above are still
    /// valid.
    pub io_errors: Vec<String>,
}

/// One line of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub solution: String,
    pub tbler: f64,
    #[serde(rename = "P")]
    pub sdus: usize,
    pub repetition: usize,
    pub seed: u64,
    pub final_eval_goodput: f64,
    pub test_goodput: f64,
    pub test_delivery_rate: f64,
    pub test_duration: f64,
    pub checkpoint: String,
    pub io_error: String,
}

pub fn detail_rows(config: &RunConfig, record: &ProtocolRecord) -> Vec<DetailRow> {
    record
        .eval_trace
        .iter()
        .map(|p| DetailRow {
            solution: config.train.ablation.label().to_string(),
            tbler: config.sim.tbler,
            sdus: config.sim.total_sdus,
            repetition: record.repetition,
            train_episode: p.train_episode,
            goodput: p.mean_goodput,
            delivery_rate: p.mean_delivery_rate,
            duration: p.mean_duration,
        })
        .collect()
}

pub fn baseline_row(config: &RunConfig, record: &ProtocolRecord) -> DetailRow {
    DetailRow {
        solution: BASELINE_SOLUTION.to_string(),
        tbler: config.sim.tbler,
        sdus: config.sim.total_sdus,
        repetition: record.repetition,
        train_episode: 0,
        goodput: record.baseline.goodput,
        delivery_rate: record.baseline.delivery_rate,
        duration: record.baseline.duration,
    }
}

/// `out` is the campaign directory; checkpoint paths are written relative to
/// it so that identical campaigns in different directories give identical files.
fn record_row(config: &RunConfig, out: &Path, r: &ProtocolRecord) -> RecordRow {
    RecordRow {
        solution: config.train.ablation.label().to_string(),
        tbler: config.sim.tbler,
        sdus: config.sim.total_sdus,
        repetition: r.repetition,
        seed: r.seed,
        final_eval_goodput: r.final_goodput,
        test_goodput: r.test.goodput,
        test_delivery_rate: r.test.delivery_rate,
        test_duration: r.test.duration,
        checkpoint: r
            .checkpoint
            .as_ref()
            .map(|p| p.strip_prefix(out).unwrap_or(p).display().to_string())
            .unwrap_or_default(),
        io_error: r.io_errors.join("; "),
    }
}

pub fn repetition_dir(out: &Path, repetition: usize) -> PathBuf {
    out.join(format!("rep-{repetition:03}"))
}

fn run_repetition(campaign: &Campaign, repetition: usize) -> Result<ProtocolRecord> {
    let cfg = &campaign.config;
    let seed = campaign.seed(repetition);
    let trained = train_run(&cfg.sim, &cfg.train, seed)?;
    let layout = Layout::new(&cfg.sim, &cfg.train);

    let test_seeds = seed_list(seed, streams::TEST_SEEDS, cfg.train.episodes_test);
    let test = evaluate(&trained.nets, &layout, &cfg.sim, &test_seeds)?;
    let eval_seeds = seed_list(seed, streams::EVAL_SEEDS, cfg.train.episodes_eval);
    let baseline = crate::baseline_summary(&cfg.sim, &eval_seeds)?;

    let mut record = ProtocolRecord {
        repetition,
        seed,
        checkpoint: None,
        final_goodput: trained
            .eval_trace
            .last()
            .map(|p| p.mean_goodput)
            .unwrap_or(f64::NAN),
        eval_trace: trained.eval_trace,
        test: TestAggregate::from(&test),
        baseline: TestAggregate::from(&baseline),
        io_errors: Vec::new(),
    };

    if let Some(out) = &campaign.out_dir {
        let dir = repetition_dir(out, repetition);
        let mut errors = Vec::new();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                record_error(&mut errors, e);
            }
        };
        match std::fs::create_dir_all(&dir) {
            Err(e) => note(Err(HarnessError::io(&dir, e))),
            Ok(()) => {
                let ck_path = dir.join("checkpoint.json");
                let ck = Checkpoint::new(
                    cfg,
                    seed,
                    repetition,
                    cfg.train.episodes_train,
                    &trained.nets,
                );
                let saved = ck.save(&ck_path);
                if saved.is_ok() {
                    record.checkpoint = Some(ck_path);
                }
                note(saved);
                note(write_csv(&dir.join("eval.csv"), &detail_rows(cfg, &record)));
                note(write_csv(
                    &dir.join("test.csv"),
                    &episode_rows(&test_seeds, &test.episodes),
                ));
            }
        }
        record.io_errors = errors;
    }
    Ok(record)
}

fn record_error(errors: &mut Vec<String>, e: HarnessError) {
    errors.push(e.to_string());
}

/// Train every repetition, test it and write its files. File-output failures
/// are kept in the affected record instead of stopping the campaign.
pub fn run_campaign(campaign: &Campaign) -> Result<Vec<ProtocolRecord>> {
    campaign.validate()?;
    if let Some(out) = &campaign.out_dir {
        std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(campaign.jobs)
        .build()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    let mut records = pool.install(|| {
        (0..campaign.repetitions)
            .into_par_iter()
            .map(|r| run_repetition(campaign, r))
            .collect::<Result<Vec<_>>>()
    })?;

    if let Some(out) = &campaign.out_dir {
        let cfg = &campaign.config;
        let baseline: Vec<DetailRow> = records.iter().map(|r| baseline_row(cfg, r)).collect();
        let rows: Vec<RecordRow> = records.iter().map(|r| record_row(cfg, out, r)).collect();
        let summary = write_csv(&out.join("baseline.csv"), &baseline)
            .and_then(|()| write_csv(&out.join("records.csv"), &rows))
            .and_then(|()| {
                let path = out.join("config.toml");
                std::fs::write(&path, cfg.to_toml_string()).map_err(|e| HarnessError::io(path, e))
            });
        if let Err(e) = summary {
            for r in &mut records {
                record_error(&mut r.io_errors, HarnessError::Usage(e.to_string()));
            }
        }
    }
    Ok(records)
}

/// The record with the highest final evaluation goodput; ties go to the
/// lowest repetition id.
pub fn select_best(records: &[ProtocolRecord]) -> Result<&ProtocolRecord> {
    argmax_by_score(records, |r| r.final_goodput, |r| r.repetition)
        .map(|i| &records[i])
        .ok_or_else(|| HarnessError::Usage("select_best needs at least one record".into()))
}
