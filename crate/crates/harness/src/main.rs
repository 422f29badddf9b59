use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use emac_core::baseline::ContentionFree;
use emac_core::marl::{Ablation, GreedyController};
use emac_core::rng::{seed_list, streams};
use emac_harness::report::{csv_string, summary_path, write_csv};
use emac_harness::trace::{run_logged, EpisodeRow, TraceCsvRow};
use emac_harness::{
    emit_report, run_campaign, select_best, sweep_tbler, Campaign, Checkpoint, RunConfig,
    SweepSubject,
};

#[derive(Parser)]
#[command(
    name = "emac",
    version,
    about = "Emergent uplink MAC protocols: training, evaluation and baselines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    Full,
    Nocomm,
    Ddpg,
}

impl From<AblationArg> for Ablation {
    fn from(a: AblationArg) -> Self {
        match a {
            AblationArg::Full => Ablation::Full,
            AblationArg::Nocomm => Ablation::NoComm,
            AblationArg::Ddpg => Ablation::Ddpg,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a campaign of repetitions and write per-repetition results.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the config file's ablation.
        #[arg(long, value_enum)]
        ablation: Option<AblationArg>,
        /// Worker threads for repetitions.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Greedy test episodes of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 5000)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Episode CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-TTI trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Contention-free baseline episodes.
    Baseline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Goodput versus TBLER for the baseline or trained checkpoints.
    Sweep {
        /// Comma-separated TBLER points.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001,0.0001")]
        tbler: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        sdus: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Checkpoints to sweep; each one is a repetition. Without any, the
        /// baseline is swept.
        #[arg(long)]
        checkpoint: Vec<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        episodes: usize,
        /// Baseline repetitions.
        #[arg(long, default_value_t = 4)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge campaign outputs into one detail CSV plus a summary CSV.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn write_episodes(
    rows: &[EpisodeRow],
    trace: &[TraceCsvRow],
    out: Option<&Path>,
    trace_path: Option<&Path>,
) -> Result<()> {
    emit(out, &csv_string(rows)?)?;
    if let Some(p) = trace_path {
        write_csv(p, trace)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            reps,
            out,
            ablation,
            jobs,
        } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(a) = ablation {
                cfg.train.ablation = a.into();
            }
            let campaign = Campaign {
                out_dir: Some(out.clone()),
                jobs,
                ..Campaign::new(cfg, reps, seed)
            };
            let records = run_campaign(&campaign)?;
            for r in &records {
                eprintln!(
                    "rep {:3} seed {:<6} final eval goodput {:.4}  test goodput {:.4}  delivery {:.5}  baseline goodput {:.4}",
                    r.repetition, r.seed, r.final_goodput, r.test.goodput, r.test.delivery_rate, r.baseline.goodput
                );
                for e in &r.io_errors {
                    eprintln!("rep {:3} output error: {e}", r.repetition);
                }
            }
            let best = select_best(&records)?;
            eprintln!(
                "best repetition {} ({:.4})",
                best.repetition, best.final_goodput
            );
            if records.iter().any(|r| !r.io_errors.is_empty()) {
                bail!("some repetition outputs could not be written");
            }
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            out,
            trace,
        } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let nets = ck.networks()?;
            let layout = ck.layout();
            let seeds = seed_list(seed, streams::TEST_SEEDS, episodes);
            let mut controller = GreedyController::new(&nets, &layout);
            let (rows, tr) = run_logged(&mut controller, &ck.config.sim, &seeds, trace.is_some())?;
            write_episodes(&rows, &tr, out.as_deref(), trace.as_deref())?;
        }
        Command::Baseline {
            config,
            episodes,
            seed,
            out,
            trace,
        } => {
            let cfg = load_config(config.as_deref())?;
            emac_core::baseline::check_vocabularies(&cfg.sim)?;
            let seeds = seed_list(seed, streams::TEST_SEEDS, episodes);
            let (rows, tr) = run_logged(
                &mut ContentionFree::default(),
                &cfg.sim,
                &seeds,
                trace.is_some(),
            )?;
            write_episodes(&rows, &tr, out.as_deref(), trace.as_deref())?;
        }
        Command::Sweep {
            tbler,
            sdus,
            config,
            checkpoint,
            episodes,
            reps,
            seed,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let sim = cfg.sim.with_sdus(sdus);
            let checkpoints = checkpoint
                .iter()
                .map(|p| Checkpoint::load(p))
                .collect::<Result<Vec<_>, _>>()?;
            let subject = if checkpoints.is_empty() {
                SweepSubject::Baseline {
                    repetitions: reps,
                    base_seed: seed,
                }
            } else {
                SweepSubject::Protocols(&checkpoints)
            };
            let rows = sweep_tbler(&sim, &tbler, episodes, &subject)?;
            emit(out.as_deref(), &csv_string(&rows)?)?;
        }
        Command::Report { input, out } => {
            let (rows, summary) = emit_report(&input, &out)?;
            eprintln!(
                "{} detail rows -> {}; {} summary rows -> {}",
                rows.len(),
                out.display(),
                summary.len(),
                summary_path(&out).display()
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
