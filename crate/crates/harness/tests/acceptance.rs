//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `ACCEPTANCE_CRITERIA=1,3,8` restricts the run to the listed criteria;
//! the default is all of them. Criterion 7 trains twelve desk-scale runs and
//! dominates the wall time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use emac_core::baseline::run_baseline_episode;
use emac_core::env::{delivery_rate, resolve_channel, TBLER_GRID};
use emac_core::marl::gradcheck::GradPair;
use emac_core::marl::{Ablation, TrainConfig};
use emac_core::nn::gumbel::{argmax, gumbel_softmax_sample, softmax};
use emac_core::nn::mlp::{soft_update, Mlp};
use emac_core::rng::{seed_list, stream, streams, unit};
use emac_core::{ChannelOutcome, SimConfig};
use emac_harness::trace::{EpisodeRow, TraceCsvRow};
use emac_harness::{run_campaign, Campaign, ProtocolRecord, RunConfig};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn check(pass: bool, detail: String) -> Outcome {
    if pass {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("acceptance")
        .join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("scratch directory");
    dir
}

/// Baseline delivery rate on the default scenario.
fn baseline_delivery() -> Outcome {
    const TARGET: f64 = 0.99998;
    const TOL: f64 = 0.0005;
    let sim = SimConfig::default();
    let seeds = seed_list(1, streams::TEST_SEEDS, 5000);
    let mut sum = 0.0;
    for &s in &seeds {
        let stats = run_baseline_episode(&sim, s).map_err(|e| e.to_string())?;
        sum += delivery_rate(&stats, &sim);
    }
    let mean = sum / seeds.len() as f64;
    check(
        (mean - TARGET).abs() <= TOL,
        format!(
            "mean delivery rate {mean:.6} over {} episodes, target {TARGET} +- {TOL}",
            seeds.len()
        ),
    )
}

/// The baseline never collides and never deletes an undelivered SDU.
fn baseline_is_contention_free() -> Outcome {
    const EPISODES: usize = 100_000;
    let per = EPISODES / TBLER_GRID.len();
    let (mut collisions, mut wrongful, mut ran) = (0u64, 0u64, 0usize);
    for (k, &tbler) in TBLER_GRID.iter().enumerate() {
        let sim = SimConfig::default().with_tbler(tbler);
        for s in seed_list(k as u64, streams::TEST_SEEDS, per) {
            let stats = run_baseline_episode(&sim, s).map_err(|e| e.to_string())?;
            collisions += stats.collisions as u64;
            wrongful += stats.wrongful_deletions as u64;
            ran += 1;
        }
    }
    check(
        collisions == 0 && wrongful == 0,
        format!("{ran} episodes over TBLER {TBLER_GRID:?}: {collisions} collisions, {wrongful} wrongful deletions"),
    )
}

/// A lone transmission is lost with probability TBLER.
fn channel_erasure_rate() -> Outcome {
    const TRIALS: usize = 100_000;
    const TOL: f64 = 0.01;
    let mut rng = stream(7, streams::CHANNEL);
    let mut worst = 0.0f64;
    let mut detail = String::new();
    for &tbler in &TBLER_GRID {
        let lost = (0..TRIALS)
            .filter(|_| resolve_channel(&[0], tbler, &mut rng) == ChannelOutcome::NonDecodable)
            .count();
        let rate = lost as f64 / TRIALS as f64;
        worst = worst.max((rate - tbler).abs());
        let _ = write!(detail, "{tbler}: {rate:.5}  ");
    }
    check(
        worst <= TOL,
        format!("{detail}(max deviation {worst:.5}, tolerance {TOL})"),
    )
}

/// Critic, chained actor and regularizer gradients against finite differences.
fn gradients() -> Outcome {
    const PAIRS: usize = 100;
    const TOL: f64 = 1e-4;
    let mut rng = stream(99, 0);
    let (mut critic, mut actor, mut reg, mut input) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..PAIRS {
        let p = GradPair::draw(&mut rng);
        critic = critic.max(p.critic_error());
        let temperature = 0.5 + unit(&mut rng);
        actor = actor.max(p.actor_error(temperature, if i % 2 == 0 { 1e-3 } else { 0.3 }));
        reg = reg.max(p.regularizer_error(0.5));
        input = input.max(p.input_error());
    }
    let worst = critic.max(actor).max(reg).max(input);
    check(
        worst <= TOL,
        format!(
            "{PAIRS} pairs, max relative error: critic {critic:.1e}, actor {actor:.1e}, regularizer {reg:.1e}, input {input:.1e} (tolerance {TOL:.0e})"
        ),
    )
}

/// Polyak averaging is exact and contracts the target-online gap by `1 - tau`.
fn soft_update_contracts() -> Outcome {
    const ROUNDS: usize = 20;
    let dims = [42, 64, 64, 5];
    let mut worst_exact = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (k, &tau) in [0.0, 1e-3, 1.0].iter().enumerate() {
        let online = Mlp::new(&dims, &mut stream(k as u64, 1)).unwrap();
        let start = Mlp::new(&dims, &mut stream(k as u64, 2)).unwrap();
        let mut target = start.clone();
        soft_update(&mut target, &online, tau).unwrap();
        for ((&t, &t0), &o) in target
            .params()
            .iter()
            .zip(start.params())
            .zip(online.params())
        {
            let expected = tau * o + (1.0 - tau) * t0;
            let scale = o.abs().max(t0.abs()).max(f64::MIN_POSITIVE);
            worst_exact = worst_exact.max((t - expected).abs() / scale);
        }
        // Frozen online network: after r rounds the gap is (1 - tau)^r of the start.
        for r in 2..=ROUNDS {
            soft_update(&mut target, &online, tau).unwrap();
            let factor = (1.0 - tau).powi(r as i32);
            for ((&t, &t0), &o) in target
                .params()
                .iter()
                .zip(start.params())
                .zip(online.params())
            {
                let scale = o.abs().max(t0.abs()).max(f64::MIN_POSITIVE);
                worst_gap = worst_gap.max(((t - o) - factor * (t0 - o)).abs() / scale);
            }
        }
    }
    // A few roundings per step, accumulated over the rounds.
    let tol = 4.0 * ROUNDS as f64 * f64::EPSILON;
    check(
        worst_exact <= 2.0 * f64::EPSILON && worst_gap <= tol,
        format!("tau in {{0, 1e-3, 1}}: single-step error {worst_exact:.1e}, gap error over {ROUNDS} rounds {worst_gap:.1e}"),
    )
}

/// Argmax of a unit-temperature Gumbel-softmax sample follows the softmax.
fn gumbel_argmax_frequencies() -> Outcome {
    const SAMPLES: usize = 100_000;
    const TOL: f64 = 0.01;
    let cases: [&[f64]; 3] = [&[1.0, 0.0, -1.0], &[2.0, 0.5, 0.5, -1.0], &[0.3, -0.3]];
    let mut rng = stream(3, streams::TRAINING);
    let mut worst = 0.0f64;
    for logits in cases {
        let p = softmax(logits);
        let mut counts = vec![0usize; logits.len()];
        for _ in 0..SAMPLES {
            counts[argmax(&gumbel_softmax_sample(logits, 1.0, &mut rng))] += 1;
        }
        for (c, q) in counts.iter().zip(&p) {
            worst = worst.max((*c as f64 / SAMPLES as f64 - q).abs());
        }
    }
    check(
        worst <= TOL,
        format!(
            "{} logit vectors x {SAMPLES} samples, max deviation {worst:.4} (tolerance {TOL})",
            cases.len()
        ),
    )
}

fn desk_campaign(ablation: Ablation, name: &str) -> Result<Vec<ProtocolRecord>, String> {
    let sim = SimConfig::default().with_sdus(1).with_tbler(0.1);
    let train = TrainConfig {
        ablation,
        ..TrainConfig::desk_scale()
    };
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let campaign = Campaign {
        out_dir: Some(scratch(&format!("learning-{name}"))),
        jobs,
        ..Campaign::new(RunConfig { sim, train }, 4, 1)
    };
    run_campaign(&campaign).map_err(|e| e.to_string())
}

fn mean_final(records: &[ProtocolRecord]) -> f64 {
    records.iter().map(|r| r.final_goodput).sum::<f64>() / records.len() as f64
}

/// Desk-scale training improves on the untrained policy in every repetition
/// and reaches the baseline in at least one.
fn learning_signal() -> Outcome {
    let full = desk_campaign(Ablation::Full, "maddpg")?;
    let mut detail = String::new();
    for r in &full {
        let _ = write!(
            detail,
            "\n    rep {} untrained {:.4} -> final {:.4}, baseline {:.4}",
            r.repetition, r.eval_trace[0].mean_goodput, r.final_goodput, r.baseline.goodput
        );
    }
    let improved = full
        .iter()
        .all(|r| r.final_goodput > r.eval_trace[0].mean_goodput);
    let reached = full.iter().any(|r| r.final_goodput >= r.baseline.goodput);

    // Ablation trend, reported without gating.
    let nocomm = desk_campaign(Ablation::NoComm, "nocomm")?;
    let ddpg = desk_campaign(Ablation::Ddpg, "ddpg")?;
    let (m, d, n) = (mean_final(&full), mean_final(&ddpg), mean_final(&nocomm));
    let _ = write!(
        detail,
        "\n    mean final goodput: maddpg {m:.4}, ddpg {d:.4}, maddpg-nocomm {n:.4}; maddpg > ddpg > nocomm {}",
        if m > d && d > n { "holds" } else { "does not hold" }
    );
    check(
        improved && reached,
        format!("all reps improve: {improved}, some rep reaches baseline: {reached}{detail}"),
    )
}

const TINY_CONFIG: &str = "\
total_sdus = 1
episodes_train = 60
eval_interval = 20
episodes_eval = 20
episodes_test = 40
batch_size = 32
update_interval = 8
hidden_units = 8
replay_capacity = 2000
";

fn emac(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_emac"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "emac {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

/// Baseline, tiny training, evaluation, sweeps and a report, all with fixed
/// seeds, run inside `dir`.
fn cli_pipeline(dir: &Path, jobs: &str) -> Result<(), String> {
    std::fs::write(dir.join("tiny.toml"), TINY_CONFIG).map_err(|e| e.to_string())?;
    emac(
        dir,
        &[
            "baseline",
            "--episodes",
            "300",
            "--seed",
            "5",
            "--out",
            "baseline.csv",
            "--trace",
            "baseline-trace.csv",
        ],
    )?;
    emac(
        dir,
        &[
            "train",
            "--config",
            "tiny.toml",
            "--seed",
            "3",
            "--reps",
            "2",
            "--jobs",
            jobs,
            "--out",
            "run",
        ],
    )?;
    emac(
        dir,
        &[
            "eval",
            "--checkpoint",
            "run/rep-000/checkpoint.json",
            "--episodes",
            "50",
            "--seed",
            "2",
            "--out",
            "eval.csv",
            "--trace",
            "eval-trace.csv",
        ],
    )?;
    emac(
        dir,
        &[
            "sweep",
            "--tbler",
            "0.1,0.01",
            "--episodes",
            "200",
            "--reps",
            "2",
            "--seed",
            "4",
            "--out",
            "sweep-baseline.csv",
        ],
    )?;
    emac(
        dir,
        &[
            "sweep",
            "--tbler",
            "0.1,0.001",
            "--sdus",
            "1",
            "--episodes",
            "100",
            "--checkpoint",
            "run/rep-000/checkpoint.json",
            "--checkpoint",
            "run/rep-001/checkpoint.json",
            "--out",
            "sweep-protocols.csv",
        ],
    )?;
    emac(dir, &["report", "--in", "run", "--out", "report.csv"])
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("readable directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                out.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Two CLI runs with the same seeds produce byte-identical files, with one
/// and two worker threads.
fn cli_reproducible() -> Outcome {
    let (a, b) = (scratch("repro-a"), scratch("repro-b"));
    cli_pipeline(&a, "1")?;
    cli_pipeline(&b, "2")?;
    let (fa, fb) = (files_under(&a), files_under(&b));
    let names: Vec<_> = fa.keys().collect();
    let differing: Vec<_> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let csvs = names
        .iter()
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .count();
    check(
        differing.is_empty() && fa.len() == fb.len(),
        format!(
            "{} files ({csvs} CSV) compared, differing: {differing:?}",
            fa.len()
        ),
    )
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    let mut reader =
        csv::Reader::from_path(path).map_err(|e| format!("{}: {e}", path.display()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| format!("{}: {e}", path.display()))
}

/// Recompute goodput and delivery rate from a per-TTI trace and compare with
/// the reported per-episode metrics, exactly.
fn trace_identities(
    episodes: &Path,
    trace: &Path,
    nominal: usize,
) -> Result<(usize, Vec<String>), String> {
    let rows: Vec<EpisodeRow> = read_rows(episodes)?;
    let trace: Vec<TraceCsvRow> = read_rows(trace)?;
    let mut problems = Vec::new();
    for row in &rows {
        let ttis: Vec<&TraceCsvRow> = trace.iter().filter(|t| t.episode == row.episode).collect();
        let n_ttis = ttis.len() as u32;
        let n_rx: u32 = ttis.iter().map(|t| t.new_rx).sum();
        let consecutive = ttis.iter().enumerate().all(|(i, t)| t.t == i as u32);
        let goodput = n_rx as f64 / n_ttis as f64;
        let delivery = n_rx as f64 / nominal as f64;
        if !consecutive
            || n_ttis != row.n_ttis
            || n_rx != row.n_rx
            || goodput != row.goodput
            || delivery != row.delivery_rate
        {
            problems.push(format!(
                "{} episode {}: trace ({n_rx}, {n_ttis}) vs reported ({}, {}, {}, {})",
                episodes.display(),
                row.episode,
                row.n_rx,
                row.n_ttis,
                row.goodput,
                row.delivery_rate
            ));
        }
    }
    Ok((rows.len(), problems))
}

/// Goodput is `n_rx / n_ttis` and delivery rate is `n_rx / (P * N)` on
/// baseline and learned-policy traces.
fn metric_identities() -> Outcome {
    let dir = scratch("metrics");
    std::fs::write(dir.join("tiny.toml"), TINY_CONFIG).map_err(|e| e.to_string())?;
    emac(
        &dir,
        &[
            "baseline",
            "--episodes",
            "500",
            "--seed",
            "8",
            "--out",
            "baseline.csv",
            "--trace",
            "baseline-trace.csv",
        ],
    )?;
    emac(
        &dir,
        &[
            "train",
            "--config",
            "tiny.toml",
            "--seed",
            "8",
            "--out",
            "run",
        ],
    )?;
    emac(
        &dir,
        &[
            "eval",
            "--checkpoint",
            "run/rep-000/checkpoint.json",
            "--episodes",
            "500",
            "--seed",
            "8",
            "--out",
            "eval.csv",
            "--trace",
            "eval-trace.csv",
        ],
    )?;
    let base_nominal = SimConfig::default().nominal_sdus();
    let tiny_nominal = SimConfig::default().with_sdus(1).nominal_sdus();
    let (nb, mut problems) = trace_identities(
        &dir.join("baseline.csv"),
        &dir.join("baseline-trace.csv"),
        base_nominal,
    )?;
    let (ne, more) = trace_identities(
        &dir.join("eval.csv"),
        &dir.join("eval-trace.csv"),
        tiny_nominal,
    )?;
    problems.extend(more);
    check(
        problems.is_empty(),
        format!(
            "{nb} baseline and {ne} greedy episodes checked, mismatches: {}{}",
            problems.len(),
            problems
                .first()
                .map_or(String::new(), |p| format!(" (first: {p})"))
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "baseline delivery rate", baseline_delivery),
        (
            2,
            "baseline contention freedom",
            baseline_is_contention_free,
        ),
        (3, "channel erasure rate", channel_erasure_rate),
        (4, "gradients vs finite differences", gradients),
        (5, "soft target update", soft_update_contracts),
        (6, "gumbel argmax frequencies", gumbel_argmax_frequencies),
        (7, "desk-scale learning signal", learning_signal),
        (8, "CLI reproducibility", cli_reproducible),
        (9, "metric identities from traces", metric_identities),
    ];
    let selected: Option<Vec<u32>> = std::env::var("ACCEPTANCE_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());

    let mut failed = 0;
    for (id, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&id)) {
            println!("criterion {id} SKIP {name}: not selected");
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (verdict, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id} {verdict} {name} [{secs:.1}s]: {detail}");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
