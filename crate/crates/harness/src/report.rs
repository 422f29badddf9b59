//! Tidy CSV output: one detail row per evaluation point per repetition and
//! one summary row per (solution, TBLER, P) group.

use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const BASELINE_SOLUTION: &str = "contention-free";
pub const CI_METHOD: &str = "normal: mean +- 1.96*sd/sqrt(n), sd over repetitions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub solution: String,
    pub tbler: f64,
    #[serde(rename = "P")]
    pub sdus: usize,
    pub repetition: usize,
    pub train_episode: usize,
    pub goodput: f64,
    pub delivery_rate: f64,
    pub duration: f64,
}

/// Final evaluation point of every repetition in a group, aggregated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub solution: String,
    pub tbler: f64,
    #[serde(rename = "P")]
    pub sdus: usize,
    pub repetitions: usize,
    pub train_episode: usize,
    pub goodput: f64,
    pub goodput_ci_low: Option<f64>,
    pub goodput_ci_high: Option<f64>,
    pub delivery_rate: f64,
    pub duration: f64,
    pub best_repetition: usize,
    pub best_goodput: f64,
    pub ci_method: String,
}

/// Sample mean and, for two or more values, the 95% normal-approximation
/// interval `mean +- 1.96 sd / sqrt(n)`.
pub fn mean_ci(values: &[f64]) -> (f64, Option<(f64, f64)>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let half = 1.96 * var.sqrt() / (n as f64).sqrt();
    (mean, Some((mean - half, mean + half)))
}

/// Index of the largest score; ties go to the smallest id.
pub fn argmax_by_score<T>(
    items: &[T],
    score: impl Fn(&T) -> f64,
    id: impl Fn(&T) -> usize,
) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, item) in items.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let order = score(item)
                    .partial_cmp(&score(&items[b]))
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| id(&items[b]).cmp(&id(item)));
                if order == Ordering::Greater {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

pub fn summarize(rows: &[DetailRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(String, f64, usize)> = Vec::new();
    for r in rows {
        let k = (r.solution.clone(), r.tbler, r.sdus);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keys.into_iter()
        .map(|(solution, tbler, sdus)| {
            let group: Vec<&DetailRow> = rows
                .iter()
                .filter(|r| r.solution == solution && r.tbler == tbler && r.sdus == sdus)
                .collect();
            let mut reps: Vec<usize> = group.iter().map(|r| r.repetition).collect();
            reps.sort_unstable();
            reps.dedup();
            let finals: Vec<&DetailRow> = reps
                .iter()
                .map(|&rep| {
                    group
                        .iter()
                        .filter(|r| r.repetition == rep)
                        .max_by_key(|r| r.train_episode)
                        .copied()
                        .expect("every repetition has a row")
                })
                .collect();
            let goodputs: Vec<f64> = finals.iter().map(|r| r.goodput).collect();
            let (goodput, ci) = mean_ci(&goodputs);
            let n = finals.len() as f64;
            let best =
                argmax_by_score(&finals, |r| r.goodput, |r| r.repetition).expect("non-empty group");
            SummaryRow {
                repetitions: finals.len(),
                train_episode: finals.iter().map(|r| r.train_episode).max().unwrap_or(0),
                goodput,
                goodput_ci_low: ci.map(|c| c.0),
                goodput_ci_high: ci.map(|c| c.1),
                delivery_rate: finals.iter().map(|r| r.delivery_rate).sum::<f64>() / n,
                duration: finals.iter().map(|r| r.duration).sum::<f64>() / n,
                best_repetition: finals[best].repetition,
                best_goodput: finals[best].goodput,
                ci_method: CI_METHOD.to_string(),
                solution,
                tbler,
                sdus,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_io(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// CSV text of `rows` with a header line.
pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| HarnessError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_io(path, e))?;
    r.deserialize()
        .map(|row| row.map_err(|e| csv_io(path, e)))
        .collect()
}

fn csv_io(path: &Path, e: csv::Error) -> HarnessError {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => HarnessError::io(path, io),
            _ => unreachable!("checked io kind"),
        }
    } else {
        HarnessError::Config(format!("{}: {e}", path.display()))
    }
}

/// Detail files below `dir`: every `eval.csv` and `baseline.csv`, sorted by
/// path.
pub fn detail_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = std::fs::read_dir(&d).map_err(|e| HarnessError::io(&d, e))?;
        for entry in entries {
            let path = entry.map_err(|e| HarnessError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if matches!(
                path.file_name().and_then(|n| n.to_str()),
                Some("eval.csv" | "baseline.csv")
            ) {
                found.push(path);
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Path of the summary file that accompanies the detail file `detail`.
pub fn summary_path(detail: &Path) -> PathBuf {
    let stem = detail
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("report");
    detail.with_file_name(format!("{stem}-summary.csv"))
}

/// Collect every detail file below `input`, write them as one detail CSV to
/// `out` and the group summaries next to it.
pub fn emit_report(input: &Path, out: &Path) -> Result<(Vec<DetailRow>, Vec<SummaryRow>)> {
    let files = detail_files(input)?;
    if files.is_empty() {
        return Err(HarnessError::Usage(format!(
            "no eval.csv or baseline.csv below {}",
            input.display()
        )));
    }
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_csv::<DetailRow>(f)?);
    }
    let summary = summarize(&rows);
    write_csv(out, &rows)?;
    write_csv(&summary_path(out), &summary)?;
    Ok((rows, summary))
}
