//! Per-episode metric rows and per-TTI trace rows.

use emac_core::marl::EpisodeMetrics;
use emac_core::{run_episode, Controller, SimConfig, TraceRow};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub seed: u64,
    pub n_rx: u32,
    pub n_ttis: u32,
    pub goodput: f64,
    pub delivery_rate: f64,
}

/// One TTI. Per-UE columns hold one value per UE joined by `;`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCsvRow {
    pub episode: usize,
    pub t: u32,
    pub ue_obs: String,
    pub env_actions: String,
    pub ucms: String,
    pub dcms: String,
    pub bs_obs: usize,
    pub reward: i64,
    pub new_rx: u32,
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

impl TraceCsvRow {
    pub fn new(episode: usize, row: &TraceRow) -> Self {
        Self {
            episode,
            t: row.t,
            ue_obs: join(&row.ue_obs),
            env_actions: join(&row.env_actions),
            ucms: join(&row.ucms),
            dcms: join(&row.dcms),
            bs_obs: row.channel,
            reward: row.reward,
            new_rx: row.new_rx,
        }
    }
}

pub fn episode_rows(seeds: &[u64], episodes: &[EpisodeMetrics]) -> Vec<EpisodeRow> {
    seeds
        .iter()
        .zip(episodes)
        .enumerate()
        .map(|(i, (&seed, m))| EpisodeRow {
            episode: i,
            seed,
            n_rx: m.stats.n_rx,
            n_ttis: m.stats.n_ttis,
            goodput: m.goodput,
            delivery_rate: m.delivery_rate,
        })
        .collect()
}

/// Run `controller` once per seed, returning episode rows and, when asked,
/// the full per-TTI trace.
pub fn run_logged<C: Controller + ?Sized>(
    controller: &mut C,
    sim: &SimConfig,
    seeds: &[u64],
    with_trace: bool,
) -> Result<(Vec<EpisodeRow>, Vec<TraceCsvRow>)> {
    let mut metrics = Vec::with_capacity(seeds.len());
    let mut trace = Vec::new();
    let mut rows = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        rows.clear();
        let stats = run_episode(sim, seed, controller, with_trace.then_some(&mut rows))?;
        trace.extend(rows.iter().map(|r| TraceCsvRow::new(i, r)));
        metrics.push(EpisodeMetrics::from_stats(stats, sim)?);
    }
    Ok((episode_rows(seeds, &metrics), trace))
}
