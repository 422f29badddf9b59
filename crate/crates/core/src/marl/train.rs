//! Training loop and greedy evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::config::TrainConfig;
use super::encode::{BsHistory, BsSlice, Layout, UeHistory, UeSlice};
use super::nets::{select_heads, write_one_hots, ActionMode, ActorCritic, Agent, Role};
use super::replay::{ReplayBuffer, Transition};
use super::update::{actor_update, critic_update, UpdateReport};
use super::MarlError;
use crate::env::{
    delivery_rate, goodput, new_episode, BsAction, BsView, EnvAction, EnvError, EpisodeStats,
    SimConfig, UeAction, UeView, NULL_MESSAGE,
};
use crate::nn::mlp::ForwardCache;
use crate::rng::{self, streams, StreamRng};
use crate::rollout::{run_episode, Controller};

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub goodput: f64,
    pub delivery_rate: f64,
    pub duration: u32,
    pub stats: EpisodeStats,
}

impl EpisodeMetrics {
    pub fn from_stats(stats: EpisodeStats, sim: &SimConfig) -> Result<Self, EnvError> {
        Ok(Self {
            goodput: goodput(&stats)?,
            delivery_rate: delivery_rate(&stats, sim),
            duration: stats.n_ttis,
            stats,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub episodes: Vec<EpisodeMetrics>,
    pub mean_goodput: f64,
    pub mean_delivery_rate: f64,
    pub mean_duration: f64,
}

impl EvalSummary {
    pub fn from_episodes(episodes: Vec<EpisodeMetrics>) -> Self {
        let n = episodes.len().max(1) as f64;
        let mean = |f: fn(&EpisodeMetrics) -> f64| episodes.iter().map(f).sum::<f64>() / n;
        Self {
            mean_goodput: mean(|e| e.goodput),
            mean_delivery_rate: mean(|e| e.delivery_rate),
            mean_duration: mean(|e| e.duration as f64),
            episodes,
        }
    }
}

/// Mean evaluation metrics after `train_episode` training episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub train_episode: usize,
    pub mean_goodput: f64,
    pub mean_delivery_rate: f64,
    pub mean_duration: f64,
}

/// Run `controller` once per seed.
pub fn evaluate_controller<C: Controller + ?Sized>(
    controller: &mut C,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<EvalSummary, EnvError> {
    let episodes = seeds
        .iter()
        .map(|&seed| {
            let stats = run_episode(sim, seed, controller, None)?;
            EpisodeMetrics::from_stats(stats, sim)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalSummary::from_episodes(episodes))
}

/// Greedy rollouts of `nets` (no exploration, no learning).
pub fn evaluate(
    nets: &ActorCritic,
    layout: &Layout,
    sim: &SimConfig,
    seeds: &[u64],
) -> Result<EvalSummary, EnvError> {
    evaluate_controller(&mut GreedyController::new(nets, layout), sim, seeds)
}

/// History bookkeeping shared by training and evaluation.
#[derive(Debug, Clone)]
struct AgentMemory {
    ue: Vec<UeHistory>,
    bs: BsHistory,
    prev_actions: Vec<UeAction>,
    prev_dcms: Vec<usize>,
}

impl AgentMemory {
    fn new(layout: &Layout) -> Self {
        Self {
            ue: vec![UeHistory::new(layout.slices); layout.n_ue],
            bs: BsHistory::new(layout.slices),
            prev_actions: vec![UeAction::default(); layout.n_ue],
            prev_dcms: vec![NULL_MESSAGE; layout.n_ue],
        }
    }

    fn reset(&mut self) {
        self.ue.iter_mut().for_each(UeHistory::clear);
        self.bs.clear();
        self.prev_actions.fill(UeAction::default());
        self.prev_dcms.fill(NULL_MESSAGE);
    }

    /// Push the UE slices of this TTI and encode every UE state into the UE
    /// part of the joint state `x`.
    fn observe_ues(&mut self, layout: &Layout, views: &[UeView], x: &mut [f64]) {
        for (u, v) in views.iter().enumerate() {
            let prev = self.prev_actions[u];
            self.ue[u].push(UeSlice {
                buffer_len: v.buffer_len,
                prev_action: prev.env_action.index(),
                prev_ucm: prev.ucm,
                dcm: v.dcm,
            });
            self.ue[u].encode(layout, u, &mut x[layout.state_range(Agent::Ue(u))]);
        }
    }

    fn observe_bs(&mut self, layout: &Layout, view: &BsView<'_>, x: &mut [f64]) {
        self.bs.push(BsSlice {
            obs: view.obs,
            ucms: view.ucms.to_vec(),
            prev_dcms: self.prev_dcms.clone(),
        });
        self.bs
            .encode(layout, &mut x[layout.state_range(Agent::Bs)]);
    }
}

fn ue_action_from(choice: &[usize]) -> UeAction {
    UeAction {
        env_action: EnvAction::from_index(choice[0]).unwrap_or_default(),
        ucm: choice.get(1).copied().unwrap_or(NULL_MESSAGE),
    }
}

/// Decentralized execution of trained actors with greedy action choice.
pub struct GreedyController<'a> {
    nets: &'a ActorCritic,
    layout: &'a Layout,
    memory: AgentMemory,
    x: Vec<f64>,
    cache: ForwardCache,
    // Greedy selection never draws; the generator only satisfies the signature.
    unused_rng: StreamRng,
}

impl<'a> GreedyController<'a> {
    pub fn new(nets: &'a ActorCritic, layout: &'a Layout) -> Self {
        Self {
            nets,
            layout,
            memory: AgentMemory::new(layout),
            x: vec![0.0; layout.joint_state_len()],
            cache: ForwardCache::default(),
            unused_rng: rng::stream(0, 0),
        }
    }
}

impl Controller for GreedyController<'_> {
    fn begin_episode(&mut self, _config: &SimConfig, _seed: u64) {
        self.memory.reset();
    }

    fn ue_actions(&mut self, views: &[UeView]) -> Vec<UeAction> {
        self.memory.observe_ues(self.layout, views, &mut self.x);
        let ue = &self.nets.ue;
        let actions: Vec<UeAction> = (0..views.len())
            .map(|u| {
                let s = &self.x[self.layout.state_range(Agent::Ue(u))];
                let choice = select_heads(
                    &ue.actor,
                    &ue.heads,
                    s,
                    ActionMode::Greedy,
                    1.0,
                    &mut self.unused_rng,
                    &mut self.cache,
                )
                .expect("actor input width is fixed by the layout");
                ue_action_from(&choice)
            })
            .collect();
        self.memory.prev_actions.clone_from(&actions);
        actions
    }

    fn bs_action(&mut self, view: &BsView<'_>) -> BsAction {
        let action = match self.nets.bs.as_ref() {
            Some(bs) => {
                self.memory.observe_bs(self.layout, view, &mut self.x);
                let s = &self.x[self.layout.state_range(Agent::Bs)];
                let dcm = select_heads(
                    &bs.actor,
                    &bs.heads,
                    s,
                    ActionMode::Greedy,
                    1.0,
                    &mut self.unused_rng,
                    &mut self.cache,
                )
                .expect("actor input width is fixed by the layout");
                BsAction { dcm }
            }
            None => BsAction::null(view.ucms.len()),
        };
        self.memory.prev_dcms.clone_from(&action.dcm);
        action
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub nets: ActorCritic,
    pub eval_trace: Vec<EvalPoint>,
    pub env_steps: u64,
    pub update_rounds: u64,
    pub last_report: UpdateReport,
}

/// Incremental MADDPG trainer.
///
/// Evaluation uses a fixed seed list drawn from its own stream, so it never
/// advances the training generator.
pub struct Trainer {
    sim: SimConfig,
    cfg: TrainConfig,
    layout: Layout,
    nets: ActorCritic,
    replay: ReplayBuffer,
    rng: StreamRng,
    eval_seeds: Vec<u64>,
    memory: AgentMemory,
    caches: (ForwardCache, ForwardCache),
    env_steps: u64,
    update_rounds: u64,
    episodes_done: usize,
    last_report: UpdateReport,
}

impl Trainer {
    pub fn new(sim: SimConfig, cfg: TrainConfig, seed: u64) -> Result<Self, MarlError> {
        sim.validate()?;
        cfg.validate()?;
        let layout = Layout::new(&sim, &cfg);
        let nets = ActorCritic::new(
            &layout,
            cfg.hidden_units,
            &mut rng::stream(seed, streams::INIT),
        )?;
        Ok(Self {
            eval_seeds: rng::seed_list(seed, streams::EVAL_SEEDS, cfg.episodes_eval),
            memory: AgentMemory::new(&layout),
            replay: ReplayBuffer::new(cfg.replay_capacity),
            rng: rng::stream(seed, streams::TRAINING),
            caches: Default::default(),
            env_steps: 0,
            update_rounds: 0,
            episodes_done: 0,
            last_report: UpdateReport::default(),
            sim,
            cfg,
            layout,
            nets,
        })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn nets(&self) -> &ActorCritic {
        &self.nets
    }

    pub fn replay(&self) -> &ReplayBuffer {
        &self.replay
    }

    pub fn eval_seeds(&self) -> &[u64] {
        &self.eval_seeds
    }

    pub fn episodes_done(&self) -> usize {
        self.episodes_done
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn update_rounds(&self) -> u64 {
        self.update_rounds
    }

    pub fn evaluate(&self) -> Result<EvalPoint, EnvError> {
        let s = evaluate(&self.nets, &self.layout, &self.sim, &self.eval_seeds)?;
        Ok(EvalPoint {
            train_episode: self.episodes_done,
            mean_goodput: s.mean_goodput,
            mean_delivery_rate: s.mean_delivery_rate,
            mean_duration: s.mean_duration,
        })
    }

    /// One exploring episode, storing transitions and running update rounds
    /// on the step cadence.
    pub fn train_episode(&mut self) -> Result<EpisodeStats, MarlError> {
        let episode_seed = self.rng.next_u64();
        let mut env = new_episode(self.sim.clone(), episode_seed)?;
        self.memory.reset();
        let layout = &self.layout.clone();
        let temperature = self.cfg.gumbel_temperature;
        let ue_width = layout.ue_action_len();
        let mut pending: Option<Transition> = None;
        loop {
            let mut x = vec![0.0; layout.joint_state_len()];
            let mut a = vec![0.0; layout.joint_action_len()];
            let views = env.ue_views();
            self.memory.observe_ues(layout, &views, &mut x);
            if let Some(p) = pending.as_mut() {
                let ue_part = 0..layout.n_ue * layout.ue_state_len();
                p.next_state[ue_part.clone()].copy_from_slice(&x[ue_part]);
            }

            let ue = &self.nets.ue;
            let mut actions = Vec::with_capacity(layout.n_ue);
            for u in 0..layout.n_ue {
                let choice = select_heads(
                    &ue.actor,
                    &ue.heads,
                    &x[layout.state_range(Agent::Ue(u))],
                    ActionMode::Explore,
                    temperature,
                    &mut self.rng,
                    &mut self.caches.0,
                )?;
                write_one_hots(&choice, &ue.heads, &mut a[u * ue_width..(u + 1) * ue_width]);
                actions.push(ue_action_from(&choice));
            }
            self.memory.prev_actions.clone_from(&actions);

            let memory = &mut self.memory;
            let rng = &mut self.rng;
            let cache = &mut self.caches.1;
            let replay = &mut self.replay;
            let bs_nets = self.nets.bs.as_ref();
            let mut failure = None;
            let out = env.step(&actions, |view| {
                let action = match bs_nets {
                    Some(bs) => {
                        memory.observe_bs(layout, view, &mut x);
                        match select_heads(
                            &bs.actor,
                            &bs.heads,
                            &x[layout.state_range(Agent::Bs)],
                            ActionMode::Explore,
                            temperature,
                            rng,
                            cache,
                        ) {
                            Ok(dcm) => {
                                write_one_hots(
                                    &dcm,
                                    &bs.heads,
                                    &mut a[layout.action_range(Agent::Bs)],
                                );
                                BsAction { dcm }
                            }
                            Err(e) => {
                                failure = Some(e);
                                BsAction::null(view.ucms.len())
                            }
                        }
                    }
                    None => {
                        memory.observe_bs(layout, view, &mut x);
                        BsAction::null(view.ucms.len())
                    }
                };
                if let Some(mut p) = pending.take() {
                    let bs_part = layout.state_range(Agent::Bs);
                    p.next_state[bs_part.clone()].copy_from_slice(&x[bs_part]);
                    replay.push(p);
                }
                memory.prev_dcms.clone_from(&action.dcm);
                action
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }

            let transition = Transition {
                state: x,
                action: a,
                reward: out.reward as f64,
                next_state: vec![0.0; layout.joint_state_len()],
                done: out.done,
            };
            if out.done {
                self.replay.push(transition);
            } else {
                pending = Some(transition);
            }

            self.env_steps += 1;
            if self
                .env_steps
                .is_multiple_of(self.cfg.update_interval as u64)
                && self.replay.len() >= self.cfg.batch_size
            {
                self.update_round()?;
            }
            if out.done {
                self.episodes_done += 1;
                return Ok(env.stats().clone());
            }
        }
    }

    /// Critic then actor update for each role, then soft target updates.
    pub fn update_round(&mut self) -> Result<UpdateReport, MarlError> {
        let mut report = UpdateReport::default();
        for role in [Role::Ue, Role::Bs] {
            if self.nets.role(role).is_none() {
                continue;
            }
            let batch = self.replay.sample(self.cfg.batch_size, &mut self.rng);
            if let Some(l) = critic_update(&mut self.nets, &self.layout, role, &batch, &self.cfg)? {
                report.critic_loss += l;
            }
            if let Some(j) = actor_update(
                &mut self.nets,
                &self.layout,
                role,
                &batch,
                &self.cfg,
                &mut self.rng,
            )? {
                report.actor_objective += j;
            }
        }
        self.nets.soft_update_targets(self.cfg.tau)?;
        self.update_rounds += 1;
        self.last_report = report;
        Ok(report)
    }

    /// Train for the configured number of episodes, evaluating before the
    /// first episode, every `eval_interval` episodes and after the last one.
    pub fn run(mut self) -> Result<TrainOutput, MarlError> {
        let mut trace = vec![self.evaluate()?];
        while self.episodes_done < self.cfg.episodes_train {
            self.train_episode()?;
            if self.episodes_done.is_multiple_of(self.cfg.eval_interval)
                || self.episodes_done == self.cfg.episodes_train
            {
                trace.push(self.evaluate()?);
            }
        }
        Ok(TrainOutput {
            nets: self.nets,
            eval_trace: trace,
            env_steps: self.env_steps,
            update_rounds: self.update_rounds,
            last_report: self.last_report,
        })
    }
}

pub fn train_run(sim: &SimConfig, cfg: &TrainConfig, seed: u64) -> Result<TrainOutput, MarlError> {
    Trainer::new(sim.clone(), cfg.clone(), seed)?.run()
}
