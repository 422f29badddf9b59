//! Episode driver shared by the baseline, greedy evaluation and the CLI.

use alloc::vec::Vec;

use crate::env::{
    new_episode, BsAction, BsView, EnvError, EpisodeStats, SimConfig, UeAction, UeView,
};

/// A complete MAC protocol: the UE side acts on local views only, the BS
/// side on its channel observation and this TTI's UCMs.
pub trait Controller {
    /// Called before the first TTI of every episode with the episode seed.
    fn begin_episode(&mut self, config: &SimConfig, seed: u64);

    fn ue_actions(&mut self, views: &[UeView]) -> Vec<UeAction>;

    fn bs_action(&mut self, view: &BsView<'_>) -> BsAction;
}

impl<C: Controller + ?Sized> Controller for &mut C {
    fn begin_episode(&mut self, config: &SimConfig, seed: u64) {
        (**self).begin_episode(config, seed)
    }

    fn ue_actions(&mut self, views: &[UeView]) -> Vec<UeAction> {
        (**self).ue_actions(views)
    }

    fn bs_action(&mut self, view: &BsView<'_>) -> BsAction {
        (**self).bs_action(view)
    }
}

/// One TTI of an episode trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub t: u32,
    /// Buffer lengths seen by the UEs when they chose their actions.
    pub ue_obs: Vec<usize>,
    pub env_actions: Vec<usize>,
    pub ucms: Vec<usize>,
    /// DCMs the BS produced this TTI.
    pub dcms: Vec<usize>,
    /// BS observation of the data channel.
    pub channel: usize,
    pub reward: i64,
    /// 1 when a previously unreceived SDU was decoded this TTI.
    pub new_rx: u32,
}

/// Run one episode to completion.
pub fn run_episode<C: Controller + ?Sized>(
    config: &SimConfig,
    seed: u64,
    controller: &mut C,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeStats, EnvError> {
    let mut env = new_episode(config.clone(), seed)?;
    controller.begin_episode(config, seed);
    loop {
        let views = env.ue_views();
        let actions = controller.ue_actions(&views);
        let t = env.t();
        let out = env.step(&actions, |v| controller.bs_action(v))?;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                t,
                ue_obs: views.iter().map(|v| v.buffer_len).collect(),
                env_actions: actions.iter().map(|a| a.env_action.index()).collect(),
                ucms: actions.iter().map(|a| a.ucm).collect(),
                dcms: out.dcm.clone(),
                channel: out.bs_obs,
                reward: out.reward,
                new_rx: out.events.new_rx,
            });
        }
        if out.done {
            return Ok(env.stats().clone());
        }
    }
}
