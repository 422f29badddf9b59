//! Agent-state encoding.
//!
//! An agent state is the concatenation of its `k` most recent history
//! slices, newest first, each slice a run of one-hot blocks. Slots older
//! than the start of the episode stay zero.
//!
//! * UE slice: buffer length (`B + 1`), previous env action (3), previous
//!   UCM (`|U|`), DCM received this TTI (`|D|`).
//! * BS slice: channel observation (`N + 2`), this TTI's UCM of every UE
//!   (`N * |U|`), the DCMs it sent at the previous TTI (`N * |D|`).
//!
//! Without communication the message blocks are omitted.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::config::TrainConfig;
use super::nets::Agent;
use crate::env::{EnvAction, SimConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n_ue: usize,
    pub buffer_levels: usize,
    pub ul_vocab: usize,
    pub dl_vocab: usize,
    pub bs_obs_levels: usize,
    pub slices: usize,
    pub communicates: bool,
    pub centralized: bool,
    pub ue_identity: bool,
}

impl Layout {
    pub fn new(sim: &SimConfig, train: &TrainConfig) -> Self {
        Self {
            n_ue: sim.n_ue,
            buffer_levels: sim.buffer_capacity + 1,
            ul_vocab: sim.ul_vocab,
            dl_vocab: sim.dl_vocab,
            bs_obs_levels: sim.bs_obs_count(),
            slices: train.history_slices(),
            communicates: train.ablation.communicates(),
            centralized: train.ablation.centralized(),
            ue_identity: train.ue_identity,
        }
    }

    pub fn ue_slice_width(&self) -> usize {
        let msgs = if self.communicates {
            self.ul_vocab + self.dl_vocab
        } else {
            0
        };
        self.buffer_levels + EnvAction::COUNT + msgs
    }

    pub fn bs_slice_width(&self) -> usize {
        let msgs = if self.communicates {
            self.n_ue * (self.ul_vocab + self.dl_vocab)
        } else {
            0
        };
        self.bs_obs_levels + msgs
    }

    pub fn ue_state_len(&self) -> usize {
        self.slices * self.ue_slice_width() + if self.ue_identity { self.n_ue } else { 0 }
    }

    pub fn bs_state_len(&self) -> usize {
        self.slices * self.bs_slice_width()
    }

    /// Head sizes of the shared UE actor: env action, then UCM.
    pub fn ue_heads(&self) -> Vec<usize> {
        if self.communicates {
            vec![EnvAction::COUNT, self.ul_vocab]
        } else {
            vec![EnvAction::COUNT]
        }
    }

    /// One DCM head per UE; empty without communication.
    pub fn bs_heads(&self) -> Vec<usize> {
        if self.communicates {
            vec![self.dl_vocab; self.n_ue]
        } else {
            Vec::new()
        }
    }

    pub fn ue_action_len(&self) -> usize {
        self.ue_heads().iter().sum()
    }

    pub fn bs_action_len(&self) -> usize {
        self.bs_heads().iter().sum()
    }

    /// The BS is a learning agent only when it has something to say.
    pub fn has_bs_agent(&self) -> bool {
        self.communicates
    }

    pub fn joint_state_len(&self) -> usize {
        self.n_ue * self.ue_state_len() + self.bs_state_len()
    }

    pub fn joint_action_len(&self) -> usize {
        self.n_ue * self.ue_action_len() + self.bs_action_len()
    }

    pub fn agents(&self) -> Vec<Agent> {
        let mut v: Vec<Agent> = (0..self.n_ue).map(Agent::Ue).collect();
        if self.has_bs_agent() {
            v.push(Agent::Bs);
        }
        v
    }

    pub fn state_range(&self, agent: Agent) -> Range<usize> {
        let ue = self.ue_state_len();
        match agent {
            Agent::Ue(u) => u * ue..(u + 1) * ue,
            Agent::Bs => self.n_ue * ue..self.n_ue * ue + self.bs_state_len(),
        }
    }

    pub fn action_range(&self, agent: Agent) -> Range<usize> {
        let ue = self.ue_action_len();
        match agent {
            Agent::Ue(u) => u * ue..(u + 1) * ue,
            Agent::Bs => self.n_ue * ue..self.n_ue * ue + self.bs_action_len(),
        }
    }

    /// Agent order seen by `agent`'s critic: itself first, then the other
    /// UEs in index order, then the BS. The BS's own order is the joint one.
    fn critic_order(&self, agent: Agent) -> Vec<Agent> {
        if !self.centralized {
            return vec![agent];
        }
        let mut order = vec![agent];
        order.extend((0..self.n_ue).map(Agent::Ue).filter(|&a| a != agent));
        if agent != Agent::Bs {
            order.push(Agent::Bs);
        }
        if agent == Agent::Bs {
            order.rotate_left(1);
        }
        order
    }

    pub fn critic_input_len(&self, agent: Agent) -> usize {
        if self.centralized {
            self.joint_state_len() + self.joint_action_len()
        } else {
            match agent {
                Agent::Ue(_) => self.ue_state_len() + self.ue_action_len(),
                Agent::Bs => self.bs_state_len() + self.bs_action_len(),
            }
        }
    }

    /// Assemble `agent`'s critic input from joint state `x` and joint action
    /// `a` into `out`; returns the offset of `agent`'s own action in it.
    pub fn critic_input(&self, agent: Agent, x: &[f64], a: &[f64], out: &mut Vec<f64>) -> usize {
        out.clear();
        let order = self.critic_order(agent);
        for &ag in &order {
            out.extend_from_slice(&x[self.state_range(ag)]);
        }
        let mut own = 0;
        for &ag in &order {
            if ag == agent {
                own = out.len();
            }
            out.extend_from_slice(&a[self.action_range(ag)]);
        }
        own
    }
}

#[inline]
fn one_hot(out: &mut [f64], index: usize) {
    out[index] = 1.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UeSlice {
    pub buffer_len: usize,
    pub prev_action: usize,
    pub prev_ucm: usize,
    pub dcm: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BsSlice {
    pub obs: usize,
    pub ucms: Vec<usize>,
    pub prev_dcms: Vec<usize>,
}

/// The last `k` slices of a UE, newest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeHistory {
    slices: VecDeque<UeSlice>,
    cap: usize,
}

impl UeHistory {
    pub fn new(slices: usize) -> Self {
        Self {
            slices: VecDeque::with_capacity(slices),
            cap: slices,
        }
    }

    pub fn clear(&mut self) {
        self.slices.clear();
    }

    pub fn push(&mut self, slice: UeSlice) {
        if self.slices.len() == self.cap {
            self.slices.pop_back();
        }
        self.slices.push_front(slice);
    }

    pub fn latest(&self) -> Option<&UeSlice> {
        self.slices.front()
    }

    pub fn encode(&self, layout: &Layout, ue: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), layout.ue_state_len());
        out.fill(0.0);
        let width = layout.ue_slice_width();
        for (j, s) in self.slices.iter().enumerate() {
            let block = &mut out[j * width..(j + 1) * width];
            let mut at = 0;
            one_hot(&mut block[at..], s.buffer_len);
            at += layout.buffer_levels;
            one_hot(&mut block[at..], s.prev_action);
            at += EnvAction::COUNT;
            if layout.communicates {
                one_hot(&mut block[at..], s.prev_ucm);
                at += layout.ul_vocab;
                one_hot(&mut block[at..], s.dcm);
            }
        }
        if layout.ue_identity {
            out[layout.slices * width + ue] = 1.0;
        }
    }
}

/// The last `k` BS slices, newest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BsHistory {
    slices: VecDeque<BsSlice>,
    cap: usize,
}

impl BsHistory {
    pub fn new(slices: usize) -> Self {
        Self {
            slices: VecDeque::with_capacity(slices),
            cap: slices,
        }
    }

    pub fn clear(&mut self) {
        self.slices.clear();
    }

    pub fn push(&mut self, slice: BsSlice) {
        if self.slices.len() == self.cap {
            self.slices.pop_back();
        }
        self.slices.push_front(slice);
    }

    pub fn encode(&self, layout: &Layout, out: &mut [f64]) {
        debug_assert_eq!(out.len(), layout.bs_state_len());
        out.fill(0.0);
        let width = layout.bs_slice_width();
        for (j, s) in self.slices.iter().enumerate() {
            let block = &mut out[j * width..(j + 1) * width];
            one_hot(block, s.obs);
            if layout.communicates {
                let mut at = layout.bs_obs_levels;
                for &m in &s.ucms {
                    one_hot(&mut block[at..], m);
                    at += layout.ul_vocab;
                }
                for &d in &s.prev_dcms {
                    one_hot(&mut block[at..], d);
                    at += layout.dl_vocab;
                }
            }
        }
    }
}
