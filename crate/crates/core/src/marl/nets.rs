use alloc::vec::Vec;

use super::encode::Layout;
use super::MarlError;
use crate::nn::adam::AdamState;
use crate::nn::gumbel::{argmax, gumbel_softmax_sample};
use crate::nn::mlp::{soft_update, ForwardCache, Mlp, NnError};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Agent {
    Ue(usize),
    Bs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    /// The parameter set shared by every UE.
    Ue,
    Bs,
}

/// Online and target networks of one role plus their optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    /// Logit count of each categorical head, in output order.
    pub heads: Vec<usize>,
}

impl RoleNets {
    pub fn new(
        state_len: usize,
        heads: Vec<usize>,
        critic_input_len: usize,
        hidden: usize,
        rng: &mut StreamRng,
    ) -> Result<Self, NnError> {
        let actor = Mlp::new(&[state_len, hidden, hidden, heads.iter().sum()], rng)?;
        let critic = Mlp::new(&[critic_input_len, hidden, hidden, 1], rng)?;
        Ok(Self::from_online(actor, critic, heads))
    }

    /// Targets start as copies of the online networks.
    pub fn from_online(actor: Mlp, critic: Mlp, heads: Vec<usize>) -> Self {
        Self {
            actor_opt: AdamState::for_mlp(&actor),
            critic_opt: AdamState::for_mlp(&critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            heads,
        }
    }

    pub fn soft_update_targets(&mut self, tau: f64) -> Result<(), NnError> {
        soft_update(&mut self.target_actor, &self.actor, tau)?;
        soft_update(&mut self.target_critic, &self.critic, tau)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorCritic {
    pub ue: RoleNets,
    /// Absent when the BS has no action heads.
    pub bs: Option<RoleNets>,
}

impl ActorCritic {
    pub fn new(layout: &Layout, hidden: usize, rng: &mut StreamRng) -> Result<Self, MarlError> {
        let ue = RoleNets::new(
            layout.ue_state_len(),
            layout.ue_heads(),
            layout.critic_input_len(Agent::Ue(0)),
            hidden,
            rng,
        )?;
        let bs = if layout.has_bs_agent() {
            Some(RoleNets::new(
                layout.bs_state_len(),
                layout.bs_heads(),
                layout.critic_input_len(Agent::Bs),
                hidden,
                rng,
            )?)
        } else {
            None
        };
        Ok(Self { ue, bs })
    }

    pub fn role(&self, role: Role) -> Option<&RoleNets> {
        match role {
            Role::Ue => Some(&self.ue),
            Role::Bs => self.bs.as_ref(),
        }
    }

    pub fn role_mut(&mut self, role: Role) -> Option<&mut RoleNets> {
        match role {
            Role::Ue => Some(&mut self.ue),
            Role::Bs => self.bs.as_mut(),
        }
    }

    pub fn for_agent(&self, agent: Agent) -> Option<&RoleNets> {
        match agent {
            Agent::Ue(_) => Some(&self.ue),
            Agent::Bs => self.bs.as_ref(),
        }
    }

    pub fn soft_update_targets(&mut self, tau: f64) -> Result<(), NnError> {
        self.ue.soft_update_targets(tau)?;
        if let Some(bs) = self.bs.as_mut() {
            bs.soft_update_targets(tau)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Argmax of a Gumbel-softmax sample per head.
    Explore,
    /// Argmax of the raw logits.
    Greedy,
}

/// Per-head choices of `actor` on `state`.
pub fn select_heads(
    actor: &Mlp,
    heads: &[usize],
    state: &[f64],
    mode: ActionMode,
    temperature: f64,
    rng: &mut StreamRng,
    cache: &mut ForwardCache,
) -> Result<Vec<usize>, NnError> {
    actor.forward_into(state, cache)?;
    let logits = cache.output();
    let mut at = 0;
    let mut choice = Vec::with_capacity(heads.len());
    for &h in heads {
        let head = &logits[at..at + h];
        let c = match mode {
            ActionMode::Greedy => argmax(head),
            ActionMode::Explore => argmax(&gumbel_softmax_sample(head, temperature, rng)),
        };
        choice.push(c);
        at += h;
    }
    Ok(choice)
}

/// Greedy per-head choice of raw logits.
pub fn greedy_heads(logits: &[f64], heads: &[usize]) -> Vec<usize> {
    let mut at = 0;
    heads
        .iter()
        .map(|&h| {
            let c = argmax(&logits[at..at + h]);
            at += h;
            c
        })
        .collect()
}

/// Write per-head choices as concatenated one-hots into `out`.
pub fn write_one_hots(choice: &[usize], heads: &[usize], out: &mut [f64]) {
    out.fill(0.0);
    let mut at = 0;
    for (&c, &h) in choice.iter().zip(heads) {
        out[at + c] = 1.0;
        at += h;
    }
}
