//! Critic and actor updates.
//!
//! The critic of agent `i` regresses `Q_i(x, a)` onto
//! `y = r + gamma * Q'_i(x', a')` where every `a'_k` is the greedy one-hot of
//! the target actor `mu'_k` on `x'_k`; terminal transitions use `y = r`.
//!
//! The actor of agent `i` re-derives its own action as a Gumbel-softmax
//! sample of its logits, keeps the other agents' actions from the batch and
//! ascends `mean Q_i(x, a) - reg * mean(logits^2)` through the chain
//! `dQ/da_i * da_i/dlogits * dlogits/dtheta`.

use alloc::vec;
use alloc::vec::Vec;

use super::config::TrainConfig;
use super::encode::Layout;
use super::nets::{greedy_heads, write_one_hots, ActorCritic, Agent, Role};
use super::replay::Transition;
use super::MarlError;
use crate::nn::adam::adam_step;
use crate::nn::gumbel::{gumbel, gumbel_softmax_vjp, gumbel_softmax_with_noise};
use crate::nn::mlp::{Mlp, NnError};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateReport {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// One regression example for a critic.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticSample {
    pub input: Vec<f64>,
    pub target: f64,
}

/// Mean squared TD error over `samples`; accumulates its parameter gradient
/// into `grads` when given.
pub fn critic_loss(
    critic: &Mlp,
    samples: &[CriticSample],
    mut grads: Option<&mut [f64]>,
) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let scale = 1.0 / samples.len() as f64;
    let mut cache = critic.new_cache();
    let mut loss = 0.0;
    for s in samples {
        critic.forward_into(&s.input, &mut cache)?;
        let err = cache.output()[0] - s.target;
        loss += err * err;
        if let Some(g) = grads.as_deref_mut() {
            critic.backward_into(&cache, &[2.0 * err * scale], Some(g), None)?;
        }
    }
    Ok(loss * scale)
}

/// One policy-gradient example: the actor's input, the critic input with
/// every agent's action filled in, where the acting agent's action starts
/// and the Gumbel noise for its logits.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorSample {
    pub state: Vec<f64>,
    pub critic_input: Vec<f64>,
    pub action_offset: usize,
    pub noise: Vec<f64>,
}

/// Actor loss `-mean Q + reg * mean(logits^2)` (the mean of the penalty runs
/// over every logit of every sample). Accumulates the loss gradient with
/// respect to the actor parameters into `grads` when given.
pub fn actor_objective(
    actor: &Mlp,
    critic: &Mlp,
    heads: &[usize],
    samples: &[ActorSample],
    temperature: f64,
    reg: f64,
    mut grads: Option<&mut [f64]>,
) -> Result<f64, NnError> {
    if samples.is_empty() {
        return Ok(0.0);
    }
    let width: usize = heads.iter().sum();
    let per_sample = 1.0 / samples.len() as f64;
    let per_logit = 1.0 / (samples.len() * width) as f64;
    let mut actor_cache = actor.new_cache();
    let mut critic_cache = critic.new_cache();
    let mut input = Vec::new();
    let mut relaxed = vec![0.0; width];
    let mut input_grad = Vec::new();
    let mut logit_grad = vec![0.0; width];
    let mut loss = 0.0;
    for s in samples {
        actor.forward_into(&s.state, &mut actor_cache)?;
        let logits = actor_cache.output();
        let mut at = 0;
        for &h in heads {
            gumbel_softmax_with_noise(
                &logits[at..at + h],
                &s.noise[at..at + h],
                temperature,
                &mut relaxed[at..at + h],
            );
            at += h;
        }
        input.clear();
        input.extend_from_slice(&s.critic_input);
        input[s.action_offset..s.action_offset + width].copy_from_slice(&relaxed);
        critic.forward_into(&input, &mut critic_cache)?;
        let q = critic_cache.output()[0];
        let penalty: f64 = logits.iter().map(|l| l * l).sum();
        loss += -q * per_sample + reg * penalty * per_logit;

        let Some(g) = grads.as_deref_mut() else {
            continue;
        };
        critic.backward_into(&critic_cache, &[1.0], None, Some(&mut input_grad))?;
        let dq_da = &input_grad[s.action_offset..s.action_offset + width];
        let mut at = 0;
        for &h in heads {
            gumbel_softmax_vjp(
                &relaxed[at..at + h],
                &dq_da[at..at + h],
                temperature,
                &mut logit_grad[at..at + h],
            );
            at += h;
        }
        for (d, &l) in logit_grad.iter_mut().zip(logits) {
            *d = -*d * per_sample + 2.0 * reg * l * per_logit;
        }
        actor.backward_into(&actor_cache, &logit_grad, Some(g), None)?;
    }
    Ok(loss)
}

fn role_agents(layout: &Layout, role: Role) -> Vec<Agent> {
    match role {
        Role::Ue => (0..layout.n_ue).map(Agent::Ue).collect(),
        Role::Bs if layout.has_bs_agent() => vec![Agent::Bs],
        Role::Bs => Vec::new(),
    }
}

/// Greedy joint action of the target actors on joint state `x`.
fn target_joint_action(
    nets: &ActorCritic,
    layout: &Layout,
    x: &[f64],
    out: &mut [f64],
) -> Result<(), MarlError> {
    for agent in layout.agents() {
        let role = nets.for_agent(agent).expect("agent without networks");
        let logits = role.target_actor.predict(&x[layout.state_range(agent)])?;
        let choice = greedy_heads(&logits, &role.heads);
        write_one_hots(&choice, &role.heads, &mut out[layout.action_range(agent)]);
    }
    Ok(())
}

/// Critic samples of `role` for `batch`: one per transition and agent.
pub fn critic_samples(
    nets: &ActorCritic,
    layout: &Layout,
    role: Role,
    batch: &[&Transition],
    discount: f64,
) -> Result<Vec<CriticSample>, MarlError> {
    let agents = role_agents(layout, role);
    let Some(nets_role) = nets.role(role) else {
        return Ok(Vec::new());
    };
    let mut samples = Vec::with_capacity(batch.len() * agents.len());
    let mut next_action = vec![0.0; layout.joint_action_len()];
    let mut next_input = Vec::new();
    for tr in batch {
        if !tr.done {
            target_joint_action(nets, layout, &tr.next_state, &mut next_action)?;
        }
        for &agent in &agents {
            let target = if tr.done {
                tr.reward
            } else {
                layout.critic_input(agent, &tr.next_state, &next_action, &mut next_input);
                let q_next = nets_role.target_critic.predict(&next_input)?[0];
                tr.reward + discount * q_next
            };
            let mut input = Vec::new();
            layout.critic_input(agent, &tr.state, &tr.action, &mut input);
            samples.push(CriticSample { input, target });
        }
    }
    Ok(samples)
}

/// One Adam step on `role`'s critic. Returns `None` (and leaves the networks
/// untouched) while `batch` is smaller than the configured batch size.
pub fn critic_update(
    nets: &mut ActorCritic,
    layout: &Layout,
    role: Role,
    batch: &[&Transition],
    cfg: &TrainConfig,
) -> Result<Option<f64>, MarlError> {
    if batch.len() < cfg.batch_size || nets.role(role).is_none() {
        return Ok(None);
    }
    let samples = critic_samples(nets, layout, role, batch, cfg.discount)?;
    let r = nets.role_mut(role).unwrap();
    let mut grads = r.critic.zero_grads();
    let loss = critic_loss(&r.critic, &samples, Some(&mut grads))?;
    adam_step(&mut r.critic, &grads, &mut r.critic_opt, cfg.learning_rate)?;
    Ok(Some(loss))
}

/// Actor samples of `role` for `batch` with fresh Gumbel noise.
pub fn actor_samples(
    nets: &ActorCritic,
    layout: &Layout,
    role: Role,
    batch: &[&Transition],
    rng: &mut StreamRng,
) -> Vec<ActorSample> {
    let agents = role_agents(layout, role);
    let Some(r) = nets.role(role) else {
        return Vec::new();
    };
    let width: usize = r.heads.iter().sum();
    let mut samples = Vec::with_capacity(batch.len() * agents.len());
    for tr in batch {
        for &agent in &agents {
            let mut critic_input = Vec::new();
            let action_offset =
                layout.critic_input(agent, &tr.state, &tr.action, &mut critic_input);
            samples.push(ActorSample {
                state: tr.state[layout.state_range(agent)].to_vec(),
                critic_input,
                action_offset,
                noise: (0..width).map(|_| gumbel(rng)).collect(),
            });
        }
    }
    samples
}

/// One Adam step on `role`'s actor. Returns the objective
/// `mean Q - reg * mean(logits^2)` before the step, or `None` during warmup.
pub fn actor_update(
    nets: &mut ActorCritic,
    layout: &Layout,
    role: Role,
    batch: &[&Transition],
    cfg: &TrainConfig,
    rng: &mut StreamRng,
) -> Result<Option<f64>, MarlError> {
    if batch.len() < cfg.batch_size || nets.role(role).is_none() {
        return Ok(None);
    }
    let samples = actor_samples(nets, layout, role, batch, rng);
    let r = nets.role_mut(role).unwrap();
    let mut grads = r.actor.zero_grads();
    let loss = actor_objective(
        &r.actor,
        &r.critic,
        &r.heads,
        &samples,
        cfg.gumbel_temperature,
        cfg.policy_reg,
        Some(&mut grads),
    )?;
    adam_step(&mut r.actor, &grads, &mut r.actor_opt, cfg.learning_rate)?;
    Ok(Some(-loss))
}
