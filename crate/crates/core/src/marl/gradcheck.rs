//! Random miniature actor/critic pairs for checking the update gradients
//! against central finite differences.
//!
//! Draws that put a ReLU pre-activation near its kink are redrawn, since a
//! finite difference straddling the kink is not a derivative.

use alloc::vec;
use alloc::vec::Vec;

use super::update::{actor_objective, critic_loss, ActorSample, CriticSample};
use crate::nn::gradcheck::{central_difference, relative_error};
use crate::nn::gumbel::{gumbel, gumbel_softmax_with_noise};
use crate::nn::mlp::Mlp;
use crate::rng::{index, unit, StreamRng};

/// Finite-difference step.
pub const EPS: f64 = 1e-5;
/// Smallest admissible `|pre-activation|` over every sample.
pub const KINK_MARGIN: f64 = 1e-3;

pub struct GradPair {
    pub actor: Mlp,
    pub critic: Mlp,
    pub heads: Vec<usize>,
    pub actor_samples: Vec<ActorSample>,
    pub critic_samples: Vec<CriticSample>,
}

fn uniform(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 2.0 * unit(rng) - 1.0).collect()
}

fn min_abs_pre_activation(mlp: &Mlp, input: &[f64]) -> f64 {
    let mut cache = mlp.new_cache();
    // Inputs are built to the network's width.
    mlp.forward_into(input, &mut cache)
        .expect("input width matches");
    (0..mlp.layer_count() - 1)
        .flat_map(|l| cache.pre_activations(l).iter().copied())
        .fold(f64::INFINITY, |m, z| m.min(z.abs()))
}

/// Largest relative error over all entries.
fn max_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}

impl GradPair {
    /// Actor `[s, h, h, sum(heads)]` with one or two heads; critic
    /// `[before + width + after, h, h, 1]` where the action block sits at
    /// `before`; one to three samples.
    pub fn draw(rng: &mut StreamRng) -> Self {
        loop {
            let state_len = 2 + index(rng, 4);
            let hidden = 2 + index(rng, 5);
            let mut heads = vec![2 + index(rng, 3)];
            if unit(rng) < 0.5 {
                heads.push(2 + index(rng, 2));
            }
            let width: usize = heads.iter().sum();
            let (before, after) = (index(rng, 4), 1 + index(rng, 4));
            let critic_len = before + width + after;
            let actor = Mlp::new(&[state_len, hidden, hidden, width], rng).expect("valid dims");
            let critic = Mlp::new(&[critic_len, hidden, hidden, 1], rng).expect("valid dims");

            let samples = 1 + index(rng, 3);
            let mut actor_samples = Vec::new();
            let mut critic_samples = Vec::new();
            let mut margin = f64::INFINITY;
            for _ in 0..samples {
                let state = uniform(rng, state_len);
                let critic_input = uniform(rng, critic_len);
                let noise: Vec<f64> = (0..width).map(|_| gumbel(rng)).collect();
                margin = margin.min(min_abs_pre_activation(&actor, &state));
                let logits = actor.predict(&state).expect("input width matches");
                let mut relaxed = vec![0.0; width];
                let mut at = 0;
                for &h in &heads {
                    gumbel_softmax_with_noise(
                        &logits[at..at + h],
                        &noise[at..at + h],
                        1.0,
                        &mut relaxed[at..at + h],
                    );
                    at += h;
                }
                let mut joint = critic_input.clone();
                joint[before..before + width].copy_from_slice(&relaxed);
                margin = margin.min(min_abs_pre_activation(&critic, &joint));
                margin = margin.min(min_abs_pre_activation(&critic, &critic_input));
                actor_samples.push(ActorSample {
                    state,
                    critic_input: critic_input.clone(),
                    action_offset: before,
                    noise,
                });
                critic_samples.push(CriticSample {
                    input: critic_input,
                    target: 4.0 * unit(rng) - 2.0,
                });
            }
            if margin > KINK_MARGIN {
                return Self {
                    actor,
                    critic,
                    heads,
                    actor_samples,
                    critic_samples,
                };
            }
        }
    }

    /// Critic loss gradient with respect to the critic parameters.
    pub fn critic_error(&self) -> f64 {
        let mut analytic = self.critic.zero_grads();
        critic_loss(&self.critic, &self.critic_samples, Some(&mut analytic)).expect("shapes match");
        let numeric = central_difference(&self.critic, EPS, |c| {
            critic_loss(c, &self.critic_samples, None).expect("shapes match")
        });
        max_error(&analytic, &numeric)
    }

    /// Actor objective gradient, chained through the relaxed action and the
    /// critic, with respect to the actor parameters.
    pub fn actor_error(&self, temperature: f64, reg: f64) -> f64 {
        self.actor_error_against(&self.critic, temperature, reg)
    }

    /// The logit regularizer alone: a zero critic has no action gradient.
    pub fn regularizer_error(&self, reg: f64) -> f64 {
        let zero = Mlp::zeros(self.critic.dims()).expect("valid dims");
        self.actor_error_against(&zero, 1.0, reg)
    }

    fn actor_error_against(&self, critic: &Mlp, temperature: f64, reg: f64) -> f64 {
        let objective = |a: &Mlp| {
            actor_objective(
                a,
                critic,
                &self.heads,
                &self.actor_samples,
                temperature,
                reg,
                None,
            )
            .expect("shapes match")
        };
        let mut analytic = self.actor.zero_grads();
        actor_objective(
            &self.actor,
            critic,
            &self.heads,
            &self.actor_samples,
            temperature,
            reg,
            Some(&mut analytic),
        )
        .expect("shapes match");
        max_error(&analytic, &central_difference(&self.actor, EPS, objective))
    }

    /// Critic output gradient with respect to its input.
    pub fn input_error(&self) -> f64 {
        let x = &self.critic_samples[0].input;
        let (_, cache) = self.critic.forward(x).expect("input width matches");
        let (_, input_grad) = self.critic.backward(&cache, &[1.0]).expect("shapes match");
        let numeric: Vec<f64> = (0..x.len())
            .map(|i| {
                let mut up = x.clone();
                let mut down = x.clone();
                up[i] += EPS;
                down[i] -= EPS;
                let f = |v: &[f64]| self.critic.predict(v).expect("input width matches")[0];
                (f(&up) - f(&down)) / (2.0 * EPS)
            })
            .collect();
        max_error(&input_grad, &numeric)
    }
}
