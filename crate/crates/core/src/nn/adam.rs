//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use super::mlp::{Mlp, NnError};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_mlp(mlp: &Mlp) -> Self {
        Self::new(mlp.param_count())
    }
}

/// One Adam step on `mlp`. Gradients are checked for finiteness before
/// anything is modified.
pub fn adam_step(
    mlp: &mut Mlp,
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
) -> Result<(), NnError> {
    let n = mlp.param_count();
    if grads.len() != n || state.first_moment.len() != n || state.second_moment.len() != n {
        return Err(NnError::ShapeMismatch {
            expected: n,
            got: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(NnError::NonFinite);
    }
    state.step += 1;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let t = state.step as f64;
    let correction1 = 1.0 - libm::pow(b1, t);
    let correction2 = 1.0 - libm::pow(b2, t);
    let params = mlp.params_mut();
    for i in 0..n {
        let g = grads[i];
        let m = b1 * state.first_moment[i] + (1.0 - b1) * g;
        let v = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        state.first_moment[i] = m;
        state.second_moment[i] = v;
        let m_hat = m / correction1;
        let v_hat = v / correction2;
        params[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
    Ok(())
}
