//! Softmax and the Gumbel-softmax relaxation of categorical sampling.

use alloc::vec;
use alloc::vec::Vec;

use crate::rng::{self, StreamRng};

/// Numerically stable softmax of `logits / temperature` into `out`.
pub fn softmax_into(logits: &[f64], temperature: f64, out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = libm::exp((l - max) / temperature);
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; logits.len()];
    softmax_into(logits, 1.0, &mut out);
    out
}

/// Standard Gumbel variate `-ln(-ln U)`.
pub fn gumbel(rng: &mut StreamRng) -> f64 {
    -libm::log(-libm::log(rng::open_unit(rng)))
}

/// `softmax((logits + noise) / temperature)` written into `out`.
pub fn gumbel_softmax_with_noise(logits: &[f64], noise: &[f64], temperature: f64, out: &mut [f64]) {
    let mut perturbed = [0.0f64; 16];
    let n = logits.len();
    if n <= perturbed.len() {
        for i in 0..n {
            perturbed[i] = logits[i] + noise[i];
        }
        softmax_into(&perturbed[..n], temperature, out);
    } else {
        let p: Vec<f64> = logits.iter().zip(noise).map(|(l, g)| l + g).collect();
        softmax_into(&p, temperature, out);
    }
}

/// Draw one relaxed sample. `temperature` must be positive.
pub fn gumbel_softmax_sample(logits: &[f64], temperature: f64, rng: &mut StreamRng) -> Vec<f64> {
    debug_assert!(temperature > 0.0);
    let noise: Vec<f64> = logits.iter().map(|_| gumbel(rng)).collect();
    let mut out = vec![0.0; logits.len()];
    gumbel_softmax_with_noise(logits, &noise, temperature, &mut out);
    out
}

/// Vector-Jacobian product of the Gumbel-softmax with respect to the logits:
/// given the sample `y` and an upstream gradient `g`, returns
/// `(1 / temperature) * y * (g - <y, g>)` into `out`.
pub fn gumbel_softmax_vjp(y: &[f64], upstream: &[f64], temperature: f64, out: &mut [f64]) {
    let inner: f64 = y.iter().zip(upstream).map(|(a, b)| a * b).sum();
    for ((o, &yi), &gi) in out.iter_mut().zip(y).zip(upstream) {
        *o = yi * (gi - inner) / temperature;
    }
}

/// Index of the largest entry; the first one on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
