//! Central finite differences for checking analytic gradients.

use alloc::vec::Vec;

use super::mlp::Mlp;

/// `(f(theta + eps e_i) - f(theta - eps e_i)) / (2 eps)` for every parameter
/// `i` of `net`.
pub fn central_difference(net: &Mlp, eps: f64, f: impl Fn(&Mlp) -> f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.param_count())
        .map(|i| {
            let base = net.params()[i];
            probe.params_mut()[i] = base + eps;
            let up = f(&probe);
            probe.params_mut()[i] = base - eps;
            let down = f(&probe);
            probe.params_mut()[i] = base;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, 1e-6)`; the floor keeps near-zero pairs from
/// dividing by nothing.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}
