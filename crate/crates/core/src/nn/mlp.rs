//! Fully connected ReLU networks with exact backpropagation.
//!
//! Parameters live in one flat vector. Layer `l` occupies
//! `[W_l (in x out, row-major) | b_l (out)]`, layers in order, which is also
//! the layout of gradients, Adam moments and the text dump. Row `i` of `W_l`
//! holds the weights leaving input `i`, so a pass over a sparse input (one-hot
//! encodings, ReLU zeros) touches only the rows of its non-zero entries.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub enum NnError {
    InvalidDims,
    ShapeMismatch { expected: usize, got: usize },
    StaleCache,
    NonFinite,
    Parse(String),
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::InvalidDims => f.write_str("layer sizes must be non-empty and non-zero"),
            NnError::ShapeMismatch { expected, got } => {
                write!(f, "shape mismatch: expected length {expected}, got {got}")
            }
            NnError::StaleCache => {
                f.write_str("forward cache does not belong to this network state")
            }
            NnError::NonFinite => f.write_str("non-finite value in gradients"),
            NnError::Parse(msg) => write!(f, "malformed network dump: {msg}"),
        }
    }
}

impl core::error::Error for NnError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    offsets: Vec<usize>,
    params: Vec<f64>,
    revision: u64,
}

/// Pre-activations and activations of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    dims: Vec<usize>,
    revision: u64,
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn input(&self) -> &[f64] {
        self.activations.first().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pre_activations(&self, layer: usize) -> &[f64] {
        &self.pre_activations[layer]
    }
}

fn layer_len(fan_in: usize, fan_out: usize) -> usize {
    fan_in * fan_out + fan_out
}

fn check_dims(dims: &[usize]) -> Result<Vec<usize>, NnError> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(NnError::InvalidDims);
    }
    let mut offsets = Vec::with_capacity(dims.len());
    let mut at = 0;
    offsets.push(0);
    for w in dims.windows(2) {
        at += layer_len(w[0], w[1]);
        offsets.push(at);
    }
    Ok(offsets)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        sum += x * y;
    }
    sum
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl Mlp {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(dims: &[usize], rng: &mut StreamRng) -> Result<Self, NnError> {
        let mut mlp = Self::zeros(dims)?;
        for l in 0..dims.len() - 1 {
            let fan_in = dims[l];
            let bound = 1.0 / libm::sqrt(fan_in as f64);
            let start = mlp.offsets[l];
            for w in &mut mlp.params[start..start + fan_in * dims[l + 1]] {
                *w = bound * (2.0 * rng::unit(rng) - 1.0);
            }
        }
        Ok(mlp)
    }

    pub fn zeros(dims: &[usize]) -> Result<Self, NnError> {
        let offsets = check_dims(dims)?;
        let total = *offsets.last().unwrap();
        Ok(Self {
            dims: dims.to_vec(),
            offsets,
            params: vec![0.0; total],
            revision: 0,
        })
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self, NnError> {
        let mut mlp = Self::zeros(dims)?;
        if params.len() != mlp.params.len() {
            return Err(NnError::ShapeMismatch {
                expected: mlp.params.len(),
                got: params.len(),
            });
        }
        mlp.params = params;
        Ok(mlp)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_len(&self) -> usize {
        self.dims[0]
    }

    pub fn output_len(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Invalidates outstanding forward caches.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.revision = self.revision.wrapping_add(1);
        &mut self.params
    }

    pub fn zero_grads(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }

    /// `(weights, biases)` of layer `l`.
    pub fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
        let start = self.offsets[l];
        let split = start + fan_in * fan_out;
        (
            &self.params[start..split],
            &self.params[split..self.offsets[l + 1]],
        )
    }

    pub fn new_cache(&self) -> ForwardCache {
        ForwardCache {
            dims: self.dims.clone(),
            revision: self.revision,
            activations: self.dims.iter().map(|&d| vec![0.0; d]).collect(),
            pre_activations: self.dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache), NnError> {
        let mut cache = self.new_cache();
        self.forward_into(input, &mut cache)?;
        Ok((cache.output().to_vec(), cache))
    }

    /// Forward pass reusing `cache`'s buffers. Hidden layers are ReLU, the
    /// output layer is linear.
    pub fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) -> Result<(), NnError> {
        if input.len() != self.dims[0] {
            return Err(NnError::ShapeMismatch {
                expected: self.dims[0],
                got: input.len(),
            });
        }
        if cache.dims != self.dims {
            *cache = self.new_cache();
        }
        cache.revision = self.revision;
        cache.activations[0].copy_from_slice(input);
        let last = self.layer_count() - 1;
        for l in 0..=last {
            let (w, b) = self.layer(l);
            let fan_out = self.dims[l + 1];
            let (head, tail) = cache.activations.split_at_mut(l + 1);
            let x = &head[l];
            let out = &mut tail[0];
            let pre = &mut cache.pre_activations[l];
            pre.copy_from_slice(b);
            for (&xi, row) in x.iter().zip(w.chunks_exact(fan_out)) {
                if xi != 0.0 {
                    axpy(xi, row, pre);
                }
            }
            for (y, &z) in out.iter_mut().zip(pre.iter()) {
                *y = if l < last && z < 0.0 { 0.0 } else { z };
            }
        }
        Ok(())
    }

    /// Forward pass without keeping intermediates around for the caller.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.forward(input).map(|(out, _)| out)
    }

    /// Gradients of `output . output_grad` with respect to all parameters and
    /// the input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), NnError> {
        let mut grads = self.zero_grads();
        let mut input_grad = Vec::new();
        self.backward_into(cache, output_grad, Some(&mut grads), Some(&mut input_grad))?;
        Ok((grads, input_grad))
    }

    /// Backpropagation that accumulates into `grads` (when given) and writes
    /// the input gradient into `input_grad` (when given).
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        output_grad: &[f64],
        mut grads: Option<&mut [f64]>,
        input_grad: Option<&mut Vec<f64>>,
    ) -> Result<(), NnError> {
        if cache.dims != self.dims || cache.revision != self.revision {
            return Err(NnError::StaleCache);
        }
        if output_grad.len() != self.output_len() {
            return Err(NnError::ShapeMismatch {
                expected: self.output_len(),
                got: output_grad.len(),
            });
        }
        if let Some(g) = grads.as_deref() {
            if g.len() != self.params.len() {
                return Err(NnError::ShapeMismatch {
                    expected: self.params.len(),
                    got: g.len(),
                });
            }
        }
        let want_input = input_grad.is_some();
        let mut delta = output_grad.to_vec();
        let mut prev = Vec::new();
        for l in (0..self.layer_count()).rev() {
            let (fan_in, fan_out) = (self.dims[l], self.dims[l + 1]);
            let x = &cache.activations[l];
            if let Some(g) = grads.as_deref_mut() {
                let start = self.offsets[l];
                let (gw, gb) = g[start..self.offsets[l + 1]].split_at_mut(fan_in * fan_out);
                for (&xi, row) in x.iter().zip(gw.chunks_exact_mut(fan_out)) {
                    if xi != 0.0 {
                        axpy(xi, &delta, row);
                    }
                }
                axpy(1.0, &delta, gb);
            }
            if l == 0 && !want_input {
                break;
            }
            let (w, _) = self.layer(l);
            prev.clear();
            prev.resize(fan_in, 0.0);
            for (i, (p, row)) in prev.iter_mut().zip(w.chunks_exact(fan_out)).enumerate() {
                // A clamped unit passes no gradient back.
                if l == 0 || cache.pre_activations[l - 1][i] > 0.0 {
                    *p = dot(row, &delta);
                }
            }
            core::mem::swap(&mut delta, &mut prev);
        }
        if let Some(out) = input_grad {
            out.clear();
            out.extend_from_slice(&delta);
        }
        Ok(())
    }

    /// Versioned text dump: a header line, the layer sizes, then per layer one
    /// line per weight row (the weights leaving one input) and a bias line.
    pub fn to_dump(&self) -> String {
        let mut s = String::new();
        s.push_str("mlp 1\ndims");
        for d in &self.dims {
            let _ = write!(s, " {d}");
        }
        s.push('\n');
        for l in 0..self.layer_count() {
            let (w, b) = self.layer(l);
            for row in w.chunks(self.dims[l + 1]).chain(core::iter::once(b)) {
                for (i, v) in row.iter().enumerate() {
                    if i > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{v:?}");
                }
                s.push('\n');
            }
        }
        s
    }

    pub fn from_dump(text: &str) -> Result<Self, NnError> {
        let err = |m: &str| NnError::Parse(m.into());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("mlp 1") {
            return Err(err("missing 'mlp 1' header"));
        }
        let dims_line = lines.next().ok_or_else(|| err("missing dims line"))?;
        let mut fields = dims_line.split_whitespace();
        if fields.next() != Some("dims") {
            return Err(err("expected 'dims'"));
        }
        let dims = fields
            .map(|f| f.parse::<usize>().map_err(|_| err("bad layer size")))
            .collect::<Result<Vec<_>, _>>()?;
        let mut mlp = Self::zeros(&dims).map_err(|_| err("invalid layer sizes"))?;
        let mut params = Vec::with_capacity(mlp.params.len());
        for line in lines {
            for f in line.split_whitespace() {
                let v: f64 = f
                    .parse()
                    .map_err(|_| NnError::Parse(format!("bad number '{f}'")))?;
                if !v.is_finite() {
                    return Err(err("non-finite parameter"));
                }
                params.push(v);
            }
        }
        if params.len() != mlp.params.len() {
            return Err(NnError::Parse(format!(
                "expected {} parameters, found {}",
                mlp.params.len(),
                params.len()
            )));
        }
        mlp.params = params;
        Ok(mlp)
    }
}

/// Polyak update `target <- tau * online + (1 - tau) * target`.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<(), NnError> {
    if target.dims != online.dims {
        return Err(NnError::ShapeMismatch {
            expected: target.params.len(),
            got: online.params.len(),
        });
    }
    let keep = 1.0 - tau;
    for (t, &o) in target.params_mut().iter_mut().zip(&online.params) {
        *t = tau * o + keep * *t;
    }
    Ok(())
}
