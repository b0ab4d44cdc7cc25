//! The loss `ℓ_{p,k}(x) = ‖x‖_k^p` and its gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `‖x‖_k` the factor `‖x‖_k^{p−k}` is treated as 0 when `p < k`.
const NORM_FLOOR: f64 = 1e-300;

/// Exponents `(p, k)` of the loss `‖x‖_k^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    p: f64,
    k: f64,
}

impl LossSpec {
    pub fn new(p: f64, k: f64) -> Result<Self> {
        if !(p >= 1.0 && k >= 1.0) || !p.is_finite() || !k.is_finite() {
            return Err(Error::InvalidLoss { p, k });
        }
        Ok(Self { p, k })
    }

    /// The `p = k` loss `Σ |x_i|^p`.
    pub fn matched(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `p == k`: the loss separates over coordinates.
    pub fn is_separable(&self) -> bool {
        self.p == self.k
    }

    /// `p == k` with `1 ≤ p ≤ 2`, where the Gaussian is the only prior
    /// inducing a linear optimal estimator.
    pub fn is_main_theorem_mode(&self) -> bool {
        self.is_separable() && self.p <= 2.0
    }
}

#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `|x|^e · sign(x)`, with the value 0 at `x = 0` for every `e ≥ 0`.
#[inline]
pub(crate) fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if e == 1.0 {
        x
    } else {
        sign(x) * x.abs().powf(e)
    }
}

pub(crate) fn k_norm(x: &[f64], k: f64) -> f64 {
    if k == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if k == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    max * x
        .iter()
        .map(|v| (v.abs() / max).powf(k))
        .sum::<f64>()
        .powf(1.0 / k)
}

/// `(Σ_i |x_i|^k)^{p/k}`.
pub fn loss_value(x: &[f64], spec: &LossSpec) -> f64 {
    if spec.is_separable() {
        return x.iter().map(|v| v.abs().powf(spec.p)).sum();
    }
    k_norm(x, spec.k).powf(spec.p)
}

/// `∇‖x‖_k^p = p ‖x‖_k^{p−k} (|x_i|^{k−1} sign x_i)_i`, and 0 at `x = 0`.
pub fn loss_gradient(x: &[f64], spec: &LossSpec) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    loss_gradient_into(x, spec, &mut out);
    out
}

pub(crate) fn loss_gradient_into(x: &[f64], spec: &LossSpec, out: &mut [f64]) {
    let (p, k) = (spec.p, spec.k);
    if p == k {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = p * signed_pow(v, p - 1.0);
        }
        return;
    }
    let norm = k_norm(x, k);
    if norm == 0.0 || (p < k && norm < NORM_FLOOR) {
        out.iter_mut().for_each(|o| *o = 0.0);
        return;
    }
    // p N^{p−k} |x_i|^{k−1} = p N^{p−1} |x_i / N|^{k−1}, which cannot overflow.
    let factor = p * ((p - 1.0) * norm.ln()).exp();
    for (o, &v) in out.iter_mut().zip(x) {
        *o = factor * signed_pow(v / norm, k - 1.0);
    }
}

/// Hessian of `‖x‖_k^p`, row-major, with the `|x_i|^{k−2}` terms dropped at
/// coordinates where `x_i = 0` (a null set under any density).
pub(crate) fn loss_hessian_into(x: &[f64], spec: &LossSpec, out: &mut [f64]) {
    let n = x.len();
    let (p, k) = (spec.p, spec.k);
    out.iter_mut().for_each(|h| *h = 0.0);
    let norm = k_norm(x, k);
    if norm == 0.0 || norm < NORM_FLOOR {
        return;
    }
    // In the normalized coordinates x / N both terms scale as N^{p−2}.
    let scale = ((p - 2.0) * norm.ln()).exp();
    let diag_factor = p * (k - 1.0) * scale;
    let outer_factor = p * (p - k) * scale;
    for i in 0..n {
        let si = signed_pow(x[i] / norm, k - 1.0);
        for j in 0..n {
            out[i * n + j] = outer_factor * si * signed_pow(x[j] / norm, k - 1.0);
        }
        if x[i] != 0.0 && k != 1.0 {
            out[i * n + i] += diag_factor * (x[i] / norm).abs().powf(k - 2.0);
        }
    }
}
