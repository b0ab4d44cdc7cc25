//! Quadrature settings and rules shared by the estimator and verifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor grids never exceed this many points; per-dimension node counts are
/// reduced for `n ≥ 2` to stay under it.
pub const MAX_TENSOR_POINTS: usize = 1 << 18;

/// Truncation and resolution for every grid integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Truncation radius around the grid center.
    pub half_width: f64,
    /// Nodes per dimension (odd, so the center is a node).
    pub nodes_per_dim: usize,
    /// Target accuracy for iterative solvers and quadrature.
    pub tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            nodes_per_dim: 801,
            tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_dim.is_multiple_of(2) || self.nodes_per_dim < 3 {
            return Err(Error::InvalidArgument(format!(
                "nodes_per_dim must be odd and at least 3, got {}",
                self.nodes_per_dim
            )));
        }
        if !(self.half_width >= 6.0) {
            return Err(Error::InvalidArgument(format!(
                "half_width must be at least 6, got {}",
                self.half_width
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }

    /// Node count per dimension for an `n`-dimensional tensor grid.
    pub fn nodes_for_dim(&self, n: usize) -> usize {
        let cap = (MAX_TENSOR_POINTS as f64).powf(1.0 / n as f64).floor() as usize;
        let cap = if cap.is_multiple_of(2) { cap - 1 } else { cap };
        self.nodes_per_dim.min(cap.max(3))
    }

    /// Symmetric trapezoid rule on `[center − half_width, center + half_width]`.
    pub fn trapezoid_1d(&self, center: f64, count: usize) -> (Vec<f64>, Vec<f64>) {
        let h = 2.0 * self.half_width / (count - 1) as f64;
        let half = (count / 2) as f64;
        let nodes = (0..count).map(|i| center + (i as f64 - half) * h).collect();
        let weights = (0..count)
            .map(|i| if i == 0 || i == count - 1 { 0.5 * h } else { h })
            .collect();
        (nodes, weights)
    }
}

/// Tensor product of 1-D offsets and weights: returns flat points (row-major,
/// last coordinate fastest) and product weights.
pub fn tensor_grid(offsets: &[f64], weights: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = offsets.len();
    let total = m.pow(n as u32);
    let mut points = Vec::with_capacity(total * n);
    let mut w = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let mut prod = 1.0;
        for &i in &idx {
            points.push(offsets[i]);
            prod *= weights[i];
        }
        w.push(prod);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
        }
    }
    (points, w)
}

/// Points `min, min + step, …, max` along one axis. `max` is included when it
/// lies on the lattice up to rounding.
pub fn axis_points(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !min.is_finite() || !max.is_finite() || max < min {
        return Err(Error::InvalidArgument(format!(
            "bad grid range {min}:{max}:{step}"
        )));
    }
    let span = (max - min) / step;
    let count = (span + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::InvalidArgument(format!(
            "grid {min}:{max}:{step} is too fine"
        )));
    }
    Ok((0..count).map(|i| min + i as f64 * step).collect())
}

/// The Cartesian grid `axis^n` as a list of points, last coordinate fastest.
pub fn observation_grid(min: f64, max: f64, step: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let axis = axis_points(min, max, step)?;
    let ones = vec![1.0; axis.len()];
    let (flat, _) = tensor_grid(&axis, &ones, n);
    Ok(flat.chunks(n).map(<[f64]>::to_vec).collect())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(m: usize) -> Self {
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..m.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=m {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let pm = if m == 1 { x } else { p1 };
                let pm1 = if m == 1 { 1.0 } else { p0 };
                dp = m as f64 * (x * pm - pm1) / (x * x - 1.0);
                let dx = pm / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(mid + half * t))
            .sum::<f64>()
    }

    /// Appends the rule mapped onto `[a, b]` to `nodes` / `weights`.
    pub fn push_panel(&self, a: f64, b: f64, nodes: &mut Vec<f64>, weights: &mut Vec<f64>) {
        let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            nodes.push(mid + half * t);
            weights.push(half * w);
        }
    }
}
