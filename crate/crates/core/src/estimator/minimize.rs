//! Minimizers of `v ↦ Σ_j w_j ℓ_{p,k}(x_j − v)` over a weighted point set.

use crate::error::{Error, Result};
use crate::linalg::{LinearMap, Matrix};
use crate::loss::{loss_gradient_into, loss_hessian_into, loss_value, signed_pow, LossSpec};

pub(crate) const MAX_ITERATIONS: usize = 10_000;

/// Below this Hessian value the Newton step is abandoned for bisection.
const HESSIAN_FLOOR: f64 = 1e-12;

const WEISZFELD_PERTURBATION: f64 = 1e-8;

/// A weighted point cloud in `R^n`, stored flat.
pub(crate) struct WeightedPoints<'a> {
    pub dim: usize,
    pub points: &'a [f64],
    pub weights: &'a [f64],
}

impl WeightedPoints<'_> {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    fn coord(&self, j: usize, i: usize) -> f64 {
        self.points[j * self.dim + i]
    }

    pub(crate) fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for j in 0..self.len() {
            let w = self.weights[j];
            for (acc, x) in m.iter_mut().zip(self.point(j)) {
                *acc += w * x;
            }
        }
        let total: f64 = self.weights.iter().sum();
        m.iter_mut().for_each(|v| *v /= total);
        m
    }

    pub(crate) fn objective(&self, v: &[f64], spec: &LossSpec, scratch: &mut [f64]) -> f64 {
        (0..self.len())
            .map(|j| {
                for (s, (x, c)) in scratch.iter_mut().zip(self.point(j).iter().zip(v)) {
                    *s = x - c;
                }
                self.weights[j] * loss_value(scratch, spec)
            })
            .sum()
    }
}

/// Dispatches to the solver suited to `(p, k)`.
pub(crate) fn minimize(cloud: &WeightedPoints<'_>, spec: &LossSpec, tol: f64) -> Result<Vec<f64>> {
    let (p, k) = (spec.p(), spec.k());
    // In one dimension ‖x‖_k = |x| for every k.
    let separable = p == k || cloud.dim == 1;
    if p == 2.0 && (k == 2.0 || cloud.dim == 1) {
        return Ok(cloud.mean());
    }
    if p == 1.0 && separable {
        return Ok((0..cloud.dim)
            .map(|i| weighted_lower_median(cloud, i))
            .collect());
    }
    if p == 1.0 && k == 2.0 {
        return weiszfeld(cloud, tol);
    }
    if separable {
        let start = cloud.mean();
        return (0..cloud.dim)
            .map(|i| coordinate_newton(cloud, i, p, start[i], tol))
            .collect();
    }
    damped_newton(cloud, spec, tol)
}

/// Smallest value whose cumulative weight reaches half the total.
fn weighted_lower_median(cloud: &WeightedPoints<'_>, i: usize) -> f64 {
    let mut order: Vec<usize> = (0..cloud.len())
        .filter(|&j| cloud.weights[j] > 0.0)
        .collect();
    order.sort_by(|&a, &b| cloud.coord(a, i).total_cmp(&cloud.coord(b, i)));
    let total: f64 = order.iter().map(|&j| cloud.weights[j]).sum();
    let mut acc = 0.0;
    for &j in &order {
        acc += cloud.weights[j];
        if acc >= 0.5 * total {
            return cloud.coord(j, i);
        }
    }
    cloud.coord(*order.last().expect("positive total weight"), i)
}

/// Root of the increasing function `G(v) = Σ_j w_j p |v − x_j|^{p−1} sign(v − x_j)`
/// by Newton steps safeguarded with a bisection bracket.
fn coordinate_newton(
    cloud: &WeightedPoints<'_>,
    i: usize,
    p: f64,
    start: f64,
    tol: f64,
) -> Result<f64> {
    let eval = |v: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for j in 0..cloud.len() {
            let w = cloud.weights[j];
            if w == 0.0 {
                continue;
            }
            let d = v - cloud.coord(j, i);
            g += w * signed_pow(d, p - 1.0);
            if d != 0.0 {
                dg += w * d.abs().powf(p - 2.0);
            }
        }
        (p * g, p * (p - 1.0) * dg)
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..cloud.len() {
        if cloud.weights[j] > 0.0 {
            lo = lo.min(cloud.coord(j, i));
            hi = hi.max(cloud.coord(j, i));
        }
    }
    if lo == hi {
        return Ok(lo);
    }
    let mut v = start.clamp(lo, hi);
    let mut last_step = hi - lo;
    let mut g = 0.0;
    for _ in 0..MAX_ITERATIONS {
        let (gv, dg) = eval(v);
        g = gv;
        if g.abs() <= tol {
            return Ok(v);
        }
        if g < 0.0 {
            lo = v;
        } else {
            hi = v;
        }
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) {
            return Ok(v);
        }
        let newton_ok = dg > HESSIAN_FLOOR && {
            let next = v - g / dg;
            next > lo && next < hi && (g / dg).abs() <= 0.5 * last_step
        };
        let next = if newton_ok {
            v - g / dg
        } else {
            0.5 * (lo + hi)
        };
        last_step = (next - v).abs();
        v = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm: g.abs(),
        last: vec![v],
    })
}

/// Spatial median (`p = 1`, `k = 2`) by Weiszfeld iteration.
fn weiszfeld(cloud: &WeightedPoints<'_>, tol: f64) -> Result<Vec<f64>> {
    let n = cloud.dim;
    let scale = (0..cloud.points.len())
        .map(|t| cloud.points[t].abs())
        .fold(1.0f64, f64::max);
    let coincide = scale * 1e-14;
    let mut v = cloud.mean();
    let mut grad_norm = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        if let Some(j) = (0..cloud.len()).find(|&j| dist(cloud.point(j), &v) <= coincide) {
            if node_is_optimal(cloud, j) {
                return Ok(cloud.point(j).to_vec());
            }
            v.iter_mut().for_each(|c| *c += WEISZFELD_PERTURBATION);
            continue;
        }
        let mut num = vec![0.0; n];
        let mut den = 0.0;
        let mut grad = vec![0.0; n];
        for j in 0..cloud.len() {
            let x = cloud.point(j);
            let d = dist(x, &v);
            let w = cloud.weights[j] / d;
            den += w;
            for c in 0..n {
                num[c] += w * x[c];
                grad[c] += w * (v[c] - x[c]);
            }
        }
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= tol {
            return Ok(v);
        }
        let next: Vec<f64> = num.iter().map(|s| s / den).collect();
        let moved = dist(&next, &v);
        v = next;
        if moved <= 4.0 * f64::EPSILON * scale {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm,
        last: v,
    })
}

/// Optimality of a data point for the weighted spatial median: the pull of
/// the other points must not exceed the point's own weight.
fn node_is_optimal(cloud: &WeightedPoints<'_>, k: usize) -> bool {
    let xk = cloud.point(k);
    let mut pull = vec![0.0; cloud.dim];
    for j in 0..cloud.len() {
        if j == k {
            continue;
        }
        let x = cloud.point(j);
        let d = dist(x, xk);
        if d == 0.0 {
            continue;
        }
        for c in 0..cloud.dim {
            pull[c] += cloud.weights[j] * (x[c] - xk[c]) / d;
        }
    }
    pull.iter().map(|g| g * g).sum::<f64>().sqrt() <= cloud.weights[k]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// General `(p, k)`: Newton with Armijo backtracking, falling back to
/// steepest descent where the Hessian is not safely positive definite.
fn damped_newton(cloud: &WeightedPoints<'_>, spec: &LossSpec, tol: f64) -> Result<Vec<f64>> {
    let n = cloud.dim;
    let mut v = cloud.mean();
    let mut u = vec![0.0; n];
    let mut g_buf = vec![0.0; n];
    let mut h_buf = vec![0.0; n * n];
    let mut grad_norm = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let mut grad = vec![0.0; n];
        let mut hess = Matrix::zeros(n);
        for j in 0..cloud.len() {
            let w = cloud.weights[j];
            if w == 0.0 {
                continue;
            }
            for (s, (x, c)) in u.iter_mut().zip(cloud.point(j).iter().zip(&v)) {
                *s = x - c;
            }
            loss_gradient_into(&u, spec, &mut g_buf);
            loss_hessian_into(&u, spec, &mut h_buf);
            for a in 0..n {
                grad[a] -= w * g_buf[a];
                for b in 0..n {
                    hess[(a, b)] += w * h_buf[a * n + b];
                }
            }
        }
        grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm <= tol {
            return Ok(v);
        }
        let hmap = LinearMap::new(hess.symmetrized());
        let dir: Vec<f64> = if hmap.eigen_floor() > HESSIAN_FLOOR * hmap.eigen_ceiling().max(1.0) {
            hmap.inverse_pd()?.apply(&grad).iter().map(|d| -d).collect()
        } else {
            grad.iter().map(|d| -d).collect()
        };
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let f0 = cloud.objective(&v, spec, &mut u);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-30 {
            let trial: Vec<f64> = v.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            if cloud.objective(&trial, spec, &mut u) <= f0 + 1e-4 * t * slope {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(next) => {
                let moved = dist(&next, &v);
                v = next;
                if moved <= 4.0 * f64::EPSILON * (1.0 + v.iter().map(|c| c.abs()).sum::<f64>()) {
                    return Ok(v);
                }
            }
            // No representable descent step remains.
            None => return Ok(v),
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        grad_norm,
        last: v,
    })
}
