//! Numerical certificates for linearity of the optimal estimator.
//!
//! - [`orthogonality_residual`]: `E[ℓ'(X − A y) φ(y − X)]` on a y-grid. The
//!   estimator `y ↦ A y` is optimal iff this vanishes for every `y`.
//! - [`mu_transform`] / [`convolution_residual`]: the same condition after
//!   the change of variable `x ↦ A^{-1/2} x`, written as a convolution
//!   against the measure `dμ(x) = e^{xᵀ(I−A)x/2} dP_{A^{-1/2}X}(x)`.
//! - [`ft_odd_kernel`] / [`ft_zero_scan`]: the sine transform of
//!   `sign(x)|x|^{s−1} φ0(x)` and its zeros.
//! - [`poly_moment_functional`]: `E[|Z_i|^{k−1} sign(Z_i) P(Z − y)]`.

mod fourier;
mod moment;
mod mu;

pub use fourier::{ft_odd_kernel, ft_zero_scan, OddKernelTransform, ZeroScan};
pub use moment::{poly_moment_functional, Polynomial, MAX_POLY_DEGREE, MAX_POLY_DIM};
pub use mu::{convolution_residual, mu_observation_grid, mu_transform, MuMeasure};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::MAX_DIM;
use crate::linalg::{norm2, std_normal_pdf, std_normal_pdf_vec, LinearMap};
use crate::loss::{loss_gradient_into, LossSpec};
use crate::priors::Prior;
use crate::quadrature::{tensor_grid, QuadratureConfig};

/// Residual tolerance for declaring the orthogonality condition satisfied.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Below this total mass the quadrature has nothing to integrate.
pub const UNDERFLOW_MASS: f64 = 1e-300;

/// Per-y residual vectors and their worst Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub y_values: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    pub max_norm: f64,
    pub cfg: QuadratureConfig,
}

impl ResidualReport {
    fn new(y_values: Vec<Vec<f64>>, residuals: Vec<Vec<f64>>, cfg: QuadratureConfig) -> Self {
        let max_norm = residuals.iter().map(|r| norm2(r)).fold(0.0, f64::max);
        Self {
            y_values,
            residuals,
            max_norm,
            cfg,
        }
    }

    pub fn norms(&self) -> Vec<f64> {
        self.residuals.iter().map(|r| norm2(r)).collect()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_norm <= tol
    }
}

/// Treats components of `x − c` lost in the rounding of `x` and `c` as exact
/// zeros, so that sign-type gradients see the kink where it really is.
pub(crate) fn snapped_difference(x: &[f64], c: &[f64], out: &mut [f64]) {
    for ((o, &a), &b) in out.iter_mut().zip(x).zip(c) {
        let d = a - b;
        *o = if d.abs() <= 64.0 * f64::EPSILON * (a.abs() + b.abs()) {
            0.0
        } else {
            d
        };
    }
}

fn check_dims(prior_dim: usize, a: &LinearMap, y_grid: &[Vec<f64>]) -> Result<()> {
    if prior_dim > MAX_DIM {
        return Err(Error::DimensionTooLarge {
            dim: prior_dim,
            max: MAX_DIM,
        });
    }
    if a.dim() != prior_dim {
        return Err(Error::DimensionMismatch {
            expected: prior_dim,
            got: a.dim(),
        });
    }
    if let Some(bad) = y_grid.iter().find(|y| y.len() != prior_dim) {
        return Err(Error::DimensionMismatch {
            expected: prior_dim,
            got: bad.len(),
        });
    }
    Ok(())
}

/// `E[ℓ'_{p,k}(X − A y) φ(y − X)]` for each `y` in the grid.
///
/// Density priors are integrated on a grid centered at `A y`, so the kink of
/// the loss sits exactly on a node.
pub fn orthogonality_residual(
    prior: &Prior,
    a: &LinearMap,
    spec: &LossSpec,
    y_grid: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<ResidualReport> {
    cfg.validate()?;
    let n = prior.dim();
    check_dims(n, a, y_grid)?;
    a.require_psd()?;
    let residuals = match prior {
        Prior::Gaussian(g) => {
            // Nodes A y + R z with R the posterior square root; the weight of
            // each node is p_X(x) φ(y − x) times the cell volume, rewritten as
            // evidence · φ_n(z + R^{-1}(A y − c)) with c the posterior mean.
            let post_cov = g.cov().map_spectrum(|l| l / (1.0 + l))?;
            let root = post_cov.map_spectrum(|l| l.sqrt())?;
            let root_inv = post_cov.map_spectrum(|l| 1.0 / l.sqrt())?;
            let marginal = LinearMap::new(g.cov().entries().add(&crate::Matrix::identity(n)));
            let (offsets, trap) = cfg.trapezoid_1d(0.0, cfg.nodes_for_dim(n));
            let (zs, cells) = tensor_grid(&offsets, &trap, n);
            let steps: Vec<Vec<f64>> = zs.chunks(n).map(|z| root.apply(z)).collect();
            let mean = g.mean();
            y_grid
                .par_iter()
                .map(|y| {
                    let evidence = crate::linalg::log_gaussian_pdf(y, mean, &marginal)?.exp();
                    if !(evidence >= UNDERFLOW_MASS) {
                        return Err(Error::QuadratureUnderflow { y: y.clone() });
                    }
                    let ay = a.apply(y);
                    let resid: Vec<f64> = y.iter().zip(mean).map(|(u, m)| u - m).collect();
                    let center: Vec<f64> = post_cov
                        .apply(&resid)
                        .iter()
                        .zip(mean)
                        .map(|(d, m)| d + m)
                        .collect();
                    let gap: Vec<f64> = ay.iter().zip(&center).map(|(u, c)| u - c).collect();
                    let shift = root_inv.apply(&gap);
                    let mut w = vec![0.0; n];
                    let (acc, _) = mirrored_sum(cells.len(), n, spec, |j, u| {
                        let z = &zs[j * n..(j + 1) * n];
                        for ((wi, zi), si) in w.iter_mut().zip(z).zip(&shift) {
                            *wi = zi + si;
                        }
                        u.copy_from_slice(&steps[j]);
                        cells[j] * std_normal_pdf_vec(&w)
                    });
                    Ok(acc.into_iter().map(|s| evidence * s).collect())
                })
                .collect::<Result<Vec<Vec<f64>>>>()?
        }
        Prior::Cosine(c) => {
            let (offsets, cells) = cfg.trapezoid_1d(0.0, cfg.nodes_per_dim);
            let a0 = a.entries()[(0, 0)];
            y_grid
                .par_iter()
                .map(|y| {
                    let center = a0 * y[0];
                    let (acc, mass) = mirrored_sum(offsets.len(), 1, spec, |j, u| {
                        let x = center + offsets[j];
                        u[0] = offsets[j];
                        cells[j] * c.density(x) * std_normal_pdf(y[0] - x)
                    });
                    if !(mass >= UNDERFLOW_MASS) {
                        return Err(Error::QuadratureUnderflow { y: y.clone() });
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<Vec<f64>>>>()?
        }
        Prior::Atomic(_) | Prior::Grid(_) => {
            let (points, masses) = discrete_masses(prior);
            y_grid
                .par_iter()
                .map(|y| {
                    let ay = a.apply(y);
                    discrete_residual(n, &points, &masses, y, &ay, |u, out| {
                        loss_gradient_into(u, spec, out)
                    })
                })
                .collect::<Result<Vec<Vec<f64>>>>()?
        }
    };
    Ok(ResidualReport::new(y_grid.to_vec(), residuals, *cfg))
}

/// `Σ_j w_j ℓ'(u_j)` over a grid that is symmetric under `j ↦ count − 1 − j`,
/// summed in mirrored pairs so that contributions cancelling by symmetry
/// cancel exactly. `node(j, u)` writes `u_j` and returns `w_j`. Also returns
/// `Σ_j w_j`.
pub(crate) fn mirrored_sum(
    count: usize,
    n: usize,
    spec: &LossSpec,
    mut node: impl FnMut(usize, &mut [f64]) -> f64,
) -> (Vec<f64>, f64) {
    let mut acc = vec![0.0; n];
    let mut mass = 0.0;
    let mut u = vec![0.0; n];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    for j in 0..count.div_ceil(2) {
        let r = count - 1 - j;
        let w_lo = node(j, &mut u);
        let w_lo = if w_lo.is_finite() { w_lo } else { 0.0 };
        loss_gradient_into(&u, spec, &mut lo);
        let mut w_hi = 0.0;
        if r != j {
            w_hi = node(r, &mut u);
            w_hi = if w_hi.is_finite() { w_hi } else { 0.0 };
            loss_gradient_into(&u, spec, &mut hi);
        }
        for i in 0..n {
            let pair_hi = if r != j { w_hi * hi[i] } else { 0.0 };
            acc[i] += w_lo * lo[i] + pair_hi;
        }
        mass += w_lo + w_hi;
    }
    (acc, mass)
}

pub(crate) fn discrete_masses(prior: &Prior) -> (Vec<f64>, Vec<f64>) {
    match prior {
        Prior::Atomic(a) => (
            a.atoms().iter().flatten().copied().collect(),
            a.probs().to_vec(),
        ),
        Prior::Grid(g) => (g.points(), g.weights().to_vec()),
        _ => unreachable!("density priors have no fixed support"),
    }
}

/// `Σ_j m_j grad(x_j − c) φ(y − x_j)` with kink snapping on `x_j − c`.
pub(crate) fn discrete_residual(
    n: usize,
    points: &[f64],
    masses: &[f64],
    y: &[f64],
    c: &[f64],
    grad: impl Fn(&[f64], &mut [f64]),
) -> Result<Vec<f64>> {
    let mut acc = vec![0.0; n];
    let mut mass = 0.0;
    let mut u = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut d = vec![0.0; n];
    for (x, m) in points.chunks(n).zip(masses) {
        for ((di, xi), yi) in d.iter_mut().zip(x).zip(y) {
            *di = yi - xi;
        }
        let weight = m * std_normal_pdf_vec(&d);
        if weight == 0.0 {
            continue;
        }
        mass += weight;
        snapped_difference(x, c, &mut u);
        grad(&u, &mut g);
        for (s, gi) in acc.iter_mut().zip(&g) {
            *s += weight * gi;
        }
    }
    if !(mass >= UNDERFLOW_MASS) {
        return Err(Error::QuadratureUnderflow { y: y.to_vec() });
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{gaussian_prior_for_a, AtomicPrior, CosineGaussianPrior, GaussianPrior};
    use crate::quadrature::observation_grid;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn grid1() -> Vec<Vec<f64>> {
        observation_grid(-4.0, 4.0, 0.5, 1).unwrap()
    }

    #[test]
    fn matched_gaussian_residual_vanishes() {
        let prior = gaussian_prior_for_a(&LinearMap::scalar(0.5)).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let r = orthogonality_residual(
                &prior,
                &LinearMap::scalar(0.5),
                &LossSpec::matched(p).unwrap(),
                &grid1(),
                &cfg(),
            )
            .unwrap();
            assert!(r.max_norm <= 1e-12, "p = {p}: {}", r.max_norm);
            assert_eq!(r.residuals.len(), 17);
        }
    }

    #[test]
    fn squared_loss_residual_closed_form() {
        // p = k = 2: residual = 2 (E[X|y] − A y) · p_Y(y), with E[X|y] = y/2
        // and p_Y = N(0, 2).
        let prior = gaussian_prior_for_a(&LinearMap::scalar(0.5)).unwrap();
        let r = orthogonality_residual(
            &prior,
            &LinearMap::scalar(0.3),
            &LossSpec::matched(2.0).unwrap(),
            &grid1(),
            &cfg(),
        )
        .unwrap();
        for (y, res) in r.y_values.iter().zip(&r.residuals) {
            let py = (-y[0] * y[0] / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
            let expect = 2.0 * (0.5 - 0.3) * y[0] * py;
            assert!((res[0] - expect).abs() <= 1e-12, "y = {y:?}");
        }
        assert!(!r.passes(RESIDUAL_TOL));
    }

    #[test]
    fn symmetric_prior_gives_zero_at_origin() {
        let priors = [
            Prior::Atomic(AtomicPrior::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap()),
            Prior::Cosine(CosineGaussianPrior::new(0.5, 1.0, 0.0, 1.0).unwrap()),
            Prior::Gaussian(GaussianPrior::new(vec![0.0], LinearMap::scalar(2.0)).unwrap()),
        ];
        for prior in &priors {
            for p in [1.0, 1.5, 3.0] {
                let r = orthogonality_residual(
                    prior,
                    &LinearMap::scalar(0.0),
                    &LossSpec::matched(p).unwrap(),
                    &[vec![0.0]],
                    &cfg(),
                )
                .unwrap();
                assert_eq!(r.max_norm, 0.0, "{} p = {p}", prior.kind());
            }
        }
    }

    #[test]
    fn cosine_prior_at_hermite_zero() {
        let prior = Prior::Cosine(CosineGaussianPrior::new(0.5, 1.0, 0.0, 3f64.sqrt()).unwrap());
        let r = orthogonality_residual(
            &prior,
            &LinearMap::scalar(0.5),
            &LossSpec::matched(4.0).unwrap(),
            &grid1(),
            &cfg(),
        )
        .unwrap();
        assert!(r.max_norm <= 1e-12, "{}", r.max_norm);
    }

    #[test]
    fn atom_residual_matches_hand_computation() {
        // Two atoms ±1, A = 0, p = k = 1: residual(y) = ½(φ(y − 1) − φ(y + 1)).
        let prior =
            Prior::Atomic(AtomicPrior::new(vec![vec![-1.0], vec![1.0]], vec![0.5, 0.5]).unwrap());
        let r = orthogonality_residual(
            &prior,
            &LinearMap::scalar(0.0),
            &LossSpec::matched(1.0).unwrap(),
            &[vec![0.7]],
            &cfg(),
        )
        .unwrap();
        let expect = 0.5 * (std_normal_pdf(0.7 - 1.0) - std_normal_pdf(1.7));
        assert!((r.residuals[0][0] - expect).abs() <= 1e-15);
    }

    #[test]
    fn kink_snapping_on_atoms() {
        // A single atom at 0.1 with A y landing on it up to rounding.
        let prior = Prior::Atomic(AtomicPrior::point_mass(vec![0.1]).unwrap());
        let a = LinearMap::scalar(0.1 / 0.3);
        let r = orthogonality_residual(
            &prior,
            &a,
            &LossSpec::matched(1.0).unwrap(),
            &[vec![0.3]],
            &cfg(),
        )
        .unwrap();
        assert_eq!(r.max_norm, 0.0);
    }

    #[test]
    fn far_atoms_underflow() {
        let prior = Prior::Atomic(AtomicPrior::point_mass(vec![0.0]).unwrap());
        assert!(matches!(
            orthogonality_residual(
                &prior,
                &LinearMap::scalar(0.5),
                &LossSpec::matched(2.0).unwrap(),
                &[vec![100.0]],
                &cfg()
            ),
            Err(Error::QuadratureUnderflow { .. })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        let prior = gaussian_prior_for_a(&LinearMap::scalar(0.5)).unwrap();
        let spec = LossSpec::matched(2.0).unwrap();
        assert!(
            orthogonality_residual(&prior, &LinearMap::scalar(-0.1), &spec, &grid1(), &cfg())
                .is_err()
        );
        assert!(matches!(
            orthogonality_residual(&prior, &LinearMap::identity(2), &spec, &grid1(), &cfg()),
            Err(Error::DimensionMismatch { .. })
        ));
        let big = gaussian_prior_for_a(&LinearMap::diagonal(&[0.5; 5])).unwrap();
        assert!(matches!(
            orthogonality_residual(&big, &LinearMap::diagonal(&[0.5; 5]), &spec, &[], &cfg()),
            Err(Error::DimensionTooLarge { .. })
        ));
    }
}
