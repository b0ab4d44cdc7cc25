//! Prior distributions on `X`.
//!
//! Four representations cover everything the estimator and verifier need:
//! a multivariate Gaussian, a weighted tensor grid (`n ≤ 2`), a finite set of
//! atoms, and the scalar cosine-modulated Gaussian
//!
//! ```text
//! f_X(x) ∝ exp(−(1 − a)/a · x²/2) · (1 + ρ cos(ω x / √a + θ)).
//! ```

mod format;
pub(crate) mod sample;

use std::f64::consts::PI;

pub use format::{PriorDocument, Real};
pub use sample::sample_prior;

use crate::error::{Error, Result};
use crate::hermite::hermite_zeros;
use crate::linalg::{log_gaussian_pdf, LinearMap};
use crate::verify::ft_zero_scan;

/// Weights of grid and atomic priors must sum to 1 within this.
pub const WEIGHT_SUM_TOL: f64 = 1e-10;

/// Closed-form and quadrature normalizations must agree within this.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// Eigenvalues of `A` at or above `1 − IMPROPER_MARGIN` give an improper prior.
pub const IMPROPER_MARGIN: f64 = 1e-12;

/// Window and resolution of the ω scan for non-even `p`.
pub const OMEGA_SCAN_MAX: f64 = 8.0;
pub const OMEGA_SCAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    Gaussian(GaussianPrior),
    Grid(GridDensityPrior),
    Atomic(AtomicPrior),
    Cosine(CosineGaussianPrior),
}

impl Prior {
    pub fn dim(&self) -> usize {
        match self {
            Prior::Gaussian(g) => g.mean.len(),
            Prior::Grid(g) => g.axes.len(),
            Prior::Atomic(a) => a.dim,
            Prior::Cosine(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Prior::Gaussian(_) => "gaussian",
            Prior::Grid(_) => "grid",
            Prior::Atomic(_) => "atomic",
            Prior::Cosine(_) => "cosine",
        }
    }

    /// Total mass under the prior's own quadrature (1 up to truncation and
    /// rounding for every valid prior).
    pub fn total_mass(&self) -> f64 {
        match self {
            Prior::Gaussian(g) => g.total_mass_on_grid(),
            Prior::Grid(g) => g.weights.iter().sum(),
            Prior::Atomic(a) => a.probs.iter().sum(),
            Prior::Cosine(c) => c.quadrature_mass(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PriorDocument = serde_json::from_str(text)
            .map_err(|e| Error::InvalidPrior(format!("malformed prior file: {e}")))?;
        doc.into_prior()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PriorDocument::from(self)).expect("finite prior fields")
    }
}

/// `N(mean, cov)` with positive definite covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    mean: Vec<f64>,
    cov: LinearMap,
}

impl GaussianPrior {
    pub fn new(mean: Vec<f64>, cov: LinearMap) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidPrior("non-finite mean".into()));
        }
        cov.require_pd()?;
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &LinearMap {
        &self.cov
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        log_gaussian_pdf(x, &self.mean, &self.cov).expect("validated covariance")
    }

    fn total_mass_on_grid(&self) -> f64 {
        // Trapezoid over the whitened cube [-8, 8]^n.
        let n = self.mean.len();
        let m = match n {
            1 => 801,
            2 => 201,
            3 => 61,
            _ => 31,
        };
        let h = 16.0 / (m - 1) as f64;
        let root = crate::linalg::matrix_sqrt(&self.cov).expect("validated covariance");
        let det_root = (0.5 * self.cov.log_det_pd().expect("validated covariance")).exp();
        let offsets: Vec<f64> = (0..m).map(|i| -8.0 + i as f64 * h).collect();
        let weights: Vec<f64> = (0..m)
            .map(|i| if i == 0 || i == m - 1 { 0.5 * h } else { h })
            .collect();
        let (zs, ws) = crate::quadrature::tensor_grid(&offsets, &weights, n);
        zs.chunks(n)
            .zip(&ws)
            .map(|(z, w)| {
                let dx = root.apply(z);
                let x: Vec<f64> = dx.iter().zip(&self.mean).map(|(d, m)| d + m).collect();
                w * det_root * self.log_density(&x).exp()
            })
            .sum()
    }
}

/// Discrete prior on a tensor-product grid (`n ≤ 2`). Weights are stored
/// row-major with the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensityPrior {
    axes: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl GridDensityPrior {
    pub fn new(axes: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::DimensionTooLarge {
                dim: axes.len(),
                max: 2,
            });
        }
        if axes
            .iter()
            .any(|a| a.is_empty() || a.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::InvalidPrior(
                "grid axes must be nonempty and finite".into(),
            ));
        }
        let expected: usize = axes.iter().map(Vec::len).product();
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: weights.len(),
            });
        }
        check_probabilities(&weights)?;
        Ok(Self { axes, weights })
    }

    /// Discretizes a (possibly unnormalized) density on the given axes.
    pub fn from_density(axes: Vec<Vec<f64>>, density: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let n = axes.len();
        let mut raw = Vec::new();
        let mut point = vec![0.0; n];
        for_each_index(&axes, |idx| {
            for d in 0..n {
                point[d] = axes[d][idx[d]];
            }
            raw.push(density(&point));
        });
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidPrior(
                "density has no mass on the grid".into(),
            ));
        }
        raw.iter_mut().for_each(|w| *w /= total);
        Self::new(axes, raw)
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Flat point list (row-major) in weight order.
    pub fn points(&self) -> Vec<f64> {
        let n = self.axes.len();
        let mut out = Vec::with_capacity(self.weights.len() * n);
        for_each_index(&self.axes, |idx| {
            for d in 0..n {
                out.push(self.axes[d][idx[d]]);
            }
        });
        out
    }
}

fn for_each_index(axes: &[Vec<f64>], mut f: impl FnMut(&[usize])) {
    let n = axes.len();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        f(&idx);
        for d in (0..n).rev() {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

fn check_probabilities(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidPrior(
            "weights must be nonnegative and finite".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidPrior(format!(
            "weights sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Finitely many atoms with probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicPrior {
    dim: usize,
    atoms: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

impl AtomicPrior {
    pub fn new(atoms: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidPrior("atomic prior needs at least one atom".into()))?;
        if dim == 0 {
            return Err(Error::InvalidPrior(
                "atoms must have positive dimension".into(),
            ));
        }
        if let Some(bad) = atoms.iter().find(|a| a.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        if atoms.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPrior("atoms must be finite".into()));
        }
        if probs.len() != atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                got: probs.len(),
            });
        }
        check_probabilities(&probs)?;
        Ok(Self { dim, atoms, probs })
    }

    pub fn point_mass(at: Vec<f64>) -> Result<Self> {
        Self::new(vec![at], vec![1.0])
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// The scalar density `∝ exp(−c x²/2)(1 + ρ cos(ω x/√a + θ))`, `c = (1 − a)/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineGaussianPrior {
    a: f64,
    rho: f64,
    theta: f64,
    omega: f64,
    log_norm: f64,
}

impl CosineGaussianPrior {
    pub fn new(a: f64, rho: f64, theta: f64, omega: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidPrior(format!(
                "a must lie in (0, 1), got {a}"
            )));
        }
        if !(rho.abs() <= 1.0) {
            return Err(Error::InvalidPrior(format!(
                "|rho| must be at most 1, got {rho}"
            )));
        }
        if !theta.is_finite() || !omega.is_finite() {
            return Err(Error::InvalidPrior("theta and omega must be finite".into()));
        }
        let c = (1.0 - a) / a;
        let closed = (2.0 * PI / c).sqrt()
            * (1.0 + rho * (-omega * omega / (2.0 * c * a)).exp() * theta.cos());
        if !(closed > 0.0) {
            // ρ = ±1 with cos θ = ∓1 and ω = 0 leaves no mass.
            return Err(Error::InvalidPrior("density vanishes identically".into()));
        }
        let prior = Self {
            a,
            rho,
            theta,
            omega,
            log_norm: closed.ln(),
        };
        let quad = prior.unnormalized_mass_by_quadrature();
        if ((quad - closed) / closed).abs() > NORMALIZATION_TOL {
            return Err(Error::NormalizationMismatch {
                closed_form: closed,
                quadrature: quad,
            });
        }
        Ok(prior)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Variance `a/(1 − a)` of the Gaussian envelope.
    pub fn envelope_variance(&self) -> f64 {
        self.a / (1.0 - self.a)
    }

    /// Closed-form normalizing constant of the unnormalized density.
    pub fn normalization(&self) -> f64 {
        self.log_norm.exp()
    }

    fn unnormalized(&self, x: f64) -> f64 {
        let c = (1.0 - self.a) / self.a;
        (-0.5 * c * x * x).exp() * self.modulation(x)
    }

    fn modulation(&self, x: f64) -> f64 {
        (1.0 + self.rho * (self.omega * x / self.a.sqrt() + self.theta).cos()).max(0.0)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.unnormalized(x) / self.normalization()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        let c = (1.0 - self.a) / self.a;
        -0.5 * c * x * x + self.modulation(x).ln() - self.log_norm
    }

    fn unnormalized_mass_by_quadrature(&self) -> f64 {
        // Trapezoid over ±12 envelope standard deviations; spectrally accurate
        // for this entire integrand.
        let sd = self.envelope_variance().sqrt();
        let period = 2.0 * PI * self.a.sqrt() / self.omega.abs().max(1e-300);
        let h = (sd / 50.0).min(period / 40.0);
        let m = (12.0 * sd / h).ceil() as usize;
        let mut total = self.unnormalized(0.0);
        for i in 1..=m {
            let x = i as f64 * h;
            total += self.unnormalized(x) + self.unnormalized(-x);
        }
        total * h
    }

    fn quadrature_mass(&self) -> f64 {
        self.unnormalized_mass_by_quadrature() / self.normalization()
    }
}

/// The Gaussian prior `N(0, (I − A)^{-1} A)` whose optimal estimator is `y ↦ A y`.
pub fn gaussian_prior_for_a(a: &LinearMap) -> Result<Prior> {
    a.eigen()?;
    if a.eigen_floor() <= 0.0 {
        return Err(Error::NotPd {
            eigen_floor: a.eigen_floor(),
        });
    }
    let top = a.eigen_ceiling();
    if top >= 1.0 - IMPROPER_MARGIN {
        return Err(Error::ImproperPrior { eigenvalue: top });
    }
    let cov = a.map_spectrum(|l| l / (1.0 - l))?;
    Ok(Prior::Gaussian(GaussianPrior::new(
        vec![0.0; a.dim()],
        cov,
    )?))
}

/// Normalized density of a cosine-modulated prior at `x`.
pub fn cosine_prior_density(prior: &CosineGaussianPrior, x: f64) -> f64 {
    prior.density(x)
}

/// Admissible modulation frequencies ω for `p > 2`, sorted ascending and
/// closed under negation (0 is always included).
///
/// Even integer `p`: the zeros of `He_{p−1}`. Otherwise the sign changes of
/// the odd-kernel transform with exponent `p` on `(0, 8]`.
pub fn omega_for_p(p: f64) -> Result<Vec<f64>> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "omega_for_p requires p > 2, got {p}"
        )));
    }
    if p.fract() == 0.0 && (p as u64).is_multiple_of(2) {
        return hermite_zeros(p as usize - 1);
    }
    let scan = ft_zero_scan(p, OMEGA_SCAN_MAX, OMEGA_SCAN_STEP)?;
    if scan.zero_locations.is_empty() {
        return Err(Error::NoZeroFound {
            exponent: p,
            omega_max: OMEGA_SCAN_MAX,
        });
    }
    let mut out: Vec<f64> = scan.zero_locations.iter().map(|z| -z).collect();
    out.push(0.0);
    out.extend(scan.zero_locations.iter().copied());
    out.sort_by(f64::total_cmp);
    Ok(out)
}
