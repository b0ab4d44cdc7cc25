use rayon::prelude::*;

use super::{
    check_dims, discrete_masses, discrete_residual, mirrored_sum, ResidualReport, UNDERFLOW_MASS,
};
use crate::error::{Error, Result};
use crate::linalg::{matrix_sqrt, std_normal_pdf_vec, LinearMap};
use crate::loss::{loss_gradient_into, LossSpec};
use crate::priors::Prior;
use crate::quadrature::{tensor_grid, QuadratureConfig};

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Atoms `A^{-1/2} x_j` with masses `P(x_j) e^{uᵀ(I−A)u/2}`.
    Atoms { points: Vec<f64>, masses: Vec<f64> },
    /// Density `e^{uᵀ(I−A)u/2} p_X(A^{1/2}u) det A^{1/2}`, evaluated on demand.
    Density { prior: Prior, log_det_root: f64 },
}

/// The measure `dμ(u) = e^{uᵀ(I−A)u/2} dP_{A^{-1/2}X}(u)`. Not a probability
/// measure: its total mass is usually infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct MuMeasure {
    a: LinearMap,
    root: LinearMap,
    repr: Repr,
}

impl MuMeasure {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &LinearMap {
        &self.a
    }

    /// `A^{1/2}`.
    pub fn root(&self) -> &LinearMap {
        &self.root
    }

    /// Atom locations (flat) and masses, for atomic and grid priors.
    pub fn atoms(&self) -> Option<(&[f64], &[f64])> {
        match &self.repr {
            Repr::Atoms { points, masses } => Some((points, masses)),
            Repr::Density { .. } => None,
        }
    }

    /// Log-density with respect to Lebesgue measure, for density priors.
    pub fn log_density(&self, u: &[f64]) -> Option<f64> {
        match &self.repr {
            Repr::Atoms { .. } => None,
            Repr::Density {
                prior,
                log_det_root,
            } => {
                let x = self.root.apply(u);
                let log_px = match prior {
                    Prior::Gaussian(g) => g.log_density(&x),
                    Prior::Cosine(c) => c.log_density(x[0]),
                    _ => unreachable!("discrete priors are stored as atoms"),
                };
                Some(0.5 * tilt(&self.a, u) + log_px + log_det_root)
            }
        }
    }

    pub fn density(&self, u: &[f64]) -> Option<f64> {
        self.log_density(u).map(f64::exp)
    }
}

/// `uᵀ(I − A)u`.
fn tilt(a: &LinearMap, u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum::<f64>() - a.quadratic_form(u)
}

/// Builds `μ` for a prior and a positive definite `A`.
pub fn mu_transform(prior: &Prior, a: &LinearMap) -> Result<MuMeasure> {
    let n = prior.dim();
    check_dims(n, a, &[])?;
    if !a.is_symmetric() {
        return Err(Error::NotSymmetric {
            asymmetry: a.entries().asymmetry(),
        });
    }
    a.require_pd()?;
    let root = matrix_sqrt(a)?;
    let repr = match prior {
        Prior::Atomic(_) | Prior::Grid(_) => {
            let inv_root = a.inverse_sqrt()?;
            let (xs, probs) = discrete_masses(prior);
            let mut points = Vec::with_capacity(xs.len());
            let mut masses = Vec::with_capacity(probs.len());
            for (x, p) in xs.chunks(n).zip(&probs) {
                let u = inv_root.apply(x);
                masses.push(p * (0.5 * tilt(a, &u)).exp());
                points.extend(u);
            }
            Repr::Atoms { points, masses }
        }
        Prior::Gaussian(_) | Prior::Cosine(_) => Repr::Density {
            prior: prior.clone(),
            log_det_root: 0.5 * a.log_det_pd()?,
        },
    };
    Ok(MuMeasure {
        a: a.clone(),
        root,
        repr,
    })
}

/// The observation grid seen by the convolution form: `y ↦ A^{1/2} y`.
///
/// With this map, `conv(A^{1/2} y) = orth(y) · e^{yᵀ(I−A)y/2}` pointwise.
pub fn mu_observation_grid(mu: &MuMeasure, y_grid: &[Vec<f64>]) -> Vec<Vec<f64>> {
    y_grid.iter().map(|y| mu.root.apply(y)).collect()
}

/// `∫ ℓ'(A^{1/2}(u − y)) φ(y − u) dμ(u)` for each `y` in the grid.
pub fn convolution_residual(
    mu: &MuMeasure,
    spec: &LossSpec,
    y_grid: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<ResidualReport> {
    cfg.validate()?;
    let n = mu.dim();
    check_dims(n, &mu.a, y_grid)?;
    let residuals = match &mu.repr {
        Repr::Atoms { points, masses } => y_grid
            .par_iter()
            .map(|y| {
                discrete_residual(n, points, masses, y, y, |d, out| {
                    loss_gradient_into(&mu.root.apply(d), spec, out)
                })
            })
            .collect::<Result<Vec<Vec<f64>>>>()?,
        Repr::Density { .. } => {
            // In u the integrand spreads up to A^{-1/2} times wider than in x.
            let stretch = mu.a.eigen_floor().sqrt().recip().max(1.0);
            let wide = QuadratureConfig {
                half_width: cfg.half_width * stretch,
                ..*cfg
            };
            let (offsets, trap) = wide.trapezoid_1d(0.0, wide.nodes_for_dim(n));
            let (ts, cells) = tensor_grid(&offsets, &trap, n);
            let steps: Vec<Vec<f64>> = ts.chunks(n).map(|t| mu.root.apply(t)).collect();
            y_grid
                .par_iter()
                .map(|y| {
                    let mut u = vec![0.0; n];
                    let (acc, mass) = mirrored_sum(cells.len(), n, spec, |j, w| {
                        let t = &ts[j * n..(j + 1) * n];
                        for ((ui, yi), ti) in u.iter_mut().zip(y).zip(t) {
                            *ui = yi + ti;
                        }
                        w.copy_from_slice(&steps[j]);
                        let log_mu = mu.log_density(&u).expect("density representation");
                        cells[j] * (log_mu.exp() * std_normal_pdf_vec(t))
                    });
                    if !(mass >= UNDERFLOW_MASS) {
                        return Err(Error::QuadratureUnderflow { y: y.clone() });
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<Vec<f64>>>>()?
        }
    };
    Ok(ResidualReport::new(y_grid.to_vec(), residuals, *cfg))
}
