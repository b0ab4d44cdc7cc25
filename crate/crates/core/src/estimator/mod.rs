//! The optimal estimator `f_{p,k}(y) = argmin_v E[‖X − v‖_k^p | Y = y]`.
//!
//! The posterior of `X` given `Y = y` is discretized on a grid (or on the
//! prior's own atoms), and the conditional risk is minimized over that
//! weighted point set. Gaussian priors use a whitened tensor grid centered
//! on the closed-form posterior mean; the cosine-modulated prior uses a grid
//! centered on the posterior mean of its Gaussian envelope.

mod minimize;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{log_gaussian_pdf, LinearMap, Matrix};
use crate::loss::{loss_value, LossSpec};
use crate::priors::{sample::draw, sample::NormalStream, Prior};
use crate::quadrature::{tensor_grid, QuadratureConfig};

use minimize::{minimize, WeightedPoints};

/// Largest dimension handled for Gaussian and atomic priors.
pub const MAX_DIM: usize = 4;

/// Total unnormalized posterior mass below this is treated as empty.
pub const MIN_EVIDENCE: f64 = 1e-300;

/// The posterior of `X` given `Y = y` on a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    evidence: f64,
}

impl PosteriorGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    /// Flat row-major point storage.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Normalized weights (sum to 1).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The marginal density of `Y` at `y`, `∫ φ(y − x) dP_X(x)`, as seen by
    /// the same quadrature.
    pub fn evidence(&self) -> f64 {
        self.evidence
    }

    pub fn mean(&self) -> Vec<f64> {
        self.cloud().mean()
    }

    pub fn covariance(&self) -> Matrix {
        let m = self.mean();
        let n = self.dim;
        let mut c = Matrix::zeros(n);
        for j in 0..self.len() {
            let x = self.point(j);
            let w = self.weights[j];
            for a in 0..n {
                for b in 0..n {
                    c[(a, b)] += w * (x[a] - m[a]) * (x[b] - m[b]);
                }
            }
        }
        c
    }

    fn cloud(&self) -> WeightedPoints<'_> {
        WeightedPoints {
            dim: self.dim,
            points: &self.points,
            weights: &self.weights,
        }
    }
}

/// Precomputed posterior machinery for one prior.
#[derive(Debug, Clone)]
enum Plan {
    Gaussian {
        mean: Vec<f64>,
        /// Posterior covariance `Σ(Σ + I)^{-1}`, which is also the gain.
        post_cov: LinearMap,
        post_root: LinearMap,
        marginal_cov: LinearMap,
        std_points: Vec<f64>,
        std_weights: Vec<f64>,
    },
    Discrete {
        dim: usize,
        points: Vec<f64>,
        masses: Vec<f64>,
    },
    Cosine {
        prior: crate::priors::CosineGaussianPrior,
        offsets: Vec<f64>,
        cells: Vec<f64>,
    },
}

/// The optimal estimator for a fixed prior, loss and quadrature.
#[derive(Debug, Clone)]
pub struct Estimator {
    spec: LossSpec,
    cfg: QuadratureConfig,
    plan: Plan,
}

impl Estimator {
    pub fn new(prior: &Prior, spec: LossSpec, cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let n = prior.dim();
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge {
                dim: n,
                max: MAX_DIM,
            });
        }
        let plan = match prior {
            Prior::Gaussian(g) => {
                let post_cov = g.cov().map_spectrum(|l| l / (1.0 + l))?;
                let post_root = post_cov.map_spectrum(|l| l.max(0.0).sqrt())?;
                let marginal_cov = LinearMap::new(g.cov().entries().add(&Matrix::identity(n)));
                let count = cfg.nodes_for_dim(n);
                let (offsets, trap) = cfg.trapezoid_1d(0.0, count);
                let base: Vec<f64> = offsets
                    .iter()
                    .zip(&trap)
                    .map(|(z, w)| w * (-0.5 * z * z).exp())
                    .collect();
                let (std_points, mut std_weights) = tensor_grid(&offsets, &base, n);
                let total: f64 = std_weights.iter().sum();
                std_weights.iter_mut().for_each(|w| *w /= total);
                Plan::Gaussian {
                    mean: g.mean().to_vec(),
                    post_cov,
                    post_root,
                    marginal_cov,
                    std_points,
                    std_weights,
                }
            }
            Prior::Atomic(a) => Plan::Discrete {
                dim: n,
                points: a.atoms().iter().flatten().copied().collect(),
                masses: a.probs().to_vec(),
            },
            Prior::Grid(g) => Plan::Discrete {
                dim: n,
                points: g.points(),
                masses: g.weights().to_vec(),
            },
            Prior::Cosine(c) => {
                let (offsets, cells) = cfg.trapezoid_1d(0.0, cfg.nodes_per_dim);
                Plan::Cosine {
                    prior: *c,
                    offsets,
                    cells,
                }
            }
        };
        Ok(Self { spec, cfg, plan })
    }

    pub fn spec(&self) -> &LossSpec {
        &self.spec
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn dim(&self) -> usize {
        match &self.plan {
            Plan::Gaussian { mean, .. } => mean.len(),
            Plan::Discrete { dim, .. } => *dim,
            Plan::Cosine { .. } => 1,
        }
    }

    pub fn posterior(&self, y: &[f64]) -> Result<PosteriorGrid> {
        let n = self.dim();
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        match &self.plan {
            Plan::Gaussian {
                mean,
                post_cov,
                post_root,
                marginal_cov,
                std_points,
                std_weights,
            } => {
                let resid: Vec<f64> = y.iter().zip(mean).map(|(a, b)| a - b).collect();
                let center: Vec<f64> = post_cov
                    .apply(&resid)
                    .iter()
                    .zip(mean)
                    .map(|(a, b)| a + b)
                    .collect();
                let evidence = log_gaussian_pdf(y, mean, marginal_cov)?.exp();
                if !(evidence >= MIN_EVIDENCE) {
                    return Err(Error::EmptyPosterior {
                        y: y.to_vec(),
                        mass: evidence,
                    });
                }
                let root = post_root.entries();
                let mut points = Vec::with_capacity(std_points.len());
                for z in std_points.chunks(n) {
                    for (r, c) in center.iter().enumerate() {
                        points.push(c + (0..n).map(|s| root[(r, s)] * z[s]).sum::<f64>());
                    }
                }
                Ok(PosteriorGrid {
                    dim: n,
                    points,
                    weights: std_weights.clone(),
                    evidence,
                })
            }
            Plan::Discrete {
                dim,
                points,
                masses,
            } => {
                let norm = (2.0 * std::f64::consts::PI).powf(-0.5 * *dim as f64);
                let raw: Vec<f64> = points
                    .chunks(*dim)
                    .zip(masses)
                    .map(|(x, m)| {
                        let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                        m * norm * (-0.5 * sq).exp()
                    })
                    .collect();
                normalized(*dim, points.clone(), raw, y)
            }
            Plan::Cosine {
                prior,
                offsets,
                cells,
            } => {
                let center = prior.a() * y[0];
                let points: Vec<f64> = offsets.iter().map(|o| center + o).collect();
                let raw: Vec<f64> = points
                    .iter()
                    .zip(cells)
                    .map(|(&x, &h)| h * prior.density(x) * crate::linalg::std_normal_pdf(y[0] - x))
                    .collect();
                normalized(1, points, raw, y)
            }
        }
    }

    pub fn estimate(&self, y: &[f64]) -> Result<Vec<f64>> {
        let post = self.posterior(y)?;
        minimize(&post.cloud(), &self.spec, self.cfg.tol)
    }
}

fn normalized(dim: usize, points: Vec<f64>, mut raw: Vec<f64>, y: &[f64]) -> Result<PosteriorGrid> {
    let evidence: f64 = raw.iter().sum();
    if !(evidence >= MIN_EVIDENCE) {
        return Err(Error::EmptyPosterior {
            y: y.to_vec(),
            mass: evidence,
        });
    }
    raw.iter_mut().for_each(|w| *w /= evidence);
    Ok(PosteriorGrid {
        dim,
        points,
        weights: raw,
        evidence,
    })
}

/// The posterior of `X` given `Y = y`.
pub fn posterior(prior: &Prior, y: &[f64], cfg: &QuadratureConfig) -> Result<PosteriorGrid> {
    // The loss is irrelevant for the posterior itself.
    Estimator::new(prior, LossSpec::matched(2.0)?, *cfg)?.posterior(y)
}

/// `f_{p,k}(y)`.
pub fn optimal_estimate(
    prior: &Prior,
    y: &[f64],
    spec: &LossSpec,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    Estimator::new(prior, *spec, *cfg)?.estimate(y)
}

/// A fit whose worst deviation is at most this is declared linear.
pub const LINEARITY_TOL: f64 = 1e-5;

/// Least-squares linear approximation of the optimal estimator on a y-grid.
#[derive(Debug, Clone)]
pub struct LinearFit {
    /// Symmetrized best-fit matrix `A*`.
    pub a: LinearMap,
    /// `max_j ‖f(y_j) − A* y_j‖_2`.
    pub max_deviation: f64,
    pub estimates: Vec<Vec<f64>>,
}

impl LinearFit {
    pub fn is_linear(&self) -> bool {
        self.max_deviation <= LINEARITY_TOL
    }
}

/// Fits `A*` minimizing `Σ_j ‖f(y_j) − A y_j‖²` and reports the worst deviation.
pub fn fit_best_linear(
    prior: &Prior,
    spec: &LossSpec,
    y_grid: &[Vec<f64>],
    cfg: &QuadratureConfig,
) -> Result<LinearFit> {
    let est = Estimator::new(prior, *spec, *cfg)?;
    let n = est.dim();
    let estimates = estimate_grid(&est, y_grid)?;
    let mut gram = Matrix::zeros(n);
    let mut cross = Matrix::zeros(n);
    for (y, f) in y_grid.iter().zip(&estimates) {
        for a in 0..n {
            for b in 0..n {
                gram[(a, b)] += y[a] * y[b];
                cross[(a, b)] += f[a] * y[b];
            }
        }
    }
    let gram = LinearMap::new(gram);
    if !(gram.eigen_floor() > 1e-12 * gram.entries().trace()) {
        return Err(Error::RankDeficientGrid);
    }
    let raw = cross.matmul(gram.inverse_pd()?.entries());
    let a = LinearMap::new(raw.symmetrized());
    let max_deviation = y_grid
        .iter()
        .zip(&estimates)
        .map(|(y, f)| {
            let ay = a.apply(y);
            f.iter()
                .zip(&ay)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    Ok(LinearFit {
        a,
        max_deviation,
        estimates,
    })
}

/// Evaluates the estimator on every grid point, in parallel, preserving order.
pub fn estimate_grid(est: &Estimator, y_grid: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    y_grid.par_iter().map(|y| est.estimate(y)).collect()
}

#[derive(Debug, Clone)]
pub enum EstimatorChoice {
    Linear(LinearMap),
    Optimal(QuadratureConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// Minimum Monte Carlo sample count for [`bayes_risk`].
pub const MIN_RISK_SAMPLES: usize = 1_000;

/// Monte Carlo estimate of `E[ℓ_{p,k}(X − f(Y))]`.
///
/// `X` is drawn from the prior and `Z` from the standard normal with one
/// seeded stream, so two calls with the same seed see the same `(X, Y)` pairs.
pub fn bayes_risk(
    prior: &Prior,
    estimator: &EstimatorChoice,
    spec: &LossSpec,
    samples: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if samples < MIN_RISK_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "bayes_risk needs at least {MIN_RISK_SAMPLES} samples, got {samples}"
        )));
    }
    let n = prior.dim();
    let mut normals = NormalStream::new(ChaCha8Rng::seed_from_u64(seed));
    let xs = draw(prior, samples, &mut normals)?;
    let ys: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| x.iter().map(|v| v + normals.next()).collect())
        .collect();
    let losses: Vec<f64> = match estimator {
        EstimatorChoice::Linear(a) => {
            if a.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: a.dim(),
                });
            }
            xs.iter()
                .zip(&ys)
                .map(|(x, y)| {
                    let err: Vec<f64> = x.iter().zip(a.apply(y)).map(|(u, v)| u - v).collect();
                    loss_value(&err, spec)
                })
                .collect()
        }
        EstimatorChoice::Optimal(cfg) => {
            let est = Estimator::new(prior, *spec, *cfg)?;
            xs.par_iter()
                .zip(ys.par_iter())
                .map(|(x, y)| {
                    let f = est.estimate(y)?;
                    let err: Vec<f64> = x.iter().zip(&f).map(|(u, v)| u - v).collect();
                    Ok(loss_value(&err, spec))
                })
                .collect::<Result<Vec<f64>>>()?
        }
    };
    let count = losses.len() as f64;
    let mean = losses.iter().sum::<f64>() / count;
    let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (count - 1.0);
    Ok(RiskEstimate {
        mean,
        std_error: (var / count).sqrt(),
        samples,
    })
}
