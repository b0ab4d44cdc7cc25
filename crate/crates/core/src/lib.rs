//! Optimal Bayesian L^p estimation of `X` from `Y = X + Z`, `Z ~ N(0, I)`.
//!
//! The crate computes the optimal estimator for arbitrary priors by posterior
//! quadrature and convex minimization, certifies (or refutes) that the optimal
//! estimator is the linear map `y ↦ A y` through the orthogonality condition
//!
//! ```text
//! E[ ∇‖X − A y‖_k^p · φ(y − X) ] = 0   for all y,
//! ```
//!
//! and constructs the priors that make it linear: the Gaussian
//! `N(0, (I − A)^{-1} A)` and, for `p > 2`, the cosine-modulated Gaussian
//! family whose modulation frequencies sit at zeros of a Fourier transform
//! (the Hermite zeros of `He_{p−1}` for even `p`).
//!
//! Module map:
//! - [`linalg`]: small dense symmetric matrices, square roots, Gaussian densities.
//! - [`hermite`]: probabilist's Hermite polynomials, their zeros, Gauss–Hermite rules.
//! - [`loss`]: the loss `‖x‖_k^p` and its gradient.
//! - [`quadrature`]: quadrature configuration and Gauss–Legendre panels.
//! - [`priors`]: prior representations, constructions, sampling, file format.
//! - [`estimator`]: posteriors, optimal estimates, linear fits, Bayes risk.
//! - [`verify`]: orthogonality and convolution residuals, transform zero scans,
//!   polynomial moment functionals.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod hermite;
pub mod linalg;
pub mod loss;
pub mod priors;
pub mod quadrature;
pub mod verify;

pub use error::{Error, Result};
pub use estimator::{
    bayes_risk, fit_best_linear, optimal_estimate, posterior, Estimator, EstimatorChoice,
    LinearFit, PosteriorGrid, RiskEstimate,
};
pub use linalg::{gaussian_pdf, matrix_sqrt, LinearMap, Matrix};
pub use loss::{loss_gradient, loss_value, LossSpec};
pub use priors::{
    cosine_prior_density, gaussian_prior_for_a, omega_for_p, sample_prior, AtomicPrior,
    CosineGaussianPrior, GaussianPrior, GridDensityPrior, Prior,
};
pub use quadrature::QuadratureConfig;
pub use verify::{
    convolution_residual, ft_odd_kernel, ft_zero_scan, mu_transform, orthogonality_residual,
    poly_moment_functional, MuMeasure, Polynomial, ResidualReport, ZeroScan,
};
