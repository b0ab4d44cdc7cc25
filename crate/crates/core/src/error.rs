use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (smallest eigenvalue {eigen_floor:e})")]
    NotPsd { eigen_floor: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {eigen_floor:e})")]
    NotPd { eigen_floor: f64 },

    #[error("covariance is singular (smallest eigenvalue {eigen_floor:e})")]
    SingularCovariance { eigen_floor: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeTooLarge { degree: usize, max: usize },

    #[error(
        "improper prior: A has eigenvalue {eigenvalue} >= 1, so (I - A)^-1 A is not a covariance"
    )]
    ImproperPrior { eigenvalue: f64 },

    #[error("invalid loss exponents p = {p}, k = {k} (both must be >= 1)")]
    InvalidLoss { p: f64, k: f64 },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("normalization mismatch: closed form {closed_form}, quadrature {quadrature}")]
    NormalizationMismatch { closed_form: f64, quadrature: f64 },

    #[error(
        "no zero of the odd-kernel transform found for exponent {exponent} on (0, {omega_max}]"
    )]
    NoZeroFound { exponent: f64, omega_max: f64 },

    #[error("posterior mass {mass:e} underflows at y = {y:?}")]
    EmptyPosterior { y: Vec<f64>, mass: f64 },

    #[error("quadrature underflow at y = {y:?}")]
    QuadratureUnderflow { y: Vec<f64> },

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e}, last iterate {last:?})")]
    NoConvergence {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    #[error("y grid does not span all coordinates")]
    RankDeficientGrid,
}
