//! Dense small-dimension linear algebra.
//!
//! Everything here works on square row-major matrices of dimension at most a
//! handful. Symmetric matrices are diagonalized with cyclic Jacobi rotations,
//! and every spectral function (square root, inverse, `(I − A)^{-1} A`) goes
//! through that decomposition.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry check.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues above `-PSD_TOL` count as nonnegative.
pub const PSD_TOL: f64 = 1e-12;

const JACOBI_MAX_SWEEPS: usize = 100;

/// A square matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len(), "mul_vec dimension mismatch");
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn symmetrized(&self) -> Self {
        self.add(&self.transpose()).scale(0.5)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Eigen-decomposition of a symmetric matrix: `A = V diag(values) Vᵀ`,
/// eigenvalues ascending, eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl SymmetricEigen {
    /// `V diag(f(λ)) Vᵀ`, symmetrized to kill rounding asymmetry.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n)
                    .map(|m| self.vectors[(i, m)] * mapped[m] * self.vectors[(j, m)])
                    .sum();
                out[(i, j)] = s;
                out[(j, i)] = s;
            }
        }
        out
    }
}

/// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
pub fn symmetric_eigen(a: &Matrix) -> SymmetricEigen {
    let n = a.dim();
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        if off == 0.0 {
            break;
        }
        let scale: f64 = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<f64>() + off;
        if off <= f64::EPSILON * f64::EPSILON * scale * 1e-4 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    SymmetricEigen { values, vectors }
}

/// A square matrix together with its symmetry classification and, when
/// symmetric, its spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    entries: Matrix,
    symmetric: bool,
    eigen_floor: f64,
    eigen: Option<SymmetricEigen>,
}

impl LinearMap {
    pub fn new(entries: Matrix) -> Self {
        let scale = entries.max_abs();
        let symmetric = entries.asymmetry() <= SYMMETRY_TOL * scale;
        let eigen = symmetric.then(|| symmetric_eigen(&entries));
        let eigen_floor = eigen
            .as_ref()
            .and_then(|e| e.values.first().copied())
            .unwrap_or(f64::NAN);
        Self {
            entries,
            symmetric,
            eigen_floor,
            eigen,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::new(Matrix::from_rows(rows)?))
    }

    pub fn scalar(a: f64) -> Self {
        Self::new(Matrix::from_diagonal(&[a]))
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::new(Matrix::from_diagonal(diag))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Matrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Smallest eigenvalue; `NaN` for non-symmetric matrices.
    pub fn eigen_floor(&self) -> f64 {
        self.eigen_floor
    }

    /// Largest eigenvalue; `NaN` for non-symmetric matrices.
    pub fn eigen_ceiling(&self) -> f64 {
        self.eigen
            .as_ref()
            .and_then(|e| e.values.last().copied())
            .unwrap_or(f64::NAN)
    }

    pub fn eigen(&self) -> Result<&SymmetricEigen> {
        self.eigen.as_ref().ok_or(Error::NotSymmetric {
            asymmetry: self.entries.asymmetry(),
        })
    }

    pub fn is_psd(&self) -> bool {
        self.symmetric && self.eigen_floor >= -PSD_TOL
    }

    pub fn is_pd(&self) -> bool {
        self.symmetric && self.eigen_floor > 0.0
    }

    pub fn require_psd(&self) -> Result<()> {
        self.eigen()?;
        if self.eigen_floor < -PSD_TOL {
            return Err(Error::NotPsd {
                eigen_floor: self.eigen_floor,
            });
        }
        Ok(())
    }

    pub fn require_pd(&self) -> Result<()> {
        self.eigen()?;
        if self.eigen_floor <= 0.0 {
            return Err(Error::NotPd {
                eigen_floor: self.eigen_floor,
            });
        }
        Ok(())
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.entries.mul_vec(v)
    }

    /// `f(A)` through the spectral decomposition.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<LinearMap> {
        Ok(LinearMap::new(self.eigen()?.reconstruct(f)))
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse_pd(&self) -> Result<LinearMap> {
        self.require_pd()?;
        self.map_spectrum(|l| 1.0 / l)
    }

    /// `A^{-1/2}` of a positive definite matrix.
    pub fn inverse_sqrt(&self) -> Result<LinearMap> {
        self.require_pd()?;
        self.map_spectrum(|l| 1.0 / l.sqrt())
    }

    pub fn log_det_pd(&self) -> Result<f64> {
        self.require_pd()?;
        Ok(self.eigen()?.values.iter().map(|l| l.ln()).sum())
    }

    /// Quadratic form `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// The unique positive semidefinite square root of a symmetric PSD matrix.
pub fn matrix_sqrt(a: &LinearMap) -> Result<LinearMap> {
    a.require_psd()?;
    a.map_spectrum(|l| l.max(0.0).sqrt())
}

/// Log-density of `N(mean, cov)` at `x`.
pub fn log_gaussian_pdf(x: &[f64], mean: &[f64], cov: &LinearMap) -> Result<f64> {
    let n = cov.dim();
    for len in [x.len(), mean.len()] {
        if len != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: len,
            });
        }
    }
    let eig = cov.eigen()?;
    if cov.eigen_floor() <= 0.0 {
        return Err(Error::SingularCovariance {
            eigen_floor: cov.eigen_floor(),
        });
    }
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let mut quad = 0.0;
    let mut log_det = 0.0;
    for (m, &l) in eig.values.iter().enumerate() {
        let proj: f64 = (0..n).map(|i| eig.vectors[(i, m)] * d[i]).sum();
        quad += proj * proj / l;
        log_det += l.ln();
    }
    Ok(-0.5 * (quad + log_det + n as f64 * (2.0 * PI).ln()))
}

/// Density of the multivariate normal `N(mean, cov)` at `x`.
pub fn gaussian_pdf(x: &[f64], mean: &[f64], cov: &LinearMap) -> Result<f64> {
    log_gaussian_pdf(x, mean, cov).map(f64::exp)
}

/// Standard normal density `φ0`.
#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard `n`-dimensional normal density `φ(x) = ∏ φ0(x_i)`.
#[inline]
pub fn std_normal_pdf_vec(x: &[f64]) -> f64 {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    (-0.5 * sq).exp() / (2.0 * PI).powf(0.5 * x.len() as f64)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
