use std::collections::BTreeMap;

use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

pub const MAX_POLY_DEGREE: u32 = 6;
pub const MAX_POLY_DIM: usize = 2;

/// `Σ_α c_α x^α` over multi-indices `α`; missing coefficients are zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    dim: usize,
    coeffs: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.set(vec![0; dim], c);
        p
    }

    /// Adds `c` to the coefficient of `x^α`.
    pub fn add_term(&mut self, alpha: Vec<u32>, c: f64) {
        assert_eq!(alpha.len(), self.dim, "multi-index length");
        let entry = self.coeffs.entry(alpha).or_insert(0.0);
        *entry += c;
    }

    pub fn set(&mut self, alpha: Vec<u32>, c: f64) {
        assert_eq!(alpha.len(), self.dim, "multi-index length");
        self.coeffs.insert(alpha, c);
    }

    pub fn coefficient(&self, alpha: &[u32]) -> f64 {
        self.coeffs.get(alpha).copied().unwrap_or(0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Largest `|α|` with a nonzero coefficient (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms().map(|(a, _)| a.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, f64)> {
        self.coeffs
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(a, c)| (a, *c))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms()
            .map(|(a, c)| {
                c * a
                    .iter()
                    .zip(x)
                    .map(|(&e, v)| v.powi(e as i32))
                    .product::<f64>()
            })
            .sum()
    }
}

fn binomial(n: u32, r: u32) -> f64 {
    (0..r).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `E[Z^m]` for a standard normal `Z`.
fn normal_moment(m: u32) -> f64 {
    if m % 2 == 1 {
        0.0
    } else {
        (1..m).step_by(2).map(|j| j as f64).product()
    }
}

/// `E[|Z|^{k−1} sign(Z) Z^m]`: zero for even `m`, `E|Z|^{k−1+m}` for odd `m`.
fn odd_factor_moment(k: f64, m: u32) -> f64 {
    if m.is_multiple_of(2) {
        return 0.0;
    }
    let r = k - 1.0 + m as f64;
    2f64.powf(r / 2.0) * gamma((r + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// `E[|Z_i|^{k−1} sign(Z_i) · P(Z − y)]` for `Z ~ N(0, I_n)`.
///
/// Exact: `P(Z − y)` is expanded binomially and each coordinate's moment is
/// taken in closed form.
pub fn poly_moment_functional(poly: &Polynomial, k: f64, i: usize, y: &[f64]) -> Result<f64> {
    let n = poly.dim();
    if n > MAX_POLY_DIM {
        return Err(Error::DimensionTooLarge {
            dim: n,
            max: MAX_POLY_DIM,
        });
    }
    if poly.degree() > MAX_POLY_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: poly.degree() as usize,
            max: MAX_POLY_DEGREE as usize,
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "coordinate {i} out of range for n = {n}"
        )));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "k must be a finite real ≥ 1, got {k}"
        )));
    }
    let mut total = 0.0;
    for (alpha, c) in poly.terms() {
        let mut term = c;
        for (j, (&e, &yj)) in alpha.iter().zip(y).enumerate() {
            // E[f_j(Z_j) (Z_j − y_j)^e] with f_i the odd factor, f_j = 1 otherwise.
            let factor: f64 = (0..=e)
                .map(|b| {
                    let m = if j == i {
                        odd_factor_moment(k, b)
                    } else {
                        normal_moment(b)
                    };
                    binomial(e, b) * m * (-yj).powi((e - b) as i32)
                })
                .sum();
            term *= factor;
        }
        total += term;
    }
    Ok(total)
}
