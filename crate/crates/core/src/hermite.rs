//! Probabilist's Hermite polynomials `He_m`, their zeros, and Gauss–Hermite
//! rules for the standard normal weight.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

/// Largest supported degree. Coefficients of `He_64` are still finite in `f64`.
pub const MAX_DEGREE: usize = 64;

/// `He_m` in the monomial basis, coefficients in increasing-power order.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitePoly {
    coefficients: Vec<f64>,
}

impl HermitePoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Horner evaluation of the monomial form. Prefer [`hermite_eval`] for
    /// large degrees, where the three-term recurrence is better conditioned.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + c)
    }
}

fn check_degree(m: usize) -> Result<()> {
    if m > MAX_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: m,
            max: MAX_DEGREE,
        });
    }
    Ok(())
}

/// Builds `He_m` from `He_{m+1} = x He_m − m He_{m−1}`.
pub fn hermite_poly(m: usize) -> Result<HermitePoly> {
    check_degree(m)?;
    let mut prev = vec![1.0];
    if m == 0 {
        return Ok(HermitePoly { coefficients: prev });
    }
    let mut cur = vec![0.0, 1.0];
    for j in 1..m {
        let mut next = vec![0.0; j + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= j as f64 * c;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(HermitePoly { coefficients: cur })
}

/// `(He_m(x), He_{m−1}(x))` by the recurrence. For `m = 0` the second value is 0.
pub fn hermite_eval_pair(m: usize, x: f64) -> (f64, f64) {
    if m == 0 {
        return (1.0, 0.0);
    }
    let (mut prev, mut cur) = (1.0, x);
    for j in 1..m {
        let next = x * cur - j as f64 * prev;
        prev = cur;
        cur = next;
    }
    (cur, prev)
}

pub fn hermite_eval(m: usize, x: f64) -> f64 {
    hermite_eval_pair(m, x).0
}

/// Jacobi matrix of the probabilist's Hermite recurrence: zero diagonal,
/// off-diagonal `√j`.
fn jacobi_matrix(m: usize) -> Matrix {
    let mut t = Matrix::zeros(m);
    for j in 1..m {
        let b = (j as f64).sqrt();
        t[(j - 1, j)] = b;
        t[(j, j - 1)] = b;
    }
    t
}

/// All `m` real zeros of `He_m`, ascending, exactly symmetric about 0.
///
/// Eigenvalues of the Jacobi matrix, one Newton step, then the pairs `±z`
/// are averaged so that the list is closed under negation.
pub fn hermite_zeros(m: usize) -> Result<Vec<f64>> {
    check_degree(m)?;
    if m == 0 {
        return Err(Error::InvalidArgument("He_0 has no zeros".into()));
    }
    let mut zeros = symmetric_eigen(&jacobi_matrix(m)).values;
    for z in zeros.iter_mut() {
        let (h, h_prev) = hermite_eval_pair(m, *z);
        let dh = m as f64 * h_prev;
        if dh != 0.0 {
            *z -= h / dh;
        }
    }
    zeros.sort_by(f64::total_cmp);
    for i in 0..m / 2 {
        let r = 0.5 * (zeros[m - 1 - i] - zeros[i]);
        zeros[i] = -r;
        zeros[m - 1 - i] = r;
    }
    if m % 2 == 1 {
        zeros[m / 2] = 0.0;
    }
    Ok(zeros)
}

/// An `m`-point Gauss–Hermite rule for `E[g(Z)]`, `Z ~ N(0, 1)`: exact when
/// `g` is a polynomial of degree at most `2m − 1`. Weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(m: usize) -> Result<Self> {
        let nodes = hermite_zeros(m)?;
        // w_i = m! / (m² He_{m−1}(x_i)²), evaluated in logs.
        let log_fact: f64 = (1..=m).map(|j| (j as f64).ln()).sum();
        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let (_, h_prev) = hermite_eval_pair(m, x);
                (log_fact - 2.0 * (m as f64).ln() - 2.0 * h_prev.abs().ln()).exp()
            })
            .collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}
