use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::std_normal_pdf;
use crate::quadrature::GaussLegendre;

const GL_ORDER: usize = 16;
/// Panels shrink geometrically by halves toward the origin down to this size.
const GRADED_FLOOR: f64 = 1e-13;
const GRADED_TOP: f64 = 0.5;
/// Bisection stops once the bracket is this narrow.
const BISECT_WIDTH: f64 = 1e-13;

/// Sine transform `g(ω) = 2 ∫_0^∞ x^{s−1} φ0(x) sin(ωx) dx` on a fixed
/// Gauss–Legendre rule, accurate for `|ω| ≤ omega_max`.
///
/// With the convention `∫ h(x) e^{−iωx} dx`, the transform of
/// `h(x) = sign(x)|x|^{s−1} φ0(x)` is `−i g(ω)`.
#[derive(Debug, Clone)]
pub struct OddKernelTransform {
    exponent: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl OddKernelTransform {
    pub fn new(exponent: f64, omega_max: f64) -> Result<Self> {
        if !(exponent >= 1.0) || !exponent.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel exponent must be a finite real ≥ 1, got {exponent}"
            )));
        }
        if !omega_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "omega_max must be finite, got {omega_max}"
            )));
        }
        let gl = GaussLegendre::new(GL_ORDER);
        let mut nodes = Vec::new();
        let mut raw = Vec::new();
        // Geometric grading resolves the x^{s−1} behavior at the origin.
        let mut lo = GRADED_FLOOR;
        gl.push_panel(0.0, lo, &mut nodes, &mut raw);
        while lo < GRADED_TOP {
            let hi = (2.0 * lo).min(GRADED_TOP);
            gl.push_panel(lo, hi, &mut nodes, &mut raw);
            lo = hi;
        }
        // Half-period panels out to where x^{s−1} φ0(x) is negligible.
        let upper = 10.0f64.max((2.0 * (exponent - 1.0)).sqrt() + 9.0);
        let width = (std::f64::consts::PI / omega_max.abs().max(1e-3)).min(0.5);
        let panels = ((upper - GRADED_TOP) / width).ceil() as usize;
        let width = (upper - GRADED_TOP) / panels as f64;
        for j in 0..panels {
            let a = GRADED_TOP + j as f64 * width;
            gl.push_panel(a, a + width, &mut nodes, &mut raw);
        }
        let weights = nodes
            .iter()
            .zip(&raw)
            .map(|(&x, &w)| 2.0 * w * kernel(exponent, x))
            .collect();
        Ok(Self {
            exponent,
            nodes,
            weights,
        })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn eval(&self, omega: f64) -> f64 {
        if omega == 0.0 {
            return 0.0;
        }
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * (omega * x).sin())
            .sum()
    }
}

fn kernel(exponent: f64, x: f64) -> f64 {
    let power = if exponent == 1.0 {
        1.0
    } else {
        x.powf(exponent - 1.0)
    };
    power * std_normal_pdf(x)
}

/// `g(ω)` for the kernel `sign(x)|x|^{s−1} φ0(x)`; `g(0) = 0` and `g` is odd.
pub fn ft_odd_kernel(exponent: f64, omega: f64) -> Result<f64> {
    Ok(OddKernelTransform::new(exponent, omega.abs())?.eval(omega))
}

/// Result of scanning `|g|` on `step, 2·step, …, omega_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroScan {
    /// Minimum of `|g|` over the scanned grid (which excludes ω = 0).
    pub min_abs: f64,
    /// Positive sign changes, each polished by bisection.
    pub zero_locations: Vec<f64>,
}

/// Scans `g` on `(0, omega_max]` for sign changes.
pub fn ft_zero_scan(exponent: f64, omega_max: f64, step: f64) -> Result<ZeroScan> {
    if !(omega_max >= 4.0) || !omega_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "omega_max must be at least 4, got {omega_max}"
        )));
    }
    if !(step > 0.0 && step <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "step must lie in (0, 0.01], got {step}"
        )));
    }
    let g = OddKernelTransform::new(exponent, omega_max)?;
    let count = (omega_max / step + 1e-9).floor() as usize;
    let omegas: Vec<f64> = (1..=count).map(|i| i as f64 * step).collect();
    let values: Vec<f64> = omegas.par_iter().map(|&w| g.eval(w)).collect();
    let min_abs = values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
    let mut zero_locations = Vec::new();
    for i in 0..values.len() {
        if values[i] == 0.0 {
            zero_locations.push(omegas[i]);
        } else if i + 1 < values.len() && values[i] * values[i + 1] < 0.0 {
            zero_locations.push(bisect(&g, omegas[i], omegas[i + 1], values[i]));
        }
    }
    Ok(ZeroScan {
        min_abs,
        zero_locations,
    })
}

fn bisect(g: &OddKernelTransform, mut lo: f64, mut hi: f64, g_lo: f64) -> f64 {
    let lo_sign = g_lo.signum();
    while hi - lo > BISECT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let v = g.eval(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::{hermite_eval, hermite_zeros};
    use proptest::prelude::*;
    use statrs::function::gamma::gamma;

    /// Power series `2 Σ_j (−1)^j ω^{2j+1}/(2j+1)! · E_+[x^{s+2j}]`, with
    /// `∫_0^∞ x^m φ0 = 2^{m/2} Γ((m+1)/2) / (2√π)`.
    fn series(s: f64, omega: f64) -> f64 {
        let mut total = 0.0;
        let mut fact = 1.0;
        for j in 0..80 {
            let odd = (2 * j + 1) as f64;
            if j > 0 {
                fact *= (odd - 1.0) * odd;
            }
            let m = s - 1.0 + odd;
            let half_moment =
                2f64.powf(m / 2.0) * gamma((m + 1.0) / 2.0) / (2.0 * std::f64::consts::PI.sqrt());
            let term = omega.powf(odd) / fact * half_moment;
            total += if j % 2 == 0 { term } else { -term };
        }
        2.0 * total
    }

    #[test]
    fn zero_at_origin() {
        for s in [1.0, 1.5, 3.0, 7.0] {
            assert_eq!(ft_odd_kernel(s, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn exponent_two_closed_form() {
        for omega in [0.1f64, 1.0, 2.5, 5.0, 8.0] {
            let expect = omega * (-0.5 * omega * omega).exp();
            assert!((ft_odd_kernel(2.0, omega).unwrap() - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn matches_power_series() {
        for s in [1.0, 1.25, 1.5, 1.75, 2.5, 3.0] {
            for omega in [0.05, 0.5, 1.0, 2.0, 3.0] {
                let got = ft_odd_kernel(s, omega).unwrap();
                let want = series(s, omega);
                assert!(
                    (got - want).abs() <= 1e-10,
                    "s = {s}, ω = {omega}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn even_exponents_follow_hermite() {
        // g(ω) = He_{p−1}(ω) e^{−ω²/2} up to sign for even p.
        for p in [4usize, 6] {
            for omega in [0.3, 1.0, 2.2, 4.0] {
                let g = ft_odd_kernel(p as f64, omega).unwrap();
                let h = hermite_eval(p - 1, omega) * (-0.5 * omega * omega).exp();
                assert!((g.abs() - h.abs()).abs() <= 1e-10, "p = {p}, ω = {omega}");
            }
        }
        assert!(ft_odd_kernel(4.0, 3f64.sqrt()).unwrap().abs() <= 1e-9);
    }

    #[test]
    fn lemma_range_has_no_zeros() {
        for k in [1.0, 1.25, 1.5, 1.75, 2.0] {
            let scan = ft_zero_scan(k, 8.0, 1e-3).unwrap();
            assert!(scan.zero_locations.is_empty(), "k = {k}");
            assert!(scan.min_abs > 0.0);
        }
    }

    #[test]
    fn even_p_zeros_match_hermite() {
        for p in [4usize, 6] {
            let scan = ft_zero_scan(p as f64, 8.0, 1e-3).unwrap();
            let positive: Vec<f64> = hermite_zeros(p - 1)
                .unwrap()
                .into_iter()
                .filter(|z| *z > 0.0)
                .collect();
            assert_eq!(scan.zero_locations.len(), positive.len());
            for (a, b) in scan.zero_locations.iter().zip(&positive) {
                assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_scan_parameters() {
        assert!(ft_zero_scan(2.0, 3.0, 1e-3).is_err());
        assert!(ft_zero_scan(2.0, 8.0, 0.1).is_err());
        assert!(ft_zero_scan(0.5, 8.0, 1e-3).is_err());
    }

    proptest! {
        #[test]
        fn transform_is_odd(s in 1.0f64..5.0, omega in 0.0f64..8.0) {
            let g = OddKernelTransform::new(s, 8.0).unwrap();
            prop_assert!((g.eval(-omega) + g.eval(omega)).abs() <= 1e-12);
        }
    }
}
