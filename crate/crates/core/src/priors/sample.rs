use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Prior;
use crate::error::{Error, Result};
use crate::linalg::matrix_sqrt;

/// Box–Muller standard normals, caching the second variate of each pair.
pub(crate) struct NormalStream<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: Rng> NormalStream<R> {
    pub(crate) fn new(rng: R) -> Self {
        Self { rng, spare: None }
    }

    pub(crate) fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // 1 − U lies in (0, 1], so the logarithm is finite.
        let u1 = 1.0 - self.rng.random::<f64>();
        let u2 = self.rng.random::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub(crate) fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

/// Draws `count` samples from `prior`, deterministically for a given seed.
pub fn sample_prior(prior: &Prior, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let mut normals = NormalStream::new(ChaCha8Rng::seed_from_u64(seed));
    draw(prior, count, &mut normals)
}

pub(crate) fn draw<R: Rng>(
    prior: &Prior,
    count: usize,
    normals: &mut NormalStream<R>,
) -> Result<Vec<Vec<f64>>> {
    match prior {
        Prior::Gaussian(g) => {
            let n = g.mean().len();
            let root = matrix_sqrt(g.cov())?;
            Ok((0..count)
                .map(|_| {
                    let z: Vec<f64> = (0..n).map(|_| normals.next()).collect();
                    root.apply(&z)
                        .iter()
                        .zip(g.mean())
                        .map(|(d, m)| d + m)
                        .collect()
                })
                .collect())
        }
        Prior::Atomic(a) => {
            let cdf = cumulative(a.probs());
            Ok((0..count)
                .map(|_| a.atoms()[pick(&cdf, normals.uniform())].clone())
                .collect())
        }
        Prior::Grid(g) => {
            let cdf = cumulative(g.weights());
            let points = g.points();
            let n = g.axes().len();
            Ok((0..count)
                .map(|_| {
                    let j = pick(&cdf, normals.uniform());
                    points[j * n..(j + 1) * n].to_vec()
                })
                .collect())
        }
        Prior::Cosine(c) => {
            let sd = c.envelope_variance().sqrt();
            let scale = c.a().sqrt();
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let x = sd * normals.next();
                let accept = 0.5 * (1.0 + c.rho() * (c.omega() * x / scale + c.theta()).cos());
                if normals.uniform() < accept {
                    out.push(vec![x]);
                }
            }
            Ok(out)
        }
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Inverse CDF: first index whose cumulative weight exceeds `u · total`.
fn pick(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().expect("nonempty weights");
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}
