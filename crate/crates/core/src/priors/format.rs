//! JSON file format for priors.
//!
//! ```json
//! {"type": "gaussian", "mean": [0.0], "cov": [[1.0]]}
//! {"type": "grid", "axes": [[-1.0, 0.0, 1.0]], "weights": [0.25, 0.5, 0.25]}
//! {"type": "atomic", "atoms": [[-1.0], [1.0]], "probs": [0.5, 0.5]}
//! {"type": "cosine", "a": 0.5, "rho": 1.0, "theta": 0.0, "omega": "1.7320508075688772"}
//! ```
//!
//! Every real may be written as a JSON number or as a decimal string.
//! Grid weights are row-major with the last axis varying fastest.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AtomicPrior, CosineGaussianPrior, GaussianPrior, GridDensityPrior, Prior};
use crate::error::{Error, Result};
use crate::linalg::LinearMap;

/// A real number that deserializes from either a JSON number or a decimal string.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct RealVisitor;

        impl Visitor<'_> for RealVisitor {
            type Value = Real;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a decimal string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Real, E> {
                Ok(Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Real, E> {
                Ok(Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Real, E> {
                let parsed: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| E::custom(format!("invalid decimal string {v:?}")))?;
                if !parsed.is_finite() {
                    return Err(E::custom(format!("non-finite value {v:?}")));
                }
                Ok(Real(parsed))
            }
        }

        d.deserialize_any(RealVisitor)
    }
}

fn reals(v: &[Real]) -> Vec<f64> {
    v.iter().map(|r| r.0).collect()
}

fn wrap(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

/// On-disk form of a [`Prior`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PriorDocument {
    Gaussian {
        mean: Vec<Real>,
        cov: Vec<Vec<Real>>,
    },
    Grid {
        axes: Vec<Vec<Real>>,
        weights: Vec<Real>,
    },
    Atomic {
        atoms: Vec<Vec<Real>>,
        probs: Vec<Real>,
    },
    Cosine {
        a: Real,
        rho: Real,
        theta: Real,
        omega: Real,
    },
}

impl PriorDocument {
    /// Validates the document and builds the prior.
    pub fn into_prior(self) -> Result<Prior> {
        Ok(match self {
            PriorDocument::Gaussian { mean, cov } => {
                let rows: Vec<Vec<f64>> = cov.iter().map(|r| reals(r)).collect();
                let cov = LinearMap::from_rows(&rows)?;
                if !cov.is_symmetric() {
                    return Err(Error::NotSymmetric {
                        asymmetry: cov.entries().asymmetry(),
                    });
                }
                Prior::Gaussian(GaussianPrior::new(reals(&mean), cov)?)
            }
            PriorDocument::Grid { axes, weights } => Prior::Grid(GridDensityPrior::new(
                axes.iter().map(|a| reals(a)).collect(),
                reals(&weights),
            )?),
            PriorDocument::Atomic { atoms, probs } => Prior::Atomic(AtomicPrior::new(
                atoms.iter().map(|a| reals(a)).collect(),
                reals(&probs),
            )?),
            PriorDocument::Cosine {
                a,
                rho,
                theta,
                omega,
            } => Prior::Cosine(CosineGaussianPrior::new(a.0, rho.0, theta.0, omega.0)?),
        })
    }
}

impl From<&Prior> for PriorDocument {
    fn from(prior: &Prior) -> Self {
        match prior {
            Prior::Gaussian(g) => PriorDocument::Gaussian {
                mean: wrap(g.mean()),
                cov: g.cov().entries().rows().iter().map(|r| wrap(r)).collect(),
            },
            Prior::Grid(g) => PriorDocument::Grid {
                axes: g.axes().iter().map(|a| wrap(a)).collect(),
                weights: wrap(g.weights()),
            },
            Prior::Atomic(a) => PriorDocument::Atomic {
                atoms: a.atoms().iter().map(|x| wrap(x)).collect(),
                probs: wrap(a.probs()),
            },
            Prior::Cosine(c) => PriorDocument::Cosine {
                a: Real(c.a()),
                rho: Real(c.rho()),
                theta: Real(c.theta()),
                omega: Real(c.omega()),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_each_variant() {
        let g = Prior::from_json(r#"{"type":"gaussian","mean":[0],"cov":[[1.0]]}"#).unwrap();
        assert_eq!(g.kind(), "gaussian");
        let grid =
            Prior::from_json(r#"{"type":"grid","axes":[[-1,0,1]],"weights":[0.25,"0.5",0.25]}"#)
                .unwrap();
        assert_eq!(grid.dim(), 1);
        let atomic =
            Prior::from_json(r#"{"type":"atomic","atoms":[[0,1],[1,0]],"probs":[0.5,0.5]}"#)
                .unwrap();
        assert_eq!(atomic.dim(), 2);
        let cos = Prior::from_json(
            r#"{"type":"cosine","a":"0.5","rho":1,"theta":0,"omega":"1.7320508075688772"}"#,
        )
        .unwrap();
        assert_eq!(cos.kind(), "cosine");
    }

    #[test]
    fn rejects_malformed_documents() {
        for text in [
            r#"{"type":"triangle"}"#,
            r#"{"type":"gaussian","mean":[0]}"#,
            r#"{"type":"gaussian","mean":[0],"cov":[[-1]]}"#,
            r#"{"type":"gaussian","mean":[0,0],"cov":[[1,0.5],[0,1]]}"#,
            r#"{"type":"atomic","atoms":[[0]],"probs":["abc"]}"#,
            r#"{"type":"atomic","atoms":[[0]],"probs":["NaN"]}"#,
            r#"{"type":"cosine","a":1.5,"rho":1,"theta":0,"omega":1}"#,
            r#"{"type":"cosine","a":0.5,"rho":1,"theta":0,"omega":1,"extra":2}"#,
            "not json",
        ] {
            assert!(Prior::from_json(text).is_err(), "{text}");
        }
    }

    proptest! {
        #[test]
        fn cosine_documents_round_trip(a in 0.01f64..0.99, rho in -1.0f64..1.0,
                                       theta in -3.0f64..3.0, omega in 0.0f64..6.0) {
            let prior = Prior::Cosine(CosineGaussianPrior::new(a, rho, theta, omega).unwrap());
            prop_assert_eq!(Prior::from_json(&prior.to_json()).unwrap(), prior);
        }

        #[test]
        fn atomic_documents_round_trip(atoms in proptest::collection::vec(
                proptest::collection::vec(-1e3f64..1e3, 2), 1..6)) {
            let probs = vec![1.0 / atoms.len() as f64; atoms.len()];
            let prior = Prior::Atomic(AtomicPrior::new(atoms, probs).unwrap());
            prop_assert_eq!(Prior::from_json(&prior.to_json()).unwrap(), prior);
        }
    }
}
