use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::{math, SUM_TOLERANCE};

/// Probability vector over a finite set of atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    probs: Vec<f64>,
}

impl FiniteDistribution {
    /// Validates that entries are finite, nonnegative and sum to one within
    /// [`SUM_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::named("distribution", probs)
    }

    /// Like [`FiniteDistribution::new`] but labels errors with `what`.
    pub fn named(what: &str, probs: Vec<f64>) -> Result<Self> {
        let invalid = |reason: alloc::string::String| Error::InvalidDistribution {
            what: what.to_string(),
            reason,
        };
        if probs.is_empty() {
            return Err(invalid("no atoms".to_string()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < 0.0)
        {
            return Err(invalid(format!("entry {i} is {p}, expected a finite value >= 0")));
        }
        let total = math::sum(probs.iter().copied());
        if math::abs(total - 1.0) > SUM_TOLERANCE {
            return Err(invalid(format!("entries sum to {total}, expected 1")));
        }
        Ok(Self { probs })
    }

    /// Two-atom law `(mean, 1 - mean)`.
    pub fn bernoulli(mean: f64) -> Result<Self> {
        crate::error::check_unit("mean", mean)?;
        Ok(Self {
            probs: alloc::vec![mean, 1.0 - mean],
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDistribution {
                what: "uniform".to_string(),
                reason: "no atoms".to_string(),
            });
        }
        Ok(Self {
            probs: alloc::vec![1.0 / n as f64; n],
        })
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return Err(Error::LengthMismatch {
                what: "point mass index",
                expected: n,
                got: at,
            });
        }
        let mut probs = alloc::vec![0.0; n];
        probs[at] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Pushforward through a deterministic map `atom -> target atom`.
    pub fn pushforward(&self, map: &[usize], target_len: usize) -> Result<Self> {
        if map.len() != self.probs.len() {
            return Err(Error::LengthMismatch {
                what: "pushforward map",
                expected: self.probs.len(),
                got: map.len(),
            });
        }
        let mut out = alloc::vec![0.0; target_len];
        for (&p, &j) in self.probs.iter().zip(map) {
            if j >= target_len {
                return Err(Error::LengthMismatch {
                    what: "pushforward target",
                    expected: target_len,
                    got: j,
                });
            }
            out[j] += p;
        }
        Ok(Self { probs: out })
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        Self { probs }
    }
}
