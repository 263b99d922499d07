//! Exact functionals of finite loss laws.
//!
//! These are the reference values every bound is checked against. CVaR uses
//! the tail-average form with a fractionally split boundary atom, which is
//! independent of the Rockafellar-Uryasev minimisation used by the bounds.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::{math, ATOM_MERGE_TOLERANCE, SUM_TOLERANCE};

/// Law of a nonnegative loss on finitely many atoms.
///
/// Canonical form: atoms sorted by loss, values within
/// [`ATOM_MERGE_TOLERANCE`] merged (the smallest value is kept), zero-mass
/// atoms dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLossDistribution {
    atoms: Vec<(f64, f64)>,
}

impl FiniteLossDistribution {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let invalid = |reason| Error::InvalidDistribution {
            what: "loss distribution".to_string(),
            reason,
        };
        for &(loss, p) in &atoms {
            if !(loss.is_finite() && loss >= 0.0) {
                return Err(invalid(format!("loss value {loss} must be finite and >= 0")));
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(invalid(format!("probability {p} must be finite and >= 0")));
            }
        }
        let total = math::sum(atoms.iter().map(|a| a.1));
        if math::abs(total - 1.0) > SUM_TOLERANCE {
            return Err(invalid(format!("probabilities sum to {total}, expected 1")));
        }
        Ok(Self::canonical(atoms))
    }

    fn canonical(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.retain(|a| a.1 > 0.0);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        let mut mass: Vec<f64> = Vec::new();
        let mut groups: Vec<Vec<f64>> = Vec::new();
        for (loss, p) in atoms {
            match merged.last() {
                Some(&(head, _)) if loss - head <= ATOM_MERGE_TOLERANCE => {
                    groups.last_mut().unwrap().push(p);
                }
                _ => {
                    merged.push((loss, 0.0));
                    groups.push(alloc::vec![p]);
                }
            }
        }
        for g in groups {
            mass.push(math::sum(g));
        }
        for (atom, p) in merged.iter_mut().zip(mass) {
            atom.1 = p;
        }
        Self { atoms: merged }
    }

    /// Atoms `(loss, probability)` in increasing loss order.
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn max_loss(&self) -> f64 {
        self.atoms.last().map_or(0.0, |a| a.0)
    }

    /// `E[(L - t)_+]`.
    pub fn hinge_expectation(&self, t: f64) -> f64 {
        math::sum(
            self.atoms
                .iter()
                .filter(|a| a.0 > t)
                .map(|&(l, p)| p * (l - t)),
        )
    }
}

fn check_level(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

/// `E[L]`.
pub fn exact_mean(dist: &FiniteLossDistribution) -> f64 {
    math::sum(dist.atoms.iter().map(|&(l, p)| l * p))
}

/// `P(L >= threshold)`, or `P(L > threshold)` when `strict`.
pub fn exact_tail(dist: &FiniteLossDistribution, threshold: f64, strict: bool) -> f64 {
    let tail = math::sum(
        dist.atoms
            .iter()
            .filter(|a| if strict { a.0 > threshold } else { a.0 >= threshold })
            .map(|a| a.1),
    );
    tail.clamp(0.0, 1.0)
}

/// Lower `alpha`-quantile `inf { l : P(L <= l) >= alpha }`.
pub fn exact_var(dist: &FiniteLossDistribution, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let mut cumulative = 0.0;
    for &(l, p) in &dist.atoms {
        cumulative += p;
        if cumulative >= alpha {
            return Ok(l);
        }
    }
    Ok(dist.max_loss())
}

/// Average of the worst `1 - alpha` probability mass, splitting the boundary
/// atom fractionally.
pub fn exact_cvar(dist: &FiniteLossDistribution, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    let tail_mass = 1.0 - alpha;
    let mut remaining = tail_mass;
    let mut acc = Vec::new();
    for &(l, p) in dist.atoms.iter().rev() {
        if remaining <= 0.0 {
            break;
        }
        let take = p.min(remaining);
        acc.push(take * l);
        remaining -= take;
    }
    let covered = tail_mass - remaining.max(0.0);
    Ok(math::sum(acc) / covered)
}

/// Rockafellar-Uryasev objective `t + E[(L - t)_+] / (1 - alpha)`.
pub fn ru_objective(dist: &FiniteLossDistribution, alpha: f64, t: f64) -> f64 {
    t + dist.hinge_expectation(t) / (1.0 - alpha)
}
