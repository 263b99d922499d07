//! Bound reports.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

/// Which result produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    /// Two-sided interval for `E[phi(L)]` from the Bernoulli ball.
    TwoSidedTransform,
    /// Calibrated upper bound `theta*` on `E[phi(L)]`.
    OneSidedTransform,
    /// Interactive quantile Fano lower bound on `P(L >= delta)`.
    QuantileFano,
    /// `delta * P(L >= delta)` lower bound on `E[L]`.
    TailToExpectation,
    /// Lower bound on `E[(L - t)_+]`.
    HingeLower,
    /// CVaR lower bound by exact ball inversion.
    CvarLower,
    /// CVaR lower bound from mutual information and Pinsker's inequality.
    CvarLowerKlPinsker,
}

impl Theorem {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TwoSidedTransform => "two_sided_transform",
            Self::OneSidedTransform => "one_sided_transform",
            Self::QuantileFano => "quantile_fano",
            Self::TailToExpectation => "tail_to_expectation",
            Self::HingeLower => "hinge_lower",
            Self::CvarLower => "cvar_lower",
            Self::CvarLowerKlPinsker => "cvar_lower_kl_pinsker",
        }
    }
}

/// Which way the headline `bound` points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundDirection {
    Lower,
    Upper,
    /// `bound` is the lower end; `quantities["upper"]` the upper end.
    Interval,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    Mixture,
    Explicit {
        label: String,
        probs: Vec<f64>,
    },
    BestOfCandidates {
        candidates: Vec<String>,
        winner: String,
    },
}

impl Reference {
    pub fn label(&self) -> &str {
        match self {
            Self::Mixture => "mixture",
            Self::Explicit { label, .. } => label,
            Self::BestOfCandidates { winner, .. } => winner,
        }
    }
}

/// Result of checking a bound against the exact value on the enumerated
/// instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    ExactHolds,
    ExactFailsBy(f64),
    NotChecked,
}

impl Verdict {
    /// `ExactHolds` when `value >= floor - slack`.
    pub fn at_least(value: f64, floor: f64, slack: f64) -> Self {
        if value >= floor - slack {
            Self::ExactHolds
        } else {
            Self::ExactFailsBy(floor - value)
        }
    }

    /// `ExactHolds` when `value <= ceiling + slack`.
    pub fn at_most(value: f64, ceiling: f64, slack: f64) -> Self {
        if value <= ceiling + slack {
            Self::ExactHolds
        } else {
            Self::ExactFailsBy(value - ceiling)
        }
    }

    pub fn and(self, other: Self) -> Self {
        match (self, other) {
            (Self::ExactFailsBy(a), Self::ExactFailsBy(b)) => Self::ExactFailsBy(a.max(b)),
            (Self::ExactFailsBy(a), _) | (_, Self::ExactFailsBy(a)) => Self::ExactFailsBy(a),
            (Self::NotChecked, _) | (_, Self::NotChecked) => Self::NotChecked,
            _ => Self::ExactHolds,
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Self::ExactHolds)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ExactHolds => "exact_holds",
            Self::ExactFailsBy(_) => "exact_fails_by",
            Self::NotChecked => "not_checked",
        }
    }
}

/// Numerical settings recorded with a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tolerance: f64,
    pub t_refine: usize,
    pub verify_slack: f64,
}

/// A computed bound with provenance and its self-check.
///
/// `quantities` uses stable snake_case keys; which keys appear depends on
/// the theorem (see the README for the list).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub divergence: String,
    pub transform: Option<String>,
    pub reference: Reference,
    pub budget: f64,
    pub direction: BoundDirection,
    pub bound: f64,
    pub quantities: BTreeMap<String, f64>,
    pub tolerances: Tolerances,
    pub vacuous: bool,
    pub verified: Verdict,
    pub notes: Vec<String>,
}

impl BoundReport {
    pub fn quantity(&self, key: &str) -> Option<f64> {
        self.quantities.get(key).copied()
    }
}
