//! Inversion of the Bernoulli divergence ball.
//!
//! For fixed `b`, `a -> D_f(Bern(a) || Bern(b))` is continuous, convex, zero
//! at `a = b`, nonincreasing on `[0, b]` and nondecreasing on `[b, 1]`. The
//! sublevel set `{a : D_f(Bern(a) || Bern(b)) <= B}` is therefore a closed
//! interval around `b`, and each endpoint is found by bisection on its own
//! half. Returned endpoints are the *outer* ends of the final brackets, so the
//! reported interval always contains the true one.

use crate::divergence::{bernoulli_unchecked, DivergenceSpec};
use crate::error::{check_unit, Error, Result};
use crate::math;

/// Bisection stops after this many halvings even if the tolerance is finer
/// than the float grid.
pub const MAX_BISECTION_STEPS: usize = 200;

/// Budgets at or below this value are treated as exactly zero.
pub const ZERO_BUDGET: f64 = 1e-12;

/// The interval `[lower, upper]` of Bernoulli means within `budget` of `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliBall {
    pub b: f64,
    pub budget: f64,
    pub lower: f64,
    pub upper: f64,
    pub tolerance: f64,
}

impl BernoulliBall {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, a: f64, slack: f64) -> bool {
        a >= self.lower - slack && a <= self.upper + slack
    }
}

fn check_tolerance(tol: f64) -> Result<f64> {
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(Error::Domain {
            name: "tolerance",
            value: tol,
            domain: "(0, inf)",
        })
    }
}

pub(crate) fn check_budget(budget: f64) -> Result<f64> {
    if budget >= 0.0 {
        Ok(budget)
    } else {
        Err(Error::Domain {
            name: "budget",
            value: budget,
            domain: "[0, inf]",
        })
    }
}

/// Shrinks `[lo, hi]` until its width is at most `tol`, keeping
/// `admissible(lo) != admissible(hi)` (whichever side holds initially).
pub(crate) fn bisect<F: Fn(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    admissible: F,
) -> (f64, f64) {
    let lo_side = admissible(lo);
    for _ in 0..MAX_BISECTION_STEPS {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if admissible(mid) == lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Endpoints of `{a in [0,1] : D_f(Bern(a) || Bern(b)) <= budget}`.
///
/// The returned interval contains the true one and each endpoint is within
/// `tolerance` of the true endpoint. For KL the Pinsker envelope `|a - b| <= sqrt(budget / 2)` is
/// intersected as well.
pub fn invert_ball(
    spec: &DivergenceSpec,
    b: f64,
    budget: f64,
    tolerance: f64,
) -> Result<BernoulliBall> {
    check_unit("b", b)?;
    check_budget(budget)?;
    check_tolerance(tolerance)?;
    let ball = |lower, upper| BernoulliBall {
        b,
        budget,
        lower,
        upper,
        tolerance,
    };
    if budget <= ZERO_BUDGET {
        return Ok(ball(b, b));
    }
    if budget == f64::INFINITY {
        return Ok(ball(0.0, 1.0));
    }
    let within = |a: f64| bernoulli_unchecked(spec, a, b) <= budget;
    let infinite_slope = spec.slope_at_infinity() == f64::INFINITY;

    let mut upper = if b == 1.0 || within(1.0) {
        1.0
    } else if b == 0.0 && infinite_slope {
        // D(a || 0) is infinite for every a > 0.
        0.0
    } else {
        bisect(b, 1.0, tolerance, within).1
    };
    let mut lower = if b == 0.0 || within(0.0) {
        0.0
    } else if b == 1.0 && infinite_slope {
        1.0
    } else {
        bisect(0.0, b, tolerance, within).0
    };

    if matches!(spec, DivergenceSpec::Kl) {
        let radius = math::sqrt(budget / 2.0);
        lower = lower.max(b - radius);
        upper = upper.min(b + radius);
    }
    Ok(ball(lower, upper))
}

/// `D_f(Bern(theta) || Bern(p))` when `theta >= p`, else `0`.
pub fn calibration_threshold(spec: &DivergenceSpec, theta: f64, p: f64) -> Result<f64> {
    check_unit("theta", theta)?;
    check_unit("p", p)?;
    Ok(threshold_unchecked(spec, theta, p))
}

/// The quantile orientation: `calibration_threshold(1 - delta, p)`.
pub fn threshold_for_quantile(spec: &DivergenceSpec, delta: f64, p: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    calibration_threshold(spec, 1.0 - delta, p)
}

pub(crate) fn threshold_unchecked(spec: &DivergenceSpec, theta: f64, p: f64) -> f64 {
    if theta >= p {
        bernoulli_unchecked(spec, theta, p)
    } else {
        0.0
    }
}
