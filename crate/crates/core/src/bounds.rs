//! Bound computations on finite instances.
//!
//! Every operation reduces the pair (algorithm-induced law, reference law) to
//! a Bernoulli pair through a one-bit statistic, then inverts the Bernoulli
//! divergence ball. Each report also carries the exact value of its target
//! quantity on the enumerated instance and a verdict comparing the two.
//!
//! Strict inequalities in the calibrated searches (`B < d(theta, p)`) are
//! handled by bisecting to the boundary of the admissible set and returning
//! the last admissible point, which sits at most `tolerance` inside it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::distribution::FiniteDistribution;
use crate::divergence::DivergenceSpec;
use crate::error::{Error, Result};
use crate::inversion::{bisect, invert_ball, threshold_unchecked, ZERO_BUDGET};
use crate::isdm::FiniteIsdm;
use crate::math;
use crate::oracle::{exact_cvar, exact_mean, exact_tail, FiniteLossDistribution};
use crate::report::{BoundDirection, BoundReport, Reference, Theorem, Tolerances, Verdict};
use crate::transform::{expected_transform, Direction, TransformSpec};

/// Numerical settings shared by all bound computations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSettings {
    /// Mean-axis tolerance for ball inversion and the calibrated searches.
    pub tolerance: f64,
    /// Uniform subdivisions of each gap between consecutive loss atoms in
    /// the CVaR threshold grid (1 means atoms only).
    pub t_refine: usize,
    /// Slack used when comparing a bound with the exact value.
    pub verify_slack: f64,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            tolerance: crate::DEFAULT_TOLERANCE,
            t_refine: 16,
            verify_slack: 1e-8,
        }
    }
}

impl BoundSettings {
    fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Domain {
                name: "tolerance",
                value: self.tolerance,
                domain: "(0, inf)",
            });
        }
        if self.t_refine == 0 {
            return Err(Error::Domain {
                name: "t_refine",
                value: 0.0,
                domain: "{1, 2, ...}",
            });
        }
        if self.verify_slack.is_nan() || self.verify_slack < 0.0 {
            return Err(Error::Domain {
                name: "verify_slack",
                value: self.verify_slack,
                domain: "[0, inf)",
            });
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            tolerance: self.tolerance,
            t_refine: self.t_refine,
            verify_slack: self.verify_slack,
        }
    }
}

/// A reference law over the outcome space together with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    label: String,
    law: FiniteDistribution,
    mixture: bool,
}

impl Candidate {
    pub fn mixture(instance: &FiniteIsdm) -> Self {
        Self {
            label: "mixture".to_string(),
            law: instance.mixture_reference(),
            mixture: true,
        }
    }

    /// Model `m`'s own observation law.
    pub fn model(instance: &FiniteIsdm, m: usize) -> Result<Self> {
        let law = instance.obs_laws().get(m).ok_or(Error::LengthMismatch {
            what: "model index",
            expected: instance.n_models(),
            got: m,
        })?;
        Ok(Self {
            label: format!("model:{m}"),
            law: law.clone(),
            mixture: false,
        })
    }

    pub fn explicit(label: &str, law: FiniteDistribution) -> Self {
        Self {
            label: label.to_string(),
            law,
            mixture: false,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn law(&self) -> &FiniteDistribution {
        &self.law
    }

    fn reference(&self) -> Reference {
        if self.mixture {
            Reference::Mixture
        } else {
            Reference::Explicit {
                label: self.label.clone(),
                probs: self.law.probs().to_vec(),
            }
        }
    }
}

/// The mixture followed by every model's own law.
pub fn default_candidates(instance: &FiniteIsdm) -> Vec<Candidate> {
    let mut out = alloc::vec![Candidate::mixture(instance)];
    out.extend((0..instance.n_models()).map(|m| Candidate::model(instance, m).unwrap()));
    out
}

fn best_of(candidates: &[Candidate], winner: usize) -> Reference {
    if candidates.len() == 1 {
        candidates[0].reference()
    } else {
        Reference::BestOfCandidates {
            candidates: candidates.iter().map(|c| c.label.clone()).collect(),
            winner: candidates[winner].label.clone(),
        }
    }
}

fn effective_budget(budget: f64) -> f64 {
    if budget <= ZERO_BUDGET {
        0.0
    } else {
        budget
    }
}

struct Draft<'a> {
    theorem: Theorem,
    spec: &'a DivergenceSpec,
    transform: Option<&'a TransformSpec>,
    reference: Reference,
    budget: f64,
}

impl Draft<'_> {
    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        settings: &BoundSettings,
        direction: BoundDirection,
        bound: f64,
        quantities: &[(&str, f64)],
        vacuous: bool,
        verified: Verdict,
        notes: Vec<String>,
    ) -> BoundReport {
        BoundReport {
            theorem: self.theorem,
            divergence: self.spec.name().to_string(),
            transform: self.transform.map(|t| format!("{t}")),
            reference: self.reference,
            budget: self.budget,
            direction,
            bound,
            quantities: quantities
                .iter()
                .map(|&(k, v)| (k.to_string(), v))
                .collect::<BTreeMap<_, _>>(),
            tolerances: settings.tolerances(),
            vacuous,
            verified,
            notes,
        }
    }
}

/// Interval `[a-, a+]` for `E[phi(L)]` around the reference value.
pub fn two_sided_transform_bound(
    instance: &FiniteIsdm,
    transform: &TransformSpec,
    spec: &DivergenceSpec,
    reference: &Candidate,
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    let b = expected_transform(transform, &instance.reference_loss(reference.law())?)?;
    let budget = instance.budget(spec, reference.law())?;
    let ball = invert_ball(spec, b, budget, settings.tolerance)?;
    let exact = expected_transform(transform, &instance.prior_predictive_loss())?;
    let slack = settings.verify_slack;
    let verdict =
        Verdict::at_least(exact, ball.lower, slack).and(Verdict::at_most(exact, ball.upper, slack));
    let draft = Draft {
        theorem: Theorem::TwoSidedTransform,
        spec,
        transform: Some(transform),
        reference: reference.reference(),
        budget,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Interval,
        ball.lower,
        &[
            ("rho_bar", exact),
            ("rho_ref", b),
            ("lower", ball.lower),
            ("upper", ball.upper),
            ("width", ball.width()),
        ],
        ball.lower <= 0.0 && ball.upper >= 1.0,
        verdict,
        Vec::new(),
    ))
}

/// Largest admissible `delta` with `B < d(1 - delta, rho)`, or 0 if none.
pub fn quantile_delta_star(spec: &DivergenceSpec, budget: f64, rho: f64, tol: f64) -> f64 {
    let budget = effective_budget(budget);
    let admissible = |delta: f64| budget < threshold_unchecked(spec, 1.0 - delta, rho);
    if !admissible(0.0) {
        return 0.0;
    }
    bisect(0.0, 1.0, tol, admissible).0
}

/// Smallest admissible `theta` with `B < d(theta, rho)`, or 1 if none.
pub fn one_sided_theta_star(spec: &DivergenceSpec, budget: f64, rho: f64, tol: f64) -> f64 {
    let budget = effective_budget(budget);
    let admissible = |theta: f64| budget < threshold_unchecked(spec, theta, rho);
    if !admissible(1.0) {
        return 1.0;
    }
    bisect(rho, 1.0, tol, admissible).1
}

/// Lower bound on `P(L >= delta_level)`, best over the candidate references.
pub fn quantile_fano_bound(
    instance: &FiniteIsdm,
    delta_level: f64,
    spec: &DivergenceSpec,
    candidates: &[Candidate],
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    if !(delta_level.is_finite() && delta_level > 0.0) {
        return Err(Error::Domain {
            name: "delta_level",
            value: delta_level,
            domain: "(0, inf)",
        });
    }
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let indicator = TransformSpec::quantile_indicator(delta_level)?;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let rho = expected_transform(&indicator, &instance.reference_loss(c.law())?)?;
        let budget = instance.budget(spec, c.law())?;
        let delta = quantile_delta_star(spec, budget, rho, settings.tolerance);
        if best.is_none_or(|b| delta > b.1) {
            best = Some((i, delta, rho, budget));
        }
    }
    let (winner, delta_star, rho, budget) = best.unwrap();
    let pp = instance.prior_predictive_loss();
    let tail = exact_tail(&pp, delta_level, false);
    let draft = Draft {
        theorem: Theorem::QuantileFano,
        spec,
        transform: Some(&indicator),
        reference: best_of(candidates, winner),
        budget,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Lower,
        delta_star,
        &[
            ("delta_level", delta_level),
            ("rho_ref", rho),
            ("delta_star", delta_star),
            ("exact_tail", tail),
            ("exact_mean", exact_mean(&pp)),
        ],
        delta_star <= 0.0,
        Verdict::at_most(delta_star, tail, settings.verify_slack),
        Vec::new(),
    ))
}

/// Calibrated upper bound `theta*` on `E[phi(L)]`, best over candidates.
///
/// Nonincreasing transforms also report `complement_lower = 1 - theta*`, a
/// lower bound on `E[1 - phi(L)]`. With an unknown direction only the
/// intersection of the candidates' two-sided intervals is reported.
pub fn one_sided_transform_bound(
    instance: &FiniteIsdm,
    transform: &TransformSpec,
    spec: &DivergenceSpec,
    candidates: &[Candidate],
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let exact = expected_transform(transform, &instance.prior_predictive_loss())?;
    let slack = settings.verify_slack;

    if transform.direction() == Direction::Unknown {
        let mut lower = 0.0f64;
        let mut upper = 1.0f64;
        let mut budget = f64::INFINITY;
        for c in candidates {
            let r = two_sided_transform_bound(instance, transform, spec, c, settings)?;
            lower = lower.max(r.quantity("lower").unwrap());
            upper = upper.min(r.quantity("upper").unwrap());
            budget = budget.min(r.budget);
        }
        let verdict =
            Verdict::at_least(exact, lower, slack).and(Verdict::at_most(exact, upper, slack));
        let draft = Draft {
            theorem: Theorem::OneSidedTransform,
            spec,
            transform: Some(transform),
            reference: Reference::BestOfCandidates {
                candidates: candidates.iter().map(|c| c.label.clone()).collect(),
                winner: "intersection".to_string(),
            },
            budget,
        };
        return Ok(draft.finish(
            settings,
            BoundDirection::Interval,
            lower,
            &[("rho_bar", exact), ("lower", lower), ("upper", upper)],
            lower <= 0.0 && upper >= 1.0,
            verdict,
            alloc::vec!["transform direction unknown: two-sided interval only".to_string()],
        ));
    }

    let mut best: Option<(usize, f64, f64, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let rho = expected_transform(transform, &instance.reference_loss(c.law())?)?;
        let budget = instance.budget(spec, c.law())?;
        let theta = one_sided_theta_star(spec, budget, rho, settings.tolerance);
        if best.is_none_or(|b| theta < b.1) {
            best = Some((i, theta, rho, budget));
        }
    }
    let (winner, theta, rho, budget) = best.unwrap();
    let mut quantities = alloc::vec![("rho_bar", exact), ("rho_ref", rho), ("theta_star", theta)];
    if transform.direction() == Direction::Nonincreasing {
        quantities.push(("complement_lower", 1.0 - theta));
    }
    let draft = Draft {
        theorem: Theorem::OneSidedTransform,
        spec,
        transform: Some(transform),
        reference: best_of(candidates, winner),
        budget,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Upper,
        theta,
        &quantities,
        theta >= 1.0,
        Verdict::at_least(theta, exact, slack),
        Vec::new(),
    ))
}

/// `E[L] >= delta * P(L >= delta)` applied to a quantile report.
pub fn tail_to_expectation(report: &BoundReport, delta_level: f64) -> Result<BoundReport> {
    if report.theorem != Theorem::QuantileFano {
        return Err(Error::WrongReportKind {
            expected: Theorem::QuantileFano.as_str(),
            got: report.theorem.as_str(),
        });
    }
    if report.quantity("delta_level") != Some(delta_level) {
        return Err(Error::Domain {
            name: "delta_level",
            value: delta_level,
            domain: "the level of the quantile report",
        });
    }
    let delta_star = report.bound;
    let bound = delta_level * delta_star;
    let mut quantities = alloc::vec![("delta_level", delta_level), ("delta_star", delta_star)];
    let verified = match report.quantity("exact_mean") {
        Some(mean) => {
            quantities.push(("exact_mean", mean));
            Verdict::at_most(bound, mean, report.tolerances.verify_slack)
        }
        None => Verdict::NotChecked,
    };
    Ok(BoundReport {
        theorem: Theorem::TailToExpectation,
        direction: BoundDirection::Lower,
        bound,
        quantities: quantities
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        vacuous: bound <= 0.0,
        verified,
        notes: Vec::new(),
        ..report.clone()
    })
}

fn hinge_mean(law: &FiniteLossDistribution, t: f64, l_max: f64) -> f64 {
    (law.hinge_expectation(t) / l_max).clamp(0.0, 1.0)
}

/// Lower bound `l_max * a-(B; b_t)` on `E[(L - t)_+]`.
///
/// Negative thresholds use `E[(L - t)_+] = E[L] - t` for nonnegative losses.
pub fn hinge_lower_bound(
    instance: &FiniteIsdm,
    t: f64,
    spec: &DivergenceSpec,
    reference: &Candidate,
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    if !t.is_finite() {
        return Err(Error::Domain {
            name: "t",
            value: t,
            domain: "finite real",
        });
    }
    let (t_eff, shift) = if t < 0.0 { (0.0, -t) } else { (t, 0.0) };
    let l_max = instance.l_max();
    let b_t = hinge_mean(&instance.reference_loss(reference.law())?, t_eff, l_max);
    let budget = instance.budget(spec, reference.law())?;
    let ball = invert_ball(spec, b_t, budget, settings.tolerance)?;
    let bound = l_max * ball.lower + shift;
    let exact = instance.prior_predictive_loss().hinge_expectation(t);
    let draft = Draft {
        theorem: Theorem::HingeLower,
        spec,
        transform: None,
        reference: reference.reference(),
        budget,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Lower,
        bound,
        &[
            ("t", t),
            ("b_t", b_t),
            ("lower", ball.lower),
            ("bound", bound),
            ("exact", exact),
        ],
        bound <= 0.0,
        Verdict::at_most(bound, exact, settings.verify_slack),
        Vec::new(),
    ))
}

/// Outcome of minimising `t + l_max / (1 - alpha) * lower(b_t)` over
/// `t in [0, l_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarSearch {
    pub bound: f64,
    pub t_star: f64,
    /// Minimum over loss atoms plus 0 and `l_max` only.
    pub coarse: f64,
    /// Minimum over the refined grid.
    pub fine: f64,
    /// Largest spacing of the refined grid.
    pub resolution: f64,
    pub points: usize,
}

fn coarse_grid(law: &FiniteLossDistribution, l_max: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = law
        .atoms()
        .iter()
        .map(|a| a.0)
        .filter(|&l| l <= l_max)
        .collect();
    grid.push(0.0);
    grid.push(l_max);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn refine_grid(coarse: &[f64], refine: usize) -> Vec<f64> {
    let mut fine = Vec::with_capacity((coarse.len() - 1) * refine + 1);
    for w in coarse.windows(2) {
        for k in 0..refine {
            fine.push(w[0] + (w[1] - w[0]) * k as f64 / refine as f64);
        }
    }
    fine.push(*coarse.last().unwrap());
    fine
}

/// Thresholds in `[0, l_max]` where `b_t` crosses `level`. `b_t` is linear
/// between consecutive coarse grid points.
fn level_crossings(law: &FiniteLossDistribution, l_max: f64, level: f64) -> Vec<f64> {
    let coarse = coarse_grid(law, l_max);
    let mut out = Vec::new();
    for w in coarse.windows(2) {
        let (bu, bv) = (hinge_mean(law, w[0], l_max), hinge_mean(law, w[1], l_max));
        if bu > bv && bu >= level && level >= bv {
            out.push(w[0] + (bu - level) / (bu - bv) * (w[1] - w[0]));
        }
    }
    out
}

const GOLDEN_STEPS: usize = 100;

/// The objective is convex in `t` (the lower ball endpoint is convex and
/// nondecreasing in `b`, and `b_t` is convex and nonincreasing in `t`), so
/// the grid minimum is polished by golden-section search on the bracket
/// around it.
pub fn cvar_search<F>(
    law: &FiniteLossDistribution,
    l_max: f64,
    alpha: f64,
    t_refine: usize,
    extra_points: &[f64],
    lower_of: F,
) -> Result<CvarSearch>
where
    F: Fn(f64) -> Result<f64>,
{
    let scale = l_max / (1.0 - alpha);
    let objective = |t: f64| -> Result<f64> { Ok(t + scale * lower_of(hinge_mean(law, t, l_max))?) };

    let coarse = coarse_grid(law, l_max);
    let fine = refine_grid(&coarse, t_refine.max(1));
    let mut values = Vec::with_capacity(fine.len());
    for &t in &fine {
        values.push(objective(t)?);
    }
    let mut coarse_min = f64::INFINITY;
    for (k, &v) in values.iter().enumerate() {
        if k % t_refine.max(1) == 0 {
            coarse_min = coarse_min.min(v);
        }
    }
    let (mut i_best, mut fine_min) = (0, f64::INFINITY);
    for (k, &v) in values.iter().enumerate() {
        if v < fine_min {
            i_best = k;
            fine_min = v;
        }
    }
    let resolution = fine.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);

    let mut best_t = fine[i_best];
    let mut best = fine_min;
    let mut consider = |t: f64, v: f64| {
        if v < best {
            best = v;
            best_t = t;
        }
    };
    for &t in extra_points {
        let t = t.clamp(0.0, l_max);
        consider(t, objective(t)?);
    }

    let (mut lo, mut hi) = (
        fine[i_best.saturating_sub(1)],
        fine[(i_best + 1).min(fine.len() - 1)],
    );
    if hi > lo {
        let ratio = 0.5 * (math::sqrt(5.0) - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = objective(x1)?;
        let mut f2 = objective(x2)?;
        for _ in 0..GOLDEN_STEPS {
            if f1 <= f2 {
                consider(x1, f1);
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = objective(x1)?;
            } else {
                consider(x2, f2);
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = objective(x2)?;
            }
            if hi - lo <= f64::EPSILON * (1.0 + l_max) {
                break;
            }
        }
        consider(x1, f1);
        consider(x2, f2);
    }

    Ok(CvarSearch {
        bound: best,
        t_star: best_t,
        coarse: coarse_min,
        fine: fine_min,
        resolution,
        points: fine.len(),
    })
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "alpha",
            value: alpha,
            domain: "(0, 1)",
        })
    }
}

/// `CVaR_alpha(L) >= min_t { t + l_max / (1 - alpha) * a-(B; b_t) }`.
///
/// `t` ranges over `[0, l_max]`, which contains the Rockafellar-Uryasev
/// minimiser of every loss law supported there.
pub fn cvar_lower_bound(
    instance: &FiniteIsdm,
    alpha: f64,
    spec: &DivergenceSpec,
    reference: &Candidate,
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    check_alpha(alpha)?;
    let law = instance.reference_loss(reference.law())?;
    let budget = instance.budget(spec, reference.law())?;
    let search = cvar_search(&law, instance.l_max(), alpha, settings.t_refine, &[], |b| {
        Ok(invert_ball(spec, b, budget, settings.tolerance)?.lower)
    })?;
    let exact = exact_cvar(&instance.prior_predictive_loss(), alpha)?;
    let draft = Draft {
        theorem: Theorem::CvarLower,
        spec,
        transform: None,
        reference: reference.reference(),
        budget,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Lower,
        search.bound,
        &[
            ("alpha", alpha),
            ("t_star", search.t_star),
            ("bound", search.bound),
            ("exact_cvar", exact),
            ("coarse_bound", search.coarse),
            ("fine_bound", search.fine),
            ("grid_discrepancy", search.coarse - search.fine),
            ("grid_resolution", search.resolution),
            ("grid_points", search.points as f64),
        ],
        search.bound <= 0.0,
        Verdict::at_most(search.bound, exact, settings.verify_slack),
        Vec::new(),
    ))
}

/// KL with the mixture reference, `a-` replaced by `[b - sqrt(I/2)]_+`.
///
/// The exact-inversion bound on the same instance is attached as
/// `exact_inversion_bound`.
pub fn cvar_lower_bound_kl_pinsker(
    instance: &FiniteIsdm,
    alpha: f64,
    settings: &BoundSettings,
) -> Result<BoundReport> {
    settings.validate()?;
    check_alpha(alpha)?;
    let spec = DivergenceSpec::Kl;
    let mixture = Candidate::mixture(instance);
    let sharp = cvar_lower_bound(instance, alpha, &spec, &mixture, settings)?;
    let information = instance.mutual_information();
    let radius = math::sqrt(information / 2.0);
    let law = instance.reference_loss(mixture.law())?;
    let l_max = instance.l_max();

    // Breakpoints of the piecewise-linear objective, plus the sharp
    // minimiser so that both bounds are compared on a common point.
    let mut extra = level_crossings(&law, l_max, radius);
    extra.push(sharp.quantity("t_star").unwrap());
    let search = cvar_search(&law, l_max, alpha, settings.t_refine, &extra, |b| {
        Ok((b - radius).max(0.0))
    })?;
    let exact = sharp.quantity("exact_cvar").unwrap();
    let mut notes = Vec::new();
    if hinge_mean(&law, 0.0, l_max) <= radius {
        notes.push("Pinsker envelope is zero at every threshold: bound is vacuous".to_string());
    }
    let draft = Draft {
        theorem: Theorem::CvarLowerKlPinsker,
        spec: &spec,
        transform: None,
        reference: Reference::Mixture,
        budget: information,
    };
    Ok(draft.finish(
        settings,
        BoundDirection::Lower,
        search.bound,
        &[
            ("alpha", alpha),
            ("mutual_information", information),
            ("pinsker_radius", radius),
            ("t_star", search.t_star),
            ("bound", search.bound),
            ("exact_inversion_bound", sharp.bound),
            ("exact_cvar", exact),
            ("grid_resolution", search.resolution),
        ],
        search.bound <= 0.0,
        Verdict::at_most(search.bound, exact, settings.verify_slack),
        notes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::TransformSpec;
    use alloc::vec;
    use proptest::prelude::*;

    fn settings() -> BoundSettings {
        BoundSettings::default()
    }

    fn distinct() -> FiniteIsdm {
        FiniteIsdm::from_rows(
            vec![0.5, 0.5],
            vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.3, 0.5]],
            vec![vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]],
            2.0,
        )
        .unwrap()
    }

    fn identical() -> FiniteIsdm {
        FiniteIsdm::from_rows(
            vec![0.3, 0.7],
            vec![vec![0.5, 0.25, 0.25], vec![0.5, 0.25, 0.25]],
            vec![vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 4.0]],
            4.0,
        )
        .unwrap()
    }

    fn disjoint() -> FiniteIsdm {
        FiniteIsdm::from_rows(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn two_sided_collapses_without_information() {
        let inst = identical();
        let t = TransformSpec::clipped_mean(2.0).unwrap();
        let r = two_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &Candidate::mixture(&inst), &settings())
            .unwrap();
        let rho = r.quantity("rho_bar").unwrap();
        assert!((r.quantity("lower").unwrap() - rho).abs() < 1e-12);
        assert!((r.quantity("upper").unwrap() - rho).abs() < 1e-12);
        assert!(r.verified.holds());
    }

    #[test]
    fn two_sided_contains_exact_with_positive_width() {
        let inst = distinct();
        let t = TransformSpec::hinge(0.5, 2.0).unwrap();
        let r = two_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &Candidate::mixture(&inst), &settings())
            .unwrap();
        let (lo, hi, rho) = (
            r.quantity("lower").unwrap(),
            r.quantity("upper").unwrap(),
            r.quantity("rho_bar").unwrap(),
        );
        assert!(lo < rho && rho < hi, "{lo} {rho} {hi}");
        assert!(r.verified.holds() && !r.vacuous);
    }

    #[test]
    fn two_sided_is_vacuous_at_infinite_budget() {
        let inst = disjoint();
        let q = Candidate::explicit("q", FiniteDistribution::new(vec![1.0, 0.0]).unwrap());
        let t = TransformSpec::clipped_mean(1.0).unwrap();
        let r = two_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &q, &settings()).unwrap();
        assert_eq!(r.budget, f64::INFINITY);
        assert_eq!((r.quantity("lower").unwrap(), r.quantity("upper").unwrap()), (0.0, 1.0));
        assert!(r.vacuous && r.verified.holds());
    }

    #[test]
    fn quantile_pinch_approaches_exact_tail() {
        let inst = identical();
        let r = quantile_fano_bound(&inst, 2.0, &DivergenceSpec::Kl, &[Candidate::mixture(&inst)], &settings())
            .unwrap();
        // loss >= 2 has mass 0.3 * 0.25 + 0.7 * 0.5
        let tail = 0.3 * 0.25 + 0.7 * 0.5;
        assert!((r.quantity("exact_tail").unwrap() - tail).abs() < 1e-15);
        assert!(r.bound <= tail && tail - r.bound <= 2e-10, "{}", r.bound);
    }

    #[test]
    fn quantile_vacuous_when_nothing_is_admissible() {
        let inst = disjoint();
        let r = quantile_fano_bound(&inst, 0.5, &DivergenceSpec::Kl, &default_candidates(&inst), &settings())
            .unwrap();
        // mixture budget ln 2 exceeds d(1 || 1/2) = ln 2 only at equality,
        // so only the strict inequality fails
        assert_eq!(r.bound, 0.0);
        assert!(r.vacuous);
        assert!(matches!(r.reference, Reference::BestOfCandidates { .. }));
    }

    #[test]
    fn quantile_rejects_bad_arguments() {
        let inst = distinct();
        let s = settings();
        assert_eq!(
            quantile_fano_bound(&inst, 1.0, &DivergenceSpec::Kl, &[], &s),
            Err(Error::NoCandidates)
        );
        assert!(quantile_fano_bound(&inst, 0.0, &DivergenceSpec::Kl, &default_candidates(&inst), &s).is_err());
        let bad = BoundSettings { t_refine: 0, ..s };
        assert!(quantile_fano_bound(&inst, 1.0, &DivergenceSpec::Kl, &default_candidates(&inst), &bad).is_err());
    }

    #[test]
    fn one_sided_zero_budget_pinch() {
        let inst = identical();
        let t = TransformSpec::laplace(0.5).unwrap();
        let r = one_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &[Candidate::mixture(&inst)], &settings())
            .unwrap();
        let rho = r.quantity("rho_ref").unwrap();
        assert!(r.bound >= rho && r.bound - rho <= 1e-10);
        assert!((r.quantity("complement_lower").unwrap() - (1.0 - r.bound)).abs() < 1e-15);
    }

    #[test]
    fn indicator_recovers_quantile_bound() {
        let inst = distinct();
        let cands = default_candidates(&inst);
        for spec in DivergenceSpec::NAMED.iter() {
            for delta in [0.5, 1.0, 1.5, 2.0] {
                let q = quantile_fano_bound(&inst, delta, spec, &cands, &settings()).unwrap();
                let ind = TransformSpec::quantile_indicator(delta).unwrap();
                let o = one_sided_transform_bound(&inst, &ind, spec, &cands, &settings()).unwrap();
                assert!((o.bound - (1.0 - q.bound)).abs() <= 2e-10, "{} {delta}", spec.name());
            }
        }
    }

    #[test]
    fn unknown_direction_reports_interval_only() {
        let inst = distinct();
        let t = TransformSpec::custom("bump", |l| 1.0 - (l - 1.0).abs() / 2.0, Direction::Unknown, 2.0).unwrap();
        let cands = default_candidates(&inst);
        let r = one_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &cands, &settings()).unwrap();
        assert_eq!(r.direction, BoundDirection::Interval);
        assert!(r.quantity("theta_star").is_none());
        let two = two_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &cands[0], &settings()).unwrap();
        assert!(r.quantity("lower").unwrap() >= two.quantity("lower").unwrap());
        assert!(r.quantity("upper").unwrap() <= two.quantity("upper").unwrap());
        assert!(r.verified.holds());
    }

    #[test]
    fn tail_to_expectation_multiplies() {
        let inst = distinct();
        let q = quantile_fano_bound(&inst, 1.0, &DivergenceSpec::TotalVariation, &default_candidates(&inst), &settings())
            .unwrap();
        let e = tail_to_expectation(&q, 1.0).unwrap();
        assert_eq!(e.bound, q.bound);
        assert!(e.verified.holds());

        let mut fake = q.clone();
        fake.bound = 0.3;
        fake.quantities.insert("delta_level".into(), 2.0);
        assert!((tail_to_expectation(&fake, 2.0).unwrap().bound - 0.6).abs() < 1e-15);
        fake.bound = 0.0;
        assert_eq!(tail_to_expectation(&fake, 2.0).unwrap().bound, 0.0);
        assert!(tail_to_expectation(&fake, 1.0).is_err());

        let t = TransformSpec::clipped_mean(2.0).unwrap();
        let other = two_sided_transform_bound(&inst, &t, &DivergenceSpec::Kl, &Candidate::mixture(&inst), &settings())
            .unwrap();
        assert!(matches!(tail_to_expectation(&other, 1.0), Err(Error::WrongReportKind { .. })));
    }

    #[test]
    fn hinge_cases() {
        let inst = distinct();
        let mix = Candidate::mixture(&inst);
        let s = settings();
        let top = hinge_lower_bound(&inst, 2.0, &DivergenceSpec::Kl, &mix, &s).unwrap();
        assert_eq!(top.bound, 0.0);
        for t in [0.0, 1.0, 1.5] {
            let r = hinge_lower_bound(&inst, t, &DivergenceSpec::Kl, &mix, &s).unwrap();
            assert!(r.verified.holds(), "{t}");
            assert!(r.bound <= r.quantity("exact").unwrap());
            assert_eq!(r.vacuous, t == 1.5);
        }
        let neg = hinge_lower_bound(&inst, -1.0, &DivergenceSpec::Kl, &mix, &s).unwrap();
        let zero = hinge_lower_bound(&inst, 0.0, &DivergenceSpec::Kl, &mix, &s).unwrap();
        assert!((neg.bound - zero.bound - 1.0).abs() < 1e-12);
        assert!(neg.verified.holds());

        let flat = identical();
        let r = hinge_lower_bound(&flat, 1.0, &DivergenceSpec::ChiSquared, &Candidate::mixture(&flat), &s).unwrap();
        // E[(L-1)_+] = 0.3 * 0.25 * 2 + 0.7 * (0.25 * 1 + 0.25 * 3)
        let exact = 0.3 * 0.5 + 0.7 * 1.0;
        assert!((r.bound - exact).abs() < 1e-12);
    }

    /// RU objective minimised by brute force on a dense grid.
    fn dense_cvar(law: &FiniteLossDistribution, alpha: f64, l_max: f64) -> f64 {
        (0..=20_000)
            .map(|k| crate::oracle::ru_objective(law, alpha, l_max * k as f64 / 20_000.0))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cvar_pinch_matches_exact() {
        let inst = identical();
        let mix = Candidate::mixture(&inst);
        for alpha in [0.01, 0.5, 0.9, 0.95] {
            let r = cvar_lower_bound(&inst, alpha, &DivergenceSpec::Kl, &mix, &settings()).unwrap();
            let exact = r.quantity("exact_cvar").unwrap();
            assert!((r.bound - exact).abs() < 1e-9, "{alpha}: {} vs {exact}", r.bound);
            let dense = dense_cvar(&inst.prior_predictive_loss(), alpha, 4.0);
            assert!((dense - exact).abs() < 1e-9);
            let p = cvar_lower_bound_kl_pinsker(&inst, alpha, &settings()).unwrap();
            assert!((p.bound - exact).abs() < 1e-9);
        }
        let low = cvar_lower_bound(&inst, 0.01, &DivergenceSpec::Kl, &mix, &settings()).unwrap();
        let mean = exact_mean(&inst.prior_predictive_loss());
        assert!((low.bound - mean).abs() < 0.05);
    }

    #[test]
    fn cvar_ordering_on_informative_instance() {
        let inst = distinct();
        for alpha in [0.5, 0.9, 0.95] {
            let sharp = cvar_lower_bound(&inst, alpha, &DivergenceSpec::Kl, &Candidate::mixture(&inst), &settings())
                .unwrap();
            let pinsker = cvar_lower_bound_kl_pinsker(&inst, alpha, &settings()).unwrap();
            assert!(sharp.verified.holds() && pinsker.verified.holds());
            assert!(pinsker.bound <= sharp.bound, "{alpha}");
            assert_eq!(pinsker.quantity("exact_inversion_bound"), Some(sharp.bound));
            assert!(sharp.quantity("fine_bound").unwrap() <= sharp.quantity("coarse_bound").unwrap());
            assert!(sharp.bound <= sharp.quantity("fine_bound").unwrap());
        }
    }

    #[test]
    fn pinsker_flags_vacuity() {
        let inst = disjoint();
        let r = cvar_lower_bound_kl_pinsker(&inst, 0.9, &settings()).unwrap();
        // I = ln 2, radius ~0.589 above b_0 = 0.5
        assert_eq!(r.bound, 0.0);
        assert!(r.vacuous && !r.notes.is_empty());
        assert!(cvar_lower_bound_kl_pinsker(&inst, 1.0, &settings()).is_err());
    }

    #[test]
    fn polished_minimum_is_below_grid_minimum() {
        // Pinsker objective is piecewise linear with a kink between atoms;
        // the kink is found even with no refinement.
        let inst = distinct();
        let coarse = BoundSettings { t_refine: 1, ..settings() };
        let a = cvar_lower_bound_kl_pinsker(&inst, 0.9, &coarse).unwrap();
        let b = cvar_lower_bound_kl_pinsker(&inst, 0.9, &settings()).unwrap();
        assert!((a.bound - b.bound).abs() < 1e-12);
    }

    fn instance() -> impl Strategy<Value = FiniteIsdm> {
        (2usize..4, 2usize..5).prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(0.05f64..1.0, m),
                proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, n), m),
                proptest::collection::vec(proptest::collection::vec(0u8..5, n), m),
            )
                .prop_map(|(prior, rows, loss)| {
                    let normalize = |v: Vec<f64>| {
                        let s: f64 = v.iter().sum::<f64>() + 1e-3 * v.len() as f64;
                        let mut out: Vec<f64> = v.iter().map(|x| (x + 1e-3) / s).collect();
                        let rest: f64 = out[1..].iter().sum();
                        out[0] = 1.0 - rest;
                        out
                    };
                    FiniteIsdm::from_rows(
                        normalize(prior),
                        rows.into_iter().map(normalize).collect(),
                        loss.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect(),
                        4.0,
                    )
                    .unwrap()
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn cvar_bounds_are_sound_and_ordered(inst in instance(), which in 0usize..4, alpha in 0.05f64..0.95) {
            let spec = &DivergenceSpec::NAMED[which];
            let r = cvar_lower_bound(&inst, alpha, spec, &Candidate::mixture(&inst), &settings()).unwrap();
            prop_assert!(r.verified.holds(), "{:?}", r.verified);
            if which == 0 {
                let p = cvar_lower_bound_kl_pinsker(&inst, alpha, &settings()).unwrap();
                prop_assert!(p.bound <= r.bound);
            }
        }

        #[test]
        fn quantile_and_one_sided_agree(inst in instance(), which in 0usize..4, delta in 0.5f64..4.0) {
            let spec = &DivergenceSpec::NAMED[which];
            let cands = default_candidates(&inst);
            let q = quantile_fano_bound(&inst, delta, spec, &cands, &settings()).unwrap();
            let ind = TransformSpec::quantile_indicator(delta).unwrap();
            let o = one_sided_transform_bound(&inst, &ind, spec, &cands, &settings()).unwrap();
            prop_assert!(q.verified.holds() && o.verified.holds());
            prop_assert!((o.bound - (1.0 - q.bound)).abs() <= 2e-10);
        }

        #[test]
        fn cvar_bound_nondecreasing_in_alpha(inst in instance(), a in 0.05f64..0.9, step in 0.01f64..0.09) {
            let mix = Candidate::mixture(&inst);
            let lo = cvar_lower_bound(&inst, a, &DivergenceSpec::Kl, &mix, &settings()).unwrap();
            let hi = cvar_lower_bound(&inst, a + step, &DivergenceSpec::Kl, &mix, &settings()).unwrap();
            prop_assert!(hi.bound >= lo.bound - 1e-9);
        }
    }
}
