//! Soundness fuzzing: random finite instances, every bound operation, and a
//! comparison with the exact oracles.
//!
//! Instance `i` is generated from its own seed, drawn from ChaCha stream `i`
//! under the master seed, so results do not depend on scheduling and any
//! failure can be replayed from the seed it reports.

use std::collections::BTreeMap;

use fanobound_core::bounds::{
    cvar_lower_bound, cvar_lower_bound_kl_pinsker, default_candidates, hinge_lower_bound,
    one_sided_transform_bound, quantile_fano_bound, tail_to_expectation,
    two_sided_transform_bound, BoundSettings, Candidate,
};
use fanobound_core::transform::expected_transform;
use fanobound_core::{
    exact_cvar, exact_mean, exact_tail, DivergenceSpec, FiniteIsdm, TransformSpec,
};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::mc::{mc_transform_estimate, rng_for, McSettings};

/// Failures listed individually in a summary; the counts stay exact.
pub const MAX_LISTED_FAILURES: usize = 100;

#[derive(Debug, Clone)]
pub struct FuzzConfig {
    pub iterations: usize,
    pub master_seed: u64,
    /// Inclusive range for the number of models.
    pub models: (usize, usize),
    /// Inclusive range for the number of outcomes.
    pub outcomes: (usize, usize),
    pub divergences: Vec<DivergenceSpec>,
    pub alphas: Vec<f64>,
    /// Every `disjoint_every`-th instance gives the models disjoint supports
    /// (0 disables).
    pub disjoint_every: usize,
    pub settings: BoundSettings,
    /// Test hook: moves every exact value against the bound by this amount,
    /// which must make the harness report violations.
    #[doc(hidden)]
    pub oracle_shift: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            master_seed: crate::DEFAULT_SEED,
            models: (2, 4),
            outcomes: (2, 6),
            divergences: DivergenceSpec::NAMED.to_vec(),
            alphas: vec![0.5, 0.9, 0.95],
            disjoint_every: 10,
            settings: BoundSettings::default(),
            oracle_shift: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub checks: usize,
    pub passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub index: usize,
    pub seed: u64,
    pub disjoint: bool,
    pub check: String,
    pub divergence: String,
    pub detail: String,
    /// How far the bound lies on the wrong side of the exact value.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzSummary {
    pub master_seed: u64,
    pub iterations: usize,
    pub disjoint_instances: usize,
    pub checks: usize,
    pub violations: usize,
    pub per_check: BTreeMap<String, Tally>,
    pub failures: Vec<Failure>,
    pub failures_truncated: bool,
}

impl FuzzSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// One generated case: the instance and the transform parameters drawn for it.
#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub seed: u64,
    pub disjoint: bool,
    pub instance: FiniteIsdm,
    pub transforms: Vec<TransformSpec>,
    pub delta: f64,
    pub t: f64,
}

pub fn case_seed(master_seed: u64, index: usize) -> u64 {
    rng_for(master_seed, index as u64).next_u64()
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Builds case `seed`. Full-support rows come from Dirichlet(1); with
/// `disjoint`, model `m` is supported on outcomes `x` with `x % M == m`.
/// Losses are uniform on `[0, l_max]`, or on a five-point grid for a third
/// of the cases so that ties and atom-valued thresholds occur.
pub fn generate_case(seed: u64, disjoint: bool, config: &FuzzConfig) -> FuzzCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.random_range(config.models.0..=config.models.1);
    let mut n = rng.random_range(config.outcomes.0..=config.outcomes.1);
    if disjoint {
        n = n.max(m);
    }
    let prior = dirichlet(&mut rng, m);
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            if disjoint {
                let support: Vec<usize> = (0..n).filter(|x| x % m == k).collect();
                let w = dirichlet(&mut rng, support.len());
                let mut row = vec![0.0; n];
                for (x, p) in support.into_iter().zip(w) {
                    row[x] = p;
                }
                row
            } else {
                dirichlet(&mut rng, n)
            }
        })
        .collect();
    let l_max = rng.random_range(0.5..10.0);
    let grid = rng.random_bool(1.0 / 3.0);
    let loss: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if grid {
                        l_max * rng.random_range(0..=4) as f64 / 4.0
                    } else {
                        l_max * rng.random::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    let (delta, t) = if grid {
        (
            l_max * rng.random_range(1..=4) as f64 / 4.0,
            l_max * rng.random_range(0..=3) as f64 / 4.0,
        )
    } else {
        (l_max * rng.random_range(0.05..=1.0), l_max * rng.random::<f64>())
    };
    let tau = l_max * rng.random_range(0.05..=1.0);
    let lambda = rng.random_range(0.1..3.0) / l_max;
    let instance = FiniteIsdm::from_rows(prior, rows, loss, l_max).expect("generated instance is valid");
    let transforms = vec![
        TransformSpec::quantile_indicator(delta).unwrap(),
        TransformSpec::hinge(t, l_max).unwrap(),
        TransformSpec::clipped_mean(tau).unwrap(),
        TransformSpec::laplace(lambda).unwrap(),
    ];
    FuzzCase {
        seed,
        disjoint,
        instance,
        transforms,
        delta,
        t,
    }
}

struct Recorder<'a> {
    index: usize,
    case: &'a FuzzCase,
    slack: f64,
    shift: f64,
    tallies: BTreeMap<String, Tally>,
    failures: Vec<Failure>,
}

impl Recorder<'_> {
    fn record(&mut self, check: &str, spec: &DivergenceSpec, gap: f64, detail: String) {
        let tally = self.tallies.entry(check.to_string()).or_default();
        tally.checks += 1;
        if gap <= 0.0 {
            tally.passes += 1;
        } else {
            self.failures.push(Failure {
                index: self.index,
                seed: self.case.seed,
                disjoint: self.case.disjoint,
                check: check.to_string(),
                divergence: spec.name().to_string(),
                detail,
                gap,
            });
        }
    }

    /// `bound <= exact` up to the slack.
    fn lower(&mut self, check: &str, spec: &DivergenceSpec, bound: f64, exact: f64, what: &str) {
        let exact = exact - self.shift;
        let gap = if bound <= exact + self.slack { 0.0 } else { bound - exact };
        self.record(check, spec, gap, format!("{what}: bound {bound} vs exact {exact}"));
    }

    /// `bound >= exact` up to the slack.
    fn upper(&mut self, check: &str, spec: &DivergenceSpec, bound: f64, exact: f64, what: &str) {
        let exact = exact + self.shift;
        let gap = if bound >= exact - self.slack { 0.0 } else { exact - bound };
        self.record(check, spec, gap, format!("{what}: bound {bound} vs exact {exact}"));
    }

    /// Runs one group of checks; a computation error counts as a failure.
    fn guarded<F>(&mut self, check: &str, spec: &DivergenceSpec, body: F)
    where
        F: FnOnce(&mut Self) -> fanobound_core::Result<()>,
    {
        if let Err(err) = body(self) {
            self.record(check, spec, f64::INFINITY, format!("error: {err}"));
        }
    }
}

fn run_case(index: usize, case: &FuzzCase, config: &FuzzConfig) -> (BTreeMap<String, Tally>, Vec<Failure>) {
    let s = &config.settings;
    let inst = &case.instance;
    let mut rec = Recorder {
        index,
        case,
        slack: s.verify_slack,
        shift: config.oracle_shift,
        tallies: BTreeMap::new(),
        failures: Vec::new(),
    };
    let pp = inst.prior_predictive_loss();
    let candidates = default_candidates(inst);
    let mixture = Candidate::mixture(inst);
    let tail = exact_tail(&pp, case.delta, false);
    let mean = exact_mean(&pp);

    for spec in &config.divergences {
        for transform in &case.transforms {
            let name = transform.to_string();
            rec.guarded("transform", spec, |rec| {
                let rho = expected_transform(transform, &pp)?;
                for c in &candidates {
                    let r = two_sided_transform_bound(inst, transform, spec, c, s)?;
                    let what = format!("{name} ref {}", c.label());
                    rec.lower("two_sided_transform", spec, r.quantity("lower").unwrap(), rho, &what);
                    rec.upper("two_sided_transform", spec, r.quantity("upper").unwrap(), rho, &what);
                }
                let r = one_sided_transform_bound(inst, transform, spec, &candidates, s)?;
                rec.upper("one_sided_transform", spec, r.bound, rho, &name);
                Ok(())
            });
        }

        rec.guarded("quantile_fano", spec, |rec| {
            let q = quantile_fano_bound(inst, case.delta, spec, &candidates, s)?;
            let what = format!("delta_level {}", case.delta);
            rec.lower("quantile_fano", spec, q.bound, tail, &what);
            let e = tail_to_expectation(&q, case.delta)?;
            rec.lower("tail_to_expectation", spec, e.bound, mean, &what);
            let o = one_sided_transform_bound(inst, &case.transforms[0], spec, &candidates, s)?;
            let diff = (o.bound - (1.0 - q.bound)).abs();
            let gap = if diff <= 2.0 * s.tolerance { 0.0 } else { diff };
            rec.record(
                "indicator_recovery",
                spec,
                gap,
                format!("theta* {} vs 1 - delta* {}", o.bound, 1.0 - q.bound),
            );
            Ok(())
        });

        rec.guarded("hinge_lower", spec, |rec| {
            let h = hinge_lower_bound(inst, case.t, spec, &mixture, s)?;
            rec.lower("hinge_lower", spec, h.bound, pp.hinge_expectation(case.t), &format!("t {}", case.t));
            Ok(())
        });

        for &alpha in &config.alphas {
            rec.guarded("cvar_lower", spec, |rec| {
                let exact = exact_cvar(&pp, alpha)?;
                let what = format!("alpha {alpha}");
                let sharp = cvar_lower_bound(inst, alpha, spec, &mixture, s)?;
                rec.lower("cvar_lower", spec, sharp.bound, exact, &what);
                if matches!(spec, DivergenceSpec::Kl) {
                    let p = cvar_lower_bound_kl_pinsker(inst, alpha, s)?;
                    rec.lower("cvar_lower_kl_pinsker", spec, p.bound, exact, &what);
                    let gap = if p.bound <= sharp.bound { 0.0 } else { p.bound - sharp.bound };
                    rec.record(
                        "pinsker_dominance",
                        spec,
                        gap,
                        format!("{what}: pinsker {} vs exact inversion {}", p.bound, sharp.bound),
                    );
                }
                Ok(())
            });
        }
    }
    (rec.tallies, rec.failures)
}

pub fn is_disjoint(index: usize, config: &FuzzConfig) -> bool {
    config.disjoint_every > 0 && index % config.disjoint_every == config.disjoint_every - 1
}

/// Generates `config.iterations` cases and checks every bound on each.
pub fn fuzz_soundness(config: &FuzzConfig) -> FuzzSummary {
    let outcomes: Vec<_> = (0..config.iterations)
        .into_par_iter()
        .map(|i| {
            let case = generate_case(case_seed(config.master_seed, i), is_disjoint(i, config), config);
            run_case(i, &case, config)
        })
        .collect();

    let mut per_check: BTreeMap<String, Tally> = BTreeMap::new();
    let mut failures = Vec::new();
    let mut violations = 0;
    for (tallies, fails) in outcomes {
        for (k, t) in tallies {
            let e = per_check.entry(k).or_default();
            e.checks += t.checks;
            e.passes += t.passes;
        }
        violations += fails.len();
        failures.extend(fails);
    }
    let truncated = failures.len() > MAX_LISTED_FAILURES;
    failures.truncate(MAX_LISTED_FAILURES);
    FuzzSummary {
        master_seed: config.master_seed,
        iterations: config.iterations,
        disjoint_instances: (0..config.iterations).filter(|&i| is_disjoint(i, config)).count(),
        checks: per_check.values().map(|t| t.checks).sum(),
        violations,
        per_check,
        failures,
        failures_truncated: truncated,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheck {
    pub index: usize,
    pub transform: String,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `|estimate - exact| / std_error` (infinite when the error is zero
    /// and the estimate is off).
    pub z: f64,
}

/// Monte Carlo estimate against the exact `E[phi(L)]` on the first `pairs`
/// generated cases, cycling through the transform families. Each pair uses
/// its own stream under `seed`.
pub fn mc_consistency(config: &FuzzConfig, pairs: usize, samples: usize, seed: u64) -> fanobound_core::Result<Vec<McCheck>> {
    (0..pairs)
        .map(|i| {
            let case = generate_case(case_seed(config.master_seed, i), is_disjoint(i, config), config);
            let transform = &case.transforms[i % case.transforms.len()];
            let exact = expected_transform(transform, &case.instance.prior_predictive_loss())?;
            let est = mc_transform_estimate(
                &case.instance,
                transform,
                &McSettings {
                    samples,
                    seed,
                    stream_id: i as u64,
                },
            )?;
            let dev = (est.estimate - exact).abs();
            let z = if dev == 0.0 { 0.0 } else { dev / est.std_error };
            Ok(McCheck {
                index: i,
                transform: transform.to_string(),
                exact,
                estimate: est.estimate,
                std_error: est.std_error,
                z,
            })
        })
        .collect()
}
