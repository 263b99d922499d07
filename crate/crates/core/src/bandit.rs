//! Compiles a small stochastic bandit into a finite instance whose outcome
//! space is the set of full transcripts `(a_1, r_1, ..., a_T, r_T)`.
//!
//! Transcripts are indexed in base `K * R` with the first round as the most
//! significant digit, digit `a * R + r`. A history key is the prefix written
//! as comma-separated `arm:reward_index` pairs; the empty history is `""`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::distribution::FiniteDistribution;
use crate::error::{Error, Result};
use crate::isdm::{FiniteIsdm, Labels};
use crate::math;

pub const DEFAULT_TRANSCRIPT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    /// `sum_t (mu*(m) - mu_m(a_t))`: expected regret given the pulled arms.
    #[default]
    CumulativeRegret,
}

/// Map from transcript prefix to a distribution over arms.
#[derive(Debug, Clone, PartialEq)]
pub enum BanditPolicy {
    Uniform,
    /// Always pull this arm.
    Fixed(usize),
    /// Each arm once in index order, then the best empirical mean reward
    /// (ties to the lowest index).
    Greedy,
    /// Explicit rows keyed by history. Every history reachable with positive
    /// probability under some model needs a row.
    Table(BTreeMap<String, Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstanceSpec {
    pub arms: usize,
    pub horizon: usize,
    /// Reward values shared by every arm and model.
    pub reward_alphabet: Vec<f64>,
    /// `reward_probs[m][a][r]`.
    pub reward_probs: Vec<Vec<Vec<f64>>>,
    /// Prior over models; uniform when absent.
    pub prior: Option<Vec<f64>>,
    pub policy: BanditPolicy,
    pub loss_kind: LossKind,
    pub transcript_cap: usize,
}

impl BanditInstanceSpec {
    /// Uniform prior, cumulative regret and the default transcript cap.
    pub fn new(
        arms: usize,
        horizon: usize,
        reward_alphabet: Vec<f64>,
        reward_probs: Vec<Vec<Vec<f64>>>,
        policy: BanditPolicy,
    ) -> Self {
        Self {
            arms,
            horizon,
            reward_alphabet,
            reward_probs,
            prior: None,
            policy,
            loss_kind: LossKind::CumulativeRegret,
            transcript_cap: DEFAULT_TRANSCRIPT_CAP,
        }
    }

    pub fn n_models(&self) -> usize {
        self.reward_probs.len()
    }

    /// `(K * R)^T`, saturating.
    pub fn transcript_count(&self) -> u128 {
        let base = (self.arms as u128).saturating_mul(self.reward_alphabet.len() as u128);
        let mut count: u128 = 1;
        for _ in 0..self.horizon {
            count = count.saturating_mul(base);
            if count == u128::MAX {
                break;
            }
        }
        count
    }

    fn validate(&self) -> Result<Vec<Vec<FiniteDistribution>>> {
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if self.arms == 0 {
            return invalid("arms must be >= 1".into());
        }
        if self.horizon == 0 {
            return invalid("horizon must be >= 1".into());
        }
        if self.reward_alphabet.is_empty() {
            return invalid("reward_alphabet must be non-empty".into());
        }
        if let Some(r) = self.reward_alphabet.iter().find(|r| !r.is_finite()) {
            return invalid(format!("reward_alphabet value {r} is not finite"));
        }
        if self.reward_probs.is_empty() {
            return invalid("reward_probs must list at least one model".into());
        }
        let count = self.transcript_count();
        if count > self.transcript_cap as u128 {
            return Err(Error::TranscriptCap {
                count,
                cap: self.transcript_cap,
            });
        }
        let mut laws = Vec::with_capacity(self.n_models());
        for (m, per_arm) in self.reward_probs.iter().enumerate() {
            if per_arm.len() != self.arms {
                return Err(Error::LengthMismatch {
                    what: "reward_probs arms",
                    expected: self.arms,
                    got: per_arm.len(),
                });
            }
            let mut row = Vec::with_capacity(self.arms);
            for (a, probs) in per_arm.iter().enumerate() {
                if probs.len() != self.reward_alphabet.len() {
                    return Err(Error::LengthMismatch {
                        what: "reward_probs rewards",
                        expected: self.reward_alphabet.len(),
                        got: probs.len(),
                    });
                }
                row.push(FiniteDistribution::named(
                    &format!("reward_probs[{m}][{a}]"),
                    probs.clone(),
                )?);
            }
            laws.push(row);
        }
        match &self.policy {
            BanditPolicy::Fixed(arm) if *arm >= self.arms => {
                return invalid(format!("fixed policy arm {arm} >= arms = {}", self.arms));
            }
            BanditPolicy::Table(rows) => {
                for (key, row) in rows {
                    if row.len() != self.arms {
                        return Err(Error::LengthMismatch {
                            what: "policy row",
                            expected: self.arms,
                            got: row.len(),
                        });
                    }
                    FiniteDistribution::named(&format!("policy[\"{key}\"]"), row.clone())?;
                }
            }
            _ => {}
        }
        Ok(laws)
    }
}

fn history_key(prefix: &[(usize, usize)]) -> String {
    let parts: Vec<String> = prefix.iter().map(|(a, r)| format!("{a}:{r}")).collect();
    parts.join(",")
}

struct Compiler<'a> {
    spec: &'a BanditInstanceSpec,
    laws: Vec<Vec<FiniteDistribution>>,
    arm_means: Vec<Vec<f64>>,
    best_means: Vec<f64>,
    obs: Vec<Vec<f64>>,
    loss: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl Compiler<'_> {
    fn policy_row(&self, prefix: &[(usize, usize)], reachable: bool) -> Result<Vec<f64>> {
        let k = self.spec.arms;
        Ok(match &self.spec.policy {
            BanditPolicy::Uniform => vec![1.0 / k as f64; k],
            BanditPolicy::Fixed(arm) => {
                let mut row = vec![0.0; k];
                row[*arm] = 1.0;
                row
            }
            BanditPolicy::Greedy => {
                let t = prefix.len();
                let arm = if t < k {
                    t
                } else {
                    let mut total = vec![0.0; k];
                    let mut pulls = vec![0usize; k];
                    for &(a, r) in prefix {
                        total[a] += self.spec.reward_alphabet[r];
                        pulls[a] += 1;
                    }
                    let mean = |a: usize| total[a] / pulls[a] as f64;
                    (1..k).fold(0, |best, a| if mean(a) > mean(best) { a } else { best })
                };
                let mut row = vec![0.0; k];
                row[arm] = 1.0;
                row
            }
            BanditPolicy::Table(rows) => match rows.get(&history_key(prefix)) {
                Some(row) => row.clone(),
                None if reachable => return Err(Error::MissingPolicyRow(history_key(prefix))),
                None => vec![1.0 / k as f64; k],
            },
        })
    }

    /// Depth-first in index order; `weights[m]` is the prefix probability
    /// under model `m`, `regret[m]` the accumulated loss.
    fn walk(
        &mut self,
        prefix: &mut Vec<(usize, usize)>,
        weights: &[f64],
        regret: &[f64],
    ) -> Result<()> {
        let models = weights.len();
        if prefix.len() == self.spec.horizon {
            for m in 0..models {
                self.obs[m].push(weights[m]);
                self.loss[m].push(regret[m]);
            }
            self.labels.push(history_key(prefix));
            return Ok(());
        }
        let reachable = weights.iter().any(|&w| w > 0.0);
        let row = self.policy_row(prefix, reachable)?;
        let mut next_w = vec![0.0; models];
        let mut next_l = vec![0.0; models];
        for (a, &pa) in row.iter().enumerate() {
            for r in 0..self.spec.reward_alphabet.len() {
                for m in 0..models {
                    next_w[m] = weights[m] * pa * self.laws[m][a].probs()[r];
                    next_l[m] = regret[m] + (self.best_means[m] - self.arm_means[m][a]);
                }
                prefix.push((a, r));
                self.walk(prefix, &next_w.clone(), &next_l.clone())?;
                prefix.pop();
            }
        }
        Ok(())
    }
}

/// Enumerates every transcript and builds the instance with cumulative
/// regret loss and `l_max = T * max gap` (1 when every gap is zero).
pub fn compile_bandit(spec: &BanditInstanceSpec) -> Result<FiniteIsdm> {
    let laws = spec.validate()?;
    let models = spec.n_models();
    let prior = match &spec.prior {
        Some(p) => {
            if p.len() != models {
                return Err(Error::LengthMismatch {
                    what: "prior vs reward_probs models",
                    expected: models,
                    got: p.len(),
                });
            }
            FiniteDistribution::named("prior", p.clone())?
        }
        None => FiniteDistribution::uniform(models)?,
    };
    let arm_means: Vec<Vec<f64>> = laws
        .iter()
        .map(|per_arm| {
            per_arm
                .iter()
                .map(|law| {
                    math::sum(
                        law.probs()
                            .iter()
                            .zip(&spec.reward_alphabet)
                            .map(|(p, r)| p * r),
                    )
                })
                .collect()
        })
        .collect();
    let best_means: Vec<f64> = arm_means
        .iter()
        .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let max_gap = arm_means
        .iter()
        .zip(&best_means)
        .flat_map(|(row, best)| row.iter().map(move |mu| best - mu))
        .fold(0.0, f64::max);
    let l_max = if max_gap > 0.0 {
        spec.horizon as f64 * max_gap
    } else {
        1.0
    };

    let count = spec.transcript_count() as usize;
    let mut compiler = Compiler {
        spec,
        laws,
        arm_means,
        best_means,
        obs: vec![Vec::with_capacity(count); models],
        loss: vec![Vec::with_capacity(count); models],
        labels: Vec::with_capacity(count),
    };
    compiler.walk(&mut Vec::new(), &vec![1.0; models], &vec![0.0; models])?;

    let obs_laws = compiler
        .obs
        .into_iter()
        .enumerate()
        .map(|(m, row)| FiniteDistribution::named(&format!("transcript law of model {m}"), row))
        .collect::<Result<Vec<_>>>()?;
    // Summing T gaps can exceed T * max_gap by an ulp.
    let loss = compiler
        .loss
        .into_iter()
        .map(|row| row.into_iter().map(|l| l.clamp(0.0, l_max)).collect())
        .collect();
    FiniteIsdm::new(prior, obs_laws, loss, l_max)?.with_labels(Labels {
        models: (0..models).map(|m| format!("model:{m}")).collect(),
        outcomes: compiler.labels,
    })
}
