//! Finite interactive decision-making instances.
//!
//! The algorithm is fixed and implicit: row `m` of `obs_laws` is the law of
//! the observation (for example a full interaction transcript) when the
//! algorithm runs against model `m`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::distribution::FiniteDistribution;
use crate::divergence::{f_divergence, DivergenceSpec};
use crate::error::{Error, Result};
use crate::math;
use crate::oracle::FiniteLossDistribution;

/// Optional display names for models and outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labels {
    pub models: Vec<String>,
    pub outcomes: Vec<String>,
}

/// Prior over models, per-model observation laws and the loss matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteIsdm {
    prior: FiniteDistribution,
    obs_laws: Vec<FiniteDistribution>,
    loss: Vec<Vec<f64>>,
    l_max: f64,
    labels: Labels,
}

impl FiniteIsdm {
    pub fn new(
        prior: FiniteDistribution,
        obs_laws: Vec<FiniteDistribution>,
        loss: Vec<Vec<f64>>,
        l_max: f64,
    ) -> Result<Self> {
        let models = prior.len();
        if obs_laws.len() != models {
            return Err(Error::LengthMismatch {
                what: "obs_laws rows vs prior",
                expected: models,
                got: obs_laws.len(),
            });
        }
        if loss.len() != models {
            return Err(Error::LengthMismatch {
                what: "loss rows vs prior",
                expected: models,
                got: loss.len(),
            });
        }
        let outcomes = obs_laws[0].len();
        if let Some(row) = obs_laws.iter().find(|r| r.len() != outcomes) {
            return Err(Error::LengthMismatch {
                what: "obs_laws row length",
                expected: outcomes,
                got: row.len(),
            });
        }
        if let Some(row) = loss.iter().find(|r| r.len() != outcomes) {
            return Err(Error::LengthMismatch {
                what: "loss row length",
                expected: outcomes,
                got: row.len(),
            });
        }
        if !(l_max.is_finite() && l_max > 0.0) {
            return Err(Error::InvalidInstance(format!(
                "l_max = {l_max} must be finite and > 0"
            )));
        }
        for (m, row) in loss.iter().enumerate() {
            for (x, &l) in row.iter().enumerate() {
                if !(0.0..=l_max).contains(&l) {
                    return Err(Error::InvalidInstance(format!(
                        "loss[{m}][{x}] = {l} is outside [0, l_max = {l_max}]"
                    )));
                }
            }
        }
        Ok(Self {
            prior,
            obs_laws,
            loss,
            l_max,
            labels: Labels::default(),
        })
    }

    /// Builds from plain vectors, naming the offending field in errors.
    pub fn from_rows(
        prior: Vec<f64>,
        obs_laws: Vec<Vec<f64>>,
        loss: Vec<Vec<f64>>,
        l_max: f64,
    ) -> Result<Self> {
        let prior = FiniteDistribution::named("prior", prior)?;
        let obs_laws = obs_laws
            .into_iter()
            .enumerate()
            .map(|(m, row)| FiniteDistribution::named(&format!("obs_laws[{m}]"), row))
            .collect::<Result<Vec<_>>>()?;
        Self::new(prior, obs_laws, loss, l_max)
    }

    pub fn with_labels(mut self, labels: Labels) -> Result<Self> {
        if !labels.models.is_empty() && labels.models.len() != self.n_models() {
            return Err(Error::LengthMismatch {
                what: "model labels",
                expected: self.n_models(),
                got: labels.models.len(),
            });
        }
        if !labels.outcomes.is_empty() && labels.outcomes.len() != self.n_outcomes() {
            return Err(Error::LengthMismatch {
                what: "outcome labels",
                expected: self.n_outcomes(),
                got: labels.outcomes.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn prior(&self) -> &FiniteDistribution {
        &self.prior
    }

    pub fn obs_laws(&self) -> &[FiniteDistribution] {
        &self.obs_laws
    }

    pub fn loss(&self) -> &[Vec<f64>] {
        &self.loss
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    pub fn n_models(&self) -> usize {
        self.prior.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.obs_laws[0].len()
    }

    fn check_reference(&self, reference: &FiniteDistribution) -> Result<()> {
        if reference.len() != self.n_outcomes() {
            return Err(Error::LengthMismatch {
                what: "reference vs outcome space",
                expected: self.n_outcomes(),
                got: reference.len(),
            });
        }
        Ok(())
    }

    /// `B = sum_m mu(m) D_f(P_m || reference)`. Models with zero prior mass
    /// contribute nothing, even when their divergence is infinite.
    pub fn budget(&self, spec: &DivergenceSpec, reference: &FiniteDistribution) -> Result<f64> {
        self.check_reference(reference)?;
        let mut terms = Vec::with_capacity(self.n_models());
        for (&w, row) in self.prior.probs().iter().zip(&self.obs_laws) {
            if w == 0.0 {
                continue;
            }
            let d = f_divergence(spec, row, reference)?;
            if d == f64::INFINITY {
                return Ok(f64::INFINITY);
            }
            terms.push(w * d);
        }
        Ok(math::sum(terms).max(0.0))
    }

    /// Marginal law of the observation, `Q* = sum_m mu(m) P_m`.
    pub fn mixture_reference(&self) -> FiniteDistribution {
        let weights = self.prior.probs();
        let probs = (0..self.n_outcomes())
            .map(|x| {
                math::sum(
                    weights
                        .iter()
                        .zip(&self.obs_laws)
                        .map(|(&w, row)| w * row.probs()[x]),
                )
            })
            .collect();
        FiniteDistribution::from_raw(probs)
    }

    /// `I(M; X)` in nats: the KL budget against the mixture.
    pub fn mutual_information(&self) -> f64 {
        self.budget(&DivergenceSpec::Kl, &self.mixture_reference())
            .expect("mixture has the outcome-space length")
    }

    /// Law of `L(M, X)` with `M ~ prior`, `X ~ P_M`.
    pub fn prior_predictive_loss(&self) -> FiniteLossDistribution {
        let mut atoms = Vec::with_capacity(self.n_models() * self.n_outcomes());
        for ((&w, row), losses) in self.prior.probs().iter().zip(&self.obs_laws).zip(&self.loss) {
            for (&p, &l) in row.probs().iter().zip(losses) {
                atoms.push((l, w * p));
            }
        }
        FiniteLossDistribution::new(atoms).expect("pushforward of a valid instance")
    }

    /// Law of `L(M, X)` with `M ~ prior` and `X ~ reference` independent.
    pub fn reference_loss(&self, reference: &FiniteDistribution) -> Result<FiniteLossDistribution> {
        self.check_reference(reference)?;
        let mut atoms = Vec::with_capacity(self.n_models() * self.n_outcomes());
        for (&w, losses) in self.prior.probs().iter().zip(&self.loss) {
            for (&q, &l) in reference.probs().iter().zip(losses) {
                atoms.push((l, w * q));
            }
        }
        FiniteLossDistribution::new(atoms)
    }
}
