//! Monte Carlo estimate of `E[phi(L)]` through the randomized one-bit
//! statistic `Y = 1{U <= phi(L(M, X))}` with `U ~ Unif(0, 1]`.

use fanobound_core::{FiniteIsdm, TransformSpec};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
    /// Selects an independent ChaCha stream under the same seed.
    pub stream_id: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: crate::DEFAULT_SEED,
            stream_id: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / n)`.
    pub std_error: f64,
    pub samples: usize,
}

pub fn rng_for(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

pub fn mc_transform_estimate(
    instance: &FiniteIsdm,
    transform: &TransformSpec,
    settings: &McSettings,
) -> fanobound_core::Result<McEstimate> {
    if settings.samples == 0 {
        return Err(fanobound_core::Error::Domain {
            name: "samples",
            value: 0.0,
            domain: "{1, 2, ...}",
        });
    }
    // Rows are validated distributions, so the weights are never all zero.
    let prior = WeightedIndex::new(instance.prior().probs()).expect("validated prior");
    let rows: Vec<WeightedIndex<f64>> = instance
        .obs_laws()
        .iter()
        .map(|r| WeightedIndex::new(r.probs()).expect("validated row"))
        .collect();
    // phi is evaluated once per (model, outcome) pair.
    let phi: Vec<Vec<f64>> = instance
        .loss()
        .iter()
        .map(|row| row.iter().map(|&l| transform.evaluate(l)).collect())
        .collect::<fanobound_core::Result<_>>()?;

    let mut rng = rng_for(settings.seed, settings.stream_id);
    let mut hits = 0usize;
    for _ in 0..settings.samples {
        let m = prior.sample(&mut rng);
        let x = rows[m].sample(&mut rng);
        let u = 1.0 - rng.random::<f64>();
        if u <= phi[m][x] {
            hits += 1;
        }
    }
    let n = settings.samples as f64;
    let p = hits as f64 / n;
    Ok(McEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / n).sqrt(),
        samples: settings.samples,
    })
}
