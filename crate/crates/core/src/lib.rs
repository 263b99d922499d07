//! Information-theoretic lower bounds on bounded loss functionals for finite
//! interactive decision problems.
//!
//! The crate turns an f-divergence budget between the algorithm-induced
//! observation laws and a reference law into certified intervals for
//! `E[phi(L)]`, tail probabilities, hinge expectations and CVaR. Everything
//! here is pure arithmetic on finite distributions; it builds without `std`
//! (an allocator is required).
//!
//! Module map:
//!
//! - [`divergence`]: f-divergences between finite laws and Bernoulli laws.
//! - [`inversion`]: endpoints of the Bernoulli divergence ball.
//! - [`transform`]: bounded transforms of the loss.
//! - [`isdm`] and [`bandit`]: finite instances and the bandit compiler.
//! - [`bounds`]: the bound computations and their [`BoundReport`]s.
//! - [`oracle`]: exact tail, mean and CVaR of finite loss laws.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bandit;
pub mod bounds;
pub mod distribution;
pub mod divergence;
mod error;
pub mod inversion;
pub mod isdm;
pub(crate) mod math;
pub mod oracle;
pub mod report;
pub mod transform;

pub use bandit::{compile_bandit, BanditInstanceSpec, BanditPolicy, LossKind};
pub use bounds::{BoundSettings, Candidate};
pub use distribution::FiniteDistribution;
pub use divergence::{bernoulli_divergence, f_divergence, DivergenceKind, DivergenceSpec};
pub use error::{Error, Result};
pub use inversion::{calibration_threshold, invert_ball, threshold_for_quantile, BernoulliBall};
pub use isdm::FiniteIsdm;
pub use oracle::{exact_cvar, exact_mean, exact_tail, exact_var, FiniteLossDistribution};
pub use report::{BoundReport, Reference, Theorem, Verdict};
pub use transform::{Direction, TransformKind, TransformSpec};

/// Probabilities must sum to one within this absolute tolerance.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Loss values closer than this are merged into one atom.
pub const ATOM_MERGE_TOLERANCE: f64 = 1e-12;

/// Default absolute tolerance on the mean axis for ball inversion.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
