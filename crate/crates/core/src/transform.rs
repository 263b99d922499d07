//! Bounded transforms `phi: loss -> [0, 1]`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::math;
use crate::oracle::FiniteLossDistribution;

/// Monotonicity of `phi` in the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Nondecreasing,
    Nonincreasing,
    Unknown,
}

type TransformFn = dyn Fn(f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum TransformKind {
    /// `1{loss < delta}`; the boundary `loss == delta` maps to 0.
    QuantileIndicator { delta: f64 },
    /// `(loss - t)_+ / l_max`.
    Hinge { t: f64, l_max: f64 },
    /// `min(loss / tau, 1)`.
    ClippedMean { tau: f64 },
    /// `exp(-lambda * loss)`.
    Laplace { lambda: f64 },
    Custom {
        name: String,
        f: Arc<TransformFn>,
        direction: Direction,
    },
}

impl fmt::Debug for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuantileIndicator { delta } => {
                f.debug_struct("QuantileIndicator").field("delta", delta).finish()
            }
            Self::Hinge { t, l_max } => f
                .debug_struct("Hinge")
                .field("t", t)
                .field("l_max", l_max)
                .finish(),
            Self::ClippedMean { tau } => f.debug_struct("ClippedMean").field("tau", tau).finish(),
            Self::Laplace { lambda } => f.debug_struct("Laplace").field("lambda", lambda).finish(),
            Self::Custom {
                name, direction, ..
            } => f
                .debug_struct("Custom")
                .field("name", name)
                .field("direction", direction)
                .finish_non_exhaustive(),
        }
    }
}

/// A validated bounded transform of the loss.
#[derive(Debug, Clone)]
pub struct TransformSpec {
    kind: TransformKind,
}

fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::Domain {
            name,
            value,
            domain: "(0, inf)",
        })
    }
}

impl TransformSpec {
    pub fn quantile_indicator(delta: f64) -> Result<Self> {
        if delta.is_nan() {
            return Err(Error::Domain {
                name: "delta",
                value: delta,
                domain: "finite real",
            });
        }
        Ok(Self {
            kind: TransformKind::QuantileIndicator { delta },
        })
    }

    pub fn hinge(t: f64, l_max: f64) -> Result<Self> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                domain: "[0, inf)",
            });
        }
        positive("l_max", l_max)?;
        Ok(Self {
            kind: TransformKind::Hinge { t, l_max },
        })
    }

    pub fn clipped_mean(tau: f64) -> Result<Self> {
        positive("tau", tau)?;
        Ok(Self {
            kind: TransformKind::ClippedMean { tau },
        })
    }

    pub fn laplace(lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        Ok(Self {
            kind: TransformKind::Laplace { lambda },
        })
    }

    /// A user transform, range-checked on a 1001-point grid over `[0, l_max]`.
    /// `f` must be free of side effects.
    pub fn custom<F>(name: &str, f: F, direction: Direction, l_max: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        positive("l_max", l_max)?;
        for i in 0..=1000 {
            let loss = l_max * i as f64 / 1000.0;
            let value = f(loss);
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::TransformRange { loss, value });
            }
        }
        Ok(Self {
            kind: TransformKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
                direction,
            },
        })
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn direction(&self) -> Direction {
        match &self.kind {
            TransformKind::QuantileIndicator { .. } | TransformKind::Laplace { .. } => {
                Direction::Nonincreasing
            }
            TransformKind::Hinge { .. } | TransformKind::ClippedMean { .. } => {
                Direction::Nondecreasing
            }
            TransformKind::Custom { direction, .. } => *direction,
        }
    }

    /// Short family name used in reports.
    pub fn family(&self) -> &str {
        match &self.kind {
            TransformKind::QuantileIndicator { .. } => "indicator",
            TransformKind::Hinge { .. } => "hinge",
            TransformKind::ClippedMean { .. } => "clipped",
            TransformKind::Laplace { .. } => "laplace",
            TransformKind::Custom { name, .. } => name,
        }
    }

    /// `phi(loss)`.
    pub fn evaluate(&self, loss: f64) -> Result<f64> {
        if loss.is_nan() || loss < 0.0 {
            return Err(Error::Domain {
                name: "loss",
                value: loss,
                domain: "[0, inf)",
            });
        }
        let value = match &self.kind {
            TransformKind::QuantileIndicator { delta } => {
                if loss < *delta {
                    1.0
                } else {
                    0.0
                }
            }
            TransformKind::Hinge { t, l_max } => (loss - t).max(0.0) / l_max,
            TransformKind::ClippedMean { tau } => (loss / tau).min(1.0),
            TransformKind::Laplace { lambda } => math::exp(-lambda * loss),
            TransformKind::Custom { f, .. } => f(loss),
        };
        if (0.0..=1.0).contains(&value) {
            Ok(value)
        } else {
            Err(Error::TransformRange { loss, value })
        }
    }
}

impl fmt::Display for TransformSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TransformKind::QuantileIndicator { delta } => write!(f, "indicator:delta={delta}"),
            TransformKind::Hinge { t, l_max } => write!(f, "hinge:t={t},lmax={l_max}"),
            TransformKind::ClippedMean { tau } => write!(f, "clipped:tau={tau}"),
            TransformKind::Laplace { lambda } => write!(f, "laplace:lambda={lambda}"),
            TransformKind::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

/// Parses `kind:key=value,...`, e.g. `hinge:t=2,lmax=10`.
impl FromStr for TransformSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params: Vec<(String, f64)> = Vec::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair.split_once('=').ok_or_else(|| {
                Error::InvalidTransform(format!("expected key=value, got `{pair}`"))
            })?;
            let value: f64 = value.trim().parse().map_err(|_| {
                Error::InvalidTransform(format!("`{key}` has non-numeric value `{value}`"))
            })?;
            params.push((key.trim().to_ascii_lowercase(), value));
        }
        let get = |keys: &[&str]| -> Result<f64> {
            params
                .iter()
                .find(|(k, _)| keys.contains(&k.as_str()))
                .map(|(_, v)| *v)
                .ok_or_else(|| {
                    Error::InvalidTransform(format!("`{kind}` needs parameter `{}`", keys[0]))
                })
        };
        match kind.trim().to_ascii_lowercase().as_str() {
            "indicator" | "quantile" | "quantile-indicator" => {
                Self::quantile_indicator(get(&["delta", "d"])?)
            }
            "hinge" => Self::hinge(get(&["t"])?, get(&["lmax", "l_max"])?),
            "clipped" | "clip" | "clipped-mean" => Self::clipped_mean(get(&["tau"])?),
            "laplace" | "exp" => Self::laplace(get(&["lambda"])?),
            other => Err(Error::InvalidTransform(format!(
                "unknown transform `{other}` (expected indicator, hinge, clipped or laplace)"
            ))),
        }
    }
}

/// `E[phi(L)]` under a finite loss law, clamped to `[0, 1]` against rounding.
pub fn expected_transform(spec: &TransformSpec, dist: &FiniteLossDistribution) -> Result<f64> {
    let mut terms = Vec::with_capacity(dist.atoms().len());
    for &(loss, p) in dist.atoms() {
        terms.push(p * spec.evaluate(loss)?);
    }
    Ok(math::sum(terms).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(atoms: &[(f64, f64)]) -> FiniteLossDistribution {
        FiniteLossDistribution::new(atoms.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(TransformSpec::hinge(2.0, 10.0).unwrap().evaluate(7.0).unwrap(), 0.5);
        assert_eq!(TransformSpec::quantile_indicator(3.0).unwrap().evaluate(3.0).unwrap(), 0.0);
        assert_eq!(TransformSpec::quantile_indicator(3.0).unwrap().evaluate(2.999).unwrap(), 1.0);
        assert_eq!(TransformSpec::laplace(1.0).unwrap().evaluate(0.0).unwrap(), 1.0);
        assert_eq!(TransformSpec::clipped_mean(4.0).unwrap().evaluate(2.0).unwrap(), 0.5);
        assert_eq!(TransformSpec::clipped_mean(4.0).unwrap().evaluate(9.0).unwrap(), 1.0);
    }

    #[test]
    fn expected_transform_examples() {
        let hinge = TransformSpec::hinge(0.0, 1.0).unwrap();
        assert_eq!(expected_transform(&hinge, &law(&[(0.0, 0.5), (1.0, 0.5)])).unwrap(), 0.5);
        let ind = TransformSpec::quantile_indicator(1.0).unwrap();
        let v = expected_transform(&ind, &law(&[(0.0, 0.3), (1.0, 0.3), (2.0, 0.4)])).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
        let lap = TransformSpec::laplace(core::f64::consts::LN_2).unwrap();
        let v = expected_transform(&lap, &law(&[(0.0, 0.5), (1.0, 0.5)])).unwrap();
        assert!((v - 0.75).abs() < 1e-15);
    }

    #[test]
    fn parameter_validation() {
        assert!(TransformSpec::hinge(-1.0, 10.0).is_err());
        assert!(TransformSpec::hinge(1.0, 0.0).is_err());
        assert!(TransformSpec::clipped_mean(0.0).is_err());
        assert!(TransformSpec::laplace(-2.0).is_err());
        assert!(TransformSpec::quantile_indicator(f64::NAN).is_err());
        assert!(TransformSpec::laplace(1.0).unwrap().evaluate(-1.0).is_err());
    }

    #[test]
    fn hinge_beyond_cap_is_a_range_error() {
        let h = TransformSpec::hinge(0.0, 1.0).unwrap();
        assert!(matches!(h.evaluate(2.0), Err(Error::TransformRange { .. })));
    }

    #[test]
    fn custom_transforms() {
        let c = TransformSpec::custom("half", |_| 0.5, Direction::Unknown, 10.0).unwrap();
        assert_eq!(c.evaluate(3.0).unwrap(), 0.5);
        assert_eq!(c.direction(), Direction::Unknown);
        assert!(TransformSpec::custom("big", |l| l, Direction::Nondecreasing, 10.0).is_err());
        // range guard also fires at evaluation time outside the checked grid
        let c = TransformSpec::custom("ramp", |l| l / 10.0, Direction::Nondecreasing, 10.0).unwrap();
        assert!(c.evaluate(20.0).is_err());
    }

    #[test]
    fn directions() {
        assert_eq!(TransformSpec::quantile_indicator(1.0).unwrap().direction(), Direction::Nonincreasing);
        assert_eq!(TransformSpec::laplace(1.0).unwrap().direction(), Direction::Nonincreasing);
        assert_eq!(TransformSpec::hinge(1.0, 2.0).unwrap().direction(), Direction::Nondecreasing);
        assert_eq!(TransformSpec::clipped_mean(1.0).unwrap().direction(), Direction::Nondecreasing);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["indicator:delta=3", "hinge:t=2,lmax=10", "clipped:tau=5", "laplace:lambda=0.5"] {
            let spec: TransformSpec = s.parse().unwrap();
            assert_eq!(alloc::format!("{spec}"), s);
        }
        assert!("hinge:t=2".parse::<TransformSpec>().is_err());
        assert!("hinge:t=x,lmax=1".parse::<TransformSpec>().is_err());
        assert!("spline:k=1".parse::<TransformSpec>().is_err());
        assert!("hinge:t".parse::<TransformSpec>().is_err());
    }

    #[test]
    fn range_on_grid() {
        let specs = [
            TransformSpec::quantile_indicator(2.5).unwrap(),
            TransformSpec::hinge(1.0, 10.0).unwrap(),
            TransformSpec::clipped_mean(3.0).unwrap(),
            TransformSpec::laplace(0.7).unwrap(),
        ];
        for spec in &specs {
            for i in 0..=1000 {
                let v = spec.evaluate(10.0 * i as f64 / 1000.0).unwrap();
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
