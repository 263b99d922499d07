//! f-divergences between finite laws.
//!
//! `D_f(P || Q) = sum_x q(x) f(p(x) / q(x))` with the usual boundary
//! conventions: an atom with `p = q = 0` contributes nothing, an atom with
//! `q = 0 < p` contributes `p * lim_{t -> inf} f(t) / t`. An infinite limit
//! slope makes the divergence `+inf`; infinity is a value, not an error.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use core::fmt;
use core::str::FromStr;

use crate::distribution::FiniteDistribution;
use crate::error::{check_unit, Error, Result};
use crate::math;

/// Tag for the generator family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DivergenceKind {
    Kl,
    TotalVariation,
    ChiSquared,
    SquaredHellinger,
    Custom,
}

type GeneratorFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user supplied convex generator `f` with `f(1) = 0`.
///
/// The value at zero and the limit slope `lim f(t)/t` are declared, never
/// estimated. The generator must be free of side effects.
#[derive(Clone)]
pub struct CustomGenerator {
    name: String,
    f: Arc<GeneratorFn>,
    at_zero: f64,
    slope_at_infinity: f64,
}

impl CustomGenerator {
    /// Checks `f(1) = 0` exactly and convexity on a fixed test grid.
    pub fn new<F>(name: &str, f: F, at_zero: f64, slope_at_infinity: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if f(1.0) != 0.0 {
            return Err(Error::InvalidGenerator(format!(
                "{name}: f(1) = {} but must be exactly 0",
                f(1.0)
            )));
        }
        if !at_zero.is_finite() {
            return Err(Error::InvalidGenerator(format!(
                "{name}: declared f(0) = {at_zero} must be finite"
            )));
        }
        if slope_at_infinity.is_nan() || slope_at_infinity == f64::NEG_INFINITY {
            return Err(Error::InvalidGenerator(format!(
                "{name}: declared slope at infinity {slope_at_infinity} is not admissible"
            )));
        }
        let gen = Self {
            name: name.to_string(),
            f: Arc::new(f),
            at_zero,
            slope_at_infinity,
        };
        gen.check_convexity()?;
        Ok(gen)
    }

    fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.at_zero
        } else {
            (self.f)(t)
        }
    }

    fn check_convexity(&self) -> Result<()> {
        // 0, a geometric grid on [1e-4, 1e4], and points hugging 1.
        let mut grid = alloc::vec![0.0, 1.0, 1.0 - 1e-3, 1.0 + 1e-3];
        let mut t = 1e-4;
        while t <= 1e4 {
            grid.push(t);
            t *= 1.25;
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let values: alloc::vec::Vec<f64> = grid.iter().map(|&t| self.eval(t)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGenerator(format!(
                "{}: f({}) is not finite",
                self.name, grid[i]
            )));
        }
        for i in 1..grid.len() - 1 {
            let (x, y, z) = (grid[i - 1], grid[i], grid[i + 1]);
            let (fx, fy, fz) = (values[i - 1], values[i], values[i + 1]);
            let chord = ((z - y) * fx + (y - x) * fz) / (z - x);
            let slack = 1e-9 * (1.0 + math::abs(fx) + math::abs(fy) + math::abs(fz));
            if fy > chord + slack {
                return Err(Error::InvalidGenerator(format!(
                    "{}: not convex at t = {y} (f = {fy}, chord = {chord})",
                    self.name
                )));
            }
        }
        // Secant slopes of a convex function increase towards the limit slope.
        let last = grid.len() - 1;
        let secant = (values[last] - values[last - 1]) / (grid[last] - grid[last - 1]);
        if secant > self.slope_at_infinity + 1e-9 * (1.0 + math::abs(secant)) {
            return Err(Error::InvalidGenerator(format!(
                "{}: secant slope {secant} exceeds declared slope at infinity {}",
                self.name, self.slope_at_infinity
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for CustomGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomGenerator")
            .field("name", &self.name)
            .field("at_zero", &self.at_zero)
            .field("slope_at_infinity", &self.slope_at_infinity)
            .finish_non_exhaustive()
    }
}

/// Identifies an f-divergence.
///
/// Squared Hellinger uses `f(t) = (sqrt(t) - 1)^2`, so its values lie in
/// `[0, 2]`. Total variation uses `f(t) = |t - 1| / 2`.
#[derive(Debug, Clone)]
pub enum DivergenceSpec {
    Kl,
    TotalVariation,
    ChiSquared,
    SquaredHellinger,
    Custom(CustomGenerator),
}

impl DivergenceSpec {
    /// The four named families.
    pub const NAMED: [DivergenceSpec; 4] = [
        DivergenceSpec::Kl,
        DivergenceSpec::TotalVariation,
        DivergenceSpec::ChiSquared,
        DivergenceSpec::SquaredHellinger,
    ];

    pub fn custom<F>(name: &str, f: F, at_zero: f64, slope_at_infinity: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        CustomGenerator::new(name, f, at_zero, slope_at_infinity).map(Self::Custom)
    }

    pub fn kind(&self) -> DivergenceKind {
        match self {
            Self::Kl => DivergenceKind::Kl,
            Self::TotalVariation => DivergenceKind::TotalVariation,
            Self::ChiSquared => DivergenceKind::ChiSquared,
            Self::SquaredHellinger => DivergenceKind::SquaredHellinger,
            Self::Custom(_) => DivergenceKind::Custom,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Self::Kl => "kl",
            Self::TotalVariation => "tv",
            Self::ChiSquared => "chi2",
            Self::SquaredHellinger => "hellinger",
            Self::Custom(g) => &g.name,
        }
    }

    /// The generator `f(t)` for `t >= 0`.
    pub fn generator(&self, t: f64) -> f64 {
        match self {
            Self::Kl => {
                if t == 0.0 {
                    0.0
                } else {
                    t * math::ln(t)
                }
            }
            Self::TotalVariation => 0.5 * math::abs(t - 1.0),
            Self::ChiSquared => (t - 1.0) * (t - 1.0),
            Self::SquaredHellinger => {
                let r = math::sqrt(t) - 1.0;
                r * r
            }
            Self::Custom(g) => g.eval(t),
        }
    }

    /// `lim_{t -> inf} f(t) / t`, possibly `+inf`.
    pub fn slope_at_infinity(&self) -> f64 {
        match self {
            Self::Kl | Self::ChiSquared => f64::INFINITY,
            Self::TotalVariation => 0.5,
            Self::SquaredHellinger => 1.0,
            Self::Custom(g) => g.slope_at_infinity,
        }
    }

    /// Contribution `q f(p/q)` of a single atom.
    fn atom_term(&self, p: f64, q: f64) -> f64 {
        if q == 0.0 {
            return if p == 0.0 {
                0.0
            } else {
                p * self.slope_at_infinity()
            };
        }
        match self {
            // Bregman form q * (r ln r - r + 1): every term is nonnegative, so
            // nearby laws do not lose their divergence to cancellation.
            // Adds sum(q - p), which is zero for probability vectors.
            Self::Kl => {
                if p == 0.0 {
                    q
                } else {
                    let x = (p - q) / q;
                    q * ((1.0 + x) * math::ln_1p(x) - x)
                }
            }
            Self::TotalVariation => 0.5 * math::abs(p - q),
            Self::ChiSquared => (p - q) * (p - q) / q,
            Self::SquaredHellinger => {
                let d = (p - q) / (math::sqrt(p) + math::sqrt(q));
                d * d
            }
            Self::Custom(g) => q * g.eval(p / q),
        }
    }

    fn divergence_of_slices(&self, p: &[f64], q: &[f64]) -> f64 {
        let mut infinite = false;
        let total = math::sum(p.iter().zip(q).map(|(&pi, &qi)| {
            let t = self.atom_term(pi, qi);
            if t == f64::INFINITY {
                infinite = true;
                0.0
            } else {
                t
            }
        }));
        if infinite {
            f64::INFINITY
        } else {
            total.max(0.0)
        }
    }
}

impl FromStr for DivergenceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(Self::Kl),
            "tv" | "total-variation" | "total_variation" => Ok(Self::TotalVariation),
            "chi2" | "chi-squared" | "chi_squared" => Ok(Self::ChiSquared),
            "hellinger" | "squared-hellinger" | "squared_hellinger" | "h2" => {
                Ok(Self::SquaredHellinger)
            }
            other => Err(Error::InvalidGenerator(format!(
                "unknown divergence `{other}` (expected kl, tv, chi2 or hellinger)"
            ))),
        }
    }
}

/// `D_f(p || q)` for finite laws on the same atoms.
pub fn f_divergence(
    spec: &DivergenceSpec,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            what: "f_divergence",
            expected: q.len(),
            got: p.len(),
        });
    }
    Ok(spec.divergence_of_slices(p.probs(), q.probs()))
}

/// `D_f(Bern(a) || Bern(b))`, evaluated on the two-atom laws `(a, 1-a)` and
/// `(b, 1-b)` through the same summation as [`f_divergence`].
pub fn bernoulli_divergence(spec: &DivergenceSpec, a: f64, b: f64) -> Result<f64> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    Ok(bernoulli_unchecked(spec, a, b))
}

pub(crate) fn bernoulli_unchecked(spec: &DivergenceSpec, a: f64, b: f64) -> f64 {
    spec.divergence_of_slices(&[a, 1.0 - a], &[b, 1.0 - b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    fn dist(v: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let kl = DivergenceSpec::Kl;
        assert_eq!(f_divergence(&kl, &dist(&[0.3, 0.7]), &dist(&[0.3, 0.7])).unwrap(), 0.0);
        // 0.6 ln 1.5 + 0.4 ln(2/3) = 0.2 ln 1.5
        let d = f_divergence(&kl, &dist(&[0.6, 0.4]), &dist(&[0.4, 0.6])).unwrap();
        assert!((d - 0.081_093_021_621_632_9).abs() < 1e-15, "{d}");
        let d = f_divergence(&kl, &dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap();
        assert!((d - core::f64::consts::LN_2).abs() < 1e-15);
        let d = f_divergence(&kl, &dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let r = f_divergence(&DivergenceSpec::Kl, &dist(&[1.0]), &dist(&[0.5, 0.5]));
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn bernoulli_examples() {
        let d = bernoulli_divergence(&DivergenceSpec::Kl, 0.75, 0.25).unwrap();
        assert!((d - 0.5 * 3f64.ln()).abs() < 1e-12);
        let d = bernoulli_divergence(&DivergenceSpec::TotalVariation, 0.9, 0.4).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        for spec in DivergenceSpec::NAMED.iter() {
            assert_eq!(bernoulli_divergence(spec, 0.3, 0.3).unwrap(), 0.0);
        }
        assert!(bernoulli_divergence(&DivergenceSpec::Kl, 1.2, 0.3).is_err());
        assert!(bernoulli_divergence(&DivergenceSpec::Kl, 0.3, -0.1).is_err());
    }

    #[test]
    fn closed_forms_match_generic_generator() {
        // Evaluating through the generator must agree with the closed forms.
        let pairs = [(0.2, 0.7), (0.0, 0.4), (0.9, 0.0), (0.5, 0.5), (1.0, 0.3)];
        for spec in DivergenceSpec::NAMED.iter() {
            for &(a, b) in &pairs {
                let direct = bernoulli_divergence(spec, a, b).unwrap();
                let generic: f64 = [(a, b), (1.0 - a, 1.0 - b)]
                    .iter()
                    .map(|&(p, q)| {
                        if q == 0.0 {
                            if p == 0.0 {
                                0.0
                            } else {
                                p * spec.slope_at_infinity()
                            }
                        } else {
                            q * spec.generator(p / q)
                        }
                    })
                    .sum();
                if direct.is_infinite() {
                    assert!(generic.is_infinite());
                } else {
                    assert!((direct - generic).abs() < 1e-12, "{} {a} {b}", spec.name());
                }
            }
        }
    }

    #[test]
    fn custom_generator_validation() {
        // KL written as a custom generator agrees with the named one.
        let custom = DivergenceSpec::custom(
            "kl-custom",
            |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() },
            0.0,
            f64::INFINITY,
        )
        .unwrap();
        let a = bernoulli_divergence(&custom, 0.7, 0.2).unwrap();
        let b = bernoulli_divergence(&DivergenceSpec::Kl, 0.7, 0.2).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert_eq!(custom.kind(), DivergenceKind::Custom);

        // f(1) != 0
        assert!(DivergenceSpec::custom("shifted", |t: f64| t * t, 0.0, f64::INFINITY).is_err());
        // concave
        assert!(DivergenceSpec::custom("concave", |t: f64| t.sqrt() - 1.0, -1.0, 0.0).is_err());
        // slope declared too small
        assert!(DivergenceSpec::custom("chi", |t: f64| (t - 1.0).powi(2), 1.0, 2.0).is_err());
    }

    #[test]
    fn parse_names() {
        for (s, k) in [
            ("kl", DivergenceKind::Kl),
            ("TV", DivergenceKind::TotalVariation),
            ("chi2", DivergenceKind::ChiSquared),
            ("hellinger", DivergenceKind::SquaredHellinger),
        ] {
            assert_eq!(s.parse::<DivergenceSpec>().unwrap().kind(), k);
        }
        assert!("renyi".parse::<DivergenceSpec>().is_err());
    }

    #[test]
    fn bernoulli_monotone_on_each_side_of_reference() {
        let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        for spec in DivergenceSpec::NAMED.iter() {
            for &b in &grid {
                let values: Vec<f64> = grid
                    .iter()
                    .map(|&a| bernoulli_divergence(spec, a, b).unwrap())
                    .collect();
                for i in 1..grid.len() {
                    let (a0, a1) = (grid[i - 1], grid[i]);
                    if a0 >= b {
                        assert!(values[i] >= values[i - 1] - 1e-15, "{} b={b} a={a1}", spec.name());
                    }
                    if a1 <= b {
                        assert!(values[i] <= values[i - 1] + 1e-15, "{} b={b} a={a1}", spec.name());
                    }
                }
            }
        }
    }

    #[test]
    fn bernoulli_convex_in_first_argument() {
        let grid: Vec<f64> = (0..=80).map(|i| i as f64 / 80.0).collect();
        for spec in DivergenceSpec::NAMED.iter() {
            for &b in &[0.05, 0.3, 0.5, 0.77, 0.95] {
                for i in 1..grid.len() - 1 {
                    let l = bernoulli_divergence(spec, grid[i - 1], b).unwrap();
                    let m = bernoulli_divergence(spec, grid[i], b).unwrap();
                    let r = bernoulli_divergence(spec, grid[i + 1], b).unwrap();
                    assert!(m <= 0.5 * (l + r) + 1e-12, "{} b={b} a={}", spec.name(), grid[i]);
                }
            }
        }
    }

    fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..1.0, n).prop_map(|v| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            let mut out: Vec<f64> = v.iter().map(|x| (x + 1e-9 / v.len() as f64) / s).collect();
            let tail: f64 = out[1..].iter().sum();
            out[0] = 1.0 - tail;
            out
        })
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_on_diagonal(p in simplex(5), q in simplex(5), which in 0usize..4) {
            let spec = &DivergenceSpec::NAMED[which];
            let (p, q) = (dist(&p), dist(&q));
            prop_assert!(f_divergence(spec, &p, &q).unwrap() >= 0.0);
            prop_assert_eq!(f_divergence(spec, &p, &p).unwrap(), 0.0);
        }

        #[test]
        fn bernoulli_matches_two_atom_divergence(a in 0.0f64..=1.0, b in 0.0f64..=1.0, which in 0usize..4) {
            let spec = &DivergenceSpec::NAMED[which];
            let direct = bernoulli_divergence(spec, a, b).unwrap();
            let two = f_divergence(
                spec,
                &FiniteDistribution::bernoulli(a).unwrap(),
                &FiniteDistribution::bernoulli(b).unwrap(),
            ).unwrap();
            prop_assert_eq!(direct, two);
        }
    }

    #[test]
    fn bernoulli_boundary_references() {
        // KL and chi2 have infinite slope: any a > 0 against b = 0 is infinite.
        assert_eq!(bernoulli_divergence(&DivergenceSpec::Kl, 0.1, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(bernoulli_divergence(&DivergenceSpec::ChiSquared, 0.9, 1.0).unwrap(), f64::INFINITY);
        // Hellinger: (1 - sqrt(0.9))^2 + 0.1
        let h = bernoulli_divergence(&DivergenceSpec::SquaredHellinger, 0.1, 0.0).unwrap();
        assert!((h - ((1.0 - 0.9f64.sqrt()).powi(2) + 0.1)).abs() < 1e-15);
        let tv = bernoulli_divergence(&DivergenceSpec::TotalVariation, 0.0, 1.0).unwrap();
        assert_eq!(tv, 1.0);
    }
}
