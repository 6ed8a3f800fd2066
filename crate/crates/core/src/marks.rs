//! Laws of the i.i.d. passage-time marks.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Nonnegative passage-time law.
#[derive(Debug, Clone, PartialEq)]
pub enum MarkDistribution {
    Deterministic(f64),
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    /// With probability `p0` the mark is zero, otherwise it is drawn from `base`.
    ZeroAtomMix { p0: f64, base: Box<MarkDistribution> },
}

impl MarkDistribution {
    pub fn deterministic(c: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid(format!("deterministic mark must be finite and >= 0, got {c}")));
        }
        Ok(MarkDistribution::Deterministic(c))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::invalid(format!("exponential rate must be > 0, got {rate}")));
        }
        Ok(MarkDistribution::Exponential { rate })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && a < b) || !b.is_finite() {
            return Err(Error::invalid(format!("uniform marks need 0 <= a < b, got a={a}, b={b}")));
        }
        Ok(MarkDistribution::Uniform { a, b })
    }

    pub fn zero_atom_mix(p0: f64, base: MarkDistribution) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::invalid(format!("zero-atom probability must lie in [0,1), got {p0}")));
        }
        Ok(MarkDistribution::ZeroAtomMix { p0, base: Box::new(base) })
    }

    pub fn mean(&self) -> f64 {
        match self {
            MarkDistribution::Deterministic(c) => *c,
            MarkDistribution::Exponential { rate } => 1.0 / rate,
            MarkDistribution::Uniform { a, b } => 0.5 * (a + b),
            MarkDistribution::ZeroAtomMix { p0, base } => (1.0 - p0) * base.mean(),
        }
    }

    /// `E[X^order]` for `order >= 1`.
    pub fn moment(&self, order: f64) -> Result<f64> {
        if !(order >= 1.0) || !order.is_finite() {
            return Err(Error::invalid(format!("moment order must be >= 1, got {order}")));
        }
        Ok(match self {
            MarkDistribution::Deterministic(c) => c.powf(order),
            MarkDistribution::Exponential { rate } => gamma(order + 1.0) / rate.powf(order),
            MarkDistribution::Uniform { a, b } => {
                (b.powf(order + 1.0) - a.powf(order + 1.0)) / ((order + 1.0) * (b - a))
            }
            MarkDistribution::ZeroAtomMix { p0, base } => (1.0 - p0) * base.moment(order)?,
        })
    }

    /// `P[X = 0]`.
    pub fn zero_mass(&self) -> f64 {
        match self {
            MarkDistribution::Deterministic(c) if *c == 0.0 => 1.0,
            MarkDistribution::ZeroAtomMix { p0, base } => p0 + (1.0 - p0) * base.zero_mass(),
            _ => 0.0,
        }
    }

    /// Multiply every mark by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::invalid(format!("scale must be > 0, got {c}")));
        }
        Ok(match self {
            MarkDistribution::Deterministic(v) => MarkDistribution::Deterministic(v * c),
            MarkDistribution::Exponential { rate } => MarkDistribution::Exponential { rate: rate / c },
            MarkDistribution::Uniform { a, b } => MarkDistribution::Uniform { a: a * c, b: b * c },
            MarkDistribution::ZeroAtomMix { p0, base } => {
                MarkDistribution::ZeroAtomMix { p0: *p0, base: Box::new(base.scaled(c)?) }
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            MarkDistribution::Deterministic(c) => *c,
            MarkDistribution::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            MarkDistribution::Uniform { a, b } => rng.random_range(*a..*b),
            MarkDistribution::ZeroAtomMix { p0, base } => {
                if rng.random::<f64>() < *p0 {
                    0.0
                } else {
                    base.sample(rng)
                }
            }
        }
    }
}

impl fmt::Display for MarkDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkDistribution::Deterministic(c) => write!(f, "det:{c}"),
            MarkDistribution::Exponential { rate } => write!(f, "exp:{rate}"),
            MarkDistribution::Uniform { a, b } => write!(f, "unif:{a},{b}"),
            MarkDistribution::ZeroAtomMix { p0, base } => write!(f, "zeromix:{p0},{base}"),
        }
    }
}

/// Parses `det:1.0`, `exp:1.0` (rate), `unif:0,1` and `zeromix:0.3,det:1.0`.
impl FromStr for MarkDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let perr = |m: &str| Error::Parse(format!("mark spec `{s}`: {m}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| perr("bad number"));
        let (family, body) = s.split_once(':').ok_or_else(|| perr("expected `family:params`"))?;
        match family.trim() {
            "det" => Self::deterministic(num(body)?),
            "exp" => Self::exponential(num(body)?),
            "unif" => {
                let (a, b) = body.split_once(',').ok_or_else(|| perr("expected `unif:a,b`"))?;
                Self::uniform(num(a)?, num(b)?)
            }
            "zeromix" => {
                let (p0, base) = body.split_once(',').ok_or_else(|| perr("expected `zeromix:p0,base`"))?;
                Self::zero_atom_mix(num(p0)?, base.parse()?)
            }
            _ => Err(perr("unknown family")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn m(s: &str) -> MarkDistribution {
        s.parse().unwrap()
    }

    #[test]
    fn means() {
        assert_eq!(m("det:1").mean(), 1.0);
        assert_eq!(m("exp:2").mean(), 0.5);
        assert!((m("zeromix:0.3,det:1").mean() - 0.7).abs() < 1e-15);
        assert_eq!(m("unif:1,3").mean(), 2.0);
    }

    #[test]
    fn moments() {
        assert_eq!(m("det:2").moment(3.0).unwrap(), 8.0);
        assert!((m("exp:1").moment(2.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((m("unif:0,1").moment(2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((m("zeromix:0.5,exp:1").moment(2.5).unwrap() - 0.5 * gamma(3.5)).abs() < 1e-12);
        assert!(m("det:1").moment(0.5).is_err());
    }

    #[test]
    fn lyapunov_monotonicity() {
        for s in ["det:2", "exp:0.7", "unif:0.2,3", "zeromix:0.4,exp:2"] {
            let d = m(s);
            let norms: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&p| d.moment(p).unwrap().powf(1.0 / p)).collect();
            assert!(norms.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)), "{s}: {norms:?}");
        }
    }

    #[test]
    fn parse_errors() {
        for s in ["det:-1", "exp:0", "unif:1,0", "zeromix:1.0,det:1", "gauss:1", "det", "unif:1"] {
            assert!(s.parse::<MarkDistribution>().is_err(), "{s}");
        }
        for s in ["det:1", "exp:2.5", "unif:0,1", "zeromix:0.3,det:1"] {
            assert_eq!(m(s).to_string().parse::<MarkDistribution>().unwrap(), m(s));
        }
    }

    #[test]
    fn sampling_laws() {
        let mut rng = stream(1, 0);
        assert!((0..100).all(|_| m("det:1").sample(&mut rng) == 1.0));

        let n = 100_000;
        let mean: f64 = (0..n).map(|_| m("exp:1").sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02);

        let z = m("zeromix:0.5,det:2");
        let zeros = (0..10_000).filter(|_| z.sample(&mut rng) == 0.0).count();
        assert!((zeros as f64 / 1e4 - 0.5).abs() < 0.03);
        assert_eq!(z.zero_mass(), 0.5);
    }

    #[test]
    fn empirical_moments_match() {
        let mut rng = stream(2, 0);
        let n = 1_000_000;
        for s in ["exp:1.5", "unif:0,2", "zeromix:0.3,exp:1"] {
            let d = m(s);
            let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            for p in [1.0, 2.0, 3.0] {
                let vals: Vec<f64> = draws.iter().map(|x| x.powf(p)).collect();
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let want = d.moment(p).unwrap();
                assert!((mean - want).abs() < 4.0 * se, "{s} order {p}: {mean} vs {want} (se {se})");
            }
        }
    }

    #[test]
    fn scaling() {
        assert_eq!(m("exp:2").scaled(2.0).unwrap().mean(), 1.0);
        assert_eq!(m("zeromix:0.5,unif:0,2").scaled(3.0).unwrap().mean(), 1.5);
    }
}
