//! Windowed sampling of marked Poisson hyperplane processes, crossing
//! queries, and exact compound-Poisson reference values.
//!
//! A hyperplane `E(u, r) = { x : <x,u> = r }` is stored with `r >= 0`; the
//! process restricted to offsets `r <= R` has `Poisson(gamma R)` planes with
//! i.i.d. `Uniform[0, R]` offsets and `phi`-distributed directions. Every plane
//! meeting a segment inside the ball of radius `R` is sampled.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::directional::DirectionalDistribution;
use crate::error::{Error, Result};
use crate::geometry::{unit, Vector};
use crate::marks::MarkDistribution;
use crate::rng::{self, SeedStream};
use crate::stats;

const WINDOW_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub u: Vector,
    pub r: f64,
}

impl Hyperplane {
    pub fn new(u: Vector, r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::invalid(format!("hyperplane offset must be finite and >= 0, got {r}")));
        }
        Ok(Self { u: unit(u)?, r })
    }

    /// Signed distance-like value `<p,u> - r`.
    #[inline]
    pub fn side(&self, p: &Vector) -> f64 {
        p.dot(&self.u) - self.r
    }

    /// Whether the plane meets the half-open segment `[x, y)`.
    ///
    /// A plane through `x` counts, a plane through `y` only does not; the
    /// empty segment `[x, x)` meets nothing. This makes counts along
    /// collinear concatenations exactly additive.
    #[inline]
    pub fn meets_half_open(&self, x: &Vector, y: &Vector) -> bool {
        if x == y {
            return false;
        }
        let sx = self.side(x);
        let sy = self.side(y);
        sx == 0.0 || (sx < 0.0 && sy > 0.0) || (sx > 0.0 && sy < 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedHyperplane {
    pub plane: Hyperplane,
    pub mark: f64,
}

/// One realization of the marked process inside the window of radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhtSample {
    pub gamma: f64,
    pub phi: DirectionalDistribution,
    pub marks: MarkDistribution,
    pub window: f64,
    pub seed: u64,
    pub planes: Vec<MarkedHyperplane>,
}

/// Sample with the stream `(seed, 0)`.
pub fn sample_pht(
    gamma: f64,
    phi: &DirectionalDistribution,
    window: f64,
    marks: &MarkDistribution,
    seed: u64,
) -> Result<PhtSample> {
    let mut rng = rng::stream(seed, 0);
    sample_pht_with(gamma, phi, window, marks, seed, &mut rng)
}

/// Sample from a caller-supplied stream; `seed` is recorded as metadata.
pub fn sample_pht_with(
    gamma: f64,
    phi: &DirectionalDistribution,
    window: f64,
    marks: &MarkDistribution,
    seed: u64,
    rng: &mut SeedStream,
) -> Result<PhtSample> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("intensity must be > 0, got {gamma}")));
    }
    if !(window >= 0.0) || !window.is_finite() {
        return Err(Error::invalid(format!("window radius must be >= 0, got {window}")));
    }
    let mean = gamma * window;
    let count = if mean > 0.0 {
        Poisson::new(mean).map_err(|e| Error::NumericFailure(format!("poisson({mean}): {e}")))?.sample(rng) as usize
    } else {
        0
    };
    let mut planes = Vec::with_capacity(count);
    for _ in 0..count {
        let u = phi.sample(rng);
        let r = rng.random::<f64>() * window;
        let mark = marks.sample(rng);
        planes.push(MarkedHyperplane { plane: Hyperplane { u, r }, mark });
    }
    Ok(PhtSample { gamma, phi: phi.clone(), marks: marks.clone(), window, seed, planes })
}

impl PhtSample {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn check_query(&self, p: &Vector) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::invalid(format!("query has dimension {}, sample has {}", p.len(), self.dim())));
        }
        let n = p.norm();
        if n > self.window * (1.0 + WINDOW_SLACK) + 1e-12 {
            return Err(Error::OutOfWindow(format!("|x| = {n} exceeds window radius {}", self.window)));
        }
        Ok(())
    }

    /// Number of planes meeting `[x, y)`.
    pub fn crossing_count(&self, x: &Vector, y: &Vector) -> Result<usize> {
        self.check_query(x)?;
        self.check_query(y)?;
        Ok(self.planes.iter().filter(|p| p.plane.meets_half_open(x, y)).count())
    }

    /// Sum of marks over planes meeting `[x, y)`.
    ///
    /// Any curve from `x` to `y` crosses every plane separating them and the
    /// straight segment crosses no other, so this is the exact passage time.
    pub fn passage_time(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_query(x)?;
        self.check_query(y)?;
        Ok(self.planes.iter().filter(|p| p.plane.meets_half_open(x, y)).map(|p| p.mark).sum())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = JsonlHeader {
            gamma: self.gamma,
            phi: self.phi.to_string(),
            marks: self.marks.to_string(),
            window: self.window,
            seed: self.seed,
            dim: self.dim(),
            n_planes: self.planes.len(),
        };
        serde_json::to_writer(&mut w, &header)?;
        writeln!(w)?;
        for p in &self.planes {
            let rec = JsonlPlane { u: p.plane.u.iter().copied().collect(), r: p.plane.r, x: p.mark };
            serde_json::to_writer(&mut w, &rec)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let first = lines.next().ok_or_else(|| Error::Parse("empty sample stream".into()))??;
        let header: JsonlHeader = serde_json::from_str(&first)?;
        let mut planes = Vec::with_capacity(header.n_planes);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlPlane = serde_json::from_str(&line)?;
            if rec.u.len() != header.dim {
                return Err(Error::Parse("plane dimension does not match header".into()));
            }
            planes.push(MarkedHyperplane { plane: Hyperplane::new(Vector::from_vec(rec.u), rec.r)?, mark: rec.x });
        }
        if planes.len() != header.n_planes {
            return Err(Error::Parse(format!("header announces {} planes, found {}", header.n_planes, planes.len())));
        }
        Ok(PhtSample {
            gamma: header.gamma,
            phi: header.phi.parse()?,
            marks: header.marks.parse()?,
            window: header.window,
            seed: header.seed,
            planes,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlHeader {
    gamma: f64,
    phi: String,
    marks: String,
    #[serde(rename = "R")]
    window: f64,
    seed: u64,
    dim: usize,
    n_planes: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonlPlane {
    u: Vec<f64>,
    r: f64,
    x: f64,
}

/// `Lambda(x) = gamma * int <x,u>_+ phi(du)`, the expected number of sampled
/// planes meeting `[0, x]`.
pub fn expected_crossings(gamma: f64, phi: &DirectionalDistribution, x: &Vector) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("intensity must be > 0, got {gamma}")));
    }
    Ok(gamma * phi.mean_positive_part(x)?)
}

/// Crossing intensity under the `E|[0,x] cap Phi| = 2 h(x)` convention, where
/// `h` is the zonoid support function. It is four times [`expected_crossings`]
/// and is reported alongside it, never used for inference.
pub fn zonoid_convention_crossings(gamma: f64, phi: &DirectionalDistribution, x: &Vector) -> Result<f64> {
    Ok(2.0 * phi.zonoid_support(gamma, x)?)
}

/// Mean `lambda E[X]` and variance `lambda E[X^2]` of a compound Poisson sum.
pub fn compound_poisson_stats(lambda: f64, marks: &MarkDistribution) -> Result<(f64, f64)> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("poisson mean must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok((0.0, 0.0));
    }
    Ok((lambda * marks.mean(), lambda * marks.moment(2.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailSide {
    Upper,
    Lower,
}

impl std::str::FromStr for TailSide {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "upper" => Ok(TailSide::Upper),
            "lower" => Ok(TailSide::Lower),
            other => Err(Error::Parse(format!("tail side must be `upper` or `lower`, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub lambda: f64,
    pub x: f64,
    pub side: TailSide,
    /// `P[P >= lambda + x]` or `P[P <= lambda - x]`.
    pub exact: f64,
    pub ln_exact: f64,
    /// `exp(-x^2 / (2 lambda))`.
    pub gaussian_bound: f64,
    /// Cramér–Chernoff bound `exp(-lambda eta(+-x/lambda))`.
    pub chernoff_bound: f64,
}

impl TailReport {
    /// The sub-Gaussian bound fails to dominate the exact tail.
    pub fn violation(&self) -> bool {
        !dominates(self.gaussian_bound, self.exact)
    }

    pub fn chernoff_holds(&self) -> bool {
        dominates(self.chernoff_bound, self.exact)
    }
}

/// `exact <= bound` up to a relative rounding allowance.
fn dominates(bound: f64, exact: f64) -> bool {
    exact <= bound * (1.0 + 1e-12)
}

/// `eta(t) = (1 + t) ln(1 + t) - t` for `t >= -1`.
fn eta(t: f64) -> f64 {
    if t <= -1.0 {
        return 1.0;
    }
    let s = 1.0 + t;
    s * s.ln() - t
}

/// Exact Poisson tail next to the sub-Gaussian and Chernoff bounds.
pub fn poisson_tail(lambda: f64, x: f64, side: TailSide) -> Result<TailReport> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("poisson mean must be > 0, got {lambda}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::invalid(format!("deviation must be >= 0, got {x}")));
    }
    let gaussian_bound = (-x * x / (2.0 * lambda)).exp();
    let (ln_exact, chernoff_bound) = match side {
        TailSide::Upper => {
            let k = (lambda + x).ceil().max(0.0) as u64;
            (stats::poisson_ln_sf(k, lambda), (-lambda * eta(x / lambda)).exp())
        }
        TailSide::Lower => {
            let t = lambda - x;
            if t < 0.0 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                (stats::poisson_ln_cdf(t.floor() as u64, lambda), (-lambda * eta(-x / lambda)).exp())
            }
        }
    };
    Ok(TailReport { lambda, x, side, exact: ln_exact.exp(), ln_exact, gaussian_bound, chernoff_bound })
}
