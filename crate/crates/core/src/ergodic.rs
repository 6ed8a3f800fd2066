//! Monte Carlo checks of the graph-ball ergodic theorem and Palm identities
//! for planar Poisson–Voronoi tessellations.
//!
//! Nothing here assumes the limit shape of the graph metric is known: the
//! checks compare ratios and independent estimators of the same quantity.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polygon;
use crate::rng;
use crate::stats::{ratio_estimate, MeanSe};
use crate::voronoi::{safe_radius, sample_voronoi, GraphBall, Tessellation2D, MARGIN_FACTOR};

pub type CellEval = Arc<dyn Fn(&Tessellation2D, usize) -> f64 + Send + Sync>;

/// Nonnegative function of a cell within its tessellation.
#[derive(Clone)]
pub struct CellFunctional {
    pub name: String,
    pub translation_invariant: bool,
    eval: CellEval,
}

impl fmt::Debug for CellFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellFunctional({})", self.name)
    }
}

impl CellFunctional {
    pub fn new(
        name: impl Into<String>,
        translation_invariant: bool,
        eval: impl Fn(&Tessellation2D, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), translation_invariant, eval: Arc::new(eval) }
    }

    pub fn eval(&self, t: &Tessellation2D, cell: usize) -> f64 {
        (self.eval)(t, cell)
    }

    pub fn constant() -> Self {
        Self::new("constant", true, |_, _| 1.0)
    }

    pub fn area() -> Self {
        Self::new("area", true, |t, i| t.cell_area(i))
    }

    pub fn perimeter() -> Self {
        Self::new("perimeter", true, |t, i| t.cell_perimeter(i))
    }

    pub fn neighbor_count() -> Self {
        Self::new("neighbors", true, |t, i| t.graph.degree(i) as f64)
    }

    /// Pointwise product, e.g. `f * area` for Palm-weighted expectations.
    pub fn times(&self, other: &CellFunctional) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(
            format!("{}*{}", self.name, other.name),
            self.translation_invariant && other.translation_invariant,
            move |t, i| a.eval(t, i) * b.eval(t, i),
        )
    }

    pub fn by_name(name: &str) -> Result<Self> {
        registry()
            .into_iter()
            .find(|f| f.name == name)
            .ok_or_else(|| Error::invalid(format!("unknown cell functional `{name}`")))
    }
}

/// The built-in functionals.
pub fn registry() -> Vec<CellFunctional> {
    vec![
        CellFunctional::constant(),
        CellFunctional::area(),
        CellFunctional::perimeter(),
        CellFunctional::neighbor_count(),
    ]
}

/// A Monte Carlo mean with its censoring count.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub n_censored: usize,
}

impl Estimate {
    fn from(ms: MeanSe, n_censored: usize) -> Self {
        Self { mean: ms.mean, stderr: ms.stderr, n_used: ms.n, n_censored }
    }

    pub fn z_against(&self, other: &Estimate) -> f64 {
        (self.mean - other.mean).abs() / (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
    }
}

/// `1 / area` of the cell containing the origin.
pub fn zero_cell_inverse_area(t: &Tessellation2D) -> Result<f64> {
    let z = t.cell_at([0.0, 0.0])?;
    if !t.cells[z].certified {
        return Err(Error::Censored("zero cell is not certified".into()));
    }
    Ok(1.0 / t.cell_area(z))
}

fn check_censoring(n_censored: usize, n: usize, max_frac: f64, what: &str) -> Result<()> {
    if n_censored as f64 > max_frac * n as f64 {
        return Err(Error::WindowTooSmall(format!("{what}: {n_censored} of {n} samples censored")));
    }
    Ok(())
}

/// Mean of `1 / area(Z0)` over independent tessellations with generator radius `r`.
pub fn cell_intensity_estimate(lambda: f64, r: f64, n_seeds: usize, seed: u64) -> Result<Estimate> {
    if n_seeds < 2 {
        return Err(Error::invalid("need at least 2 seeds"));
    }
    let r_safe = safe_radius(lambda, r);
    let vals: Vec<Option<f64>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let t = sample_voronoi(lambda, r, r_safe, rng::derive_seed(seed, i))?;
            match zero_cell_inverse_area(&t) {
                Ok(v) => Ok(Some(v)),
                Err(Error::Censored(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let used: Vec<f64> = vals.iter().flatten().copied().collect();
    let n_censored = n_seeds - used.len();
    check_censoring(n_censored, n_seeds, 1e-3, "zero cell")?;
    Ok(Estimate::from(MeanSe::of(&used), n_censored))
}

/// Mean of `f` over the members of an uncensored ball.
pub fn ball_average(t: &Tessellation2D, ball: &GraphBall, f: &CellFunctional) -> Result<f64> {
    if ball.touched_boundary {
        return Err(Error::Censored(format!("ball of radius {} reached the window margin", ball.n)));
    }
    Ok(ball.members.iter().map(|&i| f.eval(t, i)).sum::<f64>() / ball.members.len() as f64)
}

/// Palm mean `E0[f]` from cells whose generator lies in `[-1/2, 1/2]^2`,
/// pooled over seeds as a ratio of totals.
pub fn palm_oracle(lambda: f64, r: f64, n_seeds: usize, f: &CellFunctional, seed: u64) -> Result<Estimate> {
    if n_seeds < 2 {
        return Err(Error::invalid("need at least 2 seeds"));
    }
    let r_safe = safe_radius(lambda, r);
    if r_safe < std::f64::consts::FRAC_1_SQRT_2 {
        return Err(Error::WindowTooSmall(format!("safe radius {r_safe} does not contain the unit box")));
    }
    let per_seed: Vec<(f64, f64, usize)> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let t = sample_voronoi(lambda, r, r_safe, rng::derive_seed(seed, i))?;
            let (mut s, mut n, mut censored) = (0.0, 0.0, 0);
            for (j, g) in t.generators.iter().enumerate() {
                if g[0].abs() <= 0.5 && g[1].abs() <= 0.5 {
                    if t.cells[j].certified {
                        s += f.eval(&t, j);
                        n += 1.0;
                    } else {
                        censored += 1;
                    }
                }
            }
            Ok((s, n, censored))
        })
        .collect::<Result<_>>()?;
    let num: Vec<f64> = per_seed.iter().map(|p| p.0).collect();
    let den: Vec<f64> = per_seed.iter().map(|p| p.1).collect();
    let n_censored: usize = per_seed.iter().map(|p| p.2).sum();
    let total = den.iter().sum::<f64>() as usize;
    check_censoring(n_censored, total + n_censored, 1e-3, "palm cells")?;
    let ms = ratio_estimate(&num, &den);
    Ok(Estimate { mean: ms.mean, stderr: ms.stderr, n_used: total, n_censored })
}

/// Spatial average of `f(Z_x)` over the disk of radius `radius`:
/// `sum_Z area(Z ∩ D) f(Z) / area(D)`.
pub fn wiener_average(t: &Tessellation2D, radius: f64, f: &CellFunctional) -> Result<f64> {
    if !(radius > 0.0 && radius <= t.r_safe) {
        return Err(Error::OutOfWindow(format!("radius {radius} outside (0, {}]", t.r_safe)));
    }
    let disk = std::f64::consts::PI * radius * radius;
    let (mut covered, mut s) = (0.0, 0.0);
    for (i, c) in t.cells.iter().enumerate().filter(|(_, c)| c.certified) {
        let a = polygon::disk_intersection_area(&c.polygon, radius);
        if a > 0.0 {
            covered += a;
            s += a * f.eval(t, i);
        }
    }
    if covered < disk * (1.0 - 1e-9) {
        return Err(Error::Censored(format!("certified cells cover {covered} of {disk}")));
    }
    Ok(s / disk)
}

/// One CSV row of a ball-growth series.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicRow {
    pub lambda: f64,
    pub n: usize,
    pub seed: u64,
    pub ball_size: usize,
    pub ball_area: f64,
    pub avg_area: f64,
    pub avg_perimeter: f64,
    pub avg_neighbors: f64,
    pub censored: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicSeries {
    pub lambda: f64,
    pub n_max: usize,
    pub n_seeds: usize,
    /// Seed-major, then `n = 0..=n_max`.
    pub rows: Vec<ErgodicRow>,
}

impl ErgodicSeries {
    pub fn at(&self, n: usize) -> impl Iterator<Item = &ErgodicRow> {
        self.rows.iter().filter(move |r| r.n == n)
    }

    fn uncensored(&self, n: usize) -> Vec<&ErgodicRow> {
        self.at(n).filter(|r| !r.censored).collect()
    }

    pub fn censored_count(&self, n: usize) -> usize {
        self.at(n).filter(|r| r.censored).count()
    }

    /// `sum |B_n| / sum area(B_n)` over uncensored seeds.
    pub fn size_area_ratio(&self, n: usize) -> MeanSe {
        let rows = self.uncensored(n);
        let num: Vec<f64> = rows.iter().map(|r| r.ball_size as f64).collect();
        let den: Vec<f64> = rows.iter().map(|r| r.ball_area).collect();
        ratio_estimate(&num, &den)
    }

    /// Seed mean of a per-row statistic at radius `n`.
    pub fn mean_of(&self, n: usize, stat: impl Fn(&ErgodicRow) -> f64) -> MeanSe {
        let vals: Vec<f64> = self.uncensored(n).iter().map(|r| stat(r)).collect();
        MeanSe::of(&vals)
    }

    /// Mean `|B_n| / n^2` and `area(B_n) / n^2`.
    pub fn normalized(&self, n: usize) -> (f64, f64) {
        let n2 = (n * n) as f64;
        (self.mean_of(n, |r| r.ball_size as f64).mean / n2, self.mean_of(n, |r| r.ball_area).mean / n2)
    }
}

/// Euclidean reach of a graph ball of hop radius `n`, in units of `1/sqrt(lambda)`.
pub const HOP_REACH: f64 = 1.6;

/// Safe radius for balls up to hop radius `n`.
pub fn ball_safe_radius(lambda: f64, n: usize) -> f64 {
    (HOP_REACH * n as f64 + 6.0) / lambda.sqrt()
}

/// Ball sizes, areas and member averages for `n = 0..=n_max` around the
/// zero cell, one tessellation per seed.
pub fn ball_growth_series(lambda: f64, n_max: usize, n_seeds: usize, seed: u64) -> Result<ErgodicSeries> {
    if n_seeds == 0 {
        return Err(Error::invalid("need at least one seed"));
    }
    let r_safe = ball_safe_radius(lambda, n_max);
    let r_gen = r_safe + MARGIN_FACTOR / lambda.sqrt();
    let per_seed: Vec<Vec<ErgodicRow>> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let s = rng::derive_seed(seed, i);
            let t = sample_voronoi(lambda, r_gen, r_safe, s)?;
            let root = t.cell_at([0.0, 0.0])?;
            let ball = t.graph_ball(root, n_max);
            Ok(series_rows(&t, &ball, lambda, s))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ErgodicRow> = per_seed.into_iter().flatten().collect();
    let series = ErgodicSeries { lambda, n_max, n_seeds, rows };
    check_censoring(series.censored_count(n_max), n_seeds, 0.01, "graph balls")?;
    Ok(series)
}

fn series_rows(t: &Tessellation2D, ball: &GraphBall, lambda: f64, seed: u64) -> Vec<ErgodicRow> {
    let mut rows = Vec::with_capacity(ball.n + 1);
    let (mut size, mut area, mut perim, mut nbrs) = (0usize, 0.0, 0.0, 0.0);
    let mut censored = false;
    let mut k = 0;
    for n in 0..=ball.n {
        while k < ball.members.len() && ball.depth[k] <= n {
            let c = ball.members[k];
            censored |= !t.cells[c].interior;
            size += 1;
            area += t.cell_area(c);
            perim += t.cell_perimeter(c);
            nbrs += t.graph.degree(c) as f64;
            k += 1;
        }
        let m = size as f64;
        let nan_if = |v: f64| if censored { f64::NAN } else { v };
        rows.push(ErgodicRow {
            lambda,
            n,
            seed,
            ball_size: size,
            ball_area: nan_if(area),
            avg_area: nan_if(area / m),
            avg_perimeter: nan_if(perim / m),
            avg_neighbors: nan_if(nbrs / m),
            censored,
        });
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::voronoi::sample_voronoi;

    fn lattice() -> Tessellation2D {
        let mut gens = Vec::new();
        for i in -8..8 {
            for j in -8..8 {
                gens.push([i as f64 + 0.5, j as f64 + 0.5]);
            }
        }
        Tessellation2D::from_generators(gens, 1.0, 12.0, 6.0).unwrap()
    }

    #[test]
    fn unit_lattice_has_unit_intensity() {
        assert_eq!(zero_cell_inverse_area(&lattice()).unwrap(), 1.0);
    }

    #[test]
    fn constant_average_is_one() {
        let t = sample_voronoi(1.0, 20.0, 15.0, 1).unwrap();
        let root = t.cell_at([0.0, 0.0]).unwrap();
        for n in [0, 1, 4] {
            let b = t.graph_ball(root, n);
            assert_eq!(ball_average(&t, &b, &CellFunctional::constant()).unwrap(), 1.0);
        }
        let b = t.graph_ball(root, 100);
        assert!(ball_average(&t, &b, &CellFunctional::constant()).is_err());
    }

    #[test]
    fn registry_lookup() {
        let names: Vec<String> = registry().into_iter().map(|f| f.name).collect();
        assert_eq!(names, ["constant", "area", "perimeter", "neighbors"]);
        assert!(CellFunctional::by_name("volume").is_err());
        let t = lattice();
        let c = t.cell_at([0.1, 0.1]).unwrap();
        assert_eq!(CellFunctional::by_name("perimeter").unwrap().eval(&t, c), 4.0);
        assert_eq!(CellFunctional::area().times(&CellFunctional::neighbor_count()).eval(&t, c), 4.0);
    }

    #[test]
    fn functionals_are_translation_invariant() {
        let t = sample_voronoi(1.0, 20.0, 15.0, 2).unwrap();
        let shift = [0.37, -1.21];
        let moved: Vec<[f64; 2]> = t.generators.iter().map(|g| [g[0] + shift[0], g[1] + shift[1]]).collect();
        let t2 = Tessellation2D::from_generators(moved, 1.0, 22.0, 15.0).unwrap();
        for f in registry() {
            assert!(f.translation_invariant);
            for i in (0..t.n_cells()).filter(|&i| t.cells[i].interior && t2.cells[i].certified) {
                let (a, b) = (f.eval(&t, i), f.eval(&t2, i));
                assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} cell {i}: {a} vs {b}", f.name);
            }
        }
    }

    #[test]
    fn wiener_average_of_constant() {
        let t = sample_voronoi(1.0, 20.0, 15.0, 3).unwrap();
        let w = wiener_average(&t, 10.0, &CellFunctional::constant()).unwrap();
        assert!((w - 1.0).abs() < 1e-9);
        assert!(wiener_average(&t, 16.0, &CellFunctional::constant()).is_err());
    }

    #[test]
    fn series_rows_are_cumulative() {
        let s = ball_growth_series(1.0, 5, 3, 0).unwrap();
        assert_eq!(s.rows.len(), 3 * 6);
        for seed_rows in s.rows.chunks(6) {
            assert_eq!(seed_rows[0].ball_size, 1);
            assert!(seed_rows.windows(2).all(|w| w[0].ball_size < w[1].ball_size));
        }
    }

    #[test]
    fn palm_constant_is_one() {
        let e = palm_oracle(1.0, 8.0, 20, &CellFunctional::constant(), 0).unwrap();
        assert_eq!(e.mean, 1.0);
    }
}
