//! First-passage percolation on the cell-adjacency graph of a Voronoi
//! tessellation, with i.i.d. marks on faces.
//!
//! A curve pays the mark of every face it crosses, so passage times between
//! points reduce to weighted shortest paths between their cells.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::marks::MarkDistribution;
use crate::polygon::Point;
use crate::rng;
use crate::stats::MeanSe;
use crate::voronoi::{sample_voronoi, Tessellation2D, MARGIN_FACTOR};

/// Face marks of a tessellation.
#[derive(Debug, Clone)]
pub struct MarkedGraph {
    pub marks: MarkDistribution,
    pub seed: u64,
    /// One mark per face, in face order.
    pub face_marks: Vec<f64>,
}

impl MarkedGraph {
    /// Every mark multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Ok(Self {
            marks: self.marks.scaled(c)?,
            seed: self.seed,
            face_marks: self.face_marks.iter().map(|m| m * c).collect(),
        })
    }
}

pub fn assign_marks(t: &Tessellation2D, marks: &MarkDistribution, seed: u64) -> MarkedGraph {
    let mut rng = rng::stream(seed, 1);
    let face_marks = (0..t.faces.len()).map(|_| marks.sample(&mut rng)).collect();
    MarkedGraph { marks: marks.clone(), seed, face_marks }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `sources` (all at distance 0). `visit` is called for each
/// settled cell in order of distance and returns `false` to stop.
///
/// Settling a non-interior cell censors the search: its adjacency may be
/// wrong, so `Err(Censored)` is returned unless `visit` stopped first.
pub fn dijkstra(
    t: &Tessellation2D,
    mg: &MarkedGraph,
    sources: &[usize],
    mut visit: impl FnMut(usize, f64) -> bool,
) -> Result<()> {
    if mg.face_marks.len() != t.faces.len() {
        return Err(Error::invalid("mark count does not match face count"));
    }
    let mut dist = vec![f64::INFINITY; t.n_cells()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry { dist: 0.0, cell: s });
    }
    while let Some(Entry { dist: d, cell: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if !visit(u, d) {
            return Ok(());
        }
        if !t.cells[u].interior {
            return Err(Error::Censored(format!("search settled margin cell {u} at distance {d}")));
        }
        for &(w, face) in &t.graph.neighbors[u] {
            let nd = d + mg.face_marks[face];
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Entry { dist: nd, cell: w });
            }
        }
    }
    Ok(())
}

/// `tau(x, y)`: weighted shortest path between the cells of `x` and `y`.
pub fn tess_passage_time(mg: &MarkedGraph, t: &Tessellation2D, x: Point, y: Point) -> Result<f64> {
    let (a, b) = (t.cell_at(x)?, t.cell_at(y)?);
    if a == b {
        return Ok(0.0);
    }
    let mut found = None;
    dijkstra(t, mg, &[a], |u, d| {
        if u == b {
            found = Some(d);
            false
        } else {
            true
        }
    })?;
    found.ok_or_else(|| Error::Censored("target not reachable".into()))
}

/// Passage times from `x` to each target; targets not settled before the
/// search is censored come back as `None`.
pub fn passage_times_from(mg: &MarkedGraph, t: &Tessellation2D, x: Point, targets: &[Point]) -> Result<Vec<Option<f64>>> {
    let src = t.cell_at(x)?;
    let cells: Vec<usize> = targets.iter().map(|&y| t.cell_at(y)).collect::<Result<_>>()?;
    let mut out = vec![None; targets.len()];
    let mut left = cells.len();
    let res = dijkstra(t, mg, &[src], |u, d| {
        for (k, &c) in cells.iter().enumerate() {
            if c == u && out[k].is_none() {
                out[k] = Some(d);
                left -= 1;
            }
        }
        left > 0
    });
    match res {
        Ok(()) | Err(Error::Censored(_)) => Ok(out),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeConstantRow {
    pub r: f64,
    /// Mean of `tau(0, r u) / r` over uncensored replicates.
    pub mean: f64,
    pub stderr: f64,
    pub n_used: usize,
    pub n_censored: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimeConstantEstimate {
    pub lambda: f64,
    pub mark_spec: String,
    pub u: Point,
    pub rows: Vec<TimeConstantRow>,
}

impl TimeConstantEstimate {
    /// For each `r` with `2r` also present: `(r, E tau(2ru) - 2 E tau(ru), joint stderr)`.
    /// Subadditivity predicts a gap at most zero up to noise.
    pub fn subadditivity_gaps(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for a in &self.rows {
            if let Some(b) = self.rows.iter().find(|b| (b.r - 2.0 * a.r).abs() < 1e-9 * b.r) {
                let gap = 2.0 * a.r * (b.mean - a.mean);
                let se = 2.0 * a.r * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
                out.push((a.r, gap, se));
            }
        }
        out
    }
}

/// Euclidean reach of the Dijkstra search per unit of target distance.
/// Measured p99 reach is about 1.7 for deterministic marks at short range
/// and 2.5 for exponential marks at `r = 10`, falling towards 1.3 to 1.6 at
/// `r = 40`. Heavy zero atoms can exceed it and then censor.
pub const SEARCH_REACH: f64 = 2.0;

/// Safe radius used for passage times up to distance `r_max`.
pub fn safe_radius_for(lambda: f64, r_max: f64) -> f64 {
    SEARCH_REACH * r_max + 2.0 * MARGIN_FACTOR / lambda.sqrt()
}

/// Monte Carlo estimate of `tau(0, r u) / r` for each `r`, one tessellation
/// and marking per replicate shared across radii.
pub fn time_constant_estimate(
    lambda: f64,
    marks: &MarkDistribution,
    u: Point,
    r_list: &[f64],
    n_reps: usize,
    seed: u64,
) -> Result<TimeConstantEstimate> {
    if r_list.is_empty() || r_list.windows(2).any(|w| !(w[0] < w[1])) || !(r_list[0] > 0.0) {
        return Err(Error::invalid("radii must be positive and strictly increasing"));
    }
    if n_reps < 2 {
        return Err(Error::invalid("need at least 2 replicates"));
    }
    let norm = u[0].hypot(u[1]);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("direction must be a unit vector, norm {norm}")));
    }
    let r_max = *r_list.last().unwrap();
    let r_safe = safe_radius_for(lambda, r_max);
    let r_gen = r_safe + MARGIN_FACTOR / lambda.sqrt();
    let targets: Vec<Point> = r_list.iter().map(|r| [r * u[0], r * u[1]]).collect();

    let per_rep: Vec<Vec<Option<f64>>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let s = rng::derive_seed(seed, rep);
            let t = sample_voronoi(lambda, r_gen, r_safe, s)?;
            let mg = assign_marks(&t, marks, s);
            passage_times_from(&mg, &t, [0.0, 0.0], &targets)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (k, &r) in r_list.iter().enumerate() {
        let vals: Vec<f64> = per_rep.iter().filter_map(|v| v[k]).map(|tau| tau / r).collect();
        let n_censored = n_reps - vals.len();
        if n_censored as f64 > 0.01 * n_reps as f64 {
            return Err(Error::WindowTooSmall(format!("{n_censored} of {n_reps} replicates censored at r={r}")));
        }
        let ms = MeanSe::of(&vals);
        rows.push(TimeConstantRow { r, mean: ms.mean, stderr: ms.stderr, n_used: vals.len(), n_censored });
    }
    Ok(TimeConstantEstimate { lambda, mark_spec: marks.to_string(), u, rows })
}

/// Number of cells meeting `[-h, h]^2`.
pub fn moment_diagnostic(t: &Tessellation2D, h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::invalid(format!("half-width must be > 0, got {h}")));
    }
    if h * std::f64::consts::SQRT_2 > t.r_safe {
        return Err(Error::WindowTooSmall(format!("box of half-width {h} exceeds safe radius {}", t.r_safe)));
    }
    match t.cells_meeting_box([-h, -h], [h, h]) {
        Ok(c) => Ok(c.len()),
        Err(Error::Censored(m)) => Err(Error::WindowTooSmall(m)),
        Err(e) => Err(e),
    }
}
