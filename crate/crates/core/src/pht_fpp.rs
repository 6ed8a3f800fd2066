//! First-passage percolation on the Poisson hyperplane tessellation.
//!
//! With i.i.d. marks attached to whole hyperplanes the straight segment is
//! always a geodesic, so passage times are compound-Poisson sums and the time
//! constant is `mu(x) = E[X] Lambda(x)`, a norm whose unit ball is the limit
//! shape. The experiments here compare simulated passage times against those
//! closed forms.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::directional::DirectionalDistribution;
use crate::error::{Error, Result};
use crate::geometry::{sphere_covering, vector, Vector};
use crate::hyperplane::{expected_crossings, sample_pht_with, PhtSample};
use crate::marks::MarkDistribution;
use crate::rng;
use crate::stats::MeanSe;

/// `1 + sqrt(8)`, the slack constant of the spherical inner-product estimate.
pub const C2: f64 = 1.0 + 2.828_427_124_746_190_1;

#[derive(Debug, Clone)]
pub struct TimeConstantModel {
    pub gamma: f64,
    pub phi: DirectionalDistribution,
    pub marks: MarkDistribution,
}

impl TimeConstantModel {
    pub fn new(gamma: f64, phi: DirectionalDistribution, marks: MarkDistribution) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::invalid(format!("intensity must be > 0, got {gamma}")));
        }
        Ok(Self { gamma, phi, marks })
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    /// `mu(x) = E[X] * Lambda(x)`.
    pub fn mu(&self, x: &Vector) -> Result<f64> {
        Ok(self.marks.mean() * expected_crossings(self.gamma, &self.phi, x)?)
    }

    fn sample(&self, window: f64, seed: u64, rep: u64) -> Result<PhtSample> {
        let mut rng = rng::stream(seed, rep);
        sample_pht_with(self.gamma, &self.phi, window, &self.marks, seed, &mut rng)
    }
}

pub fn mu(model: &TimeConstantModel, x: &Vector) -> Result<f64> {
    model.mu(x)
}

/// Passage time between two points of a sample.
pub fn passage_time(s: &PhtSample, x: &Vector, y: &Vector) -> Result<f64> {
    s.passage_time(x, y)
}

/// Directions used for sweeps and shapes.
///
/// In the plane this is the angular grid `2 pi i / n`; when `n` is even the
/// second half is the exact negation of the first. In higher dimensions the
/// covering directions are used, refined until there are at least `n`.
pub fn direction_grid(d: usize, n: usize) -> Result<Vec<Vector>> {
    if n == 0 {
        return Err(Error::invalid("need at least one direction"));
    }
    if d == 2 {
        let half = n / 2;
        let mut dirs: Vec<Vector> = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                vector(&[t.cos(), t.sin()])
            })
            .collect();
        if n.is_multiple_of(2) {
            for i in 0..half {
                dirs[i + half] = -&dirs[i];
            }
        }
        return Ok(dirs);
    }
    let mut delta = 1.0;
    loop {
        let c = sphere_covering(d, delta)?;
        if c.k() >= n {
            return Ok(close_under_negation(c.into_directions()));
        }
        delta *= 0.8;
    }
}

fn close_under_negation(mut dirs: Vec<Vector>) -> Vec<Vector> {
    let key = |u: &Vector| u.iter().map(|c| (c + 0.0).to_bits()).collect::<Vec<u64>>();
    let mut seen: std::collections::HashSet<Vec<u64>> = dirs.iter().map(key).collect();
    for i in 0..dirs.len() {
        let neg = -&dirs[i];
        if seen.insert(key(&neg)) {
            dirs.push(neg);
        }
    }
    dirs
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitShape {
    /// `(u, 1 / mu(u))`.
    pub boundary: Vec<(Vec<f64>, f64)>,
    pub n_dirs: usize,
}

impl LimitShape {
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.boundary.iter().map(|(_, r)| *r)
    }

    pub fn boundary_points(&self) -> Vec<Vec<f64>> {
        self.boundary.iter().map(|(u, r)| u.iter().map(|c| c * r).collect()).collect()
    }

    /// Radius of the direction equal to `u` exactly, if present.
    pub fn radius_of(&self, u: &[f64]) -> Option<f64> {
        self.boundary
            .iter()
            .find(|(v, _)| v.iter().zip(u).all(|(a, b)| a == b))
            .map(|(_, r)| *r)
    }
}

/// Boundary of `{ x : mu(x) <= 1 }` sampled on [`direction_grid`].
pub fn limit_shape(model: &TimeConstantModel, n_dirs: usize) -> Result<LimitShape> {
    if n_dirs < 8 {
        return Err(Error::invalid(format!("need at least 8 directions, got {n_dirs}")));
    }
    let dirs = direction_grid(model.dim(), n_dirs)?;
    let mut boundary = Vec::with_capacity(dirs.len());
    for u in &dirs {
        let m = model.mu(u)?;
        if !(m > 0.0) {
            return Err(Error::DegenerateShape(format!("mu vanishes in direction {:?}", u.as_slice())));
        }
        boundary.push((u.iter().copied().collect(), 1.0 / m));
    }
    Ok(LimitShape { n_dirs: boundary.len(), boundary })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub u: Vec<f64>,
    pub r: f64,
    pub mean_tau_over_r: f64,
    pub stderr: f64,
    pub mu: f64,
}

/// Monte Carlo mean of `tau(0, r u) / r` for each grid direction, next to `mu(u)`.
pub fn direction_sweep(
    model: &TimeConstantModel,
    r: f64,
    n_dirs: usize,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    let dirs = direction_grid(model.dim(), n_dirs)?;
    sweep_directions(model, r, &dirs, n_reps, seed)
}

/// [`direction_sweep`] on caller-chosen directions.
pub fn sweep_directions(
    model: &TimeConstantModel,
    r: f64,
    dirs: &[Vector],
    n_reps: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if !(r > 0.0) {
        return Err(Error::invalid(format!("radius must be > 0, got {r}")));
    }
    if n_reps < 2 {
        return Err(Error::invalid("need at least 2 replicates for a standard error"));
    }
    let origin = Vector::zeros(model.dim());
    let targets: Vec<Vector> = dirs.iter().map(|u| u * r).collect();
    let per_rep: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let s = model.sample(r, seed, rep)?;
            targets.iter().map(|x| Ok(s.passage_time(&origin, x)? / r)).collect()
        })
        .collect::<Result<_>>()?;

    dirs.iter()
        .enumerate()
        .map(|(j, u)| {
            let vals: Vec<f64> = per_rep.iter().map(|row| row[j]).collect();
            let ms = MeanSe::of(&vals);
            Ok(SweepRow {
                u: u.iter().copied().collect(),
                r,
                mean_tau_over_r: ms.mean,
                stderr: ms.stderr,
                mu: model.mu(u)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationRow {
    pub r: f64,
    pub eps: f64,
    pub n_reps: usize,
    pub exceed_prob: f64,
    /// `exp(-r eps^2 / m)` with `m = 8 max_u mu(u)`.
    pub reference_decay: f64,
    /// Opening of the direction covering and its size.
    pub grid_delta: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationTable {
    pub rows: Vec<DeviationRow>,
    /// `max_u mu(u)` over the finest grid used.
    pub max_mu: f64,
}

/// Covering opening matched to `eps`: `sqrt(delta) = eps / (2 (gamma c2 + c3))`
/// with `c3 = 2 sqrt 2 max_i mu(e_i)`, capped at 1.
pub fn matched_delta(model: &TimeConstantModel, eps: f64) -> Result<f64> {
    let d = model.dim();
    let mut max_axis: f64 = 0.0;
    for i in 0..d {
        let mut e = Vector::zeros(d);
        e[i] = 1.0;
        max_axis = max_axis.max(model.mu(&e)?);
    }
    let c3 = 2.0 * 2f64.sqrt() * max_axis;
    let root = eps / (2.0 * (model.gamma * C2 + c3));
    Ok((root * root).min(1.0))
}

/// Probability that `max_i |tau(0, r u_i) - mu(r u_i)| > eps r` over a
/// covering grid `{u_i}` matched to `eps`.
///
/// The grid maximum is a lower bound for the supremum over the whole sphere.
pub fn deviation_experiment(
    model: &TimeConstantModel,
    r_list: &[f64],
    eps_list: &[f64],
    n_reps: usize,
    seed: u64,
) -> Result<DeviationTable> {
    if model.marks != MarkDistribution::Deterministic(1.0) {
        return Err(Error::invalid("the deviation experiment requires unit marks (det:1)"));
    }
    if r_list.windows(2).any(|w| !(w[0] < w[1])) || r_list.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::invalid("radii must be nonnegative and strictly increasing"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("eps values must be > 0"));
    }
    if n_reps == 0 {
        return Err(Error::invalid("need at least one replicate"));
    }

    struct Grid {
        eps: f64,
        delta: f64,
        dirs: Vec<Vector>,
        mu: Vec<f64>,
        angles: Option<AngularGrid>,
    }
    let mut grids = Vec::new();
    let mut max_mu: f64 = 0.0;
    for &eps in eps_list {
        let delta = matched_delta(model, eps)?;
        let dirs = sphere_covering(model.dim(), delta)?.into_directions();
        let mu = dirs.iter().map(|u| model.mu(u)).collect::<Result<Vec<_>>>()?;
        max_mu = mu.iter().copied().fold(max_mu, f64::max);
        let angles = (model.dim() == 2).then(|| AngularGrid::new(&dirs));
        grids.push(Grid { eps, delta, dirs, mu, angles });
    }
    let m = 8.0 * max_mu;

    let mut rows = Vec::new();
    for (ri, &r) in r_list.iter().enumerate() {
        let sub_seed = rng::derive_seed(seed, ri as u64);
        // per replicate, one exceedance flag per eps
        let flags: Vec<Vec<bool>> = if r == 0.0 {
            vec![vec![false; grids.len()]; n_reps]
        } else {
            (0..n_reps as u64)
                .into_par_iter()
                .map(|rep| -> Result<Vec<bool>> {
                    let s = model.sample(r, sub_seed, rep)?;
                    grids
                        .iter()
                        .map(|g| {
                            let taus = match &g.angles {
                                Some(a) => a.passage_times(&s, r),
                                None => grid_passage_times(&s, r, &g.dirs)?,
                            };
                            let dev = taus
                                .iter()
                                .zip(&g.mu)
                                .map(|(t, mu)| (t - mu * r).abs())
                                .fold(0.0, f64::max);
                            Ok(dev > g.eps * r)
                        })
                        .collect()
                })
                .collect::<Result<_>>()?
        };
        for (gi, g) in grids.iter().enumerate() {
            let exceed = flags.iter().filter(|f| f[gi]).count();
            rows.push(DeviationRow {
                r,
                eps: g.eps,
                n_reps,
                exceed_prob: exceed as f64 / n_reps as f64,
                reference_decay: (-r * g.eps * g.eps / m).exp(),
                grid_delta: g.delta,
                grid_size: g.dirs.len(),
            });
        }
    }
    Ok(DeviationTable { rows, max_mu })
}

/// `tau(0, r u)` for each direction, by direct evaluation.
pub fn grid_passage_times(s: &PhtSample, r: f64, dirs: &[Vector]) -> Result<Vec<f64>> {
    let origin = Vector::zeros(s.dim());
    dirs.iter().map(|u| s.passage_time(&origin, &(u * r))).collect()
}

/// Planar directions sorted by angle, for evaluating `tau(0, r u)` on all of
/// them at once.
///
/// Starting from the origin, plane `E(v, a)` with `a <= r` is crossed by
/// `[0, r u)` exactly when the angle between `u` and `v` is below
/// `acos(a / r)`, so each plane adds its mark on an arc of directions.
#[derive(Debug, Clone)]
pub struct AngularGrid {
    angles: Vec<f64>,
    order: Vec<usize>,
}

impl AngularGrid {
    pub fn new(dirs: &[Vector]) -> Self {
        let mut tagged: Vec<(f64, usize)> = dirs
            .iter()
            .enumerate()
            .map(|(i, u)| (u[1].atan2(u[0]).rem_euclid(2.0 * PI), i))
            .collect();
        tagged.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { angles: tagged.iter().map(|t| t.0).collect(), order: tagged.iter().map(|t| t.1).collect() }
    }

    /// Passage times in the original direction order.
    pub fn passage_times(&self, s: &PhtSample, r: f64) -> Vec<f64> {
        let k = self.angles.len();
        let mut diff = vec![0.0; k + 1];
        let two_pi = 2.0 * PI;
        for p in &s.planes {
            let a = p.plane.r;
            if a >= r {
                continue;
            }
            let w = (a / r).acos();
            let center = p.plane.u[1].atan2(p.plane.u[0]);
            let lo = (center - w).rem_euclid(two_pi);
            let hi = lo + 2.0 * w;
            let i0 = self.angles.partition_point(|&t| t <= lo);
            if hi <= two_pi {
                let i1 = self.angles.partition_point(|&t| t < hi);
                diff[i0] += p.mark;
                diff[i1] -= p.mark;
            } else {
                diff[i0] += p.mark;
                diff[k] -= p.mark;
                let i1 = self.angles.partition_point(|&t| t < hi - two_pi);
                diff[0] += p.mark;
                diff[i1] -= p.mark;
            }
        }
        let mut out = vec![0.0; k];
        let mut acc = 0.0;
        for j in 0..k {
            acc += diff[j];
            out[self.order[j]] = acc;
        }
        out
    }
}
