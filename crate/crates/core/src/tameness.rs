//! Grid fields and lattice-animal statistics behind the tameness conditions.
//!
//! Site `v` of the grid of width `delta` owns the closed box
//! `delta (v + [-1/2, 1/2]^2)`; its block is `delta (v + [-3/2, 3/2]^2)`.
//!
//! * `Y_v` counts generators in the box.
//! * `U_v` is 1 when some cell meets the box and leaves the block.
//! * `W_v` is 1 when some curve from the box to outside the block costs less than `rho`.

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hyperplane::PhtSample;
use crate::polygon::{self, Point};
use crate::rng;
use crate::tess_fpp::{dijkstra, MarkedGraph};
use crate::voronoi::Tessellation2D;

/// Values on the sites `{-b..b}^2`, row-major in the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    pub delta: f64,
    pub b: i64,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn new(delta: f64, b: i64, values: Vec<f64>) -> Result<Self> {
        let side = (2 * b + 1) as usize;
        if b < 0 || values.len() != side * side {
            return Err(Error::invalid(format!("field of radius {b} needs {} values", side * side)));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self { delta, b, values })
    }

    pub fn constant(b: i64, c: f64) -> Self {
        let side = (2 * b + 1) as usize;
        Self { delta: 1.0, b, values: vec![c; side * side] }
    }

    pub fn side(&self) -> usize {
        (2 * self.b + 1) as usize
    }

    pub fn n_sites(&self) -> usize {
        self.values.len()
    }

    pub fn index(&self, v: (i64, i64)) -> Option<usize> {
        let (i, j) = v;
        if i.abs() > self.b || j.abs() > self.b {
            return None;
        }
        Some(((i + self.b) as usize) * self.side() + (j + self.b) as usize)
    }

    pub fn site(&self, idx: usize) -> (i64, i64) {
        let s = self.side();
        ((idx / s) as i64 - self.b, (idx % s) as i64 - self.b)
    }

    pub fn get(&self, v: (i64, i64)) -> Option<f64> {
        self.index(v).map(|i| self.values[i])
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sites(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.n_sites()).map(|i| self.site(i))
    }
}

fn site_box(delta: f64, v: (i64, i64), half: f64) -> (Point, Point) {
    let c = [delta * v.0 as f64, delta * v.1 as f64];
    ([c[0] - half * delta, c[1] - half * delta], [c[0] + half * delta, c[1] + half * delta])
}

fn check_grid(delta: f64, b: i64, radius: f64) -> Result<()> {
    if !(delta > 0.0) || b < 0 {
        return Err(Error::invalid(format!("need delta > 0 and b >= 0, got delta={delta}, b={b}")));
    }
    let reach = delta * (b as f64 + 2.0) * std::f64::consts::SQRT_2;
    if reach > radius {
        return Err(Error::WindowTooSmall(format!("grid reaches {reach}, window radius is {radius}")));
    }
    Ok(())
}

/// The generator-count field `Y` and the spanning-cell field `U`.
pub fn compute_fields(t: &Tessellation2D, delta: f64, b: i64) -> Result<(GridField, GridField)> {
    check_grid(delta, b, t.r_safe)?;
    let side = (2 * b + 1) as usize;
    let mut y = GridField { delta, b, values: vec![0.0; side * side] };
    for g in &t.generators {
        let v = ((g[0] / delta + 0.5).floor() as i64, (g[1] / delta + 0.5).floor() as i64);
        if let Some(i) = y.index(v) {
            y.values[i] += 1.0;
        }
    }
    let u_vals: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let v = y.site(i);
            let (lo, hi) = site_box(delta, v, 0.5);
            let (blo, bhi) = site_box(delta, v, 1.5);
            let cells = t.cells_meeting_box(lo, hi)?;
            let spans = cells.iter().any(|&c| !polygon::inside_box(&t.cells[c].polygon, blo, bhi));
            Ok(if spans { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok((y, GridField { delta, b, values: u_vals }))
}

/// `W` for face-marked Voronoi cells, by multi-source Dijkstra from the
/// cells meeting each box.
pub fn compute_w_voronoi(t: &Tessellation2D, mg: &MarkedGraph, delta: f64, rho: f64, b: i64) -> Result<GridField> {
    check_grid(delta, b, t.r_safe)?;
    let side = (2 * b + 1) as usize;
    let proto = GridField::constant(b, 0.0);
    let values: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|i| {
            if !(rho > 0.0) {
                return Ok(0.0);
            }
            let v = proto.site(i);
            let (lo, hi) = site_box(delta, v, 0.5);
            let (blo, bhi) = site_box(delta, v, 1.5);
            let sources = t.cells_meeting_box(lo, hi)?;
            let mut hit = false;
            dijkstra(t, mg, &sources, |c, d| {
                if d >= rho {
                    return false;
                }
                if !polygon::inside_box(&t.cells[c].polygon, blo, bhi) {
                    hit = true;
                    return false;
                }
                true
            })?;
            Ok(if hit { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;
    Ok(GridField { delta, b, values })
}

/// `W` for a planar hyperplane sample.
///
/// The lines meeting a slightly enlarged block cut it into convex faces,
/// each tagged with its side of every line. The cheapest curve from the box
/// to outside the block costs the minimal mark total of lines separating a
/// face meeting the box from a face reaching outside the block.
pub fn compute_w_pht(s: &PhtSample, delta: f64, rho: f64, b: i64) -> Result<GridField> {
    if s.dim() != 2 {
        return Err(Error::invalid("grid fields are planar"));
    }
    check_grid(delta, b, s.window)?;
    let side = (2 * b + 1) as usize;
    let proto = GridField::constant(b, 0.0);
    let values: Vec<f64> = (0..side * side)
        .into_par_iter()
        .map(|i| if rho > 0.0 && pht_site_w(s, delta, rho, proto.site(i)) { 1.0 } else { 0.0 })
        .collect();
    Ok(GridField { delta, b, values })
}

fn pht_site_w(s: &PhtSample, delta: f64, rho: f64, v: (i64, i64)) -> bool {
    let (lo, hi) = site_box(delta, v, 0.5);
    let (blo, bhi) = site_box(delta, v, 1.5);
    let eta = 1e-7 * delta;
    let (elo, ehi) = ([blo[0] - eta, blo[1] - eta], [bhi[0] + eta, bhi[1] + eta]);
    let outer = vec![elo, [ehi[0], elo[1]], ehi, [elo[0], ehi[1]]];

    let lines: Vec<(Point, f64, f64)> = s
        .planes
        .iter()
        .filter_map(|p| {
            let u = [p.plane.u[0], p.plane.u[1]];
            let proj: Vec<f64> = outer.iter().map(|c| u[0] * c[0] + u[1] * c[1]).collect();
            let (mn, mx) = proj.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, &x| (a.0.min(x), a.1.max(x)));
            (mn < p.plane.r && p.plane.r < mx).then_some((u, p.plane.r, p.mark))
        })
        .collect();

    let words = lines.len().div_ceil(64).max(1);
    let mut faces: Vec<(Vec<Point>, Vec<u64>)> = vec![(outer, vec![0; words])];
    let min_area = 1e-18 * delta * delta;
    for (k, &(u, r, _)) in lines.iter().enumerate() {
        let mut next = Vec::with_capacity(faces.len() * 2);
        for (poly, bits) in faces {
            let below = polygon::clip_half_plane(&poly, u, r);
            let above = polygon::clip_half_plane(&poly, [-u[0], -u[1]], -r);
            if below.len() >= 3 && polygon::area(&below) > min_area {
                next.push((below, bits.clone()));
            }
            if above.len() >= 3 && polygon::area(&above) > min_area {
                let mut b2 = bits;
                b2[k / 64] |= 1 << (k % 64);
                next.push((above, b2));
            }
        }
        faces = next;
    }

    let sources: Vec<&Vec<u64>> =
        faces.iter().filter(|(p, _)| polygon::intersects_box(p, lo, hi)).map(|(_, b)| b).collect();
    let targets: Vec<&Vec<u64>> =
        faces.iter().filter(|(p, _)| !polygon::inside_box(p, blo, bhi)).map(|(_, b)| b).collect();
    for a in &sources {
        for t in &targets {
            let mut cost = 0.0;
            for (w, (x, y)) in a.iter().zip(t.iter()).enumerate() {
                let mut diff = x ^ y;
                while diff != 0 && cost < rho {
                    let bit = diff.trailing_zeros() as usize;
                    cost += lines[w * 64 + bit].2;
                    diff &= diff - 1;
                }
            }
            if cost < rho {
                return true;
            }
        }
    }
    false
}

/// Best lattice animal found by the greedy search. The true maximum can be
/// larger, so `greedy_max_avg` is a lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct AnimalStat {
    pub n: usize,
    pub greedy_max_avg: f64,
    pub n_restarts: usize,
    pub animal: Vec<(i64, i64)>,
}

/// Maximizes the mean field value over connected `n`-site sets containing
/// the origin, by greedy growth with randomized and path-seeded restarts.
///
/// Restart 0 is plain greedy growth. Odd restarts grow greedily with
/// occasional random picks; even restarts first walk a random lattice path
/// towards a high-valued site, then grow greedily.
pub fn greedy_animal_max(f: &GridField, n: usize, n_restarts: usize, seed: u64) -> Result<AnimalStat> {
    if n == 0 || n > f.n_sites() {
        return Err(Error::invalid(format!("animal size must lie in 1..={}, got {n}", f.n_sites())));
    }
    let mut ranked: Vec<usize> = (0..f.n_sites()).collect();
    ranked.sort_by(|&a, &b| f.values[b].total_cmp(&f.values[a]).then(a.cmp(&b)));

    let runs: Vec<(f64, usize, Vec<usize>)> = (0..=n_restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng::stream(seed, k as u64);
            let animal = match k {
                0 => grow(f, n, Vec::new(), 0.0, &mut rng),
                k if k % 2 == 1 => grow(f, n, Vec::new(), 0.15, &mut rng),
                _ => {
                    let top = &ranked[..(ranked.len() / 10).max(1)];
                    let target = f.site(*top.choose(&mut rng).expect("non-empty"));
                    let path = lattice_path(f, target, n, &mut rng);
                    grow(f, n, path, 0.0, &mut rng)
                }
            };
            // offset by the first value so constant fields average exactly
            let v0 = f.values[animal[0]];
            let avg = v0 + animal.iter().map(|&i| f.values[i] - v0).sum::<f64>() / n as f64;
            (avg, k, animal)
        })
        .collect();
    let (avg, _, animal) = runs
        .into_iter()
        .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)))
        .expect("at least one run");
    Ok(AnimalStat { n, greedy_max_avg: avg, n_restarts, animal: animal.into_iter().map(|i| f.site(i)).collect() })
}

fn neighbors4(f: &GridField, i: usize) -> impl Iterator<Item = usize> + '_ {
    let (x, y) = f.site(i);
    [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)].into_iter().filter_map(|v| f.index(v))
}

/// Staircase path from the origin towards `target`, at most `n` sites.
fn lattice_path(f: &GridField, target: (i64, i64), n: usize, rng: &mut impl Rng) -> Vec<usize> {
    let (mut x, mut y) = (0i64, 0i64);
    let mut path = vec![f.index((0, 0)).expect("origin is a site")];
    while path.len() < n && (x, y) != target {
        let (dx, dy) = (target.0 - x, target.1 - y);
        let step_x = dy == 0 || (dx != 0 && rng.random_range(0..(dx.abs() + dy.abs())) < dx.abs());
        if step_x {
            x += dx.signum();
        } else {
            y += dy.signum();
        }
        path.push(f.index((x, y)).expect("path stays in the grid"));
    }
    path
}

/// Grows `start` (or the origin) to `n` sites, adding the best frontier
/// site; with probability `explore` a random frontier site instead.
fn grow(f: &GridField, n: usize, start: Vec<usize>, explore: f64, rng: &mut impl Rng) -> Vec<usize> {
    let mut inside = vec![false; f.n_sites()];
    let mut on_frontier = vec![false; f.n_sites()];
    let mut animal = if start.is_empty() { vec![f.index((0, 0)).expect("origin is a site")] } else { start };
    let mut frontier = Vec::new();
    for &i in &animal {
        inside[i] = true;
    }
    for &i in &animal {
        for j in neighbors4(f, i) {
            if !inside[j] && !on_frontier[j] {
                on_frontier[j] = true;
                frontier.push(j);
            }
        }
    }
    while animal.len() < n && !frontier.is_empty() {
        let pos = if explore > 0.0 && rng.random::<f64>() < explore {
            rng.random_range(0..frontier.len())
        } else {
            let best = frontier.iter().map(|&j| f.values[j]).fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..frontier.len()).filter(|&p| f.values[frontier[p]] == best).collect();
            if explore > 0.0 {
                *ties.choose(rng).expect("non-empty")
            } else {
                *ties.iter().min_by_key(|&&p| frontier[p]).expect("non-empty")
            }
        };
        let i = frontier.swap_remove(pos);
        inside[i] = true;
        animal.push(i);
        for j in neighbors4(f, i) {
            if !inside[j] && !on_frontier[j] {
                on_frontier[j] = true;
                frontier.push(j);
            }
        }
    }
    animal
}
