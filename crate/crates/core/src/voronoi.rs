//! Planar Poisson–Voronoi tessellations in a disk window.
//!
//! Generators are sampled in a disk of radius `r_gen`. A cell is *certified*
//! when every Delaunay triangle at its generator has its circumdisk inside
//! the generator disk: points added outside that disk cannot touch those
//! triangles, so the cell equals the cell of the infinite process. A cell is
//! *interior* when it is certified and lies inside the safe disk of radius
//! `r_safe`. Quantities that depend on non-interior cells are censored.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use spade::handles::FixedVertexHandle;
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::polygon::{self, Point};
use crate::rng;

/// Minimal gap between generator and safe radius, in units of `1/sqrt(lambda)`.
pub const MARGIN_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Serialize)]
pub struct Cell {
    /// Counterclockwise corners; empty for unbounded cells.
    pub polygon: Vec<Point>,
    pub certified: bool,
    pub interior: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Face {
    pub cells: (usize, usize),
    /// `None` for unbounded faces between hull cells.
    pub segment: Option<[Point; 2]>,
}

/// Cell adjacency: `neighbors[i]` lists `(cell, face id)` pairs.
#[derive(Debug, Clone, Default)]
pub struct AdjacencyGraph {
    pub neighbors: Vec<Vec<(usize, usize)>>,
}

impl AdjacencyGraph {
    pub fn n_vertices(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }
}

#[derive(Debug, Clone)]
pub struct GraphBall {
    pub root: usize,
    pub n: usize,
    /// Members in breadth-first order.
    pub members: Vec<usize>,
    /// Hop distance of each member, aligned with `members`.
    pub depth: Vec<usize>,
    pub touched_boundary: bool,
}

#[derive(Debug, Clone)]
pub struct BallRegion {
    pub area: f64,
    pub polygons: Vec<Vec<Point>>,
}

pub struct Tessellation2D {
    pub lambda: f64,
    pub r_gen: f64,
    pub r_safe: f64,
    pub seed: u64,
    pub generators: Vec<Point>,
    pub cells: Vec<Cell>,
    pub faces: Vec<Face>,
    pub graph: AdjacencyGraph,
    delaunay: DelaunayTriangulation<Point2<f64>>,
}

impl std::fmt::Debug for Tessellation2D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tessellation2D")
            .field("lambda", &self.lambda)
            .field("r_gen", &self.r_gen)
            .field("r_safe", &self.r_safe)
            .field("seed", &self.seed)
            .field("n_cells", &self.cells.len())
            .field("n_faces", &self.faces.len())
            .finish()
    }
}

fn check_window(lambda: f64, r_gen: f64, r_safe: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("intensity must be > 0, got {lambda}")));
    }
    if !(r_safe > 0.0) || !r_gen.is_finite() {
        return Err(Error::invalid(format!("safe radius must be > 0, got {r_safe}")));
    }
    let margin = MARGIN_FACTOR / lambda.sqrt();
    if r_gen - r_safe < margin * (1.0 - 1e-12) {
        return Err(Error::ConstructionUnsafe(format!(
            "margin {} below {margin} (r_gen={r_gen}, r_safe={r_safe}, lambda={lambda})",
            r_gen - r_safe
        )));
    }
    Ok(())
}

/// Safe radius paired with `r_gen` at the minimal margin.
pub fn safe_radius(lambda: f64, r_gen: f64) -> f64 {
    r_gen - MARGIN_FACTOR / lambda.sqrt()
}

/// Poisson(`lambda`) generators in the disk of radius `r_gen`, tessellated.
pub fn sample_voronoi(lambda: f64, r_gen: f64, r_safe: f64, seed: u64) -> Result<Tessellation2D> {
    check_window(lambda, r_gen, r_safe)?;
    let mut rng = rng::stream(seed, 0);
    let mean = lambda * std::f64::consts::PI * r_gen * r_gen;
    let n = Poisson::new(mean)
        .map_err(|e| Error::NumericFailure(format!("poisson({mean}): {e}")))?
        .sample(&mut rng) as usize;
    let generators: Vec<Point> = (0..n)
        .map(|_| {
            let rad = r_gen * rng.random::<f64>().sqrt();
            let t = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            [rad * t.cos(), rad * t.sin()]
        })
        .collect();
    let mut t = Tessellation2D::from_generators(generators, lambda, r_gen, r_safe)?;
    t.seed = seed;
    Ok(t)
}

impl Tessellation2D {
    /// Tessellates given generators, all of which must lie in the disk of radius `r_gen`.
    pub fn from_generators(generators: Vec<Point>, lambda: f64, r_gen: f64, r_safe: f64) -> Result<Self> {
        check_window(lambda, r_gen, r_safe)?;
        if let Some(g) = generators.iter().find(|g| g[0].hypot(g[1]) > r_gen) {
            return Err(Error::invalid(format!("generator {g:?} outside radius {r_gen}")));
        }
        let pts: Vec<Point2<f64>> = generators.iter().map(|g| Point2::new(g[0], g[1])).collect();
        let delaunay = DelaunayTriangulation::<Point2<f64>>::bulk_load_stable(pts)
            .map_err(|e| Error::NumericFailure(format!("delaunay construction: {e:?}")))?;
        if delaunay.num_vertices() != generators.len() {
            return Err(Error::invalid("duplicate generators"));
        }

        let mut face_ok = vec![false; delaunay.all_faces().len()];
        let mut centers = vec![[0.0; 2]; face_ok.len()];
        for f in delaunay.inner_faces() {
            let (c, r2) = f.circumcircle();
            let idx = f.fix().index();
            centers[idx] = [c.x, c.y];
            face_ok[idx] = c.x.hypot(c.y) + r2.sqrt() <= r_gen;
        }

        let mut cells = Vec::with_capacity(generators.len());
        for i in 0..generators.len() {
            let v = delaunay.vertex(FixedVertexHandle::from_index(i));
            let mut poly: Vec<Point> = Vec::new();
            let mut bounded = true;
            let mut certified = true;
            for e in v.out_edges() {
                match e.face().as_inner() {
                    Some(f) => {
                        let idx = f.fix().index();
                        certified &= face_ok[idx];
                        if poly.last() != Some(&centers[idx]) {
                            poly.push(centers[idx]);
                        }
                    }
                    None => bounded = false,
                }
            }
            if poly.len() > 1 && poly.first() == poly.last() {
                poly.pop();
            }
            if !bounded || poly.len() < 3 {
                cells.push(Cell { polygon: Vec::new(), certified: false, interior: false });
                continue;
            }
            let interior = certified && poly.iter().all(|p| p[0].hypot(p[1]) <= r_safe);
            cells.push(Cell { polygon: poly, certified, interior });
        }

        let mut faces = Vec::new();
        let mut neighbors = vec![Vec::new(); generators.len()];
        for e in delaunay.undirected_edges() {
            let d = e.as_directed();
            let (a, b) = (d.from().fix().index(), d.to().fix().index());
            let (l, r) = (d.face().as_inner(), d.rev().face().as_inner());
            let segment = match (l, r) {
                (Some(l), Some(r)) => {
                    let (p, q) = (centers[l.fix().index()], centers[r.fix().index()]);
                    if p == q {
                        // cocircular generators meeting in a single corner
                        continue;
                    }
                    Some([p, q])
                }
                _ => None,
            };
            let id = faces.len();
            faces.push(Face { cells: (a.min(b), a.max(b)), segment });
            neighbors[a].push((b, id));
            neighbors[b].push((a, id));
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }

        Ok(Self {
            lambda,
            r_gen,
            r_safe,
            seed: 0,
            generators,
            cells,
            faces,
            graph: AdjacencyGraph { neighbors },
            delaunay,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_area(&self, i: usize) -> f64 {
        polygon::area(&self.cells[i].polygon)
    }

    pub fn cell_perimeter(&self, i: usize) -> f64 {
        polygon::perimeter(&self.cells[i].polygon)
    }

    /// Cell of the nearest generator; equidistant generators resolve to the
    /// lexicographically smallest one.
    pub fn cell_at(&self, x: Point) -> Result<usize> {
        if !(x[0].hypot(x[1]) <= self.r_safe) {
            return Err(Error::OutOfWindow(format!("{x:?} outside safe radius {}", self.r_safe)));
        }
        self.nearest(x).ok_or_else(|| Error::OutOfWindow("empty tessellation".into()))
    }

    fn nearest(&self, x: Point) -> Option<usize> {
        let v = self.delaunay.nearest_neighbor(Point2::new(x[0], x[1]))?;
        let d2 = |i: usize| {
            let g = self.generators[i];
            (g[0] - x[0]).powi(2) + (g[1] - x[1]).powi(2)
        };
        let start = v.fix().index();
        let best_d = d2(start);
        // all nearest generators lie on one empty circle, so they are linked by Delaunay edges
        let mut best = start;
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let vi = self.delaunay.vertex(FixedVertexHandle::from_index(i));
            for e in vi.out_edges() {
                let j = e.to().fix().index();
                if !seen.contains(&j) && d2(j) <= best_d {
                    seen.push(j);
                    stack.push(j);
                    let (gj, gb) = (self.generators[j], self.generators[best]);
                    if (gj[0], gj[1]) < (gb[0], gb[1]) {
                        best = j;
                    }
                }
            }
        }
        Some(best)
    }

    /// Breadth-first ball of hop radius `n` around `root`.
    pub fn graph_ball(&self, root: usize, n: usize) -> GraphBall {
        graph_ball(&self.graph, root, n, |i| self.cells[i].interior)
    }

    /// Union of the ball's cells; censored if the ball touched the margin.
    pub fn continuous_ball(&self, ball: &GraphBall) -> Result<BallRegion> {
        if ball.touched_boundary {
            return Err(Error::Censored(format!("ball of radius {} reached the window margin", ball.n)));
        }
        let polygons: Vec<Vec<Point>> = ball.members.iter().map(|&i| self.cells[i].polygon.clone()).collect();
        let area = ball.members.iter().map(|&i| self.cell_area(i)).sum();
        Ok(BallRegion { area, polygons })
    }

    /// Cells meeting the closed box `[lo, hi]`, found by flooding from the
    /// cell at its center. Censored if an uncertified cell might meet it.
    pub fn cells_meeting_box(&self, lo: Point, hi: Point) -> Result<Vec<usize>> {
        let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
        let start = self.cell_at(center)?;
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        let mut uncertified = None;
        while let Some(i) = queue.pop_front() {
            if !self.cells[i].certified {
                uncertified = Some(i);
                continue;
            }
            if !polygon::intersects_box(&self.cells[i].polygon, lo, hi) {
                continue;
            }
            out.push(i);
            for &(j, _) in &self.graph.neighbors[i] {
                if seen.insert(j) {
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = uncertified {
            // an unknown cell can only meet the box if the known ones leave a gap
            let covered: f64 = out.iter().map(|&j| polygon::area(&polygon::clip_to_box(&self.cells[j].polygon, lo, hi))).sum();
            let want = (hi[0] - lo[0]) * (hi[1] - lo[1]);
            if covered < want * (1.0 - 1e-9) {
                return Err(Error::Censored(format!("uncertified cell {i} may meet box {lo:?}..{hi:?}")));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Total area of certified cells inside the safe disk.
    pub fn safe_window_area(&self) -> f64 {
        self.cells
            .iter()
            .filter(|c| c.certified)
            .map(|c| polygon::disk_intersection_area(&c.polygon, self.r_safe))
            .sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump<'a> {
            lambda: f64,
            r_gen: f64,
            r_safe: f64,
            seed: u64,
            generators: &'a [Point],
            cells: &'a [Cell],
            faces: &'a [Face],
        }
        serde_json::to_value(Dump {
            lambda: self.lambda,
            r_gen: self.r_gen,
            r_safe: self.r_safe,
            seed: self.seed,
            generators: &self.generators,
            cells: &self.cells,
            faces: &self.faces,
        })
        .expect("tessellation dump is plain data")
    }
}

/// Breadth-first ball in `g`; `is_interior` decides the boundary flag.
pub fn graph_ball(g: &AdjacencyGraph, root: usize, n: usize, is_interior: impl Fn(usize) -> bool) -> GraphBall {
    let mut depth_of = std::collections::HashMap::from([(root, 0usize)]);
    let mut members = vec![root];
    let mut depth = vec![0];
    let mut head = 0;
    while head < members.len() {
        let (v, dv) = (members[head], depth[head]);
        head += 1;
        if dv == n {
            continue;
        }
        for &(w, _) in &g.neighbors[v] {
            if let std::collections::hash_map::Entry::Vacant(e) = depth_of.entry(w) {
                e.insert(dv + 1);
                members.push(w);
                depth.push(dv + 1);
            }
        }
    }
    let touched_boundary = members.iter().any(|&i| !is_interior(i));
    GraphBall { root, n, members, depth, touched_boundary }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(seed: u64) -> Tessellation2D {
        sample_voronoi(1.0, 15.0, 10.0, seed).unwrap()
    }

    #[test]
    fn margin_is_enforced() {
        assert!(matches!(sample_voronoi(1.0, 14.0, 10.0, 0), Err(Error::ConstructionUnsafe(_))));
        assert!(matches!(sample_voronoi(4.0, 12.4, 10.0, 0), Err(Error::ConstructionUnsafe(_))));
        assert!(sample_voronoi(4.0, 12.5, 10.0, 0).is_ok());
        assert!(sample_voronoi(0.0, 12.5, 10.0, 0).is_err());
    }

    #[test]
    fn generator_count_is_poisson() {
        let t = sample_voronoi(1.0, 60.0, 40.0, 11).unwrap();
        let mean = PI * 3600.0;
        assert!((t.n_cells() as f64 - mean).abs() < 3.0 * mean.sqrt());
    }

    #[test]
    fn deterministic_by_seed() {
        let (a, b) = (small(5), small(5));
        assert_eq!(a.generators, b.generators);
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(small(6).generators, a.generators);
    }

    #[test]
    fn cells_are_ccw_and_tile_the_safe_disk() {
        for seed in 0..5 {
            let t = small(seed);
            for c in t.cells.iter().filter(|c| c.certified) {
                assert!(polygon::signed_area(&c.polygon) > 0.0);
            }
            let want = PI * t.r_safe * t.r_safe;
            assert!((t.safe_window_area() - want).abs() < 1e-6 * want, "seed {seed}");
        }
    }

    #[test]
    fn faces_are_shared_and_symmetric() {
        let t = small(1);
        for (id, f) in t.faces.iter().enumerate() {
            let (a, b) = f.cells;
            assert!(t.graph.neighbors[a].contains(&(b, id)));
            assert!(t.graph.neighbors[b].contains(&(a, id)));
        }
        // a face segment is an edge of both certified cells
        for f in &t.faces {
            let (a, b) = f.cells;
            if let (Some([p, q]), true, true) = (f.segment, t.cells[a].certified, t.cells[b].certified) {
                for c in [a, b] {
                    assert!(t.cells[c].polygon.contains(&p) && t.cells[c].polygon.contains(&q));
                }
            }
        }
    }

    #[test]
    fn cell_at_rules() {
        let t = small(2);
        for (i, g) in t.generators.iter().enumerate() {
            if g[0].hypot(g[1]) <= t.r_safe {
                assert_eq!(t.cell_at(*g).unwrap(), i);
            }
        }
        assert!(matches!(t.cell_at([11.0, 0.0]), Err(Error::OutOfWindow(_))));

        let gens = vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0], [0.0, -5.0], [6.0, 6.0]];
        let t = Tessellation2D::from_generators(gens, 1.0, 10.0, 5.0).unwrap();
        assert_eq!(t.cell_at([0.0, 0.3]).unwrap(), 1);
        assert_eq!(t.cell_at([0.0, -0.7]).unwrap(), 1);
        assert_eq!(t.cell_at([0.2, 0.0]).unwrap(), 0);
    }

    #[test]
    fn cell_at_is_geometrically_consistent() {
        let t = sample_voronoi(1.0, 20.0, 15.0, 3).unwrap();
        let mut rng = rng::stream(99, 0);
        for _ in 0..10_000 {
            let x = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
            let c = t.cell_at(x).unwrap();
            assert!(polygon::contains(&t.cells[c].polygon, x, 1e-9));
        }
    }

    #[test]
    fn mean_degree_is_six() {
        let mut degs = Vec::new();
        let mut seed = 0;
        while degs.len() < 1000 {
            let t = sample_voronoi(1.0, 25.0, 20.0, seed).unwrap();
            degs.extend((0..t.n_cells()).filter(|&i| t.cells[i].interior).map(|i| t.graph.degree(i) as f64));
            seed += 1;
        }
        let m = degs.iter().sum::<f64>() / degs.len() as f64;
        assert!((m - 6.0).abs() < 0.1, "{m}");
    }

    #[test]
    fn balls() {
        let t = small(4);
        let root = t.cell_at([0.0, 0.0]).unwrap();
        let b0 = t.graph_ball(root, 0);
        assert_eq!(b0.members, vec![root]);
        let r0 = t.continuous_ball(&b0).unwrap();
        assert_eq!(r0.area, t.cell_area(root));
        let b1 = t.graph_ball(root, 1);
        let mut want: Vec<usize> = t.graph.neighbors[root].iter().map(|p| p.0).collect();
        want.push(root);
        want.sort_unstable();
        let mut got = b1.members.clone();
        got.sort_unstable();
        assert_eq!(got, want);
        let b2 = t.graph_ball(root, 2);
        assert!(b1.members.iter().all(|m| b2.members.contains(m)));
        let big = t.graph_ball(root, 50);
        assert!(big.touched_boundary);
        assert!(matches!(t.continuous_ball(&big), Err(Error::Censored(_))));
    }

    #[test]
    fn cells_meeting_a_box() {
        let t = small(7);
        let hits = t.cells_meeting_box([-1.0, -1.0], [1.0, 1.0]).unwrap();
        let brute: Vec<usize> = (0..t.n_cells())
            .filter(|&i| t.cells[i].certified && polygon::intersects_box(&t.cells[i].polygon, [-1.0, -1.0], [1.0, 1.0]))
            .collect();
        assert_eq!(hits, brute);
    }

    #[test]
    fn square_lattice_cells_have_unit_area() {
        let mut gens = Vec::new();
        for i in -8..8 {
            for j in -8..8 {
                gens.push([i as f64 + 0.5, j as f64 + 0.5]);
            }
        }
        let t = Tessellation2D::from_generators(gens, 1.0, 12.0, 6.0).unwrap();
        let c = t.cell_at([0.2, 0.3]).unwrap();
        assert_eq!(t.cell_area(c), 1.0);
        assert_eq!(t.graph.degree(c), 4);
    }
}
