//! Vectors, spherical sectors, sphere coverings and a few elementary
//! inner-product bounds used by the convergence-rate experiments.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// A point or direction in `R^d`.
pub type Vector = DVector<f64>;

/// Tolerance on `|u|` for a stored unit vector.
pub const UNIT_TOL: f64 = 1e-12;
/// Inputs within this distance of unit norm are normalized instead of rejected.
pub const UNIT_REPAIR_TOL: f64 = 1e-9;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

/// Normalize an almost-unit vector, rejecting anything further than
/// [`UNIT_REPAIR_TOL`] from the unit sphere or with non-finite entries.
pub fn unit(v: Vector) -> Result<Vector> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("direction has non-finite entries"));
    }
    let n = v.norm();
    if (n - 1.0).abs() > UNIT_REPAIR_TOL {
        return Err(Error::invalid(format!("direction is not a unit vector (norm {n})")));
    }
    Ok(v / n)
}

/// Uniform point on the unit sphere `S^{d-1}`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-300 {
            return v / n;
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

/// The sector `S(u, r, delta) = { x : |x| <= r, <x/|x|, u> >= 1 - delta }`.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalSector {
    u: Vector,
    r: f64,
    delta: f64,
}

impl SphericalSector {
    pub fn new(u: Vector, r: f64, delta: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(Error::invalid(format!("sector radius must be >= 0, got {r}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::invalid(format!("sector opening must lie in [0,1], got {delta}")));
        }
        Ok(Self { u: unit(u)?, r, delta })
    }

    pub fn direction(&self) -> &Vector {
        &self.u
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Membership test; the origin belongs to every sector.
    pub fn contains(&self, x: &Vector) -> bool {
        let n = x.norm();
        if n == 0.0 {
            return true;
        }
        n <= self.r && x.dot(&self.u) / n >= 1.0 - self.delta
    }
}

/// `sector_contains` as a free function.
pub fn sector_contains(s: &SphericalSector, x: &Vector) -> bool {
    s.contains(x)
}

/// A finite set of directions whose sectors `S(u_i, 1, delta)` cover the sphere.
///
/// Built from the cube grid of side `delta / (2 sqrt d)`: every cube meeting
/// the sphere contributes one unit vector lying inside it.
#[derive(Debug, Clone)]
pub struct Covering {
    dim: usize,
    delta: f64,
    side: f64,
    directions: Vec<Vector>,
    cells: HashMap<Vec<i64>, usize>,
}

impl Covering {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn into_directions(self) -> Vec<Vector> {
        self.directions
    }

    /// Constant `c1` in `k <= c1 delta^(1-d)`, from the volume argument:
    /// cubes meeting the sphere lie in the shell `(1 - delta, 1 + delta)`,
    /// whose volume is at most `kappa_d 2^d delta` for `delta <= 1`.
    pub fn c1(&self) -> f64 {
        size_constant(self.dim)
    }

    /// `c1 * delta^(1-d)`.
    pub fn size_bound(&self) -> f64 {
        self.c1() * self.delta.powi(1 - self.dim as i32)
    }

    /// The sharper intermediate bound `kappa_d ((1+delta)^d - (1-delta)^d) / side^d`.
    pub fn volume_bound(&self) -> f64 {
        let d = self.dim as i32;
        unit_ball_volume(self.dim) * ((1.0 + self.delta).powi(d) - (1.0 - self.delta).powi(d))
            / self.side.powi(d)
    }

    /// Index of a direction `u_i` with `<p, u_i> >= 1 - delta`, if any.
    pub fn covering_direction(&self, p: &Vector) -> Option<usize> {
        let thr = 1.0 - self.delta;
        let key: Vec<i64> = p.iter().map(|c| (c / self.side).floor() as i64).collect();
        if let Some(&i) = self.cells.get(&key) {
            if p.dot(&self.directions[i]) >= thr {
                return Some(i);
            }
        }
        self.directions.iter().position(|u| p.dot(u) >= thr)
    }

    pub fn covers(&self, p: &Vector) -> bool {
        self.covering_direction(p).is_some()
    }
}

pub fn size_constant(d: usize) -> f64 {
    let d_f = d as f64;
    unit_ball_volume(d) * 2f64.powi(d as i32) * (2.0 * d_f.sqrt()).powi(d as i32)
}

fn min_abs(v: i64, s: f64) -> f64 {
    let lo = v as f64 * s;
    let hi = (v + 1) as f64 * s;
    if lo <= 0.0 && hi >= 0.0 {
        0.0
    } else {
        lo.abs().min(hi.abs())
    }
}

fn max_abs(v: i64, s: f64) -> f64 {
    let lo = v as f64 * s;
    let hi = (v + 1) as f64 * s;
    lo.abs().max(hi.abs())
}

/// Build the cube covering of `S^{d-1}` with opening `delta`.
pub fn sphere_covering(d: usize, delta: f64) -> Result<Covering> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("covering opening must lie in (0,1], got {delta}")));
    }
    let side = delta / (2.0 * (d as f64).sqrt());
    let reach = ((1.0 + delta) / side).ceil() as i64 + 1;

    let mut out = Covering { dim: d, delta, side, directions: Vec::new(), cells: HashMap::new() };
    let mut prefix = Vec::with_capacity(d);
    enumerate_cubes(d, side, reach, 0.0, 0.0, &mut prefix, &mut out);
    Ok(out)
}

fn enumerate_cubes(
    d: usize,
    side: f64,
    reach: i64,
    part_min: f64,
    part_max: f64,
    prefix: &mut Vec<i64>,
    out: &mut Covering,
) {
    if prefix.len() + 1 < d {
        for v in -reach..reach {
            let m = part_min + min_abs(v, side).powi(2);
            if m > 1.0 {
                continue;
            }
            prefix.push(v);
            enumerate_cubes(d, side, reach, m, part_max + max_abs(v, side).powi(2), prefix, out);
            prefix.pop();
        }
        return;
    }

    // Last coordinate: the admissible set is an interval minus a middle gap.
    let a = 1.0 - part_min;
    let m = (a.sqrt() / side).floor() as i64;
    let lo = -m - 3;
    let hi = m + 2;
    let b = 1.0 - part_max;
    let (gap_lo, gap_hi) = if b > 0.0 {
        let g = b.sqrt() / side;
        ((-g).ceil() as i64 + 2, (g - 1.0).floor() as i64 - 2)
    } else {
        (1, 0)
    };
    let mut v = lo;
    while v <= hi {
        if gap_lo <= gap_hi && v == gap_lo {
            v = gap_hi + 1;
            continue;
        }
        let mn = part_min + min_abs(v, side).powi(2);
        let mx = part_max + max_abs(v, side).powi(2);
        if mn <= 1.0 && mx >= 1.0 {
            prefix.push(v);
            let u = unit_point_in_cube(prefix, side);
            out.cells.insert(prefix.clone(), out.directions.len());
            out.directions.push(u);
            prefix.pop();
        }
        v += 1;
    }
}

/// A unit vector in the closed cube `side * (idx + [0,1]^d)`, which is known
/// to meet the sphere.
fn unit_point_in_cube(idx: &[i64], side: f64) -> Vector {
    let d = idx.len();
    let near = Vector::from_fn(d, |i, _| {
        let lo = idx[i] as f64 * side;
        0.0f64.clamp(lo, lo + side)
    });
    let far = Vector::from_fn(d, |i, _| {
        let lo = idx[i] as f64 * side;
        let hi = lo + side;
        if lo.abs() > hi.abs() {
            lo
        } else {
            hi
        }
    });
    let dir = &far - &near;
    let dd = dir.norm_squared();
    let ad = near.dot(&dir);
    let aa = near.norm_squared();
    let t = if dd > 0.0 {
        ((-ad + (ad * ad - dd * (aa - 1.0)).max(0.0).sqrt()) / dd).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let p = near + dir * t;
    let n = p.norm();
    p / n
}

/// Lower bound on `<x, y>` obtained from the triangle inequality through `z`:
///
/// `<x,z> + <y,z> - <z,z> - sqrt(|x - z|^2 |y - z|^2)`.
pub fn hilbert_bound(x: &Vector, y: &Vector, z: &Vector) -> f64 {
    let xz = x.dot(z);
    let yz = y.dot(z);
    let zz = z.dot(z);
    xz + yz - zz - (x - z).norm() * (y - z).norm()
}

/// Diameter bound `r2 - r1 + 2 r2 sqrt(2 delta)` for the shell
/// `S(u, r2, delta) \ S(u, r1, delta)`.
pub fn shell_diameter_bound(r1: f64, r2: f64, delta: f64) -> Result<f64> {
    if !(r1 >= 0.0 && r1 < r2) || !r2.is_finite() {
        return Err(Error::invalid(format!("need 0 <= r1 < r2 < inf, got r1={r1}, r2={r2}")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be > 0, got {delta}")));
    }
    Ok(r2 - r1 + 2.0 * r2 * (2.0 * delta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn v2(x: f64, y: f64) -> Vector {
        vector(&[x, y])
    }

    #[test]
    fn sector_examples() {
        let s = SphericalSector::new(v2(1.0, 0.0), 1.0, 0.0).unwrap();
        assert!(s.contains(&v2(0.5, 0.0)));
        assert!(!s.contains(&v2(0.0, 0.5)));
        assert!(s.contains(&v2(0.0, 0.0)));
        assert!(!s.contains(&v2(1.5, 0.0)));

        // <x/|x|, u> = 0.6 / sqrt(0.45) ~ 0.894 >= 0.7
        let s = SphericalSector::new(v2(1.0, 0.0), 1.0, 0.3).unwrap();
        assert!(s.contains(&v2(0.6, 0.3)));
        assert!(!s.contains(&v2(0.3, 0.6)));
    }

    #[test]
    fn sector_validates_inputs() {
        assert!(SphericalSector::new(v2(2.0, 0.0), 1.0, 0.1).is_err());
        assert!(SphericalSector::new(v2(1.0, 0.0), -1.0, 0.1).is_err());
        assert!(SphericalSector::new(v2(1.0, 0.0), 1.0, 1.5).is_err());
        // almost-unit input is repaired
        let s = SphericalSector::new(v2(1.0 + 1e-10, 0.0), f64::INFINITY, 0.1).unwrap();
        assert!((s.direction().norm() - 1.0).abs() < UNIT_TOL);
    }

    #[test]
    fn covering_rejects_bad_delta() {
        assert!(sphere_covering(2, 0.0).is_err());
        assert!(sphere_covering(2, 1.5).is_err());
        assert!(sphere_covering(1, 0.5).is_err());
    }

    #[test]
    fn covering_directions_are_unit_and_in_their_cubes() {
        for (d, delta) in [(2, 1.0), (2, 0.5), (3, 0.5), (4, 0.9)] {
            let c = sphere_covering(d, delta).unwrap();
            assert!(c.k() > 0);
            for (key, &i) in &c.cells {
                let u = &c.directions[i];
                assert!((u.norm() - 1.0).abs() < 1e-12);
                for (j, &kj) in key.iter().enumerate() {
                    let lo = kj as f64 * c.side;
                    assert!(u[j] >= lo - 1e-12 && u[j] <= lo + c.side + 1e-12);
                }
            }
            assert!((c.k() as f64) <= c.volume_bound());
            assert!(c.volume_bound() <= c.size_bound() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn covering_size_for_half_opening_in_the_plane() {
        let c = sphere_covering(2, 0.5).unwrap();
        // c1 = kappa_2 * 2^2 * (2 sqrt 2)^2 = 32 pi
        assert!((c.c1() - 32.0 * std::f64::consts::PI).abs() < 1e-9);
        assert!(c.k() as f64 <= c.c1() * 2.0);
    }

    #[test]
    fn covering_matches_brute_force_cube_scan() {
        // Independent enumeration of every cube in the bounding box.
        let (d, delta) = (3, 0.6);
        let c = sphere_covering(d, delta).unwrap();
        let side = delta / (2.0 * (d as f64).sqrt());
        let n = ((1.0 + delta) / side).ceil() as i64 + 1;
        let mut count = 0;
        for a in -n..n {
            for b in -n..n {
                for e in -n..n {
                    let idx = [a, b, e];
                    let mn: f64 = idx.iter().map(|&v| min_abs(v, side).powi(2)).sum();
                    let mx: f64 = idx.iter().map(|&v| max_abs(v, side).powi(2)).sum();
                    if mn <= 1.0 && mx >= 1.0 {
                        count += 1;
                        assert!(c.cells.contains_key(idx.as_slice()));
                    }
                }
            }
        }
        assert_eq!(count, c.k());
    }

    #[test]
    fn covering_covers_sampled_points() {
        let mut rng = stream(11, 0);
        for (d, delta) in [(2, 1.0), (2, 0.3), (3, 0.5)] {
            let c = sphere_covering(d, delta).unwrap();
            for _ in 0..5_000 {
                let p = sample_unit_sphere(d, &mut rng);
                let brute = c.directions().iter().any(|u| p.dot(u) >= 1.0 - delta);
                assert!(brute, "uncovered point {p:?} for d={d}, delta={delta}");
                assert!(c.covers(&p));
            }
        }
    }

    #[test]
    fn hilbert_bound_examples() {
        let x = v2(1.0, 0.0);
        assert!((hilbert_bound(&x, &x, &x) - 1.0).abs() < 1e-15);
        let y = v2(0.0, 1.0);
        assert_eq!(hilbert_bound(&x, &y, &x), 0.0);
    }

    #[test]
    fn shell_bound_examples() {
        assert!((shell_diameter_bound(0.0, 1.0, 1e-18).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(shell_diameter_bound(1.0, 2.0, 0.5).unwrap(), 5.0);
        assert!((shell_diameter_bound(1.0, 2.0, 0.1).unwrap() - (1.0 + 4.0 * 0.2f64.sqrt())).abs() < 1e-12);
        assert!(shell_diameter_bound(2.0, 1.0, 0.5).is_err());
        assert!(shell_diameter_bound(1.0, 1.0, 0.5).is_err());
        assert!(shell_diameter_bound(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}
