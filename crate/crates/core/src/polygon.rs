//! Convex polygon helpers for planar cells. Polygons are vertex lists in
//! counterclockwise order without a repeated closing vertex.

pub type Point = [f64; 2];

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn edges(poly: &[Point]) -> impl Iterator<Item = (Point, Point)> + '_ {
    let n = poly.len();
    (0..n).map(move |i| (poly[i], poly[(i + 1) % n]))
}

/// Shoelace area, positive for counterclockwise polygons.
pub fn signed_area(poly: &[Point]) -> f64 {
    0.5 * edges(poly).map(|(a, b)| cross(a, b)).sum::<f64>()
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

pub fn perimeter(poly: &[Point]) -> f64 {
    if poly.len() < 2 {
        return 0.0;
    }
    edges(poly).map(|(a, b)| sub(b, a)[0].hypot(sub(b, a)[1])).sum()
}

/// Point-in-convex-polygon with an absolute slack `tol` on each edge test.
pub fn contains(poly: &[Point], p: Point, tol: f64) -> bool {
    poly.len() >= 3 && edges(poly).all(|(a, b)| cross(sub(b, a), sub(p, a)) >= -tol * (1.0 + dist(a, b)))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Keeps the part of `poly` with `<n, x> <= c`.
pub fn clip_half_plane(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (a, b) in edges(poly) {
        let sa = dot(n, a) - c;
        let sb = dot(n, b) - c;
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Intersection with the axis-parallel box `[lo, hi]`.
pub fn clip_to_box(poly: &[Point], lo: Point, hi: Point) -> Vec<Point> {
    let mut p = clip_half_plane(poly, [1.0, 0.0], hi[0]);
    p = clip_half_plane(&p, [-1.0, 0.0], -lo[0]);
    p = clip_half_plane(&p, [0.0, 1.0], hi[1]);
    clip_half_plane(&p, [0.0, -1.0], -lo[1])
}

/// Whether a convex polygon and a closed box share a point (separating axes).
pub fn intersects_box(poly: &[Point], lo: Point, hi: Point) -> bool {
    if poly.is_empty() {
        return false;
    }
    for k in 0..2 {
        let min = poly.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let max = poly.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        if max < lo[k] || min > hi[k] {
            return false;
        }
    }
    let corners = [lo, [hi[0], lo[1]], hi, [lo[0], hi[1]]];
    for (a, b) in edges(poly) {
        let e = sub(b, a);
        // outward normal of a counterclockwise edge is (e_y, -e_x)
        if corners.iter().all(|&q| cross(e, sub(q, a)) < 0.0) {
            return false;
        }
    }
    true
}

/// Whether every vertex lies in the closed box.
pub fn inside_box(poly: &[Point], lo: Point, hi: Point) -> bool {
    poly.iter().all(|p| p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1])
}

/// Area of the polygon inside the disk of radius `r` about the origin.
pub fn disk_intersection_area(poly: &[Point], r: f64) -> f64 {
    edges(poly).map(|(a, b)| triangle_disk_area(a, b, r)).sum::<f64>().abs()
}

/// Signed area of triangle `(0, a, b)` inside the disk of radius `r`.
fn triangle_disk_area(a: Point, b: Point, r: f64) -> f64 {
    let r2 = r * r;
    let sector = |u: Point, v: Point| 0.5 * r2 * cross(u, v).atan2(dot(u, v));
    if dot(a, a) <= r2 && dot(b, b) <= r2 {
        return 0.5 * cross(a, b);
    }
    let d = sub(b, a);
    let qa = dot(d, d);
    if qa == 0.0 {
        return 0.0;
    }
    let qb = dot(a, d);
    let qc = dot(a, a) - r2;
    let disc = qb * qb - qa * qc;
    if disc <= 0.0 {
        return sector(a, b);
    }
    let s = disc.sqrt();
    let t1 = (-qb - s) / qa;
    let t2 = (-qb + s) / qa;
    if t2 <= 0.0 || t1 >= 1.0 {
        return sector(a, b);
    }
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    let p1 = at(t1.max(0.0));
    let p2 = at(t2.min(1.0));
    sector(a, p1) + 0.5 * cross(p1, p2) + sector(p2, b)
}
