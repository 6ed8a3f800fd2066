use std::f64::consts::PI;

use fpptess::directional::DirectionalDistribution;
use fpptess::geometry::{hilbert_bound, shell_diameter_bound, sphere_covering, vector, Vector};
use fpptess::hyperplane::{sample_pht, Hyperplane, MarkedHyperplane, PhtSample};
use fpptess::marks::MarkDistribution;
use fpptess::pht_fpp::{limit_shape, TimeConstantModel};
use fpptess::tameness::{greedy_animal_max, GridField};
use proptest::prelude::*;

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, d)
}

fn atoms_phi() -> impl Strategy<Value = DirectionalDistribution> {
    (prop::collection::vec((0.0..PI, 0.1..1.0f64), 2..5)).prop_filter_map("degenerate", |raw| {
        let total: f64 = raw.iter().map(|r| r.1).sum();
        let atoms = raw.iter().map(|&(t, w)| (vector(&[t.cos(), t.sin()]), w / total)).collect();
        DirectionalDistribution::symmetric_atoms(atoms).ok()
    })
}

fn any_phi() -> impl Strategy<Value = DirectionalDistribution> {
    prop_oneof![Just(DirectionalDistribution::isotropic(2).unwrap()), atoms_phi()]
}

fn sparse_sample(planes: Vec<(f64, f64, f64)>) -> PhtSample {
    PhtSample {
        gamma: 1.0,
        phi: DirectionalDistribution::isotropic(2).unwrap(),
        marks: "det:1".parse().unwrap(),
        window: 100.0,
        seed: 0,
        planes: planes
            .into_iter()
            .map(|(t, r, m)| MarkedHyperplane { plane: Hyperplane::new(vector(&[t.cos(), t.sin()]), r).unwrap(), mark: m })
            .collect(),
    }
}

fn planes() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((0.0..2.0 * PI, 0.0..20.0f64, 0.0..3.0f64), 0..40)
}

fn point() -> impl Strategy<Value = Vector> {
    (-20.0..20.0f64, -20.0..20.0f64).prop_map(|(a, b)| vector(&[a, b]))
}

proptest! {
    #[test]
    fn hilbert_bound_is_below_inner_product(d in 1usize..6, seed in any::<u64>()) {
        let mut rng = fpptess::rng::stream(seed, 0);
        use rand::Rng;
        let mut v = || Vector::from_iterator(d, (0..d).map(|_| rng.random_range(-10.0..10.0)));
        let (x, y, z) = (v(), v(), v());
        let scale = 1.0 + x.norm() * y.norm() + z.norm_squared();
        prop_assert!(hilbert_bound(&x, &y, &z) <= x.dot(&y) + 1e-12 * scale);
    }

    #[test]
    fn hilbert_bound_is_tight_at_x(x in coords(3), y in coords(3)) {
        let (x, y) = (Vector::from_vec(x), Vector::from_vec(y));
        let scale = 1.0 + x.norm_squared() + y.norm_squared();
        prop_assert!((hilbert_bound(&x, &y, &x) - x.dot(&y)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn shell_bound_dominates_pairs(
        r1 in 0.0..50.0f64, dr in 0.01..20.0f64, delta in 0.0001..1.0f64,
        t1 in 0.0..1.0f64, t2 in 0.0..1.0f64, s1 in 0.0..1.0f64, s2 in 0.0..1.0f64,
        side1 in any::<bool>(), side2 in any::<bool>(),
    ) {
        let r2 = r1 + dr;
        let theta = (1.0 - delta).acos();
        let at = |t: f64, s: f64, flip: bool| {
            let a = if flip { -t * theta } else { t * theta };
            let rad = r1 + (r2 - r1) * s.max(1e-12);
            [rad * a.cos(), rad * a.sin()]
        };
        let (p, q) = (at(t1, s1, side1), at(t2, s2, side2));
        let dist = (p[0] - q[0]).hypot(p[1] - q[1]);
        prop_assert!(dist <= shell_diameter_bound(r1, r2, delta).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn zonoid_support_is_even_homogeneous_subadditive(phi in any_phi(), x in coords(2), y in coords(2), c in -5.0..5.0f64) {
        let (x, y) = (Vector::from_vec(x), Vector::from_vec(y));
        let h = |v: &Vector| phi.zonoid_support(1.7, v).unwrap();
        let atoms = !matches!(phi, DirectionalDistribution::Isotropic(_));
        if atoms {
            prop_assert_eq!(h(&x), h(&-&x));
        } else {
            prop_assert!((h(&x) - h(&-&x)).abs() <= 1e-10 * (1.0 + h(&x)));
        }
        prop_assert!((h(&(&x * c)) - c.abs() * h(&x)).abs() <= 1e-10 * (1.0 + h(&x)));
        prop_assert!(h(&(&x + &y)) <= h(&x) + h(&y) + 1e-10);
    }

    #[test]
    fn crossings_obey_triangle_inequality(p in planes(), x in point(), y in point(), z in point()) {
        let s = sparse_sample(p);
        let c = |a: &Vector, b: &Vector| s.crossing_count(a, b).unwrap();
        prop_assert!(c(&x, &z) <= c(&x, &y) + c(&y, &z));
        prop_assert_eq!(c(&x, &x), 0);
        let t = |a: &Vector, b: &Vector| s.passage_time(a, b).unwrap();
        prop_assert!(t(&x, &z) <= t(&x, &y) + t(&y, &z) + 1e-12);
    }

    #[test]
    fn crossings_add_along_segments(p in planes(), x in point(), y in point(), f in 0.0..1.0f64) {
        let s = sparse_sample(p);
        let m = &x + (&y - &x) * f;
        let c = |a: &Vector, b: &Vector| s.crossing_count(a, b).unwrap();
        prop_assert_eq!(c(&x, &y), c(&x, &m) + c(&m, &y));
    }

    #[test]
    fn straight_segment_is_never_beaten(p in planes(), x in point(), y in point(), detour in prop::collection::vec(point(), 1..5)) {
        let s = sparse_sample(p);
        let mut path = vec![x.clone()];
        path.extend(detour);
        path.push(y.clone());
        let along: f64 = path.windows(2).map(|w| s.passage_time(&w[0], &w[1]).unwrap()).sum();
        prop_assert!(s.passage_time(&x, &y).unwrap() <= along + 1e-12);
    }

    #[test]
    fn mu_is_a_norm(phi in any_phi(), x in coords(2), y in coords(2), c in -5.0..5.0f64) {
        let model = TimeConstantModel::new(2.0, phi, "exp:0.5".parse().unwrap()).unwrap();
        let (x, y) = (Vector::from_vec(x), Vector::from_vec(y));
        let mu = |v: &Vector| model.mu(v).unwrap();
        prop_assert!((mu(&(&x * c)) - c.abs() * mu(&x)).abs() <= 1e-10 * (1.0 + mu(&x)));
        prop_assert!(mu(&(&x + &y)) <= mu(&x) + mu(&y) + 1e-10);
        let shape = limit_shape(&model, 16).unwrap();
        prop_assert!(shape.radii().all(|r| r > 0.0 && r.is_finite()));
    }

    #[test]
    fn mark_lyapunov(rate in 0.1..5.0f64, a in 0.0..2.0f64, w in 0.1..3.0f64, p0 in 0.0..0.9f64) {
        for m in [
            MarkDistribution::exponential(rate).unwrap(),
            MarkDistribution::uniform(a, a + w).unwrap(),
            MarkDistribution::zero_atom_mix(p0, MarkDistribution::exponential(rate).unwrap()).unwrap(),
        ] {
            let norms: Vec<f64> = [1.0, 2.0, 3.0].iter().map(|&p| m.moment(p).unwrap().powf(1.0 / p)).collect();
            prop_assert!(norms.windows(2).all(|v| v[0] <= v[1] * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn greedy_max_is_the_mean_of_a_valid_animal(vals in prop::collection::vec(0.0..1.0f64, 49), n in 1usize..20, seed in any::<u64>()) {
        let f = GridField::new(1.0, 3, vals).unwrap();
        let s = greedy_animal_max(&f, n, 8, seed).unwrap();
        prop_assert_eq!(s.animal.len(), n);
        prop_assert!(s.animal.contains(&(0, 0)));
        let mean = s.animal.iter().map(|&v| f.get(v).unwrap()).sum::<f64>() / n as f64;
        prop_assert!((mean - s.greedy_max_avg).abs() < 1e-12);
    }

    #[test]
    fn greedy_max_is_monotone_in_the_field(vals in prop::collection::vec(0.0..1.0f64, 49), bumps in prop::collection::vec(0.0..0.5f64, 49), n in 1usize..15, seed in any::<u64>()) {
        let f = GridField::new(1.0, 3, vals.clone()).unwrap();
        let g = GridField::new(1.0, 3, vals.iter().zip(&bumps).map(|(v, b)| v + b).collect()).unwrap();
        let sf = greedy_animal_max(&f, n, 8, seed).unwrap();
        let sg = greedy_animal_max(&g, n, 8, seed).unwrap();
        // the animal found for f is still admissible for g
        let reuse = sf.animal.iter().map(|&v| g.get(v).unwrap()).sum::<f64>() / n as f64;
        prop_assert!(reuse >= sf.greedy_max_avg - 1e-12);
        prop_assert!(sg.greedy_max_avg >= sf.greedy_max_avg - 1e-12);
    }

    #[test]
    fn bernoulli_fields_beat_their_mean(p in 0.05..0.95f64, n in 2usize..20, seed in any::<u64>()) {
        let mut rng = fpptess::rng::stream(seed, 3);
        use rand::Rng;
        let mut total = 0.0;
        for k in 0..20 {
            let vals: Vec<f64> = (0..121).map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 }).collect();
            let f = GridField::new(1.0, 5, vals).unwrap();
            let s = greedy_animal_max(&f, n, 4, seed ^ k).unwrap();
            prop_assert!(s.greedy_max_avg <= 1.0);
            total += s.greedy_max_avg;
        }
        prop_assert!(total / 20.0 > p);
    }
}

#[test]
fn covering_is_closed_under_refinement_checks() {
    for (d, delta) in [(2, 0.3), (3, 0.5), (4, 0.9)] {
        let c = sphere_covering(d, delta).unwrap();
        assert!(c.k() as f64 <= c.size_bound());
        assert!(c.directions().iter().all(|u| (u.norm() - 1.0).abs() < 1e-12));
    }
}

#[test]
fn sampled_pht_respects_triangle_inequality() {
    let phi = DirectionalDistribution::isotropic(3).unwrap();
    let s = sample_pht(2.0, &phi, 10.0, &"unif:0,2".parse().unwrap(), 7).unwrap();
    let mut rng = fpptess::rng::stream(8, 0);
    use rand::Rng;
    for _ in 0..1000 {
        let mut p = || {
            let v = fpptess::geometry::sample_unit_sphere(3, &mut rng);
            let r = 5.0 * rng.random::<f64>();
            v * r
        };
        let (x, y, z) = (p(), p(), p());
        let t = |a: &Vector, b: &Vector| s.passage_time(a, b).unwrap();
        assert!(t(&x, &z) <= t(&x, &y) + t(&y, &z) + 1e-12);
        assert_eq!(t(&x, &y), t(&y, &x));
    }
}
