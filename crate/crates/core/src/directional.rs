//! Even directional distributions on the unit sphere.
//!
//! A hyperplane process is parametrized by an intensity and a directional law
//! `phi`. The quantities needed downstream are all linear functionals of
//! `phi` applied to `u -> <x,u>_+`, so each variant provides that integral in
//! closed form or by quadrature.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_unit_sphere, unit, vector, Vector};
use crate::quadrature;

const WEIGHT_TOL: f64 = 1e-9;
const RANK_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-13;

/// An even probability law on `S^{d-1}` whose support spans `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum DirectionalDistribution {
    /// Uniform law on `S^{d-1}`.
    Isotropic(usize),
    /// Atoms stored as antipodal pairs: each `(u, w)` stands for mass `w` at
    /// both `u` and `-u`, so the pair weights sum to 1/2.
    SymmetricAtoms { dim: usize, pairs: Vec<(Vector, f64)> },
    Mixture { dim: usize, components: Vec<(DirectionalDistribution, f64)> },
}

impl DirectionalDistribution {
    pub fn isotropic(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {d}")));
        }
        Ok(DirectionalDistribution::Isotropic(d))
    }

    /// Symmetrize `{(u_i, w_i)}` into `{(u_i, w_i/2), (-u_i, w_i/2)}`.
    ///
    /// Weights must be positive and sum to one; directions must be unit
    /// vectors (up to [`crate::geometry::UNIT_REPAIR_TOL`]) spanning `R^d`.
    pub fn symmetric_atoms(atoms: Vec<(Vector, f64)>) -> Result<Self> {
        Self::atoms_impl(atoms, true)
    }

    fn atoms_impl(atoms: Vec<(Vector, f64)>, check_span: bool) -> Result<Self> {
        let dim = atoms.first().map(|(u, _)| u.len()).ok_or_else(|| Error::invalid("no atoms given"))?;
        if dim < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {dim}")));
        }
        let total: f64 = atoms.iter().map(|(_, w)| *w).sum();
        if atoms.iter().any(|(_, w)| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("atom weights must be positive and finite"));
        }
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("atom weights must sum to 1, got {total}")));
        }
        let mut pairs = Vec::with_capacity(atoms.len());
        for (u, w) in atoms {
            if u.len() != dim {
                return Err(Error::invalid("atoms have mixed dimensions"));
            }
            pairs.push((unit(u)?, 0.5 * w / total));
        }
        let dirs: Vec<&Vector> = pairs.iter().map(|(u, _)| u).collect();
        if check_span && span_rank(dim, &dirs) < dim {
            return Err(Error::invalid("atoms are concentrated on a great subsphere"));
        }
        Ok(DirectionalDistribution::SymmetricAtoms { dim, pairs })
    }

    /// Weighted mixture. Components may individually be degenerate (e.g. a
    /// single antipodal pair) as long as the mixture spans `R^d`.
    pub fn mixture(components: Vec<(DirectionalDistribution, f64)>) -> Result<Self> {
        let dim = components.first().map(|(c, _)| c.dim()).ok_or_else(|| Error::invalid("empty mixture"))?;
        if components.iter().any(|(c, w)| c.dim() != dim || !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("mixture components need a common dimension and positive weights"));
        }
        let total: f64 = components.iter().map(|(_, w)| *w).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::invalid(format!("mixture weights must sum to 1, got {total}")));
        }
        let components = components.into_iter().map(|(c, w)| (c, w / total)).collect();
        let m = DirectionalDistribution::Mixture { dim, components };
        if !m.is_nondegenerate() {
            return Err(Error::invalid("mixture is concentrated on a great subsphere"));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        match self {
            DirectionalDistribution::Isotropic(d) => *d,
            DirectionalDistribution::SymmetricAtoms { dim, .. } => *dim,
            DirectionalDistribution::Mixture { dim, .. } => *dim,
        }
    }

    /// All atoms with their weights, both members of each antipodal pair.
    pub fn atoms(&self) -> Vec<(Vector, f64)> {
        match self {
            DirectionalDistribution::SymmetricAtoms { pairs, .. } => {
                pairs.iter().flat_map(|(u, w)| [(u.clone(), *w), (-u, *w)]).collect()
            }
            _ => Vec::new(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        match self {
            DirectionalDistribution::Isotropic(d) => sample_unit_sphere(*d, rng),
            DirectionalDistribution::SymmetricAtoms { pairs, .. } => {
                let mut t = rng.random::<f64>() * 0.5;
                let sign_neg = rng.random::<bool>();
                let mut chosen = &pairs[pairs.len() - 1].0;
                for (u, w) in pairs {
                    if t < *w {
                        chosen = u;
                        break;
                    }
                    t -= w;
                }
                if sign_neg {
                    -chosen
                } else {
                    chosen.clone()
                }
            }
            DirectionalDistribution::Mixture { components, .. } => {
                let mut t = rng.random::<f64>();
                for (c, w) in components {
                    if t < *w {
                        return c.sample(rng);
                    }
                    t -= w;
                }
                components[components.len() - 1].0.sample(rng)
            }
        }
    }

    /// `int <x,u>_+ phi(du)`.
    pub fn mean_positive_part(&self, x: &Vector) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::invalid(format!("vector has dimension {}, law has {}", x.len(), self.dim())));
        }
        match self {
            DirectionalDistribution::Isotropic(d) => Ok(x.norm() * isotropic_positive_mean(*d)?),
            // (t)_+ + (-t)_+ = |t| for each antipodal pair
            DirectionalDistribution::SymmetricAtoms { pairs, .. } => {
                Ok(pairs.iter().map(|(u, w)| w * x.dot(u).abs()).sum())
            }
            DirectionalDistribution::Mixture { components, .. } => {
                let mut acc = 0.0;
                for (c, w) in components {
                    acc += w * c.mean_positive_part(x)?;
                }
                Ok(acc)
            }
        }
    }

    /// Support function `gamma * int |<x,u>| phi(du)` of the associated zonoid.
    pub fn zonoid_support(&self, gamma: f64, x: &Vector) -> Result<f64> {
        if !(gamma > 0.0) {
            return Err(Error::invalid(format!("intensity must be > 0, got {gamma}")));
        }
        Ok(2.0 * gamma * self.mean_positive_part(x)?)
    }

    fn support_vectors(&self) -> Option<Vec<Vector>> {
        match self {
            DirectionalDistribution::Isotropic(_) => None,
            DirectionalDistribution::SymmetricAtoms { pairs, .. } => {
                Some(pairs.iter().map(|(u, _)| u.clone()).collect())
            }
            DirectionalDistribution::Mixture { components, .. } => {
                let mut all = Vec::new();
                for (c, _) in components {
                    all.extend(c.support_vectors()?);
                }
                Some(all)
            }
        }
    }

    /// Whether the support spans `R^d` (not concentrated on a great subsphere).
    pub fn is_nondegenerate(&self) -> bool {
        match self.support_vectors() {
            None => true,
            Some(v) => span_rank(self.dim(), &v.iter().collect::<Vec<_>>()) == self.dim(),
        }
    }
}

pub fn mean_positive_part(phi: &DirectionalDistribution, x: &Vector) -> Result<f64> {
    phi.mean_positive_part(x)
}

pub fn zonoid_support(phi: &DirectionalDistribution, gamma: f64, x: &Vector) -> Result<f64> {
    phi.zonoid_support(gamma, x)
}

fn span_rank(dim: usize, dirs: &[&Vector]) -> usize {
    if dirs.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(dim, dirs.len(), |i, j| dirs[j][i]);
    m.rank(RANK_TOL)
}

/// `E <e_1, U>_+` for `U` uniform on `S^{d-1}`.
///
/// The polar angle `t` of a uniform direction has density proportional to
/// `sin^{d-2} t` on `[0, pi]`.
pub fn isotropic_positive_mean(d: usize) -> Result<f64> {
    use std::f64::consts::{FRAC_PI_2, PI};
    if d == 2 {
        return Ok(1.0 / PI);
    }
    let k = (d - 2) as i32;
    let num = quadrature::integrate(|t: f64| t.cos() * t.sin().powi(k), 0.0, FRAC_PI_2, QUAD_TOL)?;
    let den = quadrature::integrate(|t: f64| t.sin().powi(k), 0.0, PI, QUAD_TOL)?;
    Ok(num / den)
}

impl fmt::Display for DirectionalDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionalDistribution::Isotropic(2) => write!(f, "isotropic"),
            DirectionalDistribution::Isotropic(d) => write!(f, "isotropic:{d}"),
            DirectionalDistribution::SymmetricAtoms { pairs, .. } => {
                write!(f, "atoms:")?;
                for (i, (u, w)) in pairs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    let coords: Vec<String> = u.iter().map(|c| format!("{c}")).collect();
                    write!(f, "{}:{}", coords.join(","), 2.0 * w)?;
                }
                Ok(())
            }
            DirectionalDistribution::Mixture { components, .. } => {
                write!(f, "mixture:")?;
                for (i, (c, w)) in components.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{w}*{c}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `isotropic`, `isotropic:<d>`, `atoms:u1x,u1y:w1;u2x,u2y:w2` and
/// `mixture:w1*<spec>|w2*<spec>`.
impl FromStr for DirectionalDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_spec(s, true)
    }
}

fn parse_spec(s: &str, top_level: bool) -> Result<DirectionalDistribution> {
    type D = DirectionalDistribution;
    {
        let s = s.trim();
        let perr = |m: &str| Error::Parse(format!("directional spec `{s}`: {m}"));
        if s == "isotropic" {
            return D::isotropic(2);
        }
        if let Some(d) = s.strip_prefix("isotropic:") {
            let d: usize = d.trim().parse().map_err(|_| perr("bad dimension"))?;
            return D::isotropic(d);
        }
        if let Some(body) = s.strip_prefix("atoms:") {
            let mut atoms = Vec::new();
            for item in body.split(';').filter(|t| !t.trim().is_empty()) {
                let (coords, w) = item.rsplit_once(':').ok_or_else(|| perr("atom needs `coords:weight`"))?;
                let coords: Vec<f64> = coords
                    .split(',')
                    .map(|c| c.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| perr("bad coordinate"))?;
                let w: f64 = w.trim().parse().map_err(|_| perr("bad weight"))?;
                atoms.push((vector(&coords), w));
            }
            return D::atoms_impl(atoms, top_level);
        }
        if let Some(body) = s.strip_prefix("mixture:") {
            let mut comps = Vec::new();
            for item in body.split('|') {
                let (w, spec) = item.split_once('*').ok_or_else(|| perr("component needs `weight*spec`"))?;
                let w: f64 = w.trim().parse().map_err(|_| perr("bad weight"))?;
                comps.push((parse_spec(spec, false)?, w));
            }
            return D::mixture(comps);
        }
        Err(perr("unknown family"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use std::f64::consts::PI;

    fn axes() -> DirectionalDistribution {
        "atoms:1,0:0.5;0,1:0.5".parse().unwrap()
    }

    #[test]
    fn isotropic_closed_forms() {
        // Gamma(d/2) / (2 sqrt(pi) Gamma((d+1)/2))
        use statrs::function::gamma::gamma;
        for d in 2..=8 {
            let df = d as f64;
            let exact = gamma(df / 2.0) / (2.0 * PI.sqrt() * gamma((df + 1.0) / 2.0));
            let got = isotropic_positive_mean(d).unwrap();
            assert!((got - exact).abs() < 1e-10 * exact, "d={d}: {got} vs {exact}");
        }
        assert!((isotropic_positive_mean(3).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn mean_positive_part_examples() {
        let iso = DirectionalDistribution::isotropic(2).unwrap();
        assert!((iso.mean_positive_part(&vector(&[1.0, 0.0])).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!((axes().mean_positive_part(&vector(&[1.0, 1.0])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(iso.mean_positive_part(&vector(&[0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(axes().mean_positive_part(&vector(&[0.0, 0.0])).unwrap(), 0.0);
        assert!(iso.mean_positive_part(&vector(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn zonoid_support_examples() {
        let iso = DirectionalDistribution::isotropic(2).unwrap();
        assert!((iso.zonoid_support(PI, &vector(&[1.0, 0.0])).unwrap() - 2.0).abs() < 1e-14);
        assert!((axes().zonoid_support(4.0, &vector(&[1.0, 1.0])).unwrap() - 4.0).abs() < 1e-14);
        assert_eq!(iso.zonoid_support(1.0, &vector(&[0.0, 0.0])).unwrap(), 0.0);
        assert!(iso.zonoid_support(0.0, &vector(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn atoms_are_symmetrized_and_validated() {
        let a = axes();
        let atoms = a.atoms();
        assert_eq!(atoms.len(), 4);
        assert!(atoms.iter().all(|(_, w)| (*w - 0.25).abs() < 1e-15));
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);

        // collinear atoms live on a great subsphere
        assert!("atoms:1,0:0.5;-1,0:0.5".parse::<DirectionalDistribution>().is_err());
        assert!("atoms:1,0:0.5;0,1:0.4".parse::<DirectionalDistribution>().is_err());
        assert!("atoms:2,0:0.5;0,1:0.5".parse::<DirectionalDistribution>().is_err());
        assert!("wobble".parse::<DirectionalDistribution>().is_err());
    }

    #[test]
    fn spec_round_trip() {
        for s in ["isotropic", "isotropic:3", "atoms:1,0:0.5;0,1:0.5", "mixture:0.5*isotropic|0.5*atoms:1,0:1"] {
            let d: DirectionalDistribution = s.parse().unwrap();
            let again: DirectionalDistribution = d.to_string().parse().unwrap();
            assert_eq!(d, again, "{s}");
        }
    }

    #[test]
    fn mixture_is_weighted_sum() {
        let m: DirectionalDistribution = "mixture:0.25*isotropic|0.75*atoms:1,0:0.5;0,1:0.5".parse().unwrap();
        let x = vector(&[0.3, -1.2]);
        let want = 0.25 * x.norm() / PI + 0.75 * 0.25 * (0.3 + 1.2);
        assert!((m.mean_positive_part(&x).unwrap() - want).abs() < 1e-14);
        assert!(m.is_nondegenerate());
    }

    #[test]
    fn sampling_isotropic_is_centered_and_unit() {
        let iso = DirectionalDistribution::isotropic(2).unwrap();
        let mut rng = stream(3, 0);
        let n = 100_000;
        let mut mean = vector(&[0.0, 0.0]);
        for _ in 0..n {
            mean += iso.sample(&mut rng);
        }
        mean /= n as f64;
        // each coordinate has variance 1/2
        let se = (0.5 / n as f64).sqrt();
        assert!(mean[0].abs() < 3.0 * se && mean[1].abs() < 3.0 * se, "{mean:?}");

        let iso3 = DirectionalDistribution::isotropic(3).unwrap();
        for _ in 0..100_000 {
            assert!((iso3.sample(&mut rng).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_atoms_hits_each_atom_equally() {
        let a = axes();
        let mut rng = stream(5, 0);
        let mut counts = [0usize; 4];
        let n = 10_000;
        for _ in 0..n {
            let u = a.sample(&mut rng);
            let i = match (u[0].round() as i32, u[1].round() as i32) {
                (1, 0) => 0,
                (-1, 0) => 1,
                (0, 1) => 2,
                (0, -1) => 3,
                _ => panic!("not an atom: {u:?}"),
            };
            counts[i] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 0.25).abs() < 0.02);
        }
    }
}
