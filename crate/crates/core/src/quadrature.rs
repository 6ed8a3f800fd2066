//! Adaptive Simpson quadrature on finite intervals.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let mut evals = 3usize;
    let v = refine(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals)?;
    if !v.is_finite() {
        return Err(Error::NumericFailure(format!(
            "quadrature produced a non-finite value on [{a}, {b}] after {evals} evaluations"
        )));
    }
    Ok(v)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    evals: &mut usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NumericFailure(format!(
            "adaptive quadrature did not converge on [{a}, {b}]: error estimate {:.3e} > {:.3e} after {evals} evaluations",
            delta.abs() / 15.0,
            tol
        )));
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1, evals)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1, evals)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_and_trig() {
        assert!((integrate(|x| x * x, 0.0, 1.0, 1e-12).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((integrate(f64::sin, 0.0, PI, 1e-12).unwrap() - 2.0).abs() < 1e-11);
        assert_eq!(integrate(f64::exp, 2.0, 2.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate(|x| if x > 0.0 { 1.0 / x } else { 0.0 }, 0.0, 1.0, 1e-14);
        assert!(matches!(r, Err(Error::NumericFailure(_))));
    }
}
