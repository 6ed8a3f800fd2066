//! Small statistics toolbox: running moments, Poisson tails and a
//! chi-square goodness-of-fit test.

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return MeanSe { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        MeanSe { mean, stderr, n }
    }

    /// `|a - b| / sqrt(se_a^2 + se_b^2)`.
    pub fn z_against(&self, other: &MeanSe) -> f64 {
        (self.mean - other.mean).abs() / (self.stderr.powi(2) + other.stderr.powi(2)).sqrt()
    }
}

/// Ratio estimator `sum(num) / sum(den)` with a delta-method standard error,
/// for per-replicate totals.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> MeanSe {
    let n = num.len();
    let sn: f64 = num.iter().sum();
    let sd: f64 = den.iter().sum();
    let r = sn / sd;
    let stderr = if n > 1 {
        let ss: f64 = num.iter().zip(den).map(|(a, b)| (a - r * b).powi(2)).sum();
        (ss * n as f64 / (n - 1) as f64).sqrt() / sd
    } else {
        f64::NAN
    };
    MeanSe { mean: r, stderr, n }
}

pub fn poisson_ln_pmf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0)
}

pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    poisson_ln_pmf(k, lambda).exp()
}

/// Compensated sum of `exp(l_i - shift)`.
fn kahan_exp_sum(terms: impl Iterator<Item = f64>, shift: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for l in terms {
        let y = (l - shift).exp() - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `ln P[P <= k]`, summing pmf terms in log space.
pub fn poisson_ln_cdf(k: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    if (k as f64) > lambda + 1.0 {
        // the complement is small; avoid cancellation
        let up = poisson_ln_sf(k + 1, lambda);
        return (-up.exp()).ln_1p();
    }
    // terms increase up to k <= lambda + 1, so the last one is the largest
    let shift = poisson_ln_pmf(k, lambda);
    let s = kahan_exp_sum((0..=k).rev().map(|j| poisson_ln_pmf(j, lambda)), shift);
    shift + s.ln()
}

/// `ln P[P >= k]`.
pub fn poisson_ln_sf(k: u64, lambda: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if lambda == 0.0 {
        return f64::NEG_INFINITY;
    }
    if (k as f64) <= lambda {
        let lo = poisson_ln_cdf(k - 1, lambda);
        return (-lo.exp()).ln_1p();
    }
    // terms decrease from k on; stop once they are negligible
    let shift = poisson_ln_pmf(k, lambda);
    let mut terms = Vec::new();
    let mut j = k;
    loop {
        let l = poisson_ln_pmf(j, lambda);
        terms.push(l);
        if l - shift < -60.0 || j > k + 100_000 {
            break;
        }
        j += 1;
    }
    shift + kahan_exp_sum(terms.into_iter().rev(), shift).ln()
}

/// Outcome of a chi-square goodness-of-fit test.
#[derive(Debug, Clone)]
pub struct ChiSquareFit {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(lowest count in bin, observed, expected)`; the last bin is open above.
    pub bins: Vec<(u64, u64, f64)>,
}

impl ChiSquareFit {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value > significance
    }
}

/// Chi-square test of integer observations against `Poisson(lambda)`.
///
/// Adjacent cells are merged until every expected count is at least 5.
pub fn chi_square_poisson(samples: &[u64], lambda: f64) -> ChiSquareFit {
    let n = samples.len() as f64;
    let max_obs = samples.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max_obs as usize + 1];
    for &s in samples {
        counts[s as usize] += 1;
    }

    // raw cells 0..=K with the last one open: P[P >= K]
    let k_max = max_obs.max((lambda + 10.0 * lambda.sqrt() + 10.0) as u64);
    let mut raw: Vec<(u64, u64, f64)> = (0..k_max)
        .map(|k| (k, counts.get(k as usize).copied().unwrap_or(0), n * poisson_pmf(k, lambda)))
        .collect();
    let tail_obs: u64 = counts.iter().skip(k_max as usize).sum();
    raw.push((k_max, tail_obs, n * poisson_ln_sf(k_max, lambda).exp()));

    let mut bins: Vec<(u64, u64, f64)> = Vec::new();
    let mut cur: Option<(u64, u64, f64)> = None;
    for (k, o, e) in raw {
        let c = match cur {
            None => (k, o, e),
            Some((k0, o0, e0)) => (k0, o0 + o, e0 + e),
        };
        if c.2 >= 5.0 {
            bins.push(c);
            cur = None;
        } else {
            cur = Some(c);
        }
    }
    if let Some((_, o, e)) = cur {
        match bins.last_mut() {
            Some(last) => {
                last.1 += o;
                last.2 += e;
            }
            None => bins.push((0, o, e)),
        }
    }

    let statistic: f64 = bins.iter().map(|&(_, o, e)| (o as f64 - e).powi(2) / e).sum();
    let dof = bins.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("dof > 0").cdf(statistic)
    };
    ChiSquareFit { statistic, dof, p_value, bins }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_se_basic() {
        let m = MeanSe::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ratio_of_proportional_data_has_zero_error() {
        let r = ratio_estimate(&[2.0, 4.0, 6.0], &[1.0, 2.0, 3.0]);
        assert_eq!(r.mean, 2.0);
        assert!(r.stderr.abs() < 1e-15);
    }

    #[test]
    fn tails_against_direct_sums() {
        for &lambda in &[0.5, 1.0, 2.0, 7.5, 30.0] {
            let mut cdf = 0.0;
            for k in 0..60u64 {
                cdf += poisson_pmf(k, lambda);
                let got = poisson_ln_cdf(k, lambda).exp();
                assert!((got - cdf).abs() < 1e-12 * cdf.max(1e-300) + 1e-15, "lambda={lambda} k={k}");
                let sf = poisson_ln_sf(k + 1, lambda).exp();
                assert!((sf + got - 1.0).abs() < 1e-12);
            }
        }
        // P[P >= 11] for lambda = 1
        let direct: f64 = (11..40).map(|k| poisson_pmf(k, 1.0)).sum();
        assert!((poisson_ln_sf(11, 1.0).exp() - direct).abs() < 1e-12 * direct);
        // no underflow deep in the tail
        assert!(poisson_ln_sf(400, 1.0).is_finite());
        assert!(poisson_ln_sf(400, 1.0) < -1500.0);
    }

    #[test]
    fn chi_square_detects_wrong_law() {
        // exact expected frequencies pass, a shifted law fails
        let lambda = 4.0;
        let mut good = Vec::new();
        for k in 0..30u64 {
            let c = (10_000.0 * poisson_pmf(k, lambda)).round() as usize;
            good.extend(std::iter::repeat_n(k, c));
        }
        assert!(chi_square_poisson(&good, lambda).passes(0.01));
        let shifted: Vec<u64> = good.iter().map(|k| k + 1).collect();
        assert!(!chi_square_poisson(&shifted, lambda).passes(0.01));
    }
}
