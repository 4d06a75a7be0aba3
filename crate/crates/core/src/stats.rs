//! Empirical distribution tools: Kolmogorov–Smirnov distances, OLS slopes and
//! normal-approximation binomial checks.

use crate::error::{Error, Result};

/// Asymptotic 1% critical value of the Kolmogorov distribution.
pub const KS_CRITICAL_1PCT: f64 = 1.63;

fn sorted(samples: &[f64], what: &'static str) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::param(what, "sample must be nonempty"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::param(what, "sample contains NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `sup_x |F_N(x) − F(x)|`, checking both one-sided gaps at each order statistic.
///
/// A `cdf` that decreases along the sorted sample is a usage error.
pub fn ks_one_sample<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    let xs = sorted(samples, "samples")?;
    let n = xs.len() as f64;
    let mut prev = f64::NEG_INFINITY;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        if f.is_nan() || f < prev {
            return Err(Error::param("cdf", "must be nondecreasing"));
        }
        prev = f;
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// `sup_x |F_a(x) − F_b(x)|` between two empirical distribution functions.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = sorted(a, "a")?;
    let b = sorted(b, "b")?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn slope_regression(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::param("ys", "length differs from xs"));
    }
    if xs.len() < 2 {
        return Err(Error::param("xs", "need at least two points"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx <= 0.0 {
        return Err(Error::param("xs", "all abscissae are equal"));
    }
    Ok(sxy / sxx)
}

/// One-sample KS threshold `c/√N`.
pub fn ks_threshold_one(n: usize, slack: f64) -> f64 {
    slack * KS_CRITICAL_1PCT / (n as f64).sqrt()
}

/// Two-sample KS threshold `c·√(1/N + 1/M)`.
pub fn ks_threshold_two(n: usize, m: usize, slack: f64) -> f64 {
    slack * KS_CRITICAL_1PCT * (1.0 / n as f64 + 1.0 / m as f64).sqrt()
}

/// Standard error of a binomial frequency under the hypothesised `p`.
pub fn binomial_sigma(trials: usize, p: f64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// `|hits/trials − p| ≤ k·σ(p)`.
pub fn within_sigma(hits: usize, trials: usize, p: f64, k: f64) -> bool {
    (hits as f64 / trials as f64 - p).abs() <= k * binomial_sigma(trials, p)
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn ks_one_sample_examples() {
        let d = ks_one_sample(&[0.0], |x| if x < 0.0 { 0.0 } else { 0.5 }).unwrap();
        assert_relative_eq!(d, 0.5);
        assert!(ks_one_sample(&[], |x| x).is_err());
        assert!(ks_one_sample(&[0.1, 0.2, 0.3], |x| 1.0 - x).is_err());

        let mut rng = RngState::new(1);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let d = ks_one_sample(&xs, |x| x.clamp(0.0, 1.0)).unwrap();
        assert!(d < ks_threshold_one(n, 1.0));
    }

    #[test]
    fn ks_two_sample_examples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &[4.0, 3.0, 2.0, 1.0]).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&a, &[10.0, 11.0]).unwrap(), 1.0);
        assert_relative_eq!(
            ks_two_sample(&[1.0, 1.0, 4.0, 4.0], &[1.0, 1.0, 1.0, 4.0]).unwrap(),
            0.25
        );
        let x = [0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27];
        let y = [0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.00, 0.56, 0.03];
        assert_relative_eq!(ks_two_sample(&x, &y).unwrap(), 0.4, epsilon = 1e-12);
        assert!(ks_two_sample(&a, &[]).is_err());
        // atoms at −∞ are ordinary sample values
        let d = ks_two_sample(&[f64::NEG_INFINITY, 1.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(d, 0.5);

        let mut rng = RngState::new(2);
        let a: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &b).unwrap() < ks_threshold_two(5000, 5000, 1.0));
    }

    #[test]
    fn slope_examples() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert_relative_eq!(slope_regression(&xs, &ys).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(slope_regression(&xs, &[3.0; 10]).unwrap(), 0.0);
        assert!(slope_regression(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(slope_regression(&[1.0], &[0.0]).is_err());

        // y = x with one point displaced by 1: OLS shifts by (x_j − x̄)/Sxx
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let mut ys = xs.clone();
        ys[n - 1] += 1.0;
        let mx = xs.iter().sum::<f64>() / n as f64;
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let expected = 1.0 + (xs[n - 1] - mx) / sxx;
        assert_relative_eq!(slope_regression(&xs, &ys).unwrap(), expected, epsilon = 1e-12);
        assert!((expected - 1.0).abs() < 10.0 / n as f64);
    }

    #[test]
    fn binomial_helpers() {
        assert!(within_sigma(500, 1000, 0.5, 3.0));
        assert!(!within_sigma(600, 1000, 0.5, 3.0));
        assert!(within_sigma(0, 1000, 0.0, 3.0));
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0]);
        assert_relative_eq!(m, 2.0);
        assert_relative_eq!(se, (1.0f64 / 3.0).sqrt());
    }
}
