//! Sample-statistics helpers used by the estimators and diagnostics.

use statrs::distribution::{ContinuousCDF, Normal};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance (divides by n - 1).
pub fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len();
    assert!(n >= 2, "variance needs at least two samples");
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

fn central_moment(x: &[f64], m: f64, order: i32) -> f64 {
    x.iter().map(|v| (v - m).powi(order)).sum::<f64>() / x.len() as f64
}

/// Sample skewness m3 / m2^(3/2) (population central moments).
pub fn skewness(x: &[f64]) -> f64 {
    let m = mean(x);
    let m2 = central_moment(x, m, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(x, m, 3) / m2.powf(1.5)
}

/// Sample excess kurtosis m4 / m2^2 - 3.
pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let m = mean(x);
    let m2 = central_moment(x, m, 2);
    if m2 == 0.0 {
        return 0.0;
    }
    central_moment(x, m, 4) / (m2 * m2) - 3.0
}

/// Pearson correlation; `None` when either stream has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Kolmogorov-Smirnov distance between the empirical distribution of `data`
/// and a normal with the given mean and standard deviation.
pub fn ks_distance_normal(data: &[f64], mu: f64, sd: f64) -> f64 {
    assert!(sd > 0.0 && !data.is_empty());
    let normal = Normal::new(mu, sd).expect("valid normal parameters");
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = normal.cdf(x);
        let upper = (i as f64 + 1.0) / n - cdf;
        let lower = cdf - i as f64 / n;
        d = d.max(upper.abs()).max(lower.abs());
    }
    d
}
