//! Moment estimators, residual diagnostics, and density fits for the two
//! price models.
//!
//! For the additive model the estimators are `mu_hat` (sample mean),
//! `sigma_hat^2` (scaled quadratic variation of the increments), and
//! `alpha_hat = sigma_hat^2 / (2 V_hat)` with `V_hat` the unbiased sample
//! variance. For the multiplicative model `sigma_hat^2` comes from the
//! quadratic variation of the log-increments and `alpha_hat` from the
//! conditional-expectation decay curve. Residual increments back out the
//! implied Wiener increments; their normality is a model-fit diagnostic.

use thiserror::Error;

use crate::numeric::{golden_section_min, nelder_mead};
use crate::sde::{CorrelationMatrix, SdeError, SdeKind, SdeParams};
use crate::series::PriceSeries;
use crate::stats;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("series {label:?} needs at least {needed} observations, got {len}")]
    TooFewObservations {
        label: String,
        needed: usize,
        len: usize,
    },
    #[error("series {label:?} is constant; sigma and alpha are undefined")]
    ConstantSeries { label: String },
    #[error("series {label:?} has a non-positive value at index {index}; the multiplicative model requires positive prices")]
    NonPositiveValue { label: String, index: usize },
    #[error("decay curve is non-positive over the whole fit window; alpha is unidentifiable")]
    AlphaUnidentifiable,
    #[error("estimated alpha {alpha} is not positive; the mean-reverting model does not fit")]
    AlphaNotPositive { alpha: f64 },
    #[error("residual streams must have equal lengths >= 2 (stream {index} has {len}, expected {expected})")]
    ResidualLengthMismatch {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("residual stream {index} has zero variance; correlation undefined")]
    ZeroVarianceResiduals { index: usize },
    #[error("histogram needs at least 2 bins, got {0}")]
    TooFewBins(usize),
    #[error("fewer observations ({obs}) than bins ({bins})")]
    FewerObservationsThanBins { obs: usize, bins: usize },
    #[error("lag count {k_max} must be positive and smaller than the series length {len}")]
    BadLagCount { k_max: usize, len: usize },
    #[error(transparent)]
    Sde(#[from] SdeError),
}

/// Tuning knobs shared by the estimators and reports.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    /// Guard band for the decay ratios, as a fraction of the sample
    /// standard deviation: terms with |S(i) - mu_hat| below it are dropped.
    pub guard_epsilon: f64,
    /// Upper cap on the decay-fit window for the multiplicative alpha.
    pub k_fit_cap: usize,
    /// Number of lags computed for the diagnostic curves.
    pub k_max: usize,
    /// Histogram bins for the density fits.
    pub n_bins: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            // calibrated so at most ~5% of ratio terms drop on reference
            // parameter runs
            guard_epsilon: 0.04,
            k_fit_cap: 20,
            k_max: 40,
            n_bins: 15,
        }
    }
}

/// Fitted parameters plus the implied Wiener increments.
#[derive(Debug, Clone)]
pub struct ModelFit {
    pub params: SdeParams,
    /// Residual increments dW_hat(1..L-1); approximately N(0, dt) when the
    /// model is correctly specified.
    pub residuals: Vec<f64>,
}

fn check_len(series: &PriceSeries, needed: usize) -> Result<(), EstimateError> {
    if series.len() < needed {
        return Err(EstimateError::TooFewObservations {
            label: series.label.clone(),
            needed,
            len: series.len(),
        });
    }
    Ok(())
}

/// Fits the additive-noise (Ornstein-Uhlenbeck) model by moments.
pub fn estimate_ou(series: &PriceSeries) -> Result<ModelFit, EstimateError> {
    check_len(series, 3)?;
    let v = &series.values;
    let dt = series.dt;
    let l = v.len();

    let mu = stats::mean(v);
    let quad: f64 = v.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    let sigma_sq = quad / dt / (l - 1) as f64;
    let var = stats::sample_variance(v);
    if var == 0.0 || sigma_sq == 0.0 {
        return Err(EstimateError::ConstantSeries {
            label: series.label.clone(),
        });
    }
    let alpha = sigma_sq / (2.0 * var);
    let sigma = sigma_sq.sqrt();

    let residuals: Vec<f64> = v
        .windows(2)
        .map(|w| (w[1] - w[0] - alpha * (mu - w[0]) * dt) / sigma)
        .collect();

    Ok(ModelFit {
        params: SdeParams::additive(alpha, mu, sigma)?,
        residuals,
    })
}

/// Moment estimator for sigma^2 of the multiplicative model: the scaled
/// quadratic variation of the log-increments, `(1/dt) E[(d log S)^2]`.
pub fn mn_sigma_squared(series: &PriceSeries) -> Result<f64, EstimateError> {
    check_len(series, 3)?;
    if let Some(index) = series.values.iter().position(|v| *v <= 0.0) {
        return Err(EstimateError::NonPositiveValue {
            label: series.label.clone(),
            index,
        });
    }
    let quad: f64 = series
        .values
        .windows(2)
        .map(|w| {
            let r = (w[1] / w[0]).ln();
            r * r
        })
        .sum();
    Ok(quad / series.dt / (series.len() - 1) as f64)
}

/// Fits the multiplicative-noise model: `mu_hat` and `sigma_hat` by
/// moments, `alpha_hat` as the least-squares constant fitted to
/// `-ln y(k) / (k dt)` over the decay window `k in [1, k_fit]`.
pub fn estimate_mn(
    series: &PriceSeries,
    opts: &EstimateOptions,
) -> Result<ModelFit, EstimateError> {
    check_len(series, 3)?;
    let v = &series.values;
    let dt = series.dt;

    let sigma_sq = mn_sigma_squared(series)?;
    if sigma_sq == 0.0 {
        return Err(EstimateError::ConstantSeries {
            label: series.label.clone(),
        });
    }
    let sigma = sigma_sq.sqrt();
    let mu = stats::mean(v);

    let k_cap = opts.k_fit_cap.min(series.len() - 2).max(1);
    let decay = decay_diagnostics(series, mu, k_cap, opts.guard_epsilon)?;
    let k_fit = decay.default_fit_window(k_cap);
    let alpha_estimates: Vec<f64> = (1..=k_fit)
        .filter_map(|k| decay.alpha[k - 1])
        .collect();
    if alpha_estimates.is_empty() {
        return Err(EstimateError::AlphaUnidentifiable);
    }
    let alpha = stats::mean(&alpha_estimates);
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(EstimateError::AlphaNotPositive { alpha });
    }

    let residuals: Vec<f64> = v
        .windows(2)
        .map(|w| (w[1] - w[0] - alpha * (mu - w[0]) * dt) / (sigma * w[0]))
        .collect();

    Ok(ModelFit {
        params: SdeParams::multiplicative(alpha, mu, sigma)?,
        residuals,
    })
}

/// Decay and autocovariance diagnostics.
///
/// `y[k-1]` is the ratio average estimating `exp(-alpha k dt)`; terms whose
/// denominator `|S(i) - mu_hat|` falls inside the guard band are excluded
/// (the ratio is very sensitive to errors when S is near mu_hat) and
/// counted. `alpha[k-1]` is `-ln y(k) / (k dt)` where `y(k) > 0`.
/// `autocov[k]` is the lag-k sample autocovariance, `k = 0..=k_max`.
#[derive(Debug, Clone)]
pub struct DecayDiagnostics {
    pub dt: f64,
    pub y: Vec<Option<f64>>,
    pub y_se: Vec<Option<f64>>,
    pub alpha: Vec<Option<f64>>,
    pub autocov: Vec<f64>,
    pub excluded_terms: usize,
    pub total_terms: usize,
    pub guard: f64,
}

impl DecayDiagnostics {
    pub fn k_max(&self) -> usize {
        self.y.len()
    }

    /// Default fit window for the multiplicative alpha: the largest k
    /// (capped) whose decay estimate still clears three standard errors.
    pub fn default_fit_window(&self, cap: usize) -> usize {
        let mut k_fit = 0;
        for k in 1..=cap.min(self.k_max()) {
            if let (Some(y), Some(se)) = (self.y[k - 1], self.y_se[k - 1]) {
                if y > 3.0 * se {
                    k_fit = k;
                }
            }
        }
        if k_fit == 0 {
            // nothing clears the noise floor; fall back to the full cap so
            // the caller sees whatever information exists
            cap.min(self.k_max())
        } else {
            k_fit
        }
    }
}

pub fn decay_diagnostics(
    series: &PriceSeries,
    mu_hat: f64,
    k_max: usize,
    guard_epsilon: f64,
) -> Result<DecayDiagnostics, EstimateError> {
    let l = series.len();
    if k_max == 0 || k_max >= l {
        return Err(EstimateError::BadLagCount { k_max, len: l });
    }
    let v = &series.values;
    let dt = series.dt;
    let sd = stats::sample_variance(v).sqrt();
    let guard = guard_epsilon * sd;

    let mut y = Vec::with_capacity(k_max);
    let mut y_se = Vec::with_capacity(k_max);
    let mut alpha = Vec::with_capacity(k_max);
    let mut excluded = 0usize;
    let mut total = 0usize;

    for k in 1..=k_max {
        let mut terms: Vec<f64> = Vec::with_capacity(l - k);
        for i in 0..(l - k) {
            total += 1;
            let denom = v[i] - mu_hat;
            if denom.abs() < guard || denom == 0.0 {
                excluded += 1;
                continue;
            }
            terms.push((v[i + k] - mu_hat) / denom);
        }
        if terms.is_empty() {
            y.push(None);
            y_se.push(None);
            alpha.push(None);
            continue;
        }
        let m = stats::mean(&terms);
        let se = if terms.len() >= 2 {
            Some((stats::sample_variance(&terms) / terms.len() as f64).sqrt())
        } else {
            None
        };
        y.push(Some(m));
        y_se.push(se);
        alpha.push(if m > 0.0 {
            Some(-m.ln() / (k as f64 * dt))
        } else {
            None
        });
    }

    let mut autocov = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mut acc = 0.0;
        for i in 0..(l - k) {
            acc += (v[i] - mu_hat) * (v[i + k] - mu_hat);
        }
        autocov.push(acc / (l - k) as f64);
    }

    Ok(DecayDiagnostics {
        dt,
        y,
        y_se,
        alpha,
        autocov,
        excluded_terms: excluded,
        total_terms: total,
        guard,
    })
}

/// Pearson correlation matrix of the residual streams; exactly symmetric
/// with a unit diagonal.
pub fn correlation_matrix(residuals: &[Vec<f64>]) -> Result<CorrelationMatrix, EstimateError> {
    let n = residuals.len();
    assert!(n > 0, "need at least one residual stream");
    let expected = residuals[0].len();
    for (index, r) in residuals.iter().enumerate() {
        if r.len() != expected || r.len() < 2 {
            return Err(EstimateError::ResidualLengthMismatch {
                index,
                len: r.len(),
                expected: expected.max(2),
            });
        }
    }
    let mut rho = vec![vec![0.0; n]; n];
    for i in 0..n {
        rho[i][i] = 1.0;
        for j in (i + 1)..n {
            let r = stats::pearson(&residuals[i], &residuals[j]).ok_or_else(|| {
                let index = if stats::sample_variance(&residuals[i]) == 0.0 {
                    i
                } else {
                    j
                };
                EstimateError::ZeroVarianceResiduals { index }
            })?;
            // rounding can push a perfect correlation epsilon past 1
            let r = r.clamp(-1.0, 1.0);
            rho[i][j] = r;
            rho[j][i] = r;
        }
    }
    Ok(CorrelationMatrix::new(rho)?)
}

/// The correlation display exactly as printed in the source material:
/// residual covariance divided by (dt)^2, without the square root over the
/// variance product. Kept as an explicitly named compatibility route; the
/// result is not a correlation matrix (entries are unbounded).
pub fn correlation_matrix_literal(residuals: &[Vec<f64>], dt: f64) -> Vec<Vec<f64>> {
    let n = residuals.len();
    let l = residuals[0].len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let s: f64 = residuals[i]
                .iter()
                .zip(&residuals[j])
                .map(|(a, b)| a * b)
                .sum();
            out[i][j] = s / (l - 1) as f64 / (dt * dt);
        }
    }
    out
}

/// Normalized histogram with equal-width bins spanning [min, max].
#[derive(Debug, Clone)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    /// Density heights: count / (n * width). Integrates to 1.
    pub heights: Vec<f64>,
    pub counts: Vec<usize>,
    pub bin_width: f64,
    pub n_obs: usize,
}

impl Histogram {
    pub fn from_values(values: &[f64], n_bins: usize) -> Result<Self, EstimateError> {
        if n_bins < 2 {
            return Err(EstimateError::TooFewBins(n_bins));
        }
        if values.len() < n_bins {
            return Err(EstimateError::FewerObservationsThanBins {
                obs: values.len(),
                bins: n_bins,
            });
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi <= lo {
            return Err(EstimateError::ConstantSeries {
                label: "histogram input".into(),
            });
        }
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &v in values {
            let idx = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        let n = values.len();
        let heights: Vec<f64> = counts
            .iter()
            .map(|&c| c as f64 / (n as f64 * width))
            .collect();
        let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
        let centers: Vec<f64> = (0..n_bins)
            .map(|i| lo + (i as f64 + 0.5) * width)
            .collect();
        Ok(Histogram {
            edges,
            centers,
            heights,
            counts,
            bin_width: width,
            n_obs: n,
        })
    }
}

/// Density families available to [`fit_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityFamily {
    Normal,
    Eq4,
}

/// Normal density least-squares fit. The fit identifies the location and
/// the single scale `sigma / sqrt(2 alpha)`; separate sigma and alpha
/// variations are indistinguishable in the stationary law.
#[derive(Debug, Clone, Copy)]
pub struct NormalDensityFit {
    pub mu: f64,
    pub scale: f64,
    pub sse: f64,
}

/// Multiplicative stationary-density fit: mu and sigma fixed by moments,
/// alpha chosen by least squares against the histogram.
#[derive(Debug, Clone, Copy)]
pub struct Eq4DensityFit {
    pub params: SdeParams,
    pub sse: f64,
}

#[derive(Debug, Clone, Copy)]
pub enum DensityFitResult {
    Normal(NormalDensityFit),
    Eq4(Eq4DensityFit),
}

impl DensityFitResult {
    pub fn sse(&self) -> f64 {
        match self {
            DensityFitResult::Normal(f) => f.sse,
            DensityFitResult::Eq4(f) => f.sse,
        }
    }
}

fn normal_density(x: f64, mu: f64, scale: f64) -> f64 {
    let z = (x - mu) / scale;
    (-0.5 * z * z).exp() / (scale * (2.0 * std::f64::consts::PI).sqrt())
}

/// Least-squares fit of a normal density to histogram heights.
pub fn fit_normal_to_histogram(hist: &Histogram) -> NormalDensityFit {
    // moment start from the binned data
    let mass: f64 = hist.heights.iter().sum::<f64>() * hist.bin_width;
    let m0: f64 = hist
        .centers
        .iter()
        .zip(&hist.heights)
        .map(|(c, h)| c * h * hist.bin_width)
        .sum::<f64>()
        / mass;
    let v0: f64 = hist
        .centers
        .iter()
        .zip(&hist.heights)
        .map(|(c, h)| (c - m0) * (c - m0) * h * hist.bin_width)
        .sum::<f64>()
        / mass;
    let s0 = v0.max(1e-12 * hist.bin_width * hist.bin_width).sqrt();

    let objective = |p: &[f64]| {
        let mu = p[0];
        let scale = p[1].exp();
        hist.centers
            .iter()
            .zip(&hist.heights)
            .map(|(c, h)| {
                let d = normal_density(*c, mu, scale) - h;
                d * d
            })
            .sum::<f64>()
    };
    let (best, sse) = nelder_mead(objective, &[m0, s0.ln()], &[0.25 * s0, 0.2], 2000);
    NormalDensityFit {
        mu: best[0],
        scale: best[1].exp(),
        sse,
    }
}

/// Least-squares fit of the multiplicative stationary density over alpha,
/// holding the moment estimates of mu and sigma fixed. The optimization
/// runs over gamma = 2 alpha / sigma^2 in log space: a coarse scan
/// followed by a golden-section refinement.
pub fn fit_eq4_to_histogram(
    hist: &Histogram,
    mu: f64,
    sigma: f64,
) -> Result<Eq4DensityFit, EstimateError> {
    assert!(mu > 0.0 && sigma > 0.0);
    let sse_for = |ln_gamma_param: f64| -> f64 {
        let gamma = ln_gamma_param.exp();
        let alpha = 0.5 * gamma * sigma * sigma;
        let p = match SdeParams::multiplicative(alpha, mu, sigma) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        hist.centers
            .iter()
            .zip(&hist.heights)
            .map(|(c, h)| {
                let d = crate::sde::mn_stationary_pdf(*c, &p) - h;
                d * d
            })
            .sum::<f64>()
    };

    let (lo, hi) = ((1e-2f64).ln(), (1e6f64).ln());
    let scan_points = 240;
    let mut best_x = lo;
    let mut best_v = f64::INFINITY;
    for i in 0..=scan_points {
        let x = lo + (hi - lo) * i as f64 / scan_points as f64;
        let v = sse_for(x);
        if v < best_v {
            best_v = v;
            best_x = x;
        }
    }
    let span = (hi - lo) / scan_points as f64;
    let refined = golden_section_min(sse_for, best_x - span, best_x + span, 1e-10);
    let gamma = refined.exp();
    let alpha = 0.5 * gamma * sigma * sigma;
    Ok(Eq4DensityFit {
        params: SdeParams::multiplicative(alpha, mu, sigma)?,
        sse: sse_for(refined),
    })
}

/// Histogram-based least-squares density fit (15 bins by default).
pub fn fit_density(
    series: &PriceSeries,
    family: DensityFamily,
    n_bins: usize,
) -> Result<DensityFitResult, EstimateError> {
    let hist = Histogram::from_values(&series.values, n_bins)?;
    match family {
        DensityFamily::Normal => Ok(DensityFitResult::Normal(fit_normal_to_histogram(&hist))),
        DensityFamily::Eq4 => {
            let mu = stats::mean(&series.values);
            let sigma = mn_sigma_squared(series)?.sqrt();
            if sigma == 0.0 {
                return Err(EstimateError::ConstantSeries {
                    label: series.label.clone(),
                });
            }
            Ok(DensityFitResult::Eq4(fit_eq4_to_histogram(
                &hist, mu, sigma,
            )?))
        }
    }
}

/// Moments and Kolmogorov-Smirnov distance of the residual increments
/// against their own best-fit normal.
#[derive(Debug, Clone, Copy)]
pub struct NormalitySummary {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub ks_distance: f64,
}

pub fn residual_normality(residuals: &[f64]) -> NormalitySummary {
    let mean = stats::mean(residuals);
    let variance = stats::sample_variance(residuals);
    NormalitySummary {
        mean,
        variance,
        skewness: stats::skewness(residuals),
        excess_kurtosis: stats::excess_kurtosis(residuals),
        ks_distance: stats::ks_distance_normal(residuals, mean, variance.sqrt()),
    }
}

/// Everything the calibration pipeline produces for one series.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub label: String,
    pub params: SdeParams,
    pub residuals: Vec<f64>,
    pub decay: DecayDiagnostics,
    pub density_fit: DensityFitResult,
    pub normality: NormalitySummary,
}

/// Runs the full pipeline for one series: model fit, decay diagnostics,
/// density fit, and residual normality.
pub fn build_report(
    series: &PriceSeries,
    kind: SdeKind,
    opts: &EstimateOptions,
) -> Result<EstimationReport, EstimateError> {
    let fit = match kind {
        SdeKind::Additive => estimate_ou(series)?,
        SdeKind::Multiplicative => estimate_mn(series, opts)?,
    };
    let k_max = opts.k_max.min(series.len() - 1).max(1);
    let decay = decay_diagnostics(series, fit.params.mu, k_max, opts.guard_epsilon)?;
    let family = match kind {
        SdeKind::Additive => DensityFamily::Normal,
        SdeKind::Multiplicative => DensityFamily::Eq4,
    };
    let density_fit = fit_density(series, family, opts.n_bins)?;
    let normality = residual_normality(&fit.residuals);
    Ok(EstimationReport {
        label: series.label.clone(),
        params: fit.params,
        residuals: fit.residuals,
        decay,
        density_fit,
        normality,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(values: Vec<f64>, dt: f64) -> PriceSeries {
        PriceSeries::new(values, dt, "test").unwrap()
    }

    #[test]
    fn ou_mean_of_small_series() {
        let fit = estimate_ou(&series(vec![1.0, 2.0, 3.0], 1.0)).unwrap();
        assert_relative_eq!(fit.params.mu, 2.0);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let err = estimate_ou(&series(vec![5.0; 10], 1.0)).unwrap_err();
        assert!(matches!(err, EstimateError::ConstantSeries { .. }));
        let err = estimate_mn(&series(vec![5.0; 10], 1.0), &EstimateOptions::default())
            .unwrap_err();
        assert!(matches!(err, EstimateError::ConstantSeries { .. }));
    }

    #[test]
    fn mn_rejects_non_positive_values() {
        let err = estimate_mn(
            &series(vec![1.0, -2.0, 3.0], 1.0),
            &EstimateOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            EstimateError::NonPositiveValue { index: 1, .. }
        ));
    }

    #[test]
    fn geometric_series_log_increment_variance() {
        let r: f64 = 1.01;
        let dt = 0.5;
        let values: Vec<f64> = (0..50).map(|i| 10.0 * r.powi(i)).collect();
        let sigma_sq = mn_sigma_squared(&series(values, dt)).unwrap();
        assert_relative_eq!(sigma_sq, r.ln() * r.ln() / dt, epsilon = 1e-10);
    }

    #[test]
    fn decay_exact_on_noiseless_exponential() {
        let alpha = 2.0;
        let dt = 0.01;
        let mu = 10.0;
        let values: Vec<f64> = (0..500)
            .map(|i| mu + 5.0 * (-alpha * i as f64 * dt).exp())
            .collect();
        let s = series(values, dt);
        let d = decay_diagnostics(&s, mu, 20, 0.0).unwrap();
        for k in 1..=20usize {
            let y = d.y[k - 1].unwrap();
            assert_relative_eq!(y, (-alpha * k as f64 * dt).exp(), epsilon = 1e-12);
            assert_relative_eq!(d.alpha[k - 1].unwrap(), alpha, epsilon = 1e-9);
        }
    }

    #[test]
    fn autocov_lag_zero_is_population_variance() {
        let values = vec![1.0, 3.0, 2.0, 5.0, 4.0];
        let s = series(values.clone(), 1.0);
        let mu = stats::mean(&values);
        let d = decay_diagnostics(&s, mu, 2, 0.05).unwrap();
        let pop_var: f64 =
            values.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / values.len() as f64;
        assert_relative_eq!(d.autocov[0], pop_var, epsilon = 1e-12);
    }

    #[test]
    fn decay_guard_excludes_near_mean_terms() {
        // one observation sits exactly on the mean of the others
        let values = vec![9.0, 11.0, 10.0, 9.0, 11.0, 10.0, 9.0, 11.0];
        let s = series(values, 1.0);
        let d = decay_diagnostics(&s, 10.0, 1, 0.2).unwrap();
        assert!(d.excluded_terms > 0);
    }

    #[test]
    fn correlation_identical_and_negated() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = a.iter().map(|v| -v).collect();
        let rho = correlation_matrix(&[a.clone(), a.clone()]).unwrap();
        assert_relative_eq!(rho.get(0, 1), 1.0, epsilon = 1e-12);
        let rho = correlation_matrix(&[a.clone(), b]).unwrap();
        assert_relative_eq!(rho.get(0, 1), -1.0, epsilon = 1e-12);
        assert_eq!(rho.get(0, 0), 1.0);
        assert_eq!(rho.get(0, 1), rho.get(1, 0));
    }

    #[test]
    fn correlation_zero_variance_reported() {
        let a = vec![1.0, 2.0, 3.0];
        let b = vec![4.0, 4.0, 4.0];
        let err = correlation_matrix(&[a, b]).unwrap_err();
        assert!(matches!(
            err,
            EstimateError::ZeroVarianceResiduals { index: 1 }
        ));
    }

    #[test]
    fn correlation_length_mismatch_reported() {
        let err = correlation_matrix(&[vec![1.0, 2.0], vec![1.0, 2.0, 3.0]]).unwrap_err();
        assert!(matches!(err, EstimateError::ResidualLengthMismatch { .. }));
    }

    #[test]
    fn literal_display_scales_by_dt_squared() {
        let a = vec![0.1, -0.1, 0.1, -0.1];
        let m = correlation_matrix_literal(&[a.clone(), a.clone()], 0.1);
        // sum of squares = 0.04, / (L-1)=3, / dt^2=0.01
        assert_relative_eq!(m[0][1], 0.04 / 3.0 / 0.01, epsilon = 1e-12);
    }

    #[test]
    fn histogram_counts_and_normalization() {
        let values: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let hist = Histogram::from_values(&values, 10).unwrap();
        assert_eq!(hist.counts.iter().sum::<usize>(), 100);
        let mass: f64 = hist.heights.iter().sum::<f64>() * hist.bin_width;
        assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn histogram_rejects_fewer_obs_than_bins() {
        let err = Histogram::from_values(&[1.0, 2.0], 15).unwrap_err();
        assert!(matches!(
            err,
            EstimateError::FewerObservationsThanBins { .. }
        ));
    }

    #[test]
    fn normal_fit_recovers_exact_histogram() {
        // noise-free bin heights straight from the density
        let mu = 10.0;
        let scale = 1.5;
        let n_bins = 15;
        let lo = mu - 4.0 * scale;
        let width = 8.0 * scale / n_bins as f64;
        let centers: Vec<f64> = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
        let heights: Vec<f64> = centers
            .iter()
            .map(|c| normal_density(*c, mu, scale))
            .collect();
        let hist = Histogram {
            edges: (0..=n_bins).map(|i| lo + i as f64 * width).collect(),
            centers,
            heights,
            counts: vec![0; n_bins],
            bin_width: width,
            n_obs: 0,
        };
        let fit = fit_normal_to_histogram(&hist);
        assert_relative_eq!(fit.mu, mu, epsilon = 1e-5);
        assert_relative_eq!(fit.scale, scale, epsilon = 1e-5);
        assert!(fit.sse < 1e-10, "sse = {}", fit.sse);
    }

    #[test]
    fn eq4_fit_recovers_exact_histogram() {
        let p = SdeParams::multiplicative(2.0, 10.0, 0.7).unwrap();
        let n_bins = 15;
        let lo = 4.0;
        let width = (25.0 - lo) / n_bins as f64;
        let centers: Vec<f64> = (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect();
        let heights: Vec<f64> = centers
            .iter()
            .map(|c| crate::sde::mn_stationary_pdf(*c, &p))
            .collect();
        let hist = Histogram {
            edges: (0..=n_bins).map(|i| lo + i as f64 * width).collect(),
            centers,
            heights,
            counts: vec![0; n_bins],
            bin_width: width,
            n_obs: 0,
        };
        let fit = fit_eq4_to_histogram(&hist, p.mu, p.sigma).unwrap();
        assert_relative_eq!(fit.params.alpha, p.alpha, epsilon = 1e-4);
        assert!(fit.sse < 1e-10, "sse = {}", fit.sse);
    }
}
