//! Mean-reverting Itô models for the observed router prices, their
//! closed-form stationary densities, the generic stationary solution of
//! the associated Fokker-Planck equation, and Euler-Maruyama path
//! generators used as oracles for the estimators.
//!
//! Two models are supported, both with drift `alpha * (mu - S)`:
//! additive noise (`sigma dW`, an Ornstein-Uhlenbeck process, stationary
//! law normal with variance `sigma^2 / 2 alpha`) and multiplicative noise
//! (`sigma S dW`, strictly positive, stationary law the inverse-gamma-type
//! density with shape parameter `gamma = 2 alpha / sigma^2`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::numeric::{self, NumericError};
use crate::series::{PriceSeries, SeriesError};

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("parameter {name} must be {requirement}, got {value}")]
    InvalidParam {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("correlation matrix invalid: {0}")]
    BadCorrelation(String),
    #[error("correlation matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,
    #[error("diffusion coefficient must be positive on the grid (b({s}) = {b})")]
    DiffusionNotPositive { s: f64, b: f64 },
    #[error(
        "density is not normalizable over the range: boundary mass has not decayed \
         (boundary/peak log-density gap {gap:.3}, need > {need:.3})"
    )]
    NonNormalizable { gap: f64, need: f64 },
    #[error("positivity redraw limit hit at step {step}; diffusion too large for this time step")]
    RedrawLimit { step: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Noise structure of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdeKind {
    Additive,
    Multiplicative,
}

/// Parameters (alpha, mu, sigma) of one mean-reverting process.
///
/// `sigma == 0` is allowed for degenerate drift-only simulation; the
/// stationary densities require `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeParams {
    pub kind: SdeKind,
    pub alpha: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl SdeParams {
    pub fn new(kind: SdeKind, alpha: f64, mu: f64, sigma: f64) -> Result<Self, SdeError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(SdeError::InvalidParam {
                name: "alpha",
                requirement: "positive and finite",
                value: alpha,
            });
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(SdeError::InvalidParam {
                name: "mu",
                requirement: "positive and finite",
                value: mu,
            });
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(SdeError::InvalidParam {
                name: "sigma",
                requirement: "non-negative and finite",
                value: sigma,
            });
        }
        Ok(SdeParams {
            kind,
            alpha,
            mu,
            sigma,
        })
    }

    pub fn additive(alpha: f64, mu: f64, sigma: f64) -> Result<Self, SdeError> {
        Self::new(SdeKind::Additive, alpha, mu, sigma)
    }

    pub fn multiplicative(alpha: f64, mu: f64, sigma: f64) -> Result<Self, SdeError> {
        Self::new(SdeKind::Multiplicative, alpha, mu, sigma)
    }

    /// Shape parameter `gamma = 2 alpha / sigma^2` of the multiplicative
    /// stationary density.
    pub fn gamma(&self) -> f64 {
        assert!(self.sigma > 0.0, "gamma requires sigma > 0");
        2.0 * self.alpha / (self.sigma * self.sigma)
    }

    fn drift(&self, s: f64) -> f64 {
        self.alpha * (self.mu - s)
    }

    fn diffusion(&self, s: f64) -> f64 {
        match self.kind {
            SdeKind::Additive => self.sigma,
            SdeKind::Multiplicative => self.sigma * s,
        }
    }
}

/// Symmetric correlation matrix with unit diagonal for the joint system.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    data: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn new(data: Vec<Vec<f64>>) -> Result<Self, SdeError> {
        let n = data.len();
        for (i, row) in data.iter().enumerate() {
            if row.len() != n {
                return Err(SdeError::BadCorrelation(format!(
                    "row {i} has length {}, expected {n}",
                    row.len()
                )));
            }
            if (row[i] - 1.0).abs() > 1e-12 {
                return Err(SdeError::BadCorrelation(format!(
                    "diagonal entry ({i},{i}) is {}, expected 1",
                    row[i]
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v.abs() > 1.0 + 1e-12 {
                    return Err(SdeError::BadCorrelation(format!(
                        "entry ({i},{j}) = {v} outside [-1, 1]"
                    )));
                }
                if (v - data[j][i]).abs() > 1e-12 {
                    return Err(SdeError::BadCorrelation(format!(
                        "asymmetric at ({i},{j}): {v} vs {}",
                        data[j][i]
                    )));
                }
            }
        }
        Ok(CorrelationMatrix { data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![vec![0.0; n]; n];
        for (i, row) in data.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        CorrelationMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.data
    }
}

/// Stationary density of the additive-noise (Ornstein-Uhlenbeck) model:
/// a normal centered at `mu` with variance `sigma^2 / 2 alpha`, defined on
/// all reals.
pub fn ou_stationary_pdf(s: f64, p: &SdeParams) -> f64 {
    assert_eq!(p.kind, SdeKind::Additive);
    assert!(p.sigma > 0.0);
    let c0 = (std::f64::consts::PI * p.sigma * p.sigma / p.alpha).powf(-0.5);
    let z = (s - p.mu) / (p.sigma / (2.0 * p.alpha).sqrt());
    c0 * (-0.5 * z * z).exp()
}

/// Analytic derivative of [`ou_stationary_pdf`] with respect to `s`.
pub fn ou_stationary_pdf_prime(s: f64, p: &SdeParams) -> f64 {
    -(2.0 * p.alpha * (s - p.mu) / (p.sigma * p.sigma)) * ou_stationary_pdf(s, p)
}

/// Stationary density of the multiplicative-noise model:
/// `(gamma mu)^gamma mu / Gamma(gamma) * exp(-gamma mu / s) * s^-(gamma+2)`
/// for `s > 0`, zero otherwise. Evaluated in log space so large `gamma`
/// does not overflow.
pub fn mn_stationary_pdf(s: f64, p: &SdeParams) -> f64 {
    assert_eq!(p.kind, SdeKind::Multiplicative);
    if s <= 0.0 {
        return 0.0;
    }
    let gamma = p.gamma();
    let log_p = gamma * (gamma * p.mu).ln() + p.mu.ln()
        - ln_gamma(gamma)
        - gamma * p.mu / s
        - (gamma + 2.0) * s.ln();
    log_p.exp()
}

/// Analytic derivative of [`mn_stationary_pdf`] with respect to `s` (s > 0).
pub fn mn_stationary_pdf_prime(s: f64, p: &SdeParams) -> f64 {
    assert!(s > 0.0);
    let gamma = p.gamma();
    (gamma * p.mu / (s * s) - (gamma + 2.0) / s) * mn_stationary_pdf(s, p)
}

/// Conditional expectation `E[S(t + tau) | S(t) = s0]` in the stationary
/// state: `exp(-alpha tau) (s0 - mu) + mu` for both models.
pub fn conditional_mean(p: &SdeParams, s0: f64, tau: f64) -> f64 {
    assert!(tau >= 0.0, "tau must be non-negative");
    (-p.alpha * tau).exp() * (s0 - p.mu) + p.mu
}

/// Residual of the integrated stationary Fokker-Planck equation,
/// `P'(s) - (2 a(s) - 2 b(s) b'(s)) / b(s)^2 * P(s)`,
/// at a point. Zero (up to rounding) for a true stationary density.
pub fn stationary_ode_residual(
    pdf: &dyn Fn(f64) -> f64,
    pdf_prime: &dyn Fn(f64) -> f64,
    drift: &dyn Fn(f64) -> f64,
    diffusion: &dyn Fn(f64) -> f64,
    diffusion_prime: &dyn Fn(f64) -> f64,
    s: f64,
) -> f64 {
    let b = diffusion(s);
    pdf_prime(s) - (2.0 * drift(s) - 2.0 * b * diffusion_prime(s)) / (b * b) * pdf(s)
}

/// A density curve sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct DensityCurve {
    pub s: Vec<f64>,
    pub density: Vec<f64>,
}

// Log-density gap between the range boundary and the peak below which we
// declare the density non-normalizable over the requested range: -ln(1e-8).
const NORMALIZABLE_LOG_GAP: f64 = 18.420680743952367;

/// Generic stationary density for `dS = a(S) dt + b(S) dW` on a grid:
/// `P(s) = C exp(int_0^s 2 a(u) / b(u)^2 du) / b(s)^2`, normalized by
/// quadrature over `[s_lo, s_hi]`.
///
/// The cumulative exponent is accumulated in log space, so steep drifts do
/// not overflow. If the density has not decayed at the range boundaries
/// (pure diffusion, for instance, has no stationary law) the call reports
/// [`SdeError::NonNormalizable`] instead of returning a truncated curve.
pub fn stationary_pdf_numeric<A, B>(
    drift: A,
    diffusion: B,
    s_lo: f64,
    s_hi: f64,
    n_points: usize,
) -> Result<DensityCurve, SdeError>
where
    A: Fn(f64) -> f64,
    B: Fn(f64) -> f64,
{
    assert!(s_hi > s_lo, "empty range");
    assert!(n_points >= 16, "grid too coarse");
    let h = (s_hi - s_lo) / (n_points - 1) as f64;
    let grid: Vec<f64> = (0..n_points).map(|i| s_lo + i as f64 * h).collect();

    for &s in &grid {
        let b = diffusion(s);
        if !(b.is_finite() && b > 0.0) {
            return Err(SdeError::DiffusionNotPositive { s, b });
        }
    }

    let integrand = |u: f64| {
        let b = diffusion(u);
        2.0 * drift(u) / (b * b)
    };

    // cumulative exponent phi(s) = int_{s_lo}^{s} 2a/b^2, panel by panel
    let mut log_density = Vec::with_capacity(n_points);
    let mut phi = 0.0;
    for (i, &s) in grid.iter().enumerate() {
        if i > 0 {
            phi += numeric::gauss_legendre_7(&integrand, grid[i - 1], s);
        }
        let b = diffusion(s);
        log_density.push(phi - 2.0 * b.ln());
    }

    let peak = log_density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(SdeError::Numeric(NumericError::NonFinite(
            "stationary density exponent",
        )));
    }
    let boundary = log_density[0].max(log_density[n_points - 1]);
    let gap = peak - boundary;
    if gap < NORMALIZABLE_LOG_GAP {
        return Err(SdeError::NonNormalizable {
            gap,
            need: NORMALIZABLE_LOG_GAP,
        });
    }

    let unnormalized: Vec<f64> = log_density.iter().map(|ld| (ld - peak).exp()).collect();
    let mass = numeric::simpson_uniform(&unnormalized, h);
    if !(mass.is_finite() && mass > 0.0) {
        return Err(SdeError::Numeric(NumericError::NonFinite(
            "stationary density normalization",
        )));
    }
    let density: Vec<f64> = unnormalized.iter().map(|u| u / mass).collect();
    Ok(DensityCurve { s: grid, density })
}

/// A simulated path plus the number of rejected-and-redrawn increments
/// (multiplicative paths redraw any step that would cross zero).
#[derive(Debug, Clone)]
pub struct SimulatedPath {
    pub series: PriceSeries,
    pub redraws: u64,
}

fn validate_step(p: &SdeParams, dt: f64, s0: f64) -> Result<(), SdeError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SdeError::InvalidParam {
            name: "dt",
            requirement: "positive and finite",
            value: dt,
        });
    }
    if p.alpha * dt >= 1.0 {
        return Err(SdeError::InvalidParam {
            name: "dt",
            requirement: "small relative to 1/alpha",
            value: dt,
        });
    }
    if p.kind == SdeKind::Multiplicative && s0 <= 0.0 {
        return Err(SdeError::InvalidParam {
            name: "s0",
            requirement: "positive for multiplicative noise",
            value: s0,
        });
    }
    Ok(())
}

const MAX_REDRAWS_PER_STEP: u32 = 10_000;

/// Euler-Maruyama path of `length` observations spaced `dt`, starting at
/// `s0` (included as the first observation). Multiplicative steps that
/// would land at or below zero are redrawn with a fresh normal variate and
/// counted, preserving strict positivity without clamping bias.
pub fn simulate_path(
    p: &SdeParams,
    length: usize,
    dt: f64,
    s0: f64,
    seed: u64,
) -> Result<SimulatedPath, SdeError> {
    validate_step(p, dt, s0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt_dt = dt.sqrt();
    let mut values = Vec::with_capacity(length);
    values.push(s0);
    let mut s = s0;
    let mut redraws = 0u64;
    for step in 1..length {
        let drift = p.drift(s) * dt;
        if p.sigma == 0.0 {
            s += drift;
        } else {
            let mut attempts = 0u32;
            loop {
                let xi: f64 = rng.sample(StandardNormal);
                let candidate = s + drift + p.diffusion(s) * sqrt_dt * xi;
                if p.kind == SdeKind::Additive || candidate > 0.0 {
                    s = candidate;
                    break;
                }
                redraws += 1;
                attempts += 1;
                if attempts > MAX_REDRAWS_PER_STEP {
                    return Err(SdeError::RedrawLimit { step });
                }
            }
        }
        values.push(s);
    }
    Ok(SimulatedPath {
        series: PriceSeries::new(values, dt, format!("synthetic-{:?}", p.kind))?,
        redraws,
    })
}

/// Correlated Euler-Maruyama paths. Increments are driven by `z = L g`
/// with `L` the (PSD-tolerant) Cholesky factor of `rho` and `g` i.i.d.
/// standard normals, all drawn from one seeded stream in a fixed order.
/// If any multiplicative component would cross zero the whole increment
/// vector is redrawn.
pub fn simulate_correlated_paths(
    params: &[SdeParams],
    rho: &CorrelationMatrix,
    length: usize,
    dt: f64,
    s0: &[f64],
    seed: u64,
) -> Result<Vec<SimulatedPath>, SdeError> {
    let n = params.len();
    assert_eq!(rho.dim(), n, "correlation dimension mismatch");
    assert_eq!(s0.len(), n, "one starting value per process");
    for (p, &start) in params.iter().zip(s0) {
        validate_step(p, dt, start)?;
    }
    let factor = numeric::cholesky_psd(rho.rows()).map_err(|e| match e {
        NumericError::NotPositiveSemiDefinite { .. } => SdeError::NotPositiveSemiDefinite,
        other => SdeError::Numeric(other),
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt_dt = dt.sqrt();
    let mut states: Vec<f64> = s0.to_vec();
    let mut paths: Vec<Vec<f64>> = states.iter().map(|&s| vec![s]).collect();
    let mut redraws = 0u64;

    let mut gaussians = vec![0.0f64; n];
    let mut candidates = vec![0.0f64; n];
    for step in 1..length {
        let mut attempts = 0u32;
        loop {
            for g in gaussians.iter_mut() {
                *g = rng.sample(StandardNormal);
            }
            let mut ok = true;
            for i in 0..n {
                let mut z = 0.0;
                for (m, g) in gaussians.iter().enumerate().take(i + 1) {
                    z += factor[i][m] * g;
                }
                let s = states[i];
                let candidate = s + params[i].drift(s) * dt + params[i].diffusion(s) * sqrt_dt * z;
                if params[i].kind == SdeKind::Multiplicative && candidate <= 0.0 {
                    ok = false;
                    break;
                }
                candidates[i] = candidate;
            }
            if ok {
                break;
            }
            redraws += 1;
            attempts += 1;
            if attempts > MAX_REDRAWS_PER_STEP {
                return Err(SdeError::RedrawLimit { step });
            }
        }
        for i in 0..n {
            states[i] = candidates[i];
            paths[i].push(candidates[i]);
        }
    }

    paths
        .into_iter()
        .enumerate()
        .map(|(i, values)| {
            Ok(SimulatedPath {
                series: PriceSeries::new(values, dt, format!("synthetic-corr-{i}"))?,
                redraws,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn ou(alpha: f64, mu: f64, sigma: f64) -> SdeParams {
        SdeParams::additive(alpha, mu, sigma).unwrap()
    }

    fn mn(alpha: f64, mu: f64, sigma: f64) -> SdeParams {
        SdeParams::multiplicative(alpha, mu, sigma).unwrap()
    }

    #[test]
    fn ou_pdf_peak_value() {
        let p = ou(2.0, 10.0, 1.5);
        let c0 = (std::f64::consts::PI * p.sigma * p.sigma / p.alpha).powf(-0.5);
        assert_relative_eq!(ou_stationary_pdf(10.0, &p), c0, epsilon = 1e-14);
    }

    #[test]
    fn ou_pdf_standard_normal_case() {
        // mu = 0 fails the positivity check on mu, so shift: the density at
        // the mean of N[mu, 1] is 1/sqrt(2 pi) when sigma^2 = 2, alpha = 1.
        let p = ou(1.0, 5.0, 2f64.sqrt());
        assert_relative_eq!(ou_stationary_pdf(5.0, &p), 0.3989422804014327, epsilon = 1e-12);
    }

    #[test]
    fn ou_pdf_symmetry() {
        let p = ou(3.0, 7.0, 0.8);
        for x in [0.1, 0.5, 1.0, 2.5] {
            assert_relative_eq!(
                ou_stationary_pdf(7.0 + x, &p),
                ou_stationary_pdf(7.0 - x, &p),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn mn_pdf_zero_for_non_positive_prices() {
        let p = mn(5.0, 10.0, 0.5);
        assert_eq!(mn_stationary_pdf(0.0, &p), 0.0);
        assert_eq!(mn_stationary_pdf(-3.0, &p), 0.0);
    }

    #[test]
    fn mn_pdf_normalizes_and_has_mean_mu() {
        let p = mn(2.0, 10.0, 0.7); // gamma ~ 8.2
        let pdf = |s: f64| mn_stationary_pdf(s, &p);
        let mass = numeric::adaptive_simpson(&pdf, 1e-6, 2000.0, 1e-10).unwrap();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
        let mean_integrand = |s: f64| s * mn_stationary_pdf(s, &p);
        let mean = numeric::adaptive_simpson(&mean_integrand, 1e-6, 20000.0, 1e-9).unwrap();
        assert_abs_diff_eq!(mean, p.mu, epsilon = 1e-6);
    }

    #[test]
    fn mn_pdf_survives_large_gamma() {
        let p = mn(5.0, 10.0, 0.1); // gamma = 1000
        let v = mn_stationary_pdf(10.0, &p);
        assert!(v.is_finite() && v > 0.0);
    }

    #[test]
    fn conditional_mean_limits() {
        let p = ou(1.0, 10.0, 1.0);
        assert_eq!(conditional_mean(&p, 20.0, 0.0), 20.0);
        assert_relative_eq!(conditional_mean(&p, 20.0, 1e9), 10.0);
        assert_relative_eq!(
            conditional_mean(&p, 20.0, std::f64::consts::LN_2),
            15.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn numeric_density_matches_ou_closed_form() {
        let p = ou(1.0, 10.0, 1.0);
        let sd = p.sigma / (2.0 * p.alpha).sqrt();
        let curve = stationary_pdf_numeric(
            |s| p.alpha * (p.mu - s),
            |_| p.sigma,
            p.mu - 8.0 * sd,
            p.mu + 8.0 * sd,
            2001,
        )
        .unwrap();
        for (s, d) in curve.s.iter().zip(&curve.density) {
            assert_abs_diff_eq!(*d, ou_stationary_pdf(*s, &p), epsilon = 1e-6);
        }
    }

    #[test]
    fn numeric_density_matches_mn_closed_form() {
        let p = mn(2.0, 10.0, 0.7);
        let curve = stationary_pdf_numeric(
            |s| p.alpha * (p.mu - s),
            |s| p.sigma * s,
            0.5,
            200.0,
            4001,
        )
        .unwrap();
        for (s, d) in curve.s.iter().zip(&curve.density) {
            assert_abs_diff_eq!(*d, mn_stationary_pdf(*s, &p), epsilon = 1e-6);
        }
    }

    #[test]
    fn pure_diffusion_reported_non_normalizable() {
        let err = stationary_pdf_numeric(|_| 0.0, |_| 1.0, -10.0, 10.0, 101).unwrap_err();
        assert!(matches!(err, SdeError::NonNormalizable { .. }));
    }

    #[test]
    fn closed_forms_satisfy_stationary_ode() {
        let p = ou(1.0, 10.0, 1.0);
        let drift = |s: f64| p.alpha * (p.mu - s);
        let b = |_: f64| p.sigma;
        let bp = |_: f64| 0.0;
        let pdf = |s: f64| ou_stationary_pdf(s, &p);
        let pdfp = |s: f64| ou_stationary_pdf_prime(s, &p);
        for i in 0..100 {
            let s = 7.0 + 6.0 * i as f64 / 99.0;
            let r = stationary_ode_residual(&pdf, &pdfp, &drift, &b, &bp, s);
            assert!(r.abs() < 1e-8, "residual {r} at s = {s}");
        }

        let q = mn(2.0, 10.0, 0.7);
        let driftq = |s: f64| q.alpha * (q.mu - s);
        let bq = |s: f64| q.sigma * s;
        let bqp = |_: f64| q.sigma;
        let pdfq = |s: f64| mn_stationary_pdf(s, &q);
        let pdfqp = |s: f64| mn_stationary_pdf_prime(s, &q);
        for i in 0..100 {
            let s = 2.0 + 30.0 * i as f64 / 99.0;
            let r = stationary_ode_residual(&pdfq, &pdfqp, &driftq, &bq, &bqp, s);
            assert!(r.abs() < 1e-8, "residual {r} at s = {s}");
        }
    }

    #[test]
    fn zero_sigma_paths_are_deterministic() {
        let p = ou(2.0, 10.0, 0.0);
        let at_mu = simulate_path(&p, 100, 0.01, 10.0, 1).unwrap();
        assert!(at_mu.series.values.iter().all(|&v| v == 10.0));

        let off_mu = simulate_path(&p, 100, 0.01, 20.0, 1).unwrap();
        let v = &off_mu.series.values;
        for w in v.windows(2) {
            assert!(w[1] < w[0] && w[1] > 10.0, "monotone approach to mu");
        }
    }

    #[test]
    fn same_seed_same_path() {
        let p = mn(5.0, 10.0, 0.3);
        let a = simulate_path(&p, 1000, 0.01, 10.0, 42).unwrap();
        let b = simulate_path(&p, 1000, 0.01, 10.0, 42).unwrap();
        assert_eq!(a.series.values, b.series.values);
        let c = simulate_path(&p, 1000, 0.01, 10.0, 43).unwrap();
        assert_ne!(a.series.values, c.series.values);
    }

    #[test]
    fn multiplicative_paths_stay_positive() {
        // aggressive sigma to provoke redraws
        let p = mn(5.0, 1.0, 2.5);
        let path = simulate_path(&p, 20_000, 0.01, 1.0, 7).unwrap();
        assert!(path.series.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn ou_long_path_matches_stationary_moments() {
        let p = ou(5.0, 10.0, 1.0);
        let path = simulate_path(&p, 100_000, 0.01, 10.0, 11).unwrap();
        let vals = &path.series.values;
        let mean = crate::stats::mean(vals);
        let var = crate::stats::sample_variance(vals);
        assert!((mean - 10.0).abs() / 10.0 < 0.02, "mean {mean}");
        let target = p.sigma * p.sigma / (2.0 * p.alpha);
        assert!((var - target).abs() / target < 0.10, "variance {var}");
    }

    #[test]
    fn perfectly_correlated_pair_is_identical() {
        let p = ou(5.0, 10.0, 1.0);
        let rho = CorrelationMatrix::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let paths =
            simulate_correlated_paths(&[p, p], &rho, 1000, 0.01, &[10.0, 10.0], 3).unwrap();
        assert_eq!(paths[0].series.values, paths[1].series.values);
    }

    #[test]
    fn identity_correlation_gives_independent_streams() {
        let p = ou(5.0, 10.0, 1.0);
        let rho = CorrelationMatrix::identity(2);
        let paths =
            simulate_correlated_paths(&[p, p], &rho, 50_000, 0.01, &[10.0, 10.0], 5).unwrap();
        let inc = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| w[1] - w[0]).collect() };
        let r = crate::stats::pearson(
            &inc(&paths[0].series.values),
            &inc(&paths[1].series.values),
        )
        .unwrap();
        assert!(r.abs() < 0.02, "correlation {r}");
    }

    #[test]
    fn non_psd_correlation_rejected() {
        let p = ou(5.0, 10.0, 1.0);
        let bad = CorrelationMatrix::new(vec![
            vec![1.0, 0.9, -0.9],
            vec![0.9, 1.0, 0.9],
            vec![-0.9, 0.9, 1.0],
        ])
        .unwrap();
        let err =
            simulate_correlated_paths(&[p, p, p], &bad, 10, 0.01, &[10.0; 3], 1).unwrap_err();
        assert!(matches!(err, SdeError::NotPositiveSemiDefinite));
    }
}
