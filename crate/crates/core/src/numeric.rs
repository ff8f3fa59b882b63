//! Small numerical routines shared across the crate: quadrature,
//! finite differences, a PSD-tolerant Cholesky factorization, and
//! derivative-free minimizers for the density fits.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("integral did not converge to tolerance {tol} (best estimate {estimate})")]
    QuadratureDivergence { tol: f64, estimate: f64 },
    #[error("non-finite value encountered during {0}")]
    NonFinite(&'static str),
    #[error("matrix is not positive semi-definite (pivot {pivot} at row {row})")]
    NotPositiveSemiDefinite { row: usize, pivot: f64 },
}

/// Adaptive Simpson quadrature on [a, b] to absolute tolerance `tol`.
/// Refinement is forced to a minimum depth so narrow features inside a
/// wide interval cannot slip through the initial coarse estimate.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, NumericError> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson_rule(a, b, fa, fm, fb);
    let v = adaptive_step(f, a, b, fa, fm, fb, whole, tol, 0)?;
    if !v.is_finite() {
        return Err(NumericError::NonFinite("adaptive quadrature"));
    }
    Ok(v)
}

const MIN_DEPTH: usize = 9;

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64, NumericError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if (depth >= MIN_DEPTH && delta.abs() <= 15.0 * tol)
        || (b - a).abs() < 1e-14 * (1.0 + a.abs() + b.abs())
    {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= 60 {
        return Err(NumericError::QuadratureDivergence {
            tol,
            estimate: left + right,
        });
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

const GL7_NODES: [f64; 7] = [
    -0.9491079123427585,
    -0.7415311855993945,
    -0.4058451513773972,
    0.0,
    0.4058451513773972,
    0.7415311855993945,
    0.9491079123427585,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.1294849661688697,
    0.2797053914892766,
    0.3818300505051189,
    0.4179591836734694,
    0.3818300505051189,
    0.2797053914892766,
    0.1294849661688697,
];

/// Fixed 7-point Gauss-Legendre rule on [a, b]. Exact for degree <= 13;
/// used for the short smooth panels of the cumulative drift integral.
pub fn gauss_legendre_7<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL7_NODES
        .iter()
        .zip(GL7_WEIGHTS.iter())
        .map(|(&x, &w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

/// Composite Simpson on uniformly spaced samples. Requires `values.len() >= 2`;
/// an even interval count uses Simpson throughout, otherwise the last interval
/// is closed with a trapezoid.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    assert!(n >= 2, "need at least two samples");
    let pairs = (n - 1) / 2;
    let mut total = 0.0;
    for p in 0..pairs {
        let i = 2 * p;
        total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
    }
    if (n - 1) % 2 == 1 {
        total += 0.5 * h * (values[n - 2] + values[n - 1]);
    }
    total
}

/// Central difference derivative with step scaled to the magnitude of `x`.
pub fn central_diff<F: Fn(f64) -> f64>(f: &F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Cholesky factorization tolerant of positive semi-definite input
/// (zero pivots produce zero columns, so perfectly correlated systems
/// factor cleanly). Rejects indefinite matrices.
pub fn cholesky_psd(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, NumericError> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut d = a[k][k];
        for m in 0..k {
            d -= l[k][m] * l[k][m];
        }
        let tol = 1e-10 * (1.0 + a[k][k].abs());
        if d < -tol {
            return Err(NumericError::NotPositiveSemiDefinite { row: k, pivot: d });
        }
        if d <= tol {
            l[k][k] = 0.0;
            continue;
        }
        l[k][k] = d.sqrt();
        for i in (k + 1)..n {
            let mut s = a[i][k];
            for m in 0..k {
                s -= l[i][m] * l[k][m];
            }
            l[i][k] = s / l[k][k];
        }
    }
    Ok(l)
}

/// Nelder-Mead simplex minimization. `scale` sets the initial simplex size
/// per coordinate. Returns (argmin, min value).
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    scale: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = (values[worst] - values[best]).abs();
        if spread < 1e-14 * (1.0 + values[best].abs()) {
            break;
        }

        // centroid of all but the worst vertex
        let mut centroid = vec![0.0; n];
        for (idx, p) in simplex.iter().enumerate() {
            if idx == worst {
                continue;
            }
            for d in 0..n {
                centroid[d] += p[d] / n as f64;
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|d| centroid[d] + (centroid[d] - simplex[worst][d]))
            .collect();
        let fr = f(&reflect);

        if fr < values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|d| centroid[d] + 2.0 * (centroid[d] - simplex[worst][d]))
                .collect();
            let fe = f(&expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|d| centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]))
                .collect();
            let fc = f(&contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                // shrink toward the best vertex
                let best_point = simplex[best].clone();
                for (idx, p) in simplex.iter_mut().enumerate() {
                    if idx == best {
                        continue;
                    }
                    for d in 0..n {
                        p[d] = best_point[d] + 0.5 * (p[d] - best_point[d]);
                    }
                }
                for idx in 0..=n {
                    values[idx] = f(&simplex[idx]);
                }
            }
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if values[i] < values[best] {
            best = i;
        }
    }
    (simplex[best].clone(), values[best])
}

/// Golden-section minimization of a unimodal function on [a, b].
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_integrates_gaussian() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(&f, -10.0, 10.0, 1e-12).unwrap();
        assert_relative_eq!(v, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn gl7_exact_on_polynomial() {
        let f = |x: f64| 3.0 * x * x + x + 1.0;
        let v = gauss_legendre_7(&f, 0.0, 2.0);
        assert_relative_eq!(v, 8.0 + 2.0 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn simpson_uniform_matches_closed_form() {
        let n = 101;
        let h = 1.0 / (n - 1) as f64;
        let values: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(2)).collect();
        assert_relative_eq!(simpson_uniform(&values, h), 1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn cholesky_recovers_identity() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let l = cholesky_psd(&a).unwrap();
        assert_eq!(l, a);
    }

    #[test]
    fn cholesky_handles_singular_psd() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let l = cholesky_psd(&a).unwrap();
        assert_relative_eq!(l[0][0], 1.0);
        assert_relative_eq!(l[1][0], 1.0);
        assert_relative_eq!(l[1][1], 0.0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(cholesky_psd(&a).is_err());
    }

    #[test]
    fn nelder_mead_finds_quadratic_min() {
        let (x, v) = nelder_mead(
            |p| (p[0] - 3.0).powi(2) + 2.0 * (p[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &[1.0, 1.0],
            500,
        );
        assert_relative_eq!(x[0], 3.0, epsilon = 1e-5);
        assert_relative_eq!(x[1], -1.0, epsilon = 1e-5);
        assert!(v < 1e-9);
    }

    #[test]
    fn golden_section_min_of_parabola() {
        let x = golden_section_min(|x| (x - 2.5).powi(2), 0.0, 10.0, 1e-10);
        assert_relative_eq!(x, 2.5, epsilon = 1e-8);
    }
}
