//! `bwmarket estimate`: calibrate the price model column by column,
//! emitting a text report plus plot-ready CSV curves (decay diagnostics,
//! residual histograms, density fits over the observation histogram) and
//! the residual correlation matrix with the topology's adjacency marked.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use bwmarket::estimate::{
    build_report, correlation_matrix, correlation_matrix_literal, DensityFitResult,
    EstimateOptions, EstimationReport, Histogram,
};
use bwmarket::io::prices_from_csv;
use bwmarket::sde::{mn_stationary_pdf, ou_stationary_pdf, SdeKind};
use bwmarket::topology::{load_topology, Topology};

use crate::{CliError, EstimateArgs, ModelArg};

pub fn execute(args: &EstimateArgs) -> Result<(), CliError> {
    let manifest_config = match &args.manifest {
        Some(path) => {
            Some(bwmarket::config::load_config_file(path).map_err(CliError::validation)?)
        }
        None => None,
    };
    let dt = match (args.dt, &manifest_config) {
        (Some(dt), _) => dt,
        (None, Some(cfg)) => cfg.dt,
        (None, None) => {
            return Err(CliError::validation(
                "sample spacing unknown: pass --dt or --manifest",
            ))
        }
    };
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::validation(format!("dt must be positive, got {dt}")));
    }
    let topology: Option<Topology> = match (&args.topology, &manifest_config) {
        (Some(spec), _) if spec == "default" => Some(Topology::petersen()),
        (Some(spec), _) => {
            let text = fs::read_to_string(spec)
                .map_err(|e| CliError::validation(format!("topology {spec}: {e}")))?;
            Some(load_topology(&text).map_err(CliError::validation)?)
        }
        (None, Some(cfg)) => Some(cfg.topology.clone()),
        (None, None) => None,
    };

    let text = fs::read_to_string(&args.input)
        .map_err(|e| CliError::validation(format!("{}: {e}", args.input.display())))?;
    let series = prices_from_csv(&text, dt).map_err(CliError::validation)?;

    let kind = match args.model {
        ModelArg::Ou => SdeKind::Additive,
        ModelArg::Mn => SdeKind::Multiplicative,
    };
    let opts = EstimateOptions {
        guard_epsilon: args.guard,
        k_fit_cap: args.k_fit_cap,
        k_max: args.k_max,
        n_bins: args.bins,
    };

    fs::create_dir_all(&args.out)?;

    let mut reports: Vec<EstimationReport> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for s in &series {
        match build_report(s, kind, &opts) {
            Ok(report) => {
                write_series_artifacts(&args.out, s, &report, &opts)?;
                reports.push(report);
            }
            Err(e) => {
                eprintln!("series {}: {e}", s.label);
                failures.push((s.label.clone(), e.to_string()));
            }
        }
    }
    if reports.is_empty() {
        return Err(CliError::runtime(format!(
            "all {} series failed to calibrate",
            series.len()
        )));
    }

    // residual correlations across the successfully fitted series
    let residual_sets: Vec<Vec<f64>> = reports.iter().map(|r| r.residuals.clone()).collect();
    let labels: Vec<String> = reports.iter().map(|r| r.label.clone()).collect();
    let rho = correlation_matrix(&residual_sets).map_err(CliError::runtime)?;
    write_matrix_csv(&args.out.join("rho.csv"), &labels, |i, j| {
        rho.get(i, j).to_string()
    })?;
    if let Some(topo) = &topology {
        write_matrix_csv(&args.out.join("rho_adjacent.csv"), &labels, |i, j| {
            let u = label_index(&labels[i]);
            let v = label_index(&labels[j]);
            match (u, v) {
                (Some(u), Some(v)) if u < topo.node_count() && v < topo.node_count() => {
                    u8::from(topo.is_adjacent(u, v)).to_string()
                }
                _ => "0".to_string(),
            }
        })?;
    }
    if args.literal_rho {
        let literal = correlation_matrix_literal(&residual_sets, dt);
        write_matrix_csv(&args.out.join("rho_literal.csv"), &labels, |i, j| {
            literal[i][j].to_string()
        })?;
    }

    let report_text = render_report(args, dt, &reports, &failures, &rho, topology.as_ref());
    fs::write(args.out.join("report.txt"), report_text)?;

    println!(
        "estimate complete: {} of {} series calibrated, artifacts in {}",
        reports.len(),
        series.len(),
        args.out.display()
    );
    Ok(())
}

/// Extracts the router index from labels like `S_3`.
fn label_index(label: &str) -> Option<usize> {
    label.rsplit(['_', '-']).next()?.parse().ok()
}

fn normal_pdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn write_series_artifacts(
    out: &Path,
    series: &bwmarket::PriceSeries,
    report: &EstimationReport,
    opts: &EstimateOptions,
) -> Result<(), CliError> {
    let label = &report.label;

    // decay and autocovariance curves
    let mut decay = String::from("k,y,y_se,alpha_k,autocov\n");
    let d = &report.decay;
    let _ = writeln!(decay, "0,,,,{}", d.autocov[0]);
    for k in 1..=d.k_max() {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            decay,
            "{k},{},{},{},{}",
            fmt(d.y[k - 1]),
            fmt(d.y_se[k - 1]),
            fmt(d.alpha[k - 1]),
            d.autocov[k]
        );
    }
    fs::write(out.join(format!("decay_{label}.csv")), decay)?;

    // residual histogram against its best-fit normal
    let norm = &report.normality;
    let sd = norm.variance.sqrt();
    let hist = Histogram::from_values(&report.residuals, opts.n_bins)
        .map_err(|e| CliError::runtime(format!("residual histogram for {label}: {e}")))?;
    let mut dw = String::from("bin_center,observed_density,fitted_normal_density\n");
    for (c, h) in hist.centers.iter().zip(&hist.heights) {
        let _ = writeln!(dw, "{c},{h},{}", normal_pdf(*c, norm.mean, sd));
    }
    fs::write(out.join(format!("dw_hist_{label}.csv")), dw)?;

    // observation histogram with the moment and least-squares densities
    let obs = Histogram::from_values(&series.values, opts.n_bins)
        .map_err(|e| CliError::runtime(format!("observation histogram for {label}: {e}")))?;
    let mut density = String::from("bin_center,observed_density,moment_density,lsq_density\n");
    for (c, h) in obs.centers.iter().zip(&obs.heights) {
        let moment = match report.params.kind {
            SdeKind::Additive => ou_stationary_pdf(*c, &report.params),
            SdeKind::Multiplicative => mn_stationary_pdf(*c, &report.params),
        };
        let lsq = match &report.density_fit {
            DensityFitResult::Normal(f) => normal_pdf(*c, f.mu, f.scale),
            DensityFitResult::Eq4(f) => mn_stationary_pdf(*c, &f.params),
        };
        let _ = writeln!(density, "{c},{h},{moment},{lsq}");
    }
    fs::write(out.join(format!("density_{label}.csv")), density)?;
    Ok(())
}

fn write_matrix_csv(
    path: &Path,
    labels: &[String],
    value: impl Fn(usize, usize) -> String,
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str("series");
    for l in labels {
        let _ = write!(out, ",{l}");
    }
    out.push('\n');
    for (i, l) in labels.iter().enumerate() {
        let _ = write!(out, "{l}");
        for j in 0..labels.len() {
            let _ = write!(out, ",{}", value(i, j));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn render_report(
    args: &EstimateArgs,
    dt: f64,
    reports: &[EstimationReport],
    failures: &[(String, String)],
    rho: &bwmarket::CorrelationMatrix,
    topology: Option<&Topology>,
) -> String {
    let model = match args.model {
        ModelArg::Ou => "ou (additive noise)",
        ModelArg::Mn => "mn (multiplicative noise)",
    };
    let mut out = String::new();
    let _ = writeln!(out, "bwmarket estimation report");
    let _ = writeln!(out, "model: {model}   dt: {dt}   bins: {}", args.bins);
    let _ = writeln!(out, "series calibrated: {}   failed: {}", reports.len(), failures.len());
    out.push('\n');

    for r in reports {
        let _ = writeln!(out, "[{}]", r.label);
        let _ = write!(
            out,
            "  alpha = {:.6}   mu = {:.6}   sigma = {:.6}",
            r.params.alpha, r.params.mu, r.params.sigma
        );
        if r.params.kind == SdeKind::Multiplicative {
            let _ = write!(out, "   gamma = {:.6}", r.params.gamma());
        }
        out.push('\n');
        match &r.density_fit {
            DensityFitResult::Normal(f) => {
                let _ = writeln!(
                    out,
                    "  density fit (normal): mu = {:.6}  sigma/sqrt(2 alpha) = {:.6}  sse = {:.3e}",
                    f.mu, f.scale, f.sse
                );
            }
            DensityFitResult::Eq4(f) => {
                let _ = writeln!(
                    out,
                    "  density fit (eq4): alpha_ls = {:.6}  sse = {:.3e}",
                    f.params.alpha, f.sse
                );
            }
        }
        let n = &r.normality;
        let _ = writeln!(
            out,
            "  residuals: mean = {:.3e}  var = {:.3e}  skew = {:.4}  ex.kurt = {:.4}  KS = {:.5}",
            n.mean, n.variance, n.skewness, n.excess_kurtosis, n.ks_distance
        );
        let _ = writeln!(
            out,
            "  decay: {} of {} ratio terms excluded by the guard band",
            r.decay.excluded_terms, r.decay.total_terms
        );
        out.push('\n');
    }

    for (label, error) in failures {
        let _ = writeln!(out, "[{label}] FAILED: {error}");
    }
    if !failures.is_empty() {
        out.push('\n');
    }

    let labels: Vec<&str> = reports.iter().map(|r| r.label.as_str()).collect();
    let _ = writeln!(
        out,
        "residual correlation matrix{}",
        if topology.is_some() {
            " (adjacent routers in brackets)"
        } else {
            ""
        }
    );
    let _ = write!(out, "{:>8}", "");
    for l in &labels {
        let _ = write!(out, "{l:>9}");
    }
    out.push('\n');
    for (i, li) in labels.iter().enumerate() {
        let _ = write!(out, "{li:>8}");
        for (j, lj) in labels.iter().enumerate() {
            let adjacent = topology
                .map(|t| {
                    match (label_index(li), label_index(lj)) {
                        (Some(u), Some(v)) if u != v && u < t.node_count() && v < t.node_count() => {
                            t.is_adjacent(u, v)
                        }
                        _ => false,
                    }
                })
                .unwrap_or(false);
            let v = rho.get(i, j);
            if adjacent {
                let _ = write!(out, "  [{v:5.2}]");
            } else {
                let _ = write!(out, "   {v:5.2} ");
            }
        }
        out.push('\n');
    }
    out
}
