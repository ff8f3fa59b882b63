//! CSV serialization of simulation logs and price series.
//!
//! Prices: one row per step, columns `t,S_0,...,S_{N-1}`, `t` counting
//! from 1. Demand outcomes: one row per demand with its tuple, outcome,
//! and realized net cash. Floats print in shortest round-trip form, so a
//! fixed (config, seed) pair always serializes byte-identically.

use std::fmt::Write as _;

use thiserror::Error;

use crate::series::{PriceSeries, SeriesError};
use crate::sim::{DemandOutcome, SimulationLog};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("no data rows found")]
    Empty,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Price log as CSV text.
pub fn prices_to_csv(log: &SimulationLog) -> String {
    let n = log.config.n_routers();
    let mut out = String::new();
    out.push('t');
    for j in 0..n {
        let _ = write!(out, ",S_{j}");
    }
    out.push('\n');
    for step in &log.steps {
        let _ = write!(out, "{}", step.step + 1);
        for price in &step.prices {
            let _ = write!(out, ",{price}");
        }
        out.push('\n');
    }
    out
}

/// Demand outcomes as CSV text.
pub fn demands_to_csv(log: &SimulationLog) -> String {
    let mut out = String::from("id,uid,src,dst,cap,dur,max,outcome,realized_cash\n");
    for record in &log.demands {
        let d = &record.demand;
        let outcome = match record.outcome {
            DemandOutcome::Satisfied { .. } => "satisfied",
            DemandOutcome::Rejected => "rejected",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            d.id, d.user, d.src, d.dst, d.cap, d.duration, d.max_cost, outcome, record.realized_cash
        );
    }
    out
}

/// Parses a price CSV (as produced by [`prices_to_csv`], or any
/// `t,<col>,...` table) into one series per column. Column labels come
/// from the header; `dt` is supplied by the caller since the CSV carries
/// step indices, not times.
pub fn prices_from_csv(text: &str, dt: f64) -> Result<Vec<PriceSeries>, CsvError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(CsvError::Empty)?;
    let labels: Vec<&str> = header.split(',').skip(1).map(str::trim).collect();
    if labels.is_empty() {
        return Err(CsvError::Malformed {
            line: 1,
            msg: "header has no price columns".into(),
        });
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != labels.len() + 1 {
            return Err(CsvError::Malformed {
                line: idx + 1,
                msg: format!(
                    "expected {} fields, found {}",
                    labels.len() + 1,
                    fields.len()
                ),
            });
        }
        for (col, field) in fields[1..].iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| CsvError::Malformed {
                line: idx + 1,
                msg: format!("bad number {field:?}: {e}"),
            })?;
            columns[col].push(v);
        }
    }
    labels
        .iter()
        .zip(columns)
        .map(|(label, values)| Ok(PriceSeries::new(values, dt, *label)?))
        .collect()
}

/// Single-series CSV (`t,value`) used for synthetic paths.
pub fn series_to_csv(series: &PriceSeries) -> String {
    let mut out = String::from("t,value\n");
    for (i, v) in series.values.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, SimulationConfig};

    fn small_log() -> SimulationLog {
        let mut cfg = SimulationConfig::paper_defaults();
        cfg.n_steps = 20;
        run(cfg).unwrap()
    }

    #[test]
    fn price_csv_shape_and_round_trip() {
        let log = small_log();
        let csv = prices_to_csv(&log);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,S_0,S_1,S_2,S_3,S_4,S_5,S_6,S_7,S_8,S_9");
        assert_eq!(csv.lines().count(), 21);

        let series = prices_from_csv(&csv, log.config.dt).unwrap();
        assert_eq!(series.len(), 10);
        for (j, s) in series.iter().enumerate() {
            assert_eq!(s.label, format!("S_{j}"));
            for (a, b) in s.values.iter().zip(log.steps.iter().map(|r| r.prices[j])) {
                assert_eq!(*a, b, "shortest round-trip formatting is lossless");
            }
        }
    }

    #[test]
    fn demand_csv_has_one_row_per_demand() {
        let log = small_log();
        let csv = demands_to_csv(&log);
        assert_eq!(csv.lines().count(), log.demands.len() + 1);
        assert!(csv.lines().nth(1).unwrap().contains(","));
    }

    #[test]
    fn malformed_csv_reports_line() {
        let err = prices_from_csv("t,S_0\n1,2.0\n2\n", 0.01).unwrap_err();
        assert!(matches!(err, CsvError::Malformed { line: 3, .. }));
        let err = prices_from_csv("t,S_0\n1,abc\n", 0.01).unwrap_err();
        assert!(matches!(err, CsvError::Malformed { line: 2, .. }));
    }

    #[test]
    fn identical_runs_serialize_identically() {
        let a = prices_to_csv(&small_log());
        let b = prices_to_csv(&small_log());
        assert_eq!(a, b);
    }
}
