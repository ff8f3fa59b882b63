//! `bwmarket sweep`: independent runs over (lambda, C_max, seed) cells,
//! aggregated into one efficiency CSV. Cells execute in parallel; the
//! output order is the deterministic cell order regardless of scheduling.

use std::fmt::Write as _;
use std::fs;

use bwmarket::metrics::{net_profit, success_ratio};
use bwmarket::sim::{run, SimulationConfig};
use rayon::prelude::*;

use crate::{load_config, CliError, SweepArgs};

struct Cell {
    lambda: f64,
    cmax: f64,
    seed: u64,
}

pub fn execute(args: &SweepArgs) -> Result<(), CliError> {
    if args.lambda.is_empty() || args.cmax.is_empty() || args.seeds.is_empty() {
        return Err(CliError::validation(
            "sweep lists (--lambda, --cmax, --seeds) must be non-empty",
        ));
    }
    let base = load_config(args.config.as_ref(), None)?;

    let mut cells = Vec::new();
    for &lambda in &args.lambda {
        for &cmax in &args.cmax {
            for &seed in &args.seeds {
                cells.push(Cell { lambda, cmax, seed });
            }
        }
    }

    let rows: Vec<(String, bool)> = cells
        .par_iter()
        .map(|cell| render_row(&base, cell))
        .collect();

    let mut out = String::from(
        "lambda,c_max,seed,status,success_ratio,avg_profit_per_user,avg_profit_per_demand,\
         satisfied,total_demands,trades,messages_out,messages_in\n",
    );
    let mut failures = 0usize;
    for (row, ok) in &rows {
        out.push_str(row);
        out.push('\n');
        if !ok {
            failures += 1;
        }
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(&args.out, out)?;
    println!(
        "sweep complete: {} cells ({} failed), rows in {}",
        rows.len(),
        failures,
        args.out.display()
    );
    if failures > 0 {
        return Err(CliError::runtime(format!(
            "{failures} of {} sweep cells failed; partial results flagged in {}",
            rows.len(),
            args.out.display()
        )));
    }
    Ok(())
}

fn render_row(base: &SimulationConfig, cell: &Cell) -> (String, bool) {
    let mut config = base.clone();
    let n = config.n_routers();
    config.liquidity = vec![cell.lambda; n];
    config.cost_factor = cell.cmax;
    config.seed = cell.seed;
    let mut row = format!("{},{},{},", cell.lambda, cell.cmax, cell.seed);
    match config.validate().map_err(|e| e.to_string()).and_then(|()| {
        run(config).map_err(|e| e.to_string())
    }) {
        Ok(log) => {
            let ratio = success_ratio(&log).ok();
            let profit = net_profit(&log);
            let satisfied = log.demands.iter().filter(|d| d.is_satisfied()).count();
            let trades: usize = log.steps.iter().map(|s| s.trades).sum();
            let m_out: u64 = log.steps.iter().map(|s| s.messages_out).sum();
            let m_in: u64 = log.steps.iter().map(|s| s.messages_in).sum();
            let _ = write!(
                row,
                "ok,{},{},{},{},{},{},{},{}",
                ratio.map(|r| r.to_string()).unwrap_or_default(),
                profit.avg_per_user,
                profit.avg_per_demand,
                satisfied,
                log.demands.len(),
                trades,
                m_out,
                m_in
            );
            (row, true)
        }
        Err(e) => {
            let _ = write!(row, "error:{},,,,,,,", e.replace(',', ";"));
            (row, false)
        }
    }
}
