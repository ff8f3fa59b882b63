//! `bwmarket run`: one simulation, three artifacts.

use std::fs;

use bwmarket::config::manifest_string;
use bwmarket::io::{demands_to_csv, prices_to_csv};
use bwmarket::metrics;
use bwmarket::sim;

use crate::{load_config, CliError, RunArgs, TOOL_VERSION};

pub fn execute(args: &RunArgs) -> Result<(), CliError> {
    let config = load_config(args.config.as_ref(), args.seed)?;
    let manifest = manifest_string(&config, TOOL_VERSION);
    let log = sim::run(config).map_err(CliError::runtime)?;

    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("prices.csv"), prices_to_csv(&log))?;
    fs::write(args.out.join("demands.csv"), demands_to_csv(&log))?;
    fs::write(args.out.join("manifest.txt"), manifest)?;

    let report = metrics::efficiency_report(&log);
    let ratio = report
        .success_ratio
        .map(|r| format!("{r:.4}"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "run complete: {} steps, {} demands, success ratio {}, avg profit/user {:.4}, artifacts in {}",
        log.steps.len(),
        log.demands.len(),
        ratio,
        report.profit.avg_per_user,
        args.out.display()
    );
    Ok(())
}
