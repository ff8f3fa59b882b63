//! Market-efficiency measurements computed from simulation logs: the
//! successful-connection ratio, net user profit, implied per-market load,
//! and communication counts.

use thiserror::Error;

use crate::sim::SimulationLog;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("log contains no demands; the success ratio is undefined")]
    NoDemands,
    #[error("implied load {implied} diverged from bookkept volume {bookkept} (router {router}, step {step})")]
    LoadMismatch {
        router: usize,
        step: usize,
        implied: f64,
        bookkept: f64,
    },
}

/// Fraction of demands satisfied. A demand counts as successful on
/// acceptance regardless of its realized net cost.
pub fn success_ratio(log: &SimulationLog) -> Result<f64, MetricsError> {
    if log.demands.is_empty() {
        return Err(MetricsError::NoDemands);
    }
    let satisfied = log.demands.iter().filter(|d| d.is_satisfied()).count();
    Ok(satisfied as f64 / log.demands.len() as f64)
}

/// Net profit per user (final cash; users start with nothing) and its
/// averages over users and over demands.
#[derive(Debug, Clone)]
pub struct ProfitReport {
    pub per_user: Vec<f64>,
    pub avg_per_user: f64,
    pub avg_per_demand: f64,
}

pub fn net_profit(log: &SimulationLog) -> ProfitReport {
    let per_user: Vec<f64> = match log.steps.last() {
        Some(step) => step.user_cash.clone(),
        None => vec![0.0; log.config.n_users],
    };
    let total: f64 = per_user.iter().sum();
    let avg_per_user = total / per_user.len() as f64;
    let avg_per_demand = if log.demands.is_empty() {
        0.0
    } else {
        total / log.demands.len() as f64
    };
    ProfitReport {
        per_user,
        avg_per_user,
        avg_per_demand,
    }
}

/// Implied load per market over time, `lambda_j ln(S_j(t) / S_j(0))`,
/// one inner vector per router indexed by step.
pub fn load_series(log: &SimulationLog) -> Vec<Vec<f64>> {
    let n = log.config.n_routers();
    let mut out = vec![Vec::with_capacity(log.steps.len()); n];
    for step in &log.steps {
        for j in 0..n {
            let lambda = log.config.liquidity[j];
            let s0 = log.config.initial_price[j];
            out[j].push(lambda * (step.prices[j] / s0).ln());
        }
    }
    out
}

/// Confirms the implied load matches the bookkept outstanding volume at
/// every step, the strongest cross-module identity in the system.
pub fn verify_load_bookkeeping(log: &SimulationLog, tol: f64) -> Result<(), MetricsError> {
    let loads = load_series(log);
    for (step_idx, step) in log.steps.iter().enumerate() {
        for (router, series) in loads.iter().enumerate() {
            let implied = series[step_idx];
            let bookkept = step.outstanding[router] as f64;
            if (implied - bookkept).abs() > tol * (1.0 + bookkept.abs()) {
                return Err(MetricsError::LoadMismatch {
                    router,
                    step: step_idx,
                    implied,
                    bookkept,
                });
            }
        }
    }
    Ok(())
}

/// Aggregated efficiency observables for one run.
#[derive(Debug, Clone)]
pub struct EfficiencyReport {
    /// None when the log contains no demands.
    pub success_ratio: Option<f64>,
    pub profit: ProfitReport,
    pub load: Vec<Vec<f64>>,
    pub total_trades: usize,
    pub messages_out: u64,
    pub messages_in: u64,
}

pub fn efficiency_report(log: &SimulationLog) -> EfficiencyReport {
    EfficiencyReport {
        success_ratio: success_ratio(log).ok(),
        profit: net_profit(log),
        load: load_series(log),
        total_trades: log.steps.iter().map(|s| s.trades).sum(),
        messages_out: log.steps.iter().map(|s| s.messages_out).sum(),
        messages_in: log.steps.iter().map(|s| s.messages_in).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketState;
    use crate::sim::{run, SimulationConfig, StepRecord};

    fn quick(mut f: impl FnMut(&mut SimulationConfig)) -> SimulationLog {
        let mut cfg = SimulationConfig::paper_defaults();
        cfg.n_steps = 50;
        f(&mut cfg);
        run(cfg).unwrap()
    }

    #[test]
    fn generous_budget_satisfies_everything() {
        let log = quick(|c| c.unit_reward = 1e9);
        assert_eq!(success_ratio(&log).unwrap(), 1.0);
    }

    #[test]
    fn zero_cost_factor_rejects_everything() {
        let log = quick(|c| c.cost_factor = 0.0);
        assert_eq!(success_ratio(&log).unwrap(), 0.0);
        // nothing traded, so nobody made or lost money
        let profit = net_profit(&log);
        assert!(profit.per_user.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn zero_demands_is_undefined_ratio_and_zero_profit() {
        let log = quick(|c| c.demands_per_step = 0);
        assert!(matches!(success_ratio(&log), Err(MetricsError::NoDemands)));
        let profit = net_profit(&log);
        assert!(profit.per_user.iter().all(|&p| p == 0.0));
        assert_eq!(profit.avg_per_demand, 0.0);
        let report = efficiency_report(&log);
        assert!(report.success_ratio.is_none());
        assert_eq!(report.total_trades, 0);
    }

    #[test]
    fn load_zero_before_any_trade() {
        let log = quick(|c| c.demands_per_step = 0);
        let loads = load_series(&log);
        for series in &loads {
            assert!(series.iter().all(|&l| l == 0.0));
        }
    }

    #[test]
    fn load_recovers_single_trade_volume() {
        // hand-built log: one market pushed by a +5 trade
        let mut cfg = SimulationConfig::paper_defaults();
        cfg.n_steps = 1;
        let mut market = MarketState::new(10.0, 10.0).unwrap();
        market.execute(5.0).unwrap();
        let mut prices = vec![10.0; 10];
        prices[3] = market.price();
        let mut outstanding = vec![0i64; 10];
        outstanding[3] = 5;
        let log = SimulationLog {
            steps: vec![StepRecord {
                step: 0,
                prices,
                satisfied: 0,
                rejected: 0,
                user_cash: vec![0.0; 10],
                outstanding,
                trades: 1,
                messages_out: 1,
                messages_in: 9,
            }],
            demands: vec![],
            config: cfg,
        };
        let loads = load_series(&log);
        assert!((loads[3][0] - 5.0).abs() < 1e-9);
        verify_load_bookkeeping(&log, 1e-9).unwrap();
    }

    #[test]
    fn load_matches_bookkeeping_on_default_run() {
        let log = run(SimulationConfig::paper_defaults()).unwrap();
        verify_load_bookkeeping(&log, 1e-6).unwrap();
        // total implied load equals total outstanding at a few steps
        let loads = load_series(&log);
        for &t in &[0usize, 250, 500, 999] {
            let implied: f64 = loads.iter().map(|s| s[t]).sum();
            let bookkept: i64 = log.steps[t].outstanding.iter().sum();
            assert!(
                (implied - bookkept as f64).abs() < 1e-6 * (1.0 + bookkept.abs() as f64),
                "step {t}: {implied} vs {bookkept}"
            );
        }
    }

    #[test]
    fn ratio_non_decreasing_in_unit_reward() {
        for seed in [1u64, 2, 3] {
            let mut ratios = Vec::new();
            for unit_reward in [20.0, 100.0, 500.0] {
                let log = quick(|c| {
                    c.unit_reward = unit_reward;
                    c.seed = seed;
                    c.n_steps = 200;
                });
                ratios.push(success_ratio(&log).unwrap());
            }
            assert!(
                ratios[0] <= ratios[1] && ratios[1] <= ratios[2],
                "seed {seed}: {ratios:?}"
            );
        }
    }
}
