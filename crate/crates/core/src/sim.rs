//! The discrete-time engine: demand generation, buy/sell decisions against
//! stale quotes, randomized trade effectuation, and per-step logging.
//!
//! Each step:
//! 1. generate `m` demands (user, endpoints, capacity, duration at random);
//! 2. for each new demand, price the least-cost path on the last known
//!    quotes and buy iff the estimate is below `cost_factor * max`,
//!    crediting the reward immediately;
//! 3. queue sales for satisfied demands ending this step (sales that would
//!    fall past the horizon are forced at the final step so books close);
//! 4. net buy and sell volumes per (user, router), then effectuate the
//!    nonzero nets one by one in a uniformly random order against the
//!    markets;
//! 5. log last transaction prices, counts, cash, and outstanding volume.
//!
//! All randomness flows from one seeded ChaCha8 stream in a fixed order:
//! per demand `uid, src, dst (redrawn until != src), xi, dur`, then one
//! shuffle of the netted volume list. Identical (config, seed) pairs
//! therefore produce bit-identical logs.
//!
//! A step is split into [`Simulation::plan_step`] (random draws and
//! decisions) and [`Simulation::settle`] (state changes under an explicit
//! effectuation order) so tests can replay one step under many orders.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::market::{MarketError, MarketState};
use crate::topology::{least_cost_path, Topology};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config field {field}: {message}")]
    InvalidConfig {
        field: &'static str,
        message: String,
    },
    #[error("market {router} failed at step {step}: {source}")]
    Market {
        step: usize,
        router: usize,
        source: MarketError,
    },
    #[error("holdings of user {user} on router {router} went negative at step {step}")]
    NegativeHoldings {
        step: usize,
        user: usize,
        router: usize,
    },
    #[error("cash imbalance at step {step}: users moved {actual}, trades and rewards account for {expected}")]
    CashImbalance {
        step: usize,
        expected: f64,
        actual: f64,
    },
    #[error("implied load {implied} of router {router} diverged from bookkept volume {bookkept} at step {step}")]
    LoadMismatch {
        step: usize,
        router: usize,
        implied: f64,
        bookkept: f64,
    },
    #[error("effectuation order is not a permutation of the volume list")]
    BadPermutation,
    #[error("{count} demands still held resources after the final step")]
    UnsettledDemands { count: usize },
    #[error("run already contains {have} of {want} steps")]
    RunComplete { have: usize, want: usize },
}

/// Which price a trade charges the user's cash account.
///
/// `PostImpact` (the default) charges the post-impact transaction price.
/// `PreImpact` charges the pre-trade quote, the literal bullet-list
/// reading; it changes cash flows only, never prices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CashConvention {
    #[default]
    PostImpact,
    PreImpact,
}

/// Full parameterization of one run.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub topology: Topology,
    /// M: number of network users.
    pub n_users: usize,
    /// L: number of time steps.
    pub n_steps: usize,
    /// Time increment per step.
    pub dt: f64,
    /// m: new demands generated per step.
    pub demands_per_step: usize,
    /// D: maximum demand duration in steps.
    pub max_duration: u32,
    /// K: capacity exponent; cap = ceil(exp(K xi)).
    pub cap_exponent: f64,
    /// C_unit: reward per capacity unit; max = C_unit * cap.
    pub unit_reward: f64,
    /// C_max: buy iff estimated cost < C_max * max.
    pub cost_factor: f64,
    /// lambda_j: liquidity per market.
    pub liquidity: Vec<f64>,
    /// S_j(0): initial price per market.
    pub initial_price: Vec<f64>,
    pub seed: u64,
    pub cash_convention: CashConvention,
}

impl SimulationConfig {
    /// The reference parameter set: the 10-router default network, 10
    /// users, 1000 steps of 0.01, uniform liquidity 10, initial prices 10,
    /// 10 demands per step, durations 1..=10, K = 2, C_unit = 100,
    /// C_max = 1.
    pub fn paper_defaults() -> Self {
        let topology = Topology::petersen();
        let n = topology.node_count();
        SimulationConfig {
            topology,
            n_users: 10,
            n_steps: 1000,
            dt: 0.01,
            demands_per_step: 10,
            max_duration: 10,
            cap_exponent: 2.0,
            unit_reward: 100.0,
            cost_factor: 1.0,
            liquidity: vec![10.0; n],
            initial_price: vec![10.0; n],
            seed: 0,
            cash_convention: CashConvention::PostImpact,
        }
    }

    pub fn n_routers(&self) -> usize {
        self.topology.node_count()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        fn bad(field: &'static str, message: String) -> SimError {
            SimError::InvalidConfig { field, message }
        }
        if self.n_users == 0 {
            return Err(bad("users", "need at least one user".into()));
        }
        if self.n_steps == 0 {
            return Err(bad("steps", "need at least one step".into()));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(bad("dt", format!("must be positive, got {}", self.dt)));
        }
        if self.max_duration == 0 {
            return Err(bad("max_duration", "must be at least 1".into()));
        }
        if !(self.cap_exponent.is_finite() && self.cap_exponent > 0.0 && self.cap_exponent <= 20.0)
        {
            return Err(bad(
                "cap_exponent",
                format!("must be in (0, 20], got {}", self.cap_exponent),
            ));
        }
        if !(self.unit_reward.is_finite() && self.unit_reward > 0.0) {
            return Err(bad(
                "unit_reward",
                format!("must be positive, got {}", self.unit_reward),
            ));
        }
        if !(self.cost_factor.is_finite() && self.cost_factor >= 0.0) {
            return Err(bad(
                "cost_factor",
                format!("must be non-negative, got {}", self.cost_factor),
            ));
        }
        let n = self.n_routers();
        if self.liquidity.len() != n {
            return Err(bad(
                "liquidity",
                format!("need one value per router ({n}), got {}", self.liquidity.len()),
            ));
        }
        if let Some(l) = self.liquidity.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(bad("liquidity", format!("must be positive, got {l}")));
        }
        if self.initial_price.len() != n {
            return Err(bad(
                "initial_price",
                format!(
                    "need one value per router ({n}), got {}",
                    self.initial_price.len()
                ),
            ));
        }
        if let Some(p) = self
            .initial_price
            .iter()
            .find(|p| !(p.is_finite() && **p > 0.0))
        {
            return Err(bad("initial_price", format!("must be positive, got {p}")));
        }
        Ok(())
    }
}

/// The demand 7-tuple. `max_cost` is the reward paid for satisfying it.
#[derive(Debug, Clone, PartialEq)]
pub struct Demand {
    pub id: u64,
    pub user: usize,
    pub src: usize,
    pub dst: usize,
    pub cap: u32,
    pub duration: u32,
    pub max_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DemandOutcome {
    Satisfied { path: Vec<usize>, end_step: usize },
    Rejected,
}

/// Final outcome and realized net cash flow of one demand. For satisfied
/// demands the realized flow is the reward minus buy costs plus sale
/// proceeds, attributed from the netted trades pro rata by leg.
#[derive(Debug, Clone)]
pub struct DemandRecord {
    pub demand: Demand,
    pub outcome: DemandOutcome,
    pub realized_cash: f64,
}

impl DemandRecord {
    pub fn is_satisfied(&self) -> bool {
        matches!(self.outcome, DemandOutcome::Satisfied { .. })
    }
}

/// Cash and per-router holdings of one user. Both start at zero; holdings
/// never go negative (users sell only previously purchased allocations).
#[derive(Debug, Clone, PartialEq)]
pub struct UserState {
    pub cash: f64,
    pub holdings: Vec<i64>,
}

/// One row of the per-step log.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    /// Last transaction price per router at the end of the step.
    pub prices: Vec<f64>,
    pub satisfied: usize,
    pub rejected: usize,
    pub user_cash: Vec<f64>,
    /// Bookkept outstanding (bought minus sold) volume per router.
    pub outstanding: Vec<i64>,
    pub trades: usize,
    pub messages_out: u64,
    pub messages_in: u64,
}

/// Complete record of a run: exactly `n_steps` step records plus the final
/// outcome of every generated demand.
#[derive(Debug, Clone)]
pub struct SimulationLog {
    pub config: SimulationConfig,
    pub steps: Vec<StepRecord>,
    pub demands: Vec<DemandRecord>,
}

#[derive(Debug, Clone)]
struct ActiveDemand {
    id: u64,
    user: usize,
    path: Vec<usize>,
    cap: u32,
    end_step: usize,
}

/// Planned decision for one freshly generated demand.
#[derive(Debug, Clone)]
pub enum PlannedDecision {
    Buy {
        path: Vec<usize>,
        est_cost: f64,
        end_step: usize,
    },
    Reject {
        est_cost: f64,
    },
}

#[derive(Debug, Clone)]
pub struct PlannedDemand {
    pub demand: Demand,
    pub decision: PlannedDecision,
}

/// One netted (user, router) volume with its demand legs for cash
/// attribution. The legs sum to `volume`.
#[derive(Debug, Clone)]
pub struct VolumeEntry {
    pub user: usize,
    pub router: usize,
    pub volume: i64,
    pub legs: Vec<(u64, i64)>,
}

/// Everything a step changes, computed before any state mutation so the
/// settlement can be replayed under different effectuation orders.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub step: usize,
    pub stale_prices: Vec<f64>,
    pub demands: Vec<PlannedDemand>,
    /// Netted volumes in deterministic (user, router) order.
    pub volumes: Vec<VolumeEntry>,
    /// Demand ids whose resources sell this step.
    pub retires: Vec<u64>,
}

/// Engine state for a single run.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    markets: Vec<MarketState>,
    users: Vec<UserState>,
    active: Vec<ActiveDemand>,
    outstanding: Vec<i64>,
    rng: ChaCha8Rng,
    t: usize,
    steps: Vec<StepRecord>,
    demand_records: Vec<DemandRecord>,
    next_demand_id: u64,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self, SimError> {
        config.validate()?;
        let n = config.n_routers();
        let markets: Vec<MarketState> = (0..n)
            .map(|j| {
                MarketState::new(config.initial_price[j], config.liquidity[j])
                    .expect("validated by config")
            })
            .collect();
        let users = vec![
            UserState {
                cash: 0.0,
                holdings: vec![0; n],
            };
            config.n_users
        ];
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Ok(Simulation {
            markets,
            users,
            active: Vec::new(),
            outstanding: vec![0; n],
            rng,
            t: 0,
            steps: Vec::with_capacity(config.n_steps),
            demand_records: Vec::new(),
            next_demand_id: 0,
            config,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn current_step(&self) -> usize {
        self.t
    }

    pub fn market(&self, router: usize) -> &MarketState {
        &self.markets[router]
    }

    pub fn users(&self) -> &[UserState] {
        &self.users
    }

    pub fn prices(&self) -> Vec<f64> {
        self.markets.iter().map(|m| m.price()).collect()
    }

    /// Draws this step's demands and decisions and nets the trade volumes.
    /// Advances the RNG and the demand-id counter but leaves markets,
    /// users, and logs untouched; [`Simulation::settle`] applies the plan.
    pub fn plan_step(&mut self) -> StepPlan {
        let t = self.t;
        let cfg = &self.config;
        let n = cfg.n_routers();
        let last_step = cfg.n_steps - 1;
        let stale_prices: Vec<f64> = self.markets.iter().map(|m| m.price()).collect();

        // (user, router) -> (net volume, legs); BTreeMap keeps the base
        // order deterministic before the random permutation is drawn.
        let mut volumes: BTreeMap<(usize, usize), (i64, Vec<(u64, i64)>)> = BTreeMap::new();
        let mut add_leg = |user: usize, router: usize, demand_id: u64, amount: i64| {
            let entry = volumes.entry((user, router)).or_insert((0, Vec::new()));
            entry.0 += amount;
            entry.1.push((demand_id, amount));
        };

        let mut demands = Vec::with_capacity(cfg.demands_per_step);
        for _ in 0..cfg.demands_per_step {
            let id = self.next_demand_id;
            self.next_demand_id += 1;
            let user = self.rng.gen_range(0..cfg.n_users);
            let src = self.rng.gen_range(0..n);
            let dst = loop {
                let d = self.rng.gen_range(0..n);
                if d != src {
                    break d;
                }
            };
            let xi: f64 = self.rng.gen();
            let cap = (cfg.cap_exponent * xi).exp().ceil() as u32;
            let duration = self.rng.gen_range(1..=cfg.max_duration);
            let max_cost = cfg.unit_reward * cap as f64;
            let demand = Demand {
                id,
                user,
                src,
                dst,
                cap,
                duration,
                max_cost,
            };

            let quote = least_cost_path(&cfg.topology, &stale_prices, src, dst, cap as f64);
            let decision = if quote.est_cost < cfg.cost_factor * max_cost {
                let end_step = (t + duration as usize).min(last_step);
                for &router in &quote.path {
                    add_leg(user, router, id, cap as i64);
                }
                if end_step == t {
                    // demand generated at the final step: forced close-out
                    // sells in the same step, netting to zero volume
                    for &router in &quote.path {
                        add_leg(user, router, id, -(cap as i64));
                    }
                }
                PlannedDecision::Buy {
                    path: quote.path,
                    est_cost: quote.est_cost,
                    end_step,
                }
            } else {
                PlannedDecision::Reject {
                    est_cost: quote.est_cost,
                }
            };
            demands.push(PlannedDemand { demand, decision });
        }

        let mut retires = Vec::new();
        for d in &self.active {
            if d.end_step == t {
                for &router in &d.path {
                    add_leg(d.user, router, d.id, -(d.cap as i64));
                }
                retires.push(d.id);
            }
        }

        let volumes: Vec<VolumeEntry> = volumes
            .into_iter()
            .map(|((user, router), (volume, legs))| VolumeEntry {
                user,
                router,
                volume,
                legs,
            })
            .collect();

        StepPlan {
            step: t,
            stale_prices,
            demands,
            volumes,
            retires,
        }
    }

    /// Applies a step plan: credits rewards, effectuates the netted
    /// volumes in the given order (a permutation of the volume indices),
    /// retires sold demands, verifies the books, and logs the step.
    pub fn settle(&mut self, plan: &StepPlan, order: &[usize]) -> Result<(), SimError> {
        let t = plan.step;
        let m = self.config.n_users;

        // order must visit each volume entry exactly once
        if order.len() != plan.volumes.len() {
            return Err(SimError::BadPermutation);
        }
        let mut seen = vec![false; order.len()];
        for &idx in order {
            if idx >= seen.len() || seen[idx] {
                return Err(SimError::BadPermutation);
            }
            seen[idx] = true;
        }

        let cash_before: f64 = self.users.iter().map(|u| u.cash).sum();
        let mut accounted = 0.0f64;

        // demand records, rewards, and active-list entries; records are
        // indexed by demand id, which plan_step assigns sequentially
        debug_assert_eq!(
            plan.demands.first().map(|p| p.demand.id),
            plan.demands.first().map(|_| self.demand_records.len() as u64)
        );
        let mut satisfied = 0usize;
        let mut rejected = 0usize;
        for planned in &plan.demands {
            let mut realized_cash = 0.0;
            let outcome = match &planned.decision {
                PlannedDecision::Buy { path, end_step, .. } => {
                    satisfied += 1;
                    let user = planned.demand.user;
                    let reward = planned.demand.max_cost;
                    self.users[user].cash += reward;
                    accounted += reward;
                    realized_cash += reward;
                    if *end_step > t {
                        self.active.push(ActiveDemand {
                            id: planned.demand.id,
                            user,
                            path: path.clone(),
                            cap: planned.demand.cap,
                            end_step: *end_step,
                        });
                    }
                    DemandOutcome::Satisfied {
                        path: path.clone(),
                        end_step: *end_step,
                    }
                }
                PlannedDecision::Reject { .. } => {
                    rejected += 1;
                    DemandOutcome::Rejected
                }
            };
            self.demand_records.push(DemandRecord {
                demand: planned.demand.clone(),
                outcome,
                realized_cash,
            });
        }

        let mut trades = 0usize;
        let mut messages_out = 0u64;
        let mut messages_in = 0u64;

        for &idx in order {
            let entry = &plan.volumes[idx];
            if entry.volume != 0 {
                let pre_quote = self.markets[entry.router].price();
                let trade = self.markets[entry.router]
                    .execute(entry.volume as f64)
                    .map_err(|source| SimError::Market {
                        step: t,
                        router: entry.router,
                        source,
                    })?;
                let cash_delta = match self.config.cash_convention {
                    CashConvention::PostImpact => trade.cash_delta,
                    CashConvention::PreImpact => -(entry.volume as f64) * pre_quote,
                };
                let attribution_price = match self.config.cash_convention {
                    CashConvention::PostImpact => trade.unit_price,
                    CashConvention::PreImpact => pre_quote,
                };
                let user = &mut self.users[entry.user];
                user.cash += cash_delta;
                user.holdings[entry.router] += entry.volume;
                if user.holdings[entry.router] < 0 {
                    return Err(SimError::NegativeHoldings {
                        step: t,
                        user: entry.user,
                        router: entry.router,
                    });
                }
                self.outstanding[entry.router] += entry.volume;
                accounted += cash_delta;
                trades += 1;
                messages_out += 1; // the bid, user -> market
                messages_in += (m as u64).saturating_sub(1); // quote update broadcast
                for &(demand_id, leg) in &entry.legs {
                    self.demand_records[demand_id as usize].realized_cash -=
                        leg as f64 * attribution_price;
                }
            } else {
                // offsetting legs net to zero: no trade executes, so the
                // internal transfer is attributed at the stale quote
                let stale = plan.stale_prices[entry.router];
                for &(demand_id, leg) in &entry.legs {
                    self.demand_records[demand_id as usize].realized_cash -= leg as f64 * stale;
                }
            }
        }

        if !plan.retires.is_empty() {
            self.active.retain(|d| !plan.retires.contains(&d.id));
        }

        // hard accounting checks: cash conservation and implied load
        let cash_after: f64 = self.users.iter().map(|u| u.cash).sum();
        let moved = cash_after - cash_before;
        let tol = 1e-7 * (1.0 + moved.abs() + accounted.abs());
        if (moved - accounted).abs() > tol {
            return Err(SimError::CashImbalance {
                step: t,
                expected: accounted,
                actual: moved,
            });
        }
        for (router, market) in self.markets.iter().enumerate() {
            let implied = market.implied_load();
            let bookkept = self.outstanding[router] as f64;
            if (implied - bookkept).abs() > 1e-6 * (1.0 + bookkept.abs()) {
                return Err(SimError::LoadMismatch {
                    step: t,
                    router,
                    implied,
                    bookkept,
                });
            }
        }

        self.steps.push(StepRecord {
            step: t,
            prices: self.prices(),
            satisfied,
            rejected,
            user_cash: self.users.iter().map(|u| u.cash).collect(),
            outstanding: self.outstanding.clone(),
            trades,
            messages_out,
            messages_in,
        });
        self.t += 1;
        Ok(())
    }

    /// Runs one full step: plan, draw a uniform random effectuation order
    /// (Fisher-Yates over the netted volumes), settle.
    pub fn step(&mut self) -> Result<(), SimError> {
        if self.t >= self.config.n_steps {
            return Err(SimError::RunComplete {
                have: self.t,
                want: self.config.n_steps,
            });
        }
        let plan = self.plan_step();
        let mut order: Vec<usize> = (0..plan.volumes.len()).collect();
        order.shuffle(&mut self.rng);
        self.settle(&plan, &order)
    }

    /// Consumes the engine after all steps, verifying the books closed.
    pub fn finish(self) -> Result<SimulationLog, SimError> {
        if !self.active.is_empty() {
            return Err(SimError::UnsettledDemands {
                count: self.active.len(),
            });
        }
        let held: usize = self
            .users
            .iter()
            .map(|u| u.holdings.iter().filter(|h| **h != 0).count())
            .sum();
        if held != 0 {
            return Err(SimError::UnsettledDemands { count: held });
        }
        Ok(SimulationLog {
            config: self.config,
            steps: self.steps,
            demands: self.demand_records,
        })
    }
}

/// Runs a full simulation from a validated config.
pub fn run(config: SimulationConfig) -> Result<SimulationLog, SimError> {
    let mut sim = Simulation::new(config)?;
    for _ in 0..sim.config.n_steps {
        sim.step()?;
    }
    sim.finish()
}
