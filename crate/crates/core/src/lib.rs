//! Simulator and calibration toolkit for a point-to-point bandwidth
//! market.
//!
//! Network users reserve router capacity for point-to-point connections by
//! buying it on per-router spot markets and selling it back when the
//! connection ends. Each market is run by a market maker that fills every
//! order and moves its quote multiplicatively with the signed traded
//! volume. The crate provides:
//!
//! - [`topology`]: the router graph and price-weighted least-cost paths;
//! - [`market`]: the exponential price-impact rule and implied load;
//! - [`sim`]: the discrete-time engine with deterministic seeded runs;
//! - [`sde`]: mean-reverting Itô models fitted to the resulting prices,
//!   their stationary densities, and path generators;
//! - [`estimate`]: moment estimators, decay diagnostics, residual
//!   correlations, and histogram density fits;
//! - [`metrics`]: success-ratio, profit, and load efficiency measures;
//! - [`config`] / [`io`]: the flat config format and CSV artifacts.

pub mod config;
pub mod estimate;
pub mod io;
pub mod market;
pub mod metrics;
pub mod numeric;
pub mod sde;
pub mod series;
pub mod sim;
pub mod stats;
pub mod topology;

pub use market::{MarketState, Trade};
pub use sde::{CorrelationMatrix, SdeKind, SdeParams};
pub use series::PriceSeries;
pub use sim::{Simulation, SimulationConfig, SimulationLog};
pub use topology::{least_cost_path, load_topology, PathQuote, Topology};
