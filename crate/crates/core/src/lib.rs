//! Bullwhip effect under stochastic lead times: demand and lead-time
//! processes, forecasters, order-up-to replenishment, closed-form measures,
//! a multi-echelon simulator and lead-time log statistics.

pub mod analytic;
pub mod forecasting;
pub mod policy;
pub mod stochastic;
pub mod simulator;
pub mod ltstats;
pub mod config;
pub mod cli;
