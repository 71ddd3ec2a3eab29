//! Period-driven serial supply chain. Each echelon runs an order-up-to
//! policy on its own forecaster; the topmost echelon is fed by a supplier
//! with unlimited stock.
//!
//! At the start of period `t`, downstream first, every echelon
//! 1. books the shipments due at `t`,
//! 2. feeds `D_{t-1}` and `L_{t-1}` to its forecaster,
//! 3. samples `L_t`, sets `S_t` and places `q_t` (arriving at `t + L_t`),
//! 4. then meets its demand `D_t` from net stock, backordering any shortfall.
//!
//! The retailer's demand is the customer demand; every other echelon sees
//! the order `q_t` of the echelon below it in the same period.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecasting::{ErrorTracker, ForecastError, Forecaster, ForecasterSpec};
use crate::policy::{OrderUpToState, PolicyError, PolicyParams};
use crate::stochastic::{DemandProcess, DemandProcessSpec, LeadTimeDistSpec, RandomSource, SpecError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("the chain needs at least one echelon")]
    NoEchelons,
    #[error("warmup ({warmup}) must be smaller than periods ({periods})")]
    WarmupTooLong { warmup: usize, periods: usize },
    #[error("warmup ({warmup}) is shorter than the {needed} periods needed to fill every window")]
    WarmupTooShort { warmup: usize, needed: usize },
    #[error("demand: {0}")]
    Demand(SpecError),
    #[error("echelon `{name}`: lead time: {source}")]
    LeadTime { name: String, source: SpecError },
    #[error("echelon `{name}`: forecaster: {source}")]
    Forecast { name: String, source: ForecastError },
    #[error("echelon `{name}`: policy: {source}")]
    Policy { name: String, source: PolicyError },
    #[error("echelon `{name}`: max_lead = {max_lead} is below the lead-time bound M = {bound}")]
    LeadBoundTooSmall { name: String, max_lead: u32, bound: u32 },
    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
    #[error("replication count must be >= 1")]
    NoReplications,
}

/// One ordering stage of the chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchelonConfig {
    pub name: String,
    pub forecaster: ForecasterSpec,
    /// Delivery times of this echelon's orders from the stage above.
    pub lead_time: LeadTimeDistSpec,
    #[serde(default)]
    pub policy: PolicyParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub demand: DemandProcessSpec,
    /// Downstream to upstream.
    pub echelons: Vec<EchelonConfig>,
    /// Total periods simulated, warmup included.
    pub periods: usize,
    /// Leading periods excluded from the statistics.
    pub warmup: usize,
    #[serde(default)]
    pub seed: u64,
    /// Round each order to the nearest whole unit, tracking `S_t - IP_t`.
    #[serde(default)]
    pub round_orders: bool,
}

impl ChainConfig {
    /// Periods before every echelon places stationary orders: each stage
    /// needs its windows filled (plus `M` for lagged data) on top of the
    /// stages below it.
    pub fn min_warmup(&self) -> usize {
        self.echelons
            .iter()
            .map(|e| e.forecaster.priming_periods() + e.lead_time.max() as usize + 1)
            .sum()
    }

    /// `max(1000, 10 × min_warmup)`.
    pub fn default_warmup(&self) -> usize {
        (10 * self.min_warmup()).max(1000)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.echelons.is_empty() {
            return Err(SimError::NoEchelons);
        }
        self.demand.validate().map_err(SimError::Demand)?;
        for e in &self.echelons {
            e.lead_time
                .validate()
                .map_err(|source| SimError::LeadTime { name: e.name.clone(), source })?;
            let forecast_err = |source| SimError::Forecast { name: e.name.clone(), source };
            e.forecaster.validate().map_err(forecast_err)?;
            e.policy.sigma.validate().map_err(forecast_err)?;
            OrderUpToState::new(e.policy).map_err(|source| SimError::Policy { name: e.name.clone(), source })?;
            if let ForecasterSpec::LtdMovingAverage { max_lead, .. } = e.forecaster {
                let bound = e.lead_time.max();
                if max_lead < bound {
                    return Err(SimError::LeadBoundTooSmall { name: e.name.clone(), max_lead, bound });
                }
            }
        }
        if self.warmup >= self.periods {
            return Err(SimError::WarmupTooLong { warmup: self.warmup, periods: self.periods });
        }
        let needed = self.min_warmup();
        if self.warmup < needed {
            return Err(SimError::WarmupTooShort { warmup: self.warmup, needed });
        }
        Ok(())
    }

    /// Copy with the moving-average windows of every echelon replaced:
    /// `m` for lead times, `n` for demands or lead-time demands.
    pub fn with_windows(&self, m: usize, n: usize) -> Self {
        let mut out = self.clone();
        for e in &mut out.echelons {
            match &mut e.forecaster {
                ForecasterSpec::ProductOfMas { m: em, n: en } => {
                    *em = m;
                    *en = n;
                }
                ForecasterSpec::LtdMovingAverage { n: en, .. } => *en = n,
                ForecasterSpec::MmseAr1 { .. } | ForecasterSpec::MmseArma { .. } => {}
            }
        }
        out
    }
}

/// Running mean and variance (Welford), mergeable across replications.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut m = Self::default();
        xs.iter().for_each(|&x| m.push(x));
        m
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        Self {
            count,
            mean: self.mean + delta * nb / count as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / count as f64,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (`n - 1` denominator); 0 below two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmEstimate {
    /// `Var q / Var D`.
    pub variance_ratio: f64,
    /// `(Var q / E q) / (Var D / E D)`; `None` when either mean is zero.
    pub mean_scaled: Option<f64>,
}

pub fn bm_from_moments(demand: &Moments, orders: &Moments) -> Result<BmEstimate, SimError> {
    let vd = demand.variance();
    if !(vd > 0.0) {
        return Err(SimError::DegenerateSeries("demand variance is zero"));
    }
    let vq = orders.variance();
    let mean_scaled = if demand.mean() != 0.0 && orders.mean() != 0.0 {
        Some((vq / orders.mean()) / (vd / demand.mean()))
    } else {
        None
    };
    Ok(BmEstimate { variance_ratio: vq / vd, mean_scaled })
}

/// Plug-in bullwhip measure of an order series against its demand series.
pub fn estimate_bm(demand: &[f64], orders: &[f64]) -> Result<BmEstimate, SimError> {
    bm_from_moments(&Moments::from_slice(demand), &Moments::from_slice(orders))
}

/// `Var(net stock) / Var(D)`.
pub fn estimate_nsm(net_stock: &[f64], demand: &[f64]) -> Result<f64, SimError> {
    nsm_from_moments(&Moments::from_slice(net_stock), &Moments::from_slice(demand))
}

pub fn nsm_from_moments(net_stock: &Moments, demand: &Moments) -> Result<f64, SimError> {
    let vd = demand.variance();
    if !(vd > 0.0) {
        return Err(SimError::DegenerateSeries("demand variance is zero"));
    }
    Ok(net_stock.variance() / vd)
}

/// Raw post-warmup moments of one echelon.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EchelonMoments {
    pub demand: Moments,
    pub orders: Moments,
    pub net_stock: Moments,
}

impl EchelonMoments {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            demand: self.demand.merge(&other.demand),
            orders: self.orders.merge(&other.orders),
            net_stock: self.net_stock.merge(&other.net_stock),
        }
    }
}

/// Summary statistics of one echelon.
#[derive(Debug, Clone, PartialEq)]
pub struct EchelonSummary {
    pub name: String,
    pub demand_mean: f64,
    pub demand_variance: f64,
    pub order_mean: f64,
    pub order_variance: f64,
    pub net_stock_variance: f64,
    /// `Var q / Var D` against the echelon's own demand.
    pub bm: Option<f64>,
    pub bm_mean_scaled: Option<f64>,
    pub nsm: Option<f64>,
    /// `Var q / Var D` against the customer demand.
    pub amplification: Option<f64>,
}

impl EchelonSummary {
    fn new(name: &str, m: &EchelonMoments, customer: &Moments) -> Self {
        let bm = bm_from_moments(&m.demand, &m.orders).ok();
        let amplification = bm_from_moments(customer, &m.orders).ok().map(|b| b.variance_ratio);
        Self {
            name: name.to_owned(),
            demand_mean: m.demand.mean(),
            demand_variance: m.demand.variance(),
            order_mean: m.orders.mean(),
            order_variance: m.orders.variance(),
            net_stock_variance: m.net_stock.variance(),
            bm: bm.map(|b| b.variance_ratio),
            bm_mean_scaled: bm.and_then(|b| b.mean_scaled),
            nsm: nsm_from_moments(&m.net_stock, &m.demand).ok(),
            amplification,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub replication: u64,
    pub periods_used: usize,
    pub moments: Vec<EchelonMoments>,
    pub echelons: Vec<EchelonSummary>,
}

/// One echelon in one period, as seen at the end of the period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub period: usize,
    pub echelon: usize,
    pub lead_time: u32,
    /// `S_t`, absent while the forecaster is priming.
    pub target: Option<f64>,
    pub order: f64,
    pub arrivals: f64,
    pub demand: f64,
    pub net_stock: f64,
    pub inventory_position: f64,
    pub cumulative_ordered: f64,
    pub cumulative_received: f64,
    pub in_transit: f64,
}

struct Echelon {
    forecaster: Forecaster,
    errors: ErrorTracker,
    policy: OrderUpToState,
    lead_spec: LeadTimeDistSpec,
    rng: RandomSource,
    // arrivals due at period p sit in slot p % len
    pipeline: Vec<f64>,
    net_stock: f64,
    in_transit: f64,
    cumulative_ordered: f64,
    cumulative_received: f64,
    last_demand: f64,
    last_lead: u32,
    moments: EchelonMoments,
}

impl Echelon {
    fn new(cfg: &EchelonConfig, rng: RandomSource, initial_demand: f64) -> Result<Self, SimError> {
        let forecast_err = |source| SimError::Forecast { name: cfg.name.clone(), source };
        Ok(Self {
            forecaster: Forecaster::new(&cfg.forecaster).map_err(forecast_err)?,
            errors: ErrorTracker::new(cfg.policy.sigma).map_err(forecast_err)?,
            policy: OrderUpToState::new(cfg.policy)
                .map_err(|source| SimError::Policy { name: cfg.name.clone(), source })?,
            lead_spec: cfg.lead_time.clone(),
            rng,
            pipeline: vec![0.0; cfg.lead_time.max() as usize + 1],
            net_stock: 0.0,
            in_transit: 0.0,
            cumulative_ordered: 0.0,
            cumulative_received: 0.0,
            last_demand: initial_demand,
            last_lead: 0,
            moments: EchelonMoments::default(),
        })
    }

    /// Steps 1 to 3 of period `t`; returns `(order, lead time, target, arrivals)`.
    fn place(&mut self, t: usize, round: bool) -> (f64, u32, Option<f64>, f64) {
        let slot = t % self.pipeline.len();
        let arrivals = std::mem::take(&mut self.pipeline[slot]);
        self.net_stock += arrivals;
        self.in_transit -= arrivals;
        self.cumulative_received += arrivals;

        if t > 0 {
            self.forecaster.observe(self.last_demand, self.last_lead);
            self.errors.observe_demand(self.last_demand);
        }

        let lead = self.lead_spec.next_lead_time(&mut self.rng);
        let forecast = self.forecaster.forecast(lead);
        if let Some(f) = forecast {
            self.errors.record_forecast(t, lead, f);
        }
        let position = self.net_stock + self.in_transit;
        let (order, target) = match (forecast, self.errors.sigma()) {
            (Some(f), Some(sigma)) => {
                let q = self.policy.step(f, sigma, self.last_demand, position);
                let target = self.policy.previous_target();
                match (round, target) {
                    (true, Some(s)) => ((s - position).round(), target),
                    _ => (q, target),
                }
            }
            _ if round => (self.last_demand.round(), None),
            _ => (self.last_demand, None),
        };

        let due = (t + lead as usize) % self.pipeline.len();
        self.pipeline[due] += order;
        self.in_transit += order;
        self.cumulative_ordered += order;
        self.last_lead = lead;
        (order, lead, target, arrivals)
    }

    fn meet_demand(&mut self, demand: f64) {
        self.net_stock -= demand;
        self.last_demand = demand;
    }
}

fn simulate(
    config: &ChainConfig,
    replication: u64,
    mut trace: Option<&mut dyn FnMut(&TraceRow)>,
) -> Result<RunResult, SimError> {
    config.validate()?;
    let mean = config.demand.moments().mean;
    let mut demand_rng = RandomSource::lane(config.seed, replication, 0);
    let mut demand = DemandProcess::new(config.demand.clone());
    let mut stages = config
        .echelons
        .iter()
        .enumerate()
        .map(|(i, e)| Echelon::new(e, RandomSource::lane(config.seed, replication, 1 + i as u64), mean))
        .collect::<Result<Vec<_>, _>>()?;
    let mut customer = Moments::default();

    for t in 0..config.periods {
        let record = t >= config.warmup;
        let mut d = demand.next_demand(&mut demand_rng);
        if record {
            customer.push(d);
        }
        for (i, stage) in stages.iter_mut().enumerate() {
            let (order, lead, target, arrivals) = stage.place(t, config.round_orders);
            stage.meet_demand(d);
            if record {
                stage.moments.demand.push(d);
                stage.moments.orders.push(order);
                stage.moments.net_stock.push(stage.net_stock);
            }
            if let Some(sink) = trace.as_mut() {
                sink(&TraceRow {
                    period: t,
                    echelon: i,
                    lead_time: lead,
                    target,
                    order,
                    arrivals,
                    demand: d,
                    net_stock: stage.net_stock,
                    inventory_position: stage.net_stock + stage.in_transit,
                    cumulative_ordered: stage.cumulative_ordered,
                    cumulative_received: stage.cumulative_received,
                    in_transit: stage.in_transit,
                });
            }
            d = order;
        }
    }

    let moments: Vec<_> = stages.iter().map(|s| s.moments).collect();
    let echelons = config
        .echelons
        .iter()
        .zip(&moments)
        .map(|(e, m)| EchelonSummary::new(&e.name, m, &customer))
        .collect();
    Ok(RunResult {
        seed: config.seed,
        replication,
        periods_used: config.periods - config.warmup,
        moments,
        echelons,
    })
}

/// One run, replication 0.
pub fn run_chain(config: &ChainConfig) -> Result<RunResult, SimError> {
    simulate(config, 0, None)
}

/// One replication of the chain on its own random streams.
pub fn run_replication(config: &ChainConfig, replication: u64) -> Result<RunResult, SimError> {
    simulate(config, replication, None)
}

/// As [`run_replication`], calling `sink` for every echelon in every period.
pub fn run_traced(
    config: &ChainConfig,
    replication: u64,
    sink: &mut dyn FnMut(&TraceRow),
) -> Result<RunResult, SimError> {
    simulate(config, replication, Some(sink))
}

/// Across-replication estimate with a normal 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// `1.96 s / √R`; `None` for a single replication.
    pub half_width: Option<f64>,
}

impl Estimate {
    pub fn from_values(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let m = Moments::from_slice(xs);
        let half_width = (xs.len() > 1).then(|| 1.96 * m.variance().sqrt() / (xs.len() as f64).sqrt());
        Some(Self { mean: m.mean(), half_width })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedEchelon {
    /// Statistics of the pooled post-warmup periods of every replication.
    pub pooled: EchelonSummary,
    pub bm: Option<Estimate>,
    pub nsm: Option<Estimate>,
    pub amplification: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatedResult {
    pub replications: usize,
    pub runs: Vec<RunResult>,
    pub echelons: Vec<ReplicatedEchelon>,
}

fn collect<F: Fn(&EchelonSummary) -> Option<f64>>(runs: &[RunResult], i: usize, f: F) -> Option<Estimate> {
    let xs: Option<Vec<f64>> = runs.iter().map(|r| f(&r.echelons[i])).collect();
    xs.and_then(|xs| Estimate::from_values(&xs))
}

fn aggregate(config: &ChainConfig, runs: Vec<RunResult>) -> ReplicatedResult {
    let customer = runs
        .iter()
        .map(|r| r.moments[0].demand)
        .fold(Moments::default(), |a, b| a.merge(&b));
    let echelons = config
        .echelons
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let pooled = runs
                .iter()
                .map(|r| r.moments[i])
                .fold(EchelonMoments::default(), |a, b| a.merge(&b));
            ReplicatedEchelon {
                pooled: EchelonSummary::new(&e.name, &pooled, &customer),
                bm: collect(&runs, i, |s| s.bm),
                nsm: collect(&runs, i, |s| s.nsm),
                amplification: collect(&runs, i, |s| s.amplification),
            }
        })
        .collect();
    ReplicatedResult { replications: runs.len(), runs, echelons }
}

/// `replications` independent runs of `config`, in parallel on the current
/// rayon pool. Replication `r` uses streams `(seed, r, ·)`, so the result
/// does not depend on scheduling.
pub fn replicate(config: &ChainConfig, replications: usize) -> Result<ReplicatedResult, SimError> {
    if replications == 0 {
        return Err(SimError::NoReplications);
    }
    config.validate()?;
    let runs = (0..replications as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(config, runs))
}
