//! `bullwhip` command line.
//!
//! Exit status: 0 on success, 1 when `compare` finds a gap above tolerance,
//! 2 on invalid input.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::config::{Cell, ConfigError, Experiment, ExperimentFile, Overrides};
use crate::forecasting::{ForecasterSpec, SigmaMode};
use crate::ltstats::{self, KsProtocolConfig, LtStatsError, VerdictThresholds};
use crate::simulator::{self, ChainConfig, ReplicatedResult, SimError, TraceRow};
use crate::stochastic::{DemandMoments, DemandProcessSpec, LeadTimeDistSpec, LeadTimeMoments};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    LtStats(#[from] LtStatsError),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Parser)]
#[command(name = "bullwhip", version, about = "Bullwhip effect under stochastic lead times")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a closed-form bullwhip measure BM = Var q / Var D.
    Analytic {
        #[command(subcommand)]
        model: AnalyticModel,
    },
    /// Print a bullwhip table (2, 3 or 6) as CSV.
    Table {
        /// Table number: 2 (M = 3), 3 (M = 7) or 6 (m x n grid).
        which: u8,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment file and print per-echelon statistics as CSV.
    Simulate(SimulateArgs),
    /// Simulated vs closed-form BM for every cell of an experiment file.
    Compare(CompareArgs),
    /// Test whether the lead times of an order log look i.i.d.
    Analyze(AnalyzeArgs),
}

/// Lead-time law, as a distribution or as moments.
#[derive(Debug, Clone, Default, Args)]
pub struct LeadArgs {
    /// Deterministic lead time L (periods).
    #[arg(long = "l")]
    pub l: Option<u32>,
    /// Smallest lead time of a discrete uniform law on {min..M}.
    #[arg(long)]
    pub lead_min: Option<u32>,
    /// Largest lead time M of a discrete uniform law on {min..M}.
    #[arg(long)]
    pub lead_max: Option<u32>,
    /// Lead-time probabilities p_1,..,p_M (comma separated); M = count.
    #[arg(long, value_delimiter = ',')]
    pub probs: Option<Vec<f64>>,
    /// Mean lead time μ_L.
    #[arg(long)]
    pub mu_l: Option<f64>,
    /// Lead-time variance σ_L² (a variance, not a standard deviation).
    #[arg(long)]
    pub var_l: Option<f64>,
    /// Lead-time bound M, with --mu-l/--var-l.
    #[arg(long)]
    pub max_lead: Option<u32>,
    /// p_M = P(L = M), with --mu-l/--var-l.
    #[arg(long)]
    pub p_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct DemandArgs {
    /// Mean demand μ_D.
    #[arg(long)]
    pub mu_d: Option<f64>,
    /// Demand variance σ_D² (a variance, not a standard deviation).
    #[arg(long)]
    pub var_d: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyticModel {
    /// Deterministic lead time L, lead-time demand moving average of window n.
    Prop1 {
        /// Lead time L (periods).
        #[arg(long = "l")]
        l: u32,
        /// Window n of the lead-time-demand moving average.
        #[arg(long)]
        n: u32,
    },
    /// Stochastic lead times bounded by M, lead-time demand moving average
    /// of window n >= M, i.i.d. demand.
    Th1 {
        /// Window n of the lead-time-demand moving average.
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        lead: LeadArgs,
        #[command(flatten)]
        demand: DemandArgs,
    },
    /// AR(1) demand with coefficient ρ, MMSE forecasts.
    #[command(name = "duc-ar1")]
    MmseAr1 {
        /// Autoregressive coefficient ρ, |ρ| < 1.
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        #[command(flatten)]
        lead: LeadArgs,
        #[command(flatten)]
        demand: DemandArgs,
    },
    /// ARMA(1,1) demand with coefficients ρ and θ, MMSE forecasts.
    #[command(name = "duc-arma")]
    MmseArma {
        /// Autoregressive coefficient ρ, |ρ| < 1.
        #[arg(long, allow_negative_numbers = true)]
        rho: f64,
        /// Moving-average coefficient θ, |θ| < 1.
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
        #[command(flatten)]
        lead: LeadArgs,
        #[command(flatten)]
        demand: DemandArgs,
    },
    /// Lead times and demands forecast by moving averages of windows m and n.
    Mn {
        /// Window m of the lead-time moving average.
        #[arg(long)]
        m: u32,
        /// Window n of the demand moving average.
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        lead: LeadArgs,
        #[command(flatten)]
        demand: DemandArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Experiment file (TOML).
    pub config_path: Option<PathBuf>,
    /// Experiment file (TOML), instead of the positional argument.
    #[arg(long = "config")]
    pub config_flag: Option<PathBuf>,
    /// Base seed of every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent replications per grid cell.
    #[arg(long)]
    pub replications: Option<usize>,
    /// Worker threads for the replications (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Periods per replication, warmup included.
    #[arg(long)]
    pub periods: Option<usize>,
    /// Leading periods left out of the statistics.
    #[arg(long)]
    pub warmup: Option<usize>,
    /// Safety factor z of every echelon, S_t = D̂^L_t + z σ̂_t.
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridMetric {
    /// Var q / Var D against the echelon's own demand.
    Bm,
    /// Var q / Var D against the customer demand.
    Amplification,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Per-period trace of replication 0 of every cell, as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Also write the grid as an m x n table (rows m, columns n).
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    /// Statistic shown in --grid-out.
    #[arg(long, value_enum, default_value = "bm")]
    pub grid_metric: GridMetric,
    /// Echelon shown in --grid-out, 0 = retailer (default: topmost).
    #[arg(long)]
    pub echelon: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Largest accepted relative gap |sim - analytic| / analytic.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Order log: CSV with header order_date,delivery_date,quantity.
    pub orders: PathBuf,
    /// Largest ACF/PACF lag of the daily-average series.
    #[arg(long, default_value_t = 40)]
    pub max_lag: usize,
    /// KS sample sizes (comma separated). Default: 50,100,200,500, keeping
    /// those that fit twice into the log.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Sample pairs per size.
    #[arg(long, default_value_t = 100)]
    pub pairs: usize,
    /// Significance level α of each KS test.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Seed of the pair sampling.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest KS pass ratio still called i.i.d.
    #[arg(long, default_value_t = 0.85)]
    pub min_pass_ratio: f64,
    /// Largest fraction of ACF or PACF lags outside ±1.96/√N still called i.i.d.
    #[arg(long, default_value_t = 0.1)]
    pub max_outside_frac: f64,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Number printed with 7 significant digits.
pub fn format_bm(x: f64) -> String {
    analytic::significant(x, 7)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

enum Lead {
    Spec(LeadTimeDistSpec),
    Moments(LeadTimeMoments),
}

impl Lead {
    fn moments(&self) -> LeadTimeMoments {
        match self {
            Lead::Spec(s) => s.moments(),
            Lead::Moments(m) => *m,
        }
    }

    fn spec(&self) -> Result<&LeadTimeDistSpec, CliError> {
        match self {
            Lead::Spec(s) => Ok(s),
            Lead::Moments(_) => Err(CliError::Usage(
                "this model needs the lead-time distribution (--l, --lead-min/--lead-max or --probs)".into(),
            )),
        }
    }
}

fn lead_from(a: &LeadArgs) -> Result<Lead, CliError> {
    let spec_err = |e: crate::stochastic::SpecError| CliError::Usage(e.to_string());
    let given = [a.l.is_some(), a.lead_max.is_some() || a.lead_min.is_some(), a.probs.is_some(), a.mu_l.is_some() || a.var_l.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(CliError::Usage(
            "give exactly one lead-time law: --l, --lead-min/--lead-max, --probs, or --mu-l/--var-l".into(),
        ));
    }
    if let Some(l) = a.l {
        return LeadTimeDistSpec::deterministic(l).map(Lead::Spec).map_err(spec_err);
    }
    if let Some(max) = a.lead_max {
        return LeadTimeDistSpec::discrete_uniform(a.lead_min.unwrap_or(1), max).map(Lead::Spec).map_err(spec_err);
    }
    if a.lead_min.is_some() {
        return Err(CliError::Usage("--lead-min needs --lead-max".into()));
    }
    if let Some(p) = &a.probs {
        return LeadTimeDistSpec::categorical(p.clone()).map(Lead::Spec).map_err(spec_err);
    }
    match (a.mu_l, a.var_l) {
        (Some(mean), Some(variance)) => Ok(Lead::Moments(LeadTimeMoments {
            mean,
            variance,
            max: a.max_lead.unwrap_or(0),
            p_max: a.p_max.unwrap_or(0.0),
        })),
        _ => Err(CliError::Usage("--mu-l and --var-l go together".into())),
    }
}

fn demand_from(a: &DemandArgs) -> Result<DemandMoments, CliError> {
    match (a.mu_d, a.var_d) {
        (Some(m), Some(v)) => Ok(DemandMoments::new(m, v)),
        _ => Err(CliError::Usage("--mu-d and --var-d are required".into())),
    }
}

pub fn cmd_analytic(model: &AnalyticModel) -> Result<String, CliError> {
    let bm = match model {
        AnalyticModel::Prop1 { l, n } => analytic::bm_deterministic_ma(*l, *n)?,
        AnalyticModel::Th1 { n, lead, demand } => {
            let lead = lead_from(lead)?;
            let moments = lead.moments();
            if let Lead::Moments(m) = &lead {
                if lead_args_lack_bound(m) {
                    return Err(CliError::Usage("--max-lead and --p-max are required with --mu-l/--var-l".into()));
                }
            }
            if *n < moments.max {
                return Err(AnalyticError::NotSupported { n: *n, max_lead: moments.max }.into());
            }
            analytic::bm_ltd_ma_from_moments(moments, *n, demand_from(demand)?)?
        }
        AnalyticModel::MmseAr1 { rho, lead, demand } => {
            analytic::bm_mmse_ar1(lead_from(lead)?.spec()?, *rho, demand_from(demand)?)?
        }
        AnalyticModel::MmseArma { rho, theta, lead, demand } => {
            analytic::bm_mmse_arma(lead_from(lead)?.spec()?, *rho, *theta, demand_from(demand)?)?
        }
        AnalyticModel::Mn { m, n, lead, demand } => {
            let lm = lead_from(lead)?.moments();
            analytic::bm_product_ma(*m, *n, lm.mean, lm.variance, demand_from(demand)?)?
        }
    };
    Ok(format!("{}\n", format_bm(bm)))
}

fn lead_args_lack_bound(m: &LeadTimeMoments) -> bool {
    m.max == 0
}

pub fn cmd_table(which: u8) -> Result<String, CliError> {
    analytic::bullwhip_table(which)
        .map(|t| t.to_csv())
        .ok_or_else(|| CliError::Usage(format!("unknown table {which}; choose one of 2, 3, 6")))
}

fn load_experiment(run: &RunArgs, tolerance: Option<f64>) -> Result<Experiment, CliError> {
    let path = match (&run.config_path, &run.config_flag) {
        (Some(p), None) | (None, Some(p)) => p,
        (Some(_), Some(_)) => return Err(CliError::Usage("give the experiment file once".into())),
        (None, None) => return Err(CliError::Usage("an experiment file is required".into())),
    };
    let overrides = Overrides {
        periods: run.periods,
        warmup: run.warmup,
        seed: run.seed,
        replications: run.replications,
        z: run.z,
        tolerance,
    };
    Ok(ExperimentFile::load(path)?.resolve(&overrides)?)
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--jobs must be >= 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Pool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn run_cells(exp: &Experiment, jobs: Option<usize>) -> Result<Vec<(Cell, ChainConfig, ReplicatedResult)>, CliError> {
    let chains = exp
        .cells
        .iter()
        .map(|c| Ok((*c, exp.chain(*c)?)))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    with_jobs(jobs, || {
        chains
            .into_iter()
            .map(|(cell, chain)| {
                let r = simulator::replicate(&chain, exp.replications)?;
                Ok((cell, chain, r))
            })
            .collect::<Result<Vec<_>, CliError>>()
    })?
}

const SUMMARY_HEADER: &str = "m,n,echelon,name,replications,periods_used,demand_mean,demand_var,order_mean,order_var,\
net_stock_var,bm,bm_mean_scaled,bm_rep_mean,bm_half_width,nsm,amplification,amplification_half_width\n";

fn summary_csv(results: &[(Cell, ChainConfig, ReplicatedResult)]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    for (cell, chain, r) in results {
        for (i, e) in r.echelons.iter().enumerate() {
            let p = &e.pooled;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                opt_usize(cell.m),
                opt_usize(cell.n),
                i,
                p.name,
                r.replications,
                chain.periods - chain.warmup,
                num(p.demand_mean),
                num(p.demand_variance),
                num(p.order_mean),
                num(p.order_variance),
                num(p.net_stock_variance),
                opt(p.bm),
                opt(p.bm_mean_scaled),
                opt(e.bm.map(|b| b.mean)),
                opt(e.bm.and_then(|b| b.half_width)),
                opt(p.nsm),
                opt(p.amplification),
                opt(e.amplification.and_then(|b| b.half_width)),
            );
        }
    }
    out
}

fn grid_csv(results: &[(Cell, ChainConfig, ReplicatedResult)], echelon: Option<usize>, metric: GridMetric) -> Result<String, CliError> {
    let stages = results.first().map_or(0, |r| r.2.echelons.len());
    let e = echelon.unwrap_or(stages.saturating_sub(1));
    if e >= stages {
        return Err(CliError::Usage(format!("--echelon {e} is out of range (chain has {stages})")));
    }
    let mut ms: Vec<Option<usize>> = Vec::new();
    let mut ns: Vec<Option<usize>> = Vec::new();
    for (c, _, _) in results {
        if !ms.contains(&c.m) {
            ms.push(c.m);
        }
        if !ns.contains(&c.n) {
            ns.push(c.n);
        }
    }
    let mut out = String::from("m");
    for n in &ns {
        let _ = write!(out, ",n={}", opt_usize(*n));
    }
    out.push('\n');
    for m in &ms {
        out.push_str(&opt_usize(*m));
        for n in &ns {
            let v = results
                .iter()
                .find(|(c, _, _)| c.m == *m && c.n == *n)
                .and_then(|(_, _, r)| match metric {
                    GridMetric::Bm => r.echelons[e].pooled.bm,
                    GridMetric::Amplification => r.echelons[e].pooled.amplification,
                });
            let _ = write!(out, ",{}", v.map(|x| analytic::significant(x, 5)).unwrap_or_default());
        }
        out.push('\n');
    }
    Ok(out)
}

fn write_trace(exp: &Experiment, path: &Path) -> Result<(), CliError> {
    let mut out = String::from(
        "m,n,period,echelon,lead_time,target,order,arrivals,demand,net_stock,inventory_position,in_transit\n",
    );
    for cell in &exp.cells {
        let chain = exp.chain(*cell)?;
        let mut sink = |r: &TraceRow| {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                opt_usize(cell.m),
                opt_usize(cell.n),
                r.period,
                r.echelon,
                r.lead_time,
                opt(r.target),
                num(r.order),
                num(r.arrivals),
                num(r.demand),
                num(r.net_stock),
                num(r.inventory_position),
                num(r.in_transit),
            );
        };
        simulator::run_traced(&chain, 0, &mut sink)?;
    }
    write_file(path, &out)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write { path: path.display().to_string(), source })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let exp = load_experiment(&args.run, None)?;
    let results = run_cells(&exp, args.run.jobs)?;
    if let Some(path) = &args.trace {
        write_trace(&exp, path)?;
    }
    if let Some(path) = &args.grid_out {
        write_file(path, &grid_csv(&results, args.echelon, args.grid_metric)?)?;
    }
    Ok(summary_csv(&results))
}

/// Closed-form BM of a single-stage chain, when one exists.
pub fn analytic_counterpart(chain: &ChainConfig) -> Result<f64, CliError> {
    let mismatch = |m: &str| Err(CliError::ModelMismatch(m.to_owned()));
    if chain.echelons.len() != 1 {
        return mismatch("closed forms cover a single ordering stage only");
    }
    let e = &chain.echelons[0];
    if matches!(e.policy.sigma, SigmaMode::Empirical { .. }) {
        return mismatch("closed forms assume a constant sigma");
    }
    if chain.round_orders {
        return mismatch("closed forms assume real-valued orders");
    }
    let demand = chain.demand.moments();
    if !(demand.variance > 0.0) {
        return mismatch("demand has zero variance, BM is undefined");
    }
    let lead = &e.lead_time;
    let iid = chain.demand.is_iid();
    let bm = match (&e.forecaster, &chain.demand) {
        (ForecasterSpec::LtdMovingAverage { n, max_lead }, _) if iid => {
            let bound = lead.max();
            if (*n as u32) < bound {
                return mismatch(&format!("n = {n} < M = {bound} has no closed form"));
            }
            if *max_lead != bound {
                return mismatch("closed form assumes the window lag equals the lead-time bound");
            }
            match lead {
                LeadTimeDistSpec::Deterministic { value } => analytic::bm_deterministic_ma(*value, *n as u32)?,
                _ => analytic::bm_ltd_ma_stochastic(lead, *n as u32, demand)?,
            }
        }
        (ForecasterSpec::ProductOfMas { m, n }, _) if iid => {
            let lm = lead.moments();
            analytic::bm_product_ma(*m as u32, *n as u32, lm.mean, lm.variance, demand)?
        }
        (ForecasterSpec::MmseAr1 { mean, rho }, DemandProcessSpec::Ar1 { .. })
            if close(*mean, demand.mean) && close(*rho, chain.demand.rho()) =>
        {
            analytic::bm_mmse_ar1(lead, *rho, demand)?
        }
        (ForecasterSpec::MmseArma { mean, rho, theta }, DemandProcessSpec::Arma11 { .. })
            if close(*mean, demand.mean) && close(*rho, chain.demand.rho()) && close(*theta, chain.demand.theta()) =>
        {
            analytic::bm_mmse_arma(lead, *rho, *theta, demand)?
        }
        _ => return mismatch("forecaster and demand process have no closed form together"),
    };
    Ok(bm)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Comparison CSV and whether every gap is within tolerance.
pub fn cmd_compare(args: &CompareArgs) -> Result<(String, bool), CliError> {
    let exp = load_experiment(&args.run, args.tolerance)?;
    let analytic = exp
        .cells
        .iter()
        .map(|c| analytic_counterpart(&exp.chain(*c)?))
        .collect::<Result<Vec<_>, _>>()?;
    let results = run_cells(&exp, args.run.jobs)?;
    let mut out = String::from("m,n,analytic,simulated,ci_half_width,relative_gap,within_tolerance\n");
    let mut ok = true;
    for ((cell, _, r), a) in results.iter().zip(analytic) {
        let e = &r.echelons[0];
        let sim = e.pooled.bm.ok_or(SimError::DegenerateSeries("demand variance is zero"))?;
        let gap = (sim - a).abs() / a.abs();
        let within = gap <= exp.tolerance;
        ok &= within;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            opt_usize(cell.m),
            opt_usize(cell.n),
            num(a),
            num(sim),
            opt(e.bm.and_then(|b| b.half_width)),
            num(gap),
            within
        );
    }
    Ok((out, ok))
}

pub fn default_ks_sizes() -> Vec<usize> {
    vec![50, 100, 200, 500]
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<String, CliError> {
    let records = ltstats::load_orders_path(&args.orders)?;
    let daily: Vec<f64> = ltstats::daily_average_lead_time(&records).into_iter().map(|(_, v)| v).collect();
    let leads: Vec<f64> = records.iter().map(|r| r.lead_time_days() as f64).collect();
    let acf = ltstats::acf(&daily, args.max_lag)?;
    let pacf = ltstats::pacf(&daily, args.max_lag)?;
    let sizes = match &args.sizes {
        Some(s) => s.clone(),
        None => default_ks_sizes().into_iter().filter(|s| 2 * s <= leads.len()).collect(),
    };
    let ks = if sizes.is_empty() {
        Vec::new()
    } else {
        let cfg = KsProtocolConfig { sizes, pairs: args.pairs, alpha: args.alpha, seed: args.seed };
        ltstats::pairwise_ks_ratio(&leads, &cfg)?
    };
    let thresholds = VerdictThresholds {
        max_outside_fraction: args.max_outside_frac,
        min_pass_ratio: args.min_pass_ratio,
    };
    let mut out = String::new();
    let _ = writeln!(out, "# orders={} days={}", records.len(), daily.len());
    out.push_str("lag,acf,pacf,band_lower,band_upper\n");
    for (k, (a, p)) in acf.coefficients.iter().zip(&pacf.coefficients).enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", k + 1, num(*a), num(*p), num(-acf.band), num(acf.band));
    }
    out.push_str("\nsize,pairs,pass_ratio\n");
    for r in &ks {
        let _ = writeln!(out, "{},{},{}", r.size, r.pairs, num(r.pass_ratio));
    }
    let _ = writeln!(out, "\nverdict: {}", ltstats::iid_verdict(&acf, &pacf, &ks, thresholds));
    Ok(out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write { path: "<stdout>".into(), source })
        }
    }
}

/// Runs a parsed command; the `bool` is false when `compare` fails its
/// tolerance.
pub fn execute(cli: &Cli) -> Result<bool, CliError> {
    match &cli.command {
        Command::Analytic { model } => emit(&cmd_analytic(model)?, None).map(|_| true),
        Command::Table { which, out } => emit(&cmd_table(*which)?, out.as_deref()).map(|_| true),
        Command::Simulate(a) => emit(&cmd_simulate(a)?, a.run.out.as_deref()).map(|_| true),
        Command::Compare(a) => {
            let (text, ok) = cmd_compare(a)?;
            emit(&text, a.run.out.as_deref())?;
            Ok(ok)
        }
        Command::Analyze(a) => emit(&cmd_analyze(a)?, a.out.as_deref()).map(|_| true),
    }
}

pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("bullwhip: relative gap above tolerance");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("bullwhip: {e}");
            ExitCode::from(2)
        }
    }
}
