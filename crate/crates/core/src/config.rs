//! Experiment files: a TOML description of the chain, run controls and an
//! optional `m × n` window grid.
//!
//! ```toml
//! periods = 200000
//! seed = 1
//! replications = 8
//!
//! [demand]
//! kind = "iid_uniform"
//! lo = 4500.0
//! hi = 5500.0
//!
//! [[echelons]]
//! name = "retailer"
//! lead_time = { kind = "discrete_uniform", min = 1, max = 7 }
//! forecaster = { kind = "product_of_mas", m = 10, n = 10 }
//! policy = { z = 1.5, sigma = { mode = "constant", value = 0.0 } }
//!
//! [grid]
//! m = [1, 3, 6, 10, 20]
//! n = [1, 2, 6, 10, 20]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecasting::{ForecasterSpec, SigmaMode};
use crate::policy::{z_from_service, PolicyParams};
use crate::simulator::{ChainConfig, EchelonConfig, SimError};
use crate::stochastic::{DemandProcessSpec, LeadTimeDistSpec};

pub const DEFAULT_COMPARE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Chain(#[from] SimError),
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecasterKind {
    LtdMovingAverage,
    MmseAr1,
    MmseArma,
    ProductOfMas,
}

/// Forecaster entry; parameters left out are taken from the demand process
/// (`mean`, `rho`, `theta`) and the lead-time law (`max_lead`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterFile {
    pub kind: ForecasterKind,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub max_lead: Option<u32>,
    pub mean: Option<f64>,
    pub rho: Option<f64>,
    pub theta: Option<f64>,
}

/// `z` directly, or unit backorder and holding costs giving
/// `z = Φ(p / (p + h))`. Defaults to `z = 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub z: Option<f64>,
    pub backorder_cost: Option<f64>,
    pub holding_cost: Option<f64>,
    #[serde(default)]
    pub sigma: SigmaMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EchelonFile {
    pub name: Option<String>,
    pub lead_time: LeadTimeDistSpec,
    pub forecaster: ForecasterFile,
    #[serde(default)]
    pub policy: PolicyFile,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub m: Option<Vec<usize>>,
    pub n: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareFile {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_COMPARE_TOLERANCE
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    /// Total periods per replication, warmup included.
    pub periods: usize,
    /// Defaults to [`ChainConfig::default_warmup`] of each grid cell.
    pub warmup: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub round_orders: bool,
    pub demand: DemandProcessSpec,
    pub echelons: Vec<EchelonFile>,
    pub grid: Option<GridFile>,
    pub compare: Option<CompareFile>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub periods: Option<usize>,
    pub warmup: Option<usize>,
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub z: Option<f64>,
    pub tolerance: Option<f64>,
}

/// Grid cell windows; `None` where the forecasters have no such window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub m: Option<usize>,
    pub n: Option<usize>,
}

/// A validated, fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub base: ChainConfig,
    pub explicit_warmup: Option<usize>,
    pub replications: usize,
    pub cells: Vec<Cell>,
    pub grid: bool,
    pub tolerance: f64,
}

impl Experiment {
    /// The chain for one cell, with its warmup resolved and validated.
    pub fn chain(&self, cell: Cell) -> Result<ChainConfig, ConfigError> {
        let mut chain = match (cell.m, cell.n) {
            (m, Some(n)) if self.grid => self.base.with_windows(m.unwrap_or(1), n),
            _ => self.base.clone(),
        };
        chain.warmup = self.explicit_warmup.unwrap_or_else(|| chain.default_warmup());
        chain.validate()?;
        Ok(chain)
    }
}

fn resolve_forecaster(
    f: &ForecasterFile,
    demand: &DemandProcessSpec,
    lead: &LeadTimeDistSpec,
    field: &str,
) -> Result<ForecasterSpec, ConfigError> {
    let need = |v: Option<usize>, name: &str| {
        v.ok_or_else(|| field_error(format!("{field}.{name}"), "missing window length"))
    };
    let reject = |present: bool, name: &str| {
        if present {
            Err(field_error(format!("{field}.{name}"), "not used by this forecaster kind"))
        } else {
            Ok(())
        }
    };
    let mean = f.mean.unwrap_or_else(|| demand.moments().mean);
    let spec = match f.kind {
        ForecasterKind::LtdMovingAverage => {
            reject(f.m.is_some(), "m")?;
            reject(f.mean.is_some() || f.rho.is_some() || f.theta.is_some(), "mean/rho/theta")?;
            ForecasterSpec::LtdMovingAverage { n: need(f.n, "n")?, max_lead: f.max_lead.unwrap_or(lead.max()) }
        }
        ForecasterKind::ProductOfMas => {
            reject(f.max_lead.is_some(), "max_lead")?;
            reject(f.mean.is_some() || f.rho.is_some() || f.theta.is_some(), "mean/rho/theta")?;
            ForecasterSpec::ProductOfMas { m: need(f.m, "m")?, n: need(f.n, "n")? }
        }
        ForecasterKind::MmseAr1 => {
            reject(f.m.is_some() || f.n.is_some() || f.max_lead.is_some(), "m/n/max_lead")?;
            reject(f.theta.is_some(), "theta")?;
            ForecasterSpec::MmseAr1 { mean, rho: f.rho.unwrap_or_else(|| demand.rho()) }
        }
        ForecasterKind::MmseArma => {
            reject(f.m.is_some() || f.n.is_some() || f.max_lead.is_some(), "m/n/max_lead")?;
            ForecasterSpec::MmseArma {
                mean,
                rho: f.rho.unwrap_or_else(|| demand.rho()),
                theta: f.theta.unwrap_or_else(|| demand.theta()),
            }
        }
    };
    spec.validate().map_err(|e| field_error(field, e.to_string()))?;
    Ok(spec)
}

fn resolve_policy(p: &PolicyFile, z_override: Option<f64>, field: &str) -> Result<PolicyParams, ConfigError> {
    let z = match (p.z, p.backorder_cost, p.holding_cost) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(field_error(field, "give either `z` or the two unit costs, not both"))
        }
        (Some(z), None, None) => z,
        (None, Some(b), Some(h)) => z_from_service(b, h).map_err(|e| field_error(field, e.to_string()))?,
        (None, None, None) => 0.0,
        (None, _, _) => return Err(field_error(field, "`backorder_cost` and `holding_cost` go together")),
    };
    let z = z_override.unwrap_or(z);
    if !z.is_finite() {
        return Err(field_error(format!("{field}.z"), "must be finite"));
    }
    p.sigma.validate().map_err(|e| field_error(format!("{field}.sigma"), e.to_string()))?;
    Ok(PolicyParams { z, sigma: p.sigma })
}

impl ExperimentFile {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml(&text)
    }

    pub fn resolve(&self, o: &Overrides) -> Result<Experiment, ConfigError> {
        if self.echelons.is_empty() {
            return Err(field_error("echelons", "at least one echelon is required"));
        }
        let echelons = self
            .echelons
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let field = format!("echelons[{i}]");
                Ok(EchelonConfig {
                    name: e.name.clone().unwrap_or_else(|| format!("echelon{}", i + 1)),
                    forecaster: resolve_forecaster(&e.forecaster, &self.demand, &e.lead_time, &format!("{field}.forecaster"))?,
                    lead_time: e.lead_time.clone(),
                    policy: resolve_policy(&e.policy, o.z, &format!("{field}.policy"))?,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let periods = o.periods.unwrap_or(self.periods);
        let replications = o.replications.unwrap_or(self.replications);
        if replications == 0 {
            return Err(field_error("replications", "must be >= 1"));
        }
        let tolerance = o
            .tolerance
            .or(self.compare.as_ref().map(|c| c.tolerance))
            .unwrap_or(DEFAULT_COMPARE_TOLERANCE);
        if !(tolerance.is_finite() && tolerance > 0.0) {
            return Err(field_error("compare.tolerance", "must be positive"));
        }
        let base = ChainConfig {
            demand: self.demand.clone(),
            echelons,
            periods,
            warmup: 0,
            seed: o.seed.unwrap_or(self.seed),
            round_orders: self.round_orders,
        };
        let own = windows_of(&base);
        let cells = match &self.grid {
            None => vec![own],
            Some(g) => {
                let ms = g.m.clone().unwrap_or_else(|| vec![own.m.unwrap_or(1)]);
                let ns = match &g.n {
                    Some(ns) => ns.clone(),
                    None => vec![own.n.ok_or_else(|| field_error("grid.n", "required for these forecasters"))?],
                };
                if ms.is_empty() || ns.is_empty() || ms.contains(&0) || ns.contains(&0) {
                    return Err(field_error("grid", "window lists must be non-empty and >= 1"));
                }
                let uses_m = base.echelons.iter().any(|e| matches!(e.forecaster, ForecasterSpec::ProductOfMas { .. }));
                ms.iter()
                    .flat_map(|&m| ns.iter().map(move |&n| Cell { m: uses_m.then_some(m), n: Some(n) }))
                    .collect()
            }
        };
        let exp = Experiment {
            base,
            explicit_warmup: o.warmup.or(self.warmup),
            replications,
            cells,
            grid: self.grid.is_some(),
            tolerance,
        };
        for cell in &exp.cells {
            exp.chain(*cell)?;
        }
        Ok(exp)
    }
}

/// Windows of the retailer's forecaster.
pub fn windows_of(chain: &ChainConfig) -> Cell {
    match chain.echelons.first().map(|e| &e.forecaster) {
        Some(ForecasterSpec::ProductOfMas { m, n }) => Cell { m: Some(*m), n: Some(*n) },
        Some(ForecasterSpec::LtdMovingAverage { n, .. }) => Cell { m: None, n: Some(*n) },
        _ => Cell { m: None, n: None },
    }
}
