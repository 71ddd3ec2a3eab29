//! Seeded demand and lead-time generators, and the exact moments the
//! closed-form bullwhip measures are written in terms of.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `Σ p_k = 1` for categorical lead times.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("autoregressive coefficient rho = {0} must satisfy |rho| < 1")]
    NonStationaryRho(f64),
    #[error("moving-average coefficient theta = {0} must satisfy |theta| < 1")]
    NonInvertibleTheta(f64),
    #[error("noise standard deviation must be finite and >= 0, got {0}")]
    NegativeNoise(f64),
    #[error("uniform demand bounds need lo < hi, got lo = {lo}, hi = {hi}")]
    EmptyUniformRange { lo: f64, hi: f64 },
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("lead times must be >= 1 period, got {0}")]
    ZeroLeadTime(u32),
    #[error("discrete uniform lead times need 1 <= min <= max, got min = {min}, max = {max}")]
    BadLeadRange { min: u32, max: u32 },
    #[error("categorical lead-time distribution needs at least one probability")]
    EmptyCategorical,
    #[error("lead-time probability p_{index} = {value} is negative or not finite")]
    BadProbability { index: usize, value: f64 },
    #[error("lead-time probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
}

/// A seeded ChaCha8 stream.
///
/// Streams with the same seed but different stream ids are disjoint: each id
/// selects its own 2^64-block keystream, so replications and echelons never
/// share draws.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Stream id for one lane (demand, an echelon's lead times, ...) of one
    /// replication.
    pub fn lane(seed: u64, replication: u64, lane: u64) -> Self {
        debug_assert!(lane < (1 << 24));
        Self::with_stream(seed, (replication << 24) | lane)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Distribution of the innovations `ε_t` of the autoregressive processes.
/// Both variants have mean 0 and the configured standard deviation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Normal,
    Uniform,
}

impl NoiseKind {
    fn draw(self, std_dev: f64, rng: &mut RandomSource) -> f64 {
        match self {
            NoiseKind::Normal => std_dev * rng.standard_normal(),
            // U(-a, a) has variance a²/3
            NoiseKind::Uniform => std_dev * 3f64.sqrt() * (2.0 * rng.uniform() - 1.0),
        }
    }
}

/// Customer demand process, in items per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DemandProcessRepr", into = "DemandProcessRepr")]
pub enum DemandProcessSpec {
    Constant { value: f64 },
    IidUniform { lo: f64, hi: f64 },
    IidNormal { mean: f64, std_dev: f64 },
    /// `D_t = μ + ρ D_{t-1} + ε_t`
    Ar1 { mu: f64, rho: f64, noise_std: f64, noise: NoiseKind },
    /// `D_t = μ + ρ D_{t-1} + ε_t - θ ε_{t-1}`
    Arma11 { mu: f64, rho: f64, theta: f64, noise_std: f64, noise: NoiseKind },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DemandProcessRepr {
    Constant {
        value: f64,
    },
    IidUniform {
        lo: f64,
        hi: f64,
    },
    IidNormal {
        mean: f64,
        std_dev: f64,
    },
    Ar1 {
        mu: f64,
        rho: f64,
        noise_std: f64,
        #[serde(default)]
        noise: NoiseKind,
    },
    Arma11 {
        mu: f64,
        rho: f64,
        theta: f64,
        noise_std: f64,
        #[serde(default)]
        noise: NoiseKind,
    },
}

impl TryFrom<DemandProcessRepr> for DemandProcessSpec {
    type Error = SpecError;

    fn try_from(r: DemandProcessRepr) -> Result<Self, SpecError> {
        let spec = match r {
            DemandProcessRepr::Constant { value } => DemandProcessSpec::Constant { value },
            DemandProcessRepr::IidUniform { lo, hi } => DemandProcessSpec::IidUniform { lo, hi },
            DemandProcessRepr::IidNormal { mean, std_dev } => {
                DemandProcessSpec::IidNormal { mean, std_dev }
            }
            DemandProcessRepr::Ar1 { mu, rho, noise_std, noise } => {
                DemandProcessSpec::Ar1 { mu, rho, noise_std, noise }
            }
            DemandProcessRepr::Arma11 { mu, rho, theta, noise_std, noise } => {
                DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, noise }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<DemandProcessSpec> for DemandProcessRepr {
    fn from(s: DemandProcessSpec) -> Self {
        match s {
            DemandProcessSpec::Constant { value } => DemandProcessRepr::Constant { value },
            DemandProcessSpec::IidUniform { lo, hi } => DemandProcessRepr::IidUniform { lo, hi },
            DemandProcessSpec::IidNormal { mean, std_dev } => {
                DemandProcessRepr::IidNormal { mean, std_dev }
            }
            DemandProcessSpec::Ar1 { mu, rho, noise_std, noise } => {
                DemandProcessRepr::Ar1 { mu, rho, noise_std, noise }
            }
            DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, noise } => {
                DemandProcessRepr::Arma11 { mu, rho, theta, noise_std, noise }
            }
        }
    }
}

fn finite(name: &'static str, value: f64) -> Result<(), SpecError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(SpecError::NonFinite { name, value })
    }
}

fn check_rho(rho: f64) -> Result<(), SpecError> {
    finite("rho", rho)?;
    if rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(SpecError::NonStationaryRho(rho))
    }
}

fn check_theta(theta: f64) -> Result<(), SpecError> {
    finite("theta", theta)?;
    if theta.abs() < 1.0 {
        Ok(())
    } else {
        Err(SpecError::NonInvertibleTheta(theta))
    }
}

fn check_std(std: f64) -> Result<(), SpecError> {
    if std.is_finite() && std >= 0.0 {
        Ok(())
    } else {
        Err(SpecError::NegativeNoise(std))
    }
}

/// Mean and variance of a stationary demand process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandMoments {
    pub mean: f64,
    pub variance: f64,
}

impl DemandMoments {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self { mean, variance }
    }

    /// Moments with `σ_D / μ_D = cv`.
    pub fn from_cv(mean: f64, cv: f64) -> Self {
        Self { mean, variance: (cv * mean).powi(2) }
    }
}

impl DemandProcessSpec {
    pub fn ar1(mu: f64, rho: f64, noise_std: f64) -> Result<Self, SpecError> {
        let s = DemandProcessSpec::Ar1 { mu, rho, noise_std, noise: NoiseKind::Normal };
        s.validate()?;
        Ok(s)
    }

    pub fn arma11(mu: f64, rho: f64, theta: f64, noise_std: f64) -> Result<Self, SpecError> {
        let s = DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, noise: NoiseKind::Normal };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match *self {
            DemandProcessSpec::Constant { value } => finite("value", value),
            DemandProcessSpec::IidUniform { lo, hi } => {
                finite("lo", lo)?;
                finite("hi", hi)?;
                if lo < hi {
                    Ok(())
                } else {
                    Err(SpecError::EmptyUniformRange { lo, hi })
                }
            }
            DemandProcessSpec::IidNormal { mean, std_dev } => {
                finite("mean", mean)?;
                check_std(std_dev)
            }
            DemandProcessSpec::Ar1 { mu, rho, noise_std, .. } => {
                finite("mu", mu)?;
                check_rho(rho)?;
                check_std(noise_std)
            }
            DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, .. } => {
                finite("mu", mu)?;
                check_rho(rho)?;
                check_theta(theta)?;
                check_std(noise_std)
            }
        }
    }

    /// Exact stationary mean and variance. `Constant` has variance 0;
    /// callers that divide by the variance must reject it.
    pub fn moments(&self) -> DemandMoments {
        match *self {
            DemandProcessSpec::Constant { value } => DemandMoments::new(value, 0.0),
            DemandProcessSpec::IidUniform { lo, hi } => {
                DemandMoments::new(0.5 * (lo + hi), (hi - lo).powi(2) / 12.0)
            }
            DemandProcessSpec::IidNormal { mean, std_dev } => {
                DemandMoments::new(mean, std_dev * std_dev)
            }
            DemandProcessSpec::Ar1 { mu, rho, noise_std, .. } => DemandMoments::new(
                mu / (1.0 - rho),
                noise_std * noise_std / (1.0 - rho * rho),
            ),
            DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, .. } => DemandMoments::new(
                mu / (1.0 - rho),
                noise_std * noise_std * (1.0 + theta * theta - 2.0 * rho * theta)
                    / (1.0 - rho * rho),
            ),
        }
    }

    /// Autoregressive coefficient, 0 for the i.i.d. variants.
    pub fn rho(&self) -> f64 {
        match *self {
            DemandProcessSpec::Ar1 { rho, .. } | DemandProcessSpec::Arma11 { rho, .. } => rho,
            _ => 0.0,
        }
    }

    pub fn theta(&self) -> f64 {
        match *self {
            DemandProcessSpec::Arma11 { theta, .. } => theta,
            _ => 0.0,
        }
    }

    pub fn is_iid(&self) -> bool {
        !matches!(self, DemandProcessSpec::Ar1 { .. } | DemandProcessSpec::Arma11 { .. })
    }
}

/// Running state of a demand process. Autoregressive processes start at the
/// stationary mean with `ε_0 = 0`.
#[derive(Debug, Clone)]
pub struct DemandProcess {
    spec: DemandProcessSpec,
    last_demand: f64,
    last_noise: f64,
}

impl DemandProcess {
    pub fn new(spec: DemandProcessSpec) -> Self {
        let mean = spec.moments().mean;
        Self { spec, last_demand: mean, last_noise: 0.0 }
    }

    /// Starts the process and discards `burn_in` draws.
    pub fn with_burn_in(spec: DemandProcessSpec, burn_in: usize, rng: &mut RandomSource) -> Self {
        let mut p = Self::new(spec);
        for _ in 0..burn_in {
            p.next_demand(rng);
        }
        p
    }

    pub fn spec(&self) -> &DemandProcessSpec {
        &self.spec
    }

    pub fn next_demand(&mut self, rng: &mut RandomSource) -> f64 {
        let d = match self.spec {
            DemandProcessSpec::Constant { value } => value,
            DemandProcessSpec::IidUniform { lo, hi } => lo + (hi - lo) * rng.uniform(),
            DemandProcessSpec::IidNormal { mean, std_dev } => {
                mean + std_dev * rng.standard_normal()
            }
            DemandProcessSpec::Ar1 { mu, rho, noise_std, noise } => {
                let eps = noise.draw(noise_std, rng);
                self.last_noise = eps;
                mu + rho * self.last_demand + eps
            }
            DemandProcessSpec::Arma11 { mu, rho, theta, noise_std, noise } => {
                let eps = noise.draw(noise_std, rng);
                let d = mu + rho * self.last_demand + eps - theta * self.last_noise;
                self.last_noise = eps;
                d
            }
        };
        self.last_demand = d;
        d
    }
}

/// Exact moments of a bounded lead-time distribution on `{1..M}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadTimeMoments {
    pub mean: f64,
    pub variance: f64,
    /// Upper bound `M` of the support.
    pub max: u32,
    /// `P(L = M)`.
    pub p_max: f64,
}

/// Lead time in whole review periods, bounded by `M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LeadTimeRepr", into = "LeadTimeRepr")]
pub enum LeadTimeDistSpec {
    Deterministic { value: u32 },
    DiscreteUniform { min: u32, max: u32 },
    /// `probs[k-1] = P(L = k)`; `M` is `probs.len()` even when trailing
    /// entries are zero.
    Categorical { probs: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LeadTimeRepr {
    Deterministic { value: u32 },
    DiscreteUniform { min: u32, max: u32 },
    Categorical { probs: Vec<f64> },
}

impl TryFrom<LeadTimeRepr> for LeadTimeDistSpec {
    type Error = SpecError;

    fn try_from(r: LeadTimeRepr) -> Result<Self, SpecError> {
        let spec = match r {
            LeadTimeRepr::Deterministic { value } => LeadTimeDistSpec::Deterministic { value },
            LeadTimeRepr::DiscreteUniform { min, max } => {
                LeadTimeDistSpec::DiscreteUniform { min, max }
            }
            LeadTimeRepr::Categorical { probs } => LeadTimeDistSpec::Categorical { probs },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<LeadTimeDistSpec> for LeadTimeRepr {
    fn from(s: LeadTimeDistSpec) -> Self {
        match s {
            LeadTimeDistSpec::Deterministic { value } => LeadTimeRepr::Deterministic { value },
            LeadTimeDistSpec::DiscreteUniform { min, max } => {
                LeadTimeRepr::DiscreteUniform { min, max }
            }
            LeadTimeDistSpec::Categorical { probs } => LeadTimeRepr::Categorical { probs },
        }
    }
}

impl LeadTimeDistSpec {
    pub fn deterministic(value: u32) -> Result<Self, SpecError> {
        let s = LeadTimeDistSpec::Deterministic { value };
        s.validate()?;
        Ok(s)
    }

    pub fn discrete_uniform(min: u32, max: u32) -> Result<Self, SpecError> {
        let s = LeadTimeDistSpec::DiscreteUniform { min, max };
        s.validate()?;
        Ok(s)
    }

    pub fn categorical(probs: Vec<f64>) -> Result<Self, SpecError> {
        let s = LeadTimeDistSpec::Categorical { probs };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            LeadTimeDistSpec::Deterministic { value } => {
                if *value == 0 {
                    Err(SpecError::ZeroLeadTime(0))
                } else {
                    Ok(())
                }
            }
            LeadTimeDistSpec::DiscreteUniform { min, max } => {
                if *min == 0 || min > max {
                    Err(SpecError::BadLeadRange { min: *min, max: *max })
                } else {
                    Ok(())
                }
            }
            LeadTimeDistSpec::Categorical { probs } => {
                if probs.is_empty() {
                    return Err(SpecError::EmptyCategorical);
                }
                for (i, &p) in probs.iter().enumerate() {
                    if !p.is_finite() || p < 0.0 {
                        return Err(SpecError::BadProbability { index: i + 1, value: p });
                    }
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    return Err(SpecError::ProbabilitySum(sum));
                }
                Ok(())
            }
        }
    }

    /// Upper bound `M` of the support.
    pub fn max(&self) -> u32 {
        match self {
            LeadTimeDistSpec::Deterministic { value } => *value,
            LeadTimeDistSpec::DiscreteUniform { max, .. } => *max,
            LeadTimeDistSpec::Categorical { probs } => probs.len() as u32,
        }
    }

    /// `P(L = k)` for `k = 1..=M`.
    pub fn pmf(&self) -> Vec<f64> {
        let m = self.max() as usize;
        match self {
            LeadTimeDistSpec::Deterministic { value } => {
                let mut p = vec![0.0; m];
                p[*value as usize - 1] = 1.0;
                p
            }
            LeadTimeDistSpec::DiscreteUniform { min, max } => {
                let w = 1.0 / f64::from(max - min + 1);
                (1..=*max).map(|k| if k >= *min { w } else { 0.0 }).collect()
            }
            LeadTimeDistSpec::Categorical { probs } => probs.clone(),
        }
    }

    pub fn moments(&self) -> LeadTimeMoments {
        let max = self.max();
        match self {
            LeadTimeDistSpec::Deterministic { value } => LeadTimeMoments {
                mean: f64::from(*value),
                variance: 0.0,
                max,
                p_max: 1.0,
            },
            LeadTimeDistSpec::DiscreteUniform { min, max } => {
                let width = f64::from(max - min + 1);
                LeadTimeMoments {
                    mean: 0.5 * f64::from(min + max),
                    variance: (width * width - 1.0) / 12.0,
                    max: *max,
                    p_max: 1.0 / width,
                }
            }
            LeadTimeDistSpec::Categorical { probs } => {
                let mut mean = 0.0;
                let mut second = 0.0;
                for (i, p) in probs.iter().enumerate() {
                    let k = (i + 1) as f64;
                    mean += p * k;
                    second += p * k * k;
                }
                LeadTimeMoments {
                    mean,
                    variance: (second - mean * mean).max(0.0),
                    max,
                    p_max: *probs.last().expect("validated non-empty"),
                }
            }
        }
    }

    /// `(E ρ^L, E ρ^{2L})`.
    pub fn rho_power_moments(&self, rho: f64) -> (f64, f64) {
        self.pmf()
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(a, b), (i, p)| {
                let r = rho.powi(i as i32 + 1);
                (a + p * r, b + p * r * r)
            })
    }

    pub fn next_lead_time(&self, rng: &mut RandomSource) -> u32 {
        match self {
            LeadTimeDistSpec::Deterministic { value } => *value,
            LeadTimeDistSpec::DiscreteUniform { min, max } => {
                rng.int_inclusive(u64::from(*min), u64::from(*max)) as u32
            }
            LeadTimeDistSpec::Categorical { probs } => {
                let u = rng.uniform();
                let mut acc = 0.0;
                let mut last_positive = 1;
                for (i, &p) in probs.iter().enumerate() {
                    if p > 0.0 {
                        last_positive = i as u32 + 1;
                    }
                    acc += p;
                    if u < acc {
                        return i as u32 + 1;
                    }
                }
                // rounding left u above the cumulative sum
                last_positive
            }
        }
    }
}
