//! Is a lead-time log i.i.d.? Order-log ingestion, per-day averages,
//! correlograms and a pairwise two-sample Kolmogorov–Smirnov protocol.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::stochastic::RandomSource;

#[derive(Debug, Error)]
pub enum LtStatsError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("the order log has no records")]
    Empty,
    #[error("cannot read order log: {0}")]
    Io(#[from] std::io::Error),
    #[error("series is constant")]
    ConstantSeries,
    #[error("series of length {len} is too short for {max_lag} lags")]
    SeriesTooShort { len: usize, max_lag: usize },
    #[error("Durbin-Levinson recursion is singular at lag {0}")]
    Singular(usize),
    #[error("two-sample test needs non-empty samples")]
    EmptySample,
    #[error("sample size {size} needs {needed} observations for a disjoint pair, have {available}")]
    InsufficientData { size: usize, needed: usize, available: usize },
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("protocol needs at least one sample size >= 1 and one pair")]
    EmptyProtocol,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderRecord {
    pub order_date: NaiveDate,
    pub delivery_date: NaiveDate,
    pub quantity: f64,
}

impl OrderRecord {
    /// Whole days from order to delivery; same-day delivery is 0.
    pub fn lead_time_days(&self) -> i64 {
        (self.delivery_date - self.order_date).num_days()
    }
}

#[derive(Deserialize)]
struct Row {
    order_date: String,
    delivery_date: String,
    quantity: f64,
}

fn parse_date(s: &str, line: u64, field: &str) -> Result<NaiveDate, LtStatsError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| LtStatsError::Parse {
        line,
        message: format!("{field} `{s}`: {e}"),
    })
}

/// Reads `order_date,delivery_date,quantity` rows with ISO dates.
pub fn load_orders<R: Read>(source: R) -> Result<Vec<OrderRecord>, LtStatsError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = reader.headers().map_err(|e| LtStatsError::Parse { line: 1, message: e.to_string() })?;
    if headers.is_empty() {
        return Err(LtStatsError::Empty);
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| LtStatsError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = out.len() as u64 + 2;
        let order_date = parse_date(&row.order_date, line, "order_date")?;
        let delivery_date = parse_date(&row.delivery_date, line, "delivery_date")?;
        if delivery_date < order_date {
            return Err(LtStatsError::Parse {
                line,
                message: format!("delivery {delivery_date} precedes order {order_date}"),
            });
        }
        if !row.quantity.is_finite() {
            return Err(LtStatsError::Parse { line, message: "quantity is not a finite number".into() });
        }
        out.push(OrderRecord { order_date, delivery_date, quantity: row.quantity });
    }
    if out.is_empty() {
        return Err(LtStatsError::Empty);
    }
    Ok(out)
}

pub fn load_orders_path(path: &Path) -> Result<Vec<OrderRecord>, LtStatsError> {
    load_orders(std::fs::File::open(path)?)
}

/// Mean lead time of the orders placed on each day, in date order. Days
/// without orders are left out.
pub fn daily_average_lead_time(records: &[OrderRecord]) -> Vec<(NaiveDate, f64)> {
    let mut days: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for r in records {
        let e = days.entry(r.order_date).or_default();
        e.0 += r.lead_time_days() as f64;
        e.1 += 1;
    }
    days.into_iter().map(|(d, (sum, k))| (d, sum / k as f64)).collect()
}

/// Sample (partial) autocorrelations at lags `1..=max_lag` and the
/// `±1.96/√N` white-noise band.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlogram {
    pub coefficients: Vec<f64>,
    pub band: f64,
}

impl Correlogram {
    pub fn fraction_outside(&self) -> f64 {
        if self.coefficients.is_empty() {
            return 0.0;
        }
        let out = self.coefficients.iter().filter(|c| c.abs() > self.band).count();
        out as f64 / self.coefficients.len() as f64
    }
}

fn band(n: usize) -> f64 {
    1.96 / (n as f64).sqrt()
}

/// `r_k = Σ (x_t - x̄)(x_{t+k} - x̄) / Σ (x_t - x̄)²`.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Correlogram, LtStatsError> {
    let n = series.len();
    if n <= max_lag + 1 {
        return Err(LtStatsError::SeriesTooShort { len: n, max_lag });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let dev: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let denom: f64 = dev.iter().map(|d| d * d).sum();
    if !(denom > 0.0) {
        return Err(LtStatsError::ConstantSeries);
    }
    let coefficients = (1..=max_lag)
        .map(|k| dev.iter().zip(&dev[k..]).map(|(a, b)| a * b).sum::<f64>() / denom)
        .collect();
    Ok(Correlogram { coefficients, band: band(n) })
}

/// Partial autocorrelations by Durbin–Levinson on the sample ACF.
pub fn pacf(series: &[f64], max_lag: usize) -> Result<Correlogram, LtStatsError> {
    let r = acf(series, max_lag)?;
    let rho = |k: usize| if k == 0 { 1.0 } else { r.coefficients[k - 1] };
    let mut phi: Vec<f64> = Vec::with_capacity(max_lag);
    let mut out = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let num = rho(k) - (1..k).map(|j| phi[j - 1] * rho(k - j)).sum::<f64>();
        let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho(j)).sum::<f64>();
        if den.abs() < 1e-12 {
            return Err(LtStatsError::Singular(k));
        }
        let pkk = num / den;
        let next: Vec<f64> = (1..k).map(|j| phi[j - 1] - pkk * phi[k - j - 1]).chain([pkk]).collect();
        phi = next;
        out.push(pkk);
    }
    Ok(Correlogram { coefficients: out, band: r.band })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form converges fast for small λ
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=6).map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp()).sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test. `D` is taken over the pooled support
/// with right-continuous empirical CDFs, so tied values move both CDFs at
/// once; the asymptotic p-value is then conservative.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, LtStatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(LtStatsError::EmptySample);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(KsResult { statistic: d, p_value: kolmogorov_survival(ne.sqrt() * d) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsProtocolConfig {
    pub sizes: Vec<usize>,
    pub pairs: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl KsProtocolConfig {
    pub fn validate(&self, available: usize) -> Result<(), LtStatsError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(LtStatsError::BadAlpha(self.alpha));
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) || self.pairs == 0 {
            return Err(LtStatsError::EmptyProtocol);
        }
        for &size in &self.sizes {
            if 2 * size > available {
                return Err(LtStatsError::InsufficientData { size, needed: 2 * size, available });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsPassRatio {
    pub size: usize,
    pub pairs: usize,
    /// Fraction of pairs with `p >= α`.
    pub pass_ratio: f64,
}

/// Start offsets of two disjoint length-`size` blocks of `0..len`, uniform
/// over all such placements.
fn disjoint_blocks(len: usize, size: usize, rng: &mut RandomSource) -> (usize, usize) {
    let free = (len - 2 * size) as u64;
    // choose 2 of the free + 2 slots; the blocks sit at the chosen slots
    let x = rng.int_inclusive(0, free + 1);
    let mut y = rng.int_inclusive(0, free);
    if y >= x {
        y += 1;
    }
    let (lo, hi) = (x.min(y) as usize, x.max(y) as usize);
    (lo, hi - 1 + size)
}

/// For each sample size, `pairs` comparisons of two disjoint contiguous
/// blocks of the series. Contiguous blocks keep the protocol sensitive to
/// drift and regime changes, which random subsamples would mix away.
pub fn pairwise_ks_ratio(lead_times: &[f64], cfg: &KsProtocolConfig) -> Result<Vec<KsPassRatio>, LtStatsError> {
    cfg.validate(lead_times.len())?;
    cfg.sizes
        .iter()
        .map(|&size| {
            let passed = (0..cfg.pairs)
                .into_par_iter()
                .map(|p| {
                    let mut rng = RandomSource::lane(cfg.seed, size as u64, p as u64);
                    let (a, b) = disjoint_blocks(lead_times.len(), size, &mut rng);
                    ks_two_sample(&lead_times[a..a + size], &lead_times[b..b + size])
                        .map(|r| r.p_value >= cfg.alpha)
                })
                .collect::<Result<Vec<bool>, _>>()?
                .into_iter()
                .filter(|&ok| ok)
                .count();
            Ok(KsPassRatio { size, pairs: cfg.pairs, pass_ratio: passed as f64 / cfg.pairs as f64 })
        })
        .collect()
}

/// Thresholds of the i.i.d. verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictThresholds {
    /// Largest tolerated fraction of ACF or PACF lags outside the band.
    pub max_outside_fraction: f64,
    /// Smallest tolerated KS pass ratio at any sample size.
    pub min_pass_ratio: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        Self { max_outside_fraction: 0.1, min_pass_ratio: 0.85 }
    }
}

pub const IID_VERDICT: &str = "consistent with i.i.d.";

/// One-line summary: [`IID_VERDICT`] or the list of failed checks.
pub fn iid_verdict(acf: &Correlogram, pacf: &Correlogram, ks: &[KsPassRatio], t: VerdictThresholds) -> String {
    let mut flags = Vec::new();
    let a = acf.fraction_outside();
    if a > t.max_outside_fraction {
        flags.push(format!("autocorrelation: {:.1}% of ACF lags outside the band", 100.0 * a));
    }
    let p = pacf.fraction_outside();
    if p > t.max_outside_fraction {
        flags.push(format!("autocorrelation: {:.1}% of PACF lags outside the band", 100.0 * p));
    }
    for r in ks.iter().filter(|r| r.pass_ratio < t.min_pass_ratio) {
        flags.push(format!("distribution shift: KS pass ratio {:.3} at size {}", r.pass_ratio, r.size));
    }
    if flags.is_empty() {
        IID_VERDICT.to_owned()
    } else {
        format!("not i.i.d.: {}", flags.join("; "))
    }
}

/// Lead-time pattern of a synthetic order log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticLeadTimes {
    /// Independent `N(mean, sd²)` rounded to whole days, floored at 0.
    Iid { mean: f64, std_dev: f64 },
    /// As `Iid`, with the mean switching to `after` halfway through.
    RegimeShift { before: f64, after: f64, std_dev: f64 },
    /// Day effect following an AR(1) with coefficient `rho` and stationary
    /// standard deviation `std_dev`; each order adds `order_noise`.
    Ar1 { mean: f64, rho: f64, std_dev: f64, order_noise: f64 },
}

/// Order log over `work_days` consecutive weekdays from `start`, with a
/// Poisson number of orders per day.
pub fn synthetic_order_log(
    pattern: SyntheticLeadTimes,
    start: NaiveDate,
    work_days: usize,
    orders_per_day: f64,
    seed: u64,
) -> Vec<OrderRecord> {
    let mut rng = RandomSource::new(seed);
    let poisson = Poisson::new(orders_per_day).expect("orders_per_day must be positive");
    let mut day = start;
    let mut state = 0.0;
    let mut out = Vec::new();
    for d in 0..work_days {
        while matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            day = day + Days::new(1);
        }
        let (mean, sd, day_effect) = match pattern {
            SyntheticLeadTimes::Iid { mean, std_dev } => (mean, std_dev, 0.0),
            SyntheticLeadTimes::RegimeShift { before, after, std_dev } => {
                (if d < work_days / 2 { before } else { after }, std_dev, 0.0)
            }
            SyntheticLeadTimes::Ar1 { mean, rho, std_dev, order_noise } => {
                let innovation = std_dev * (1.0 - rho * rho).sqrt();
                state = if d == 0 { std_dev * rng.standard_normal() } else { rho * state + innovation * rng.standard_normal() };
                (mean, order_noise, state)
            }
        };
        let k = poisson.sample(rng.rng_mut()) as usize;
        for _ in 0..k {
            let lead = (mean + day_effect + sd * rng.standard_normal()).round().max(0.0);
            out.push(OrderRecord {
                order_date: day,
                delivery_date: day + Days::new(lead as u64),
                quantity: rng.int_inclusive(1, 100) as f64,
            });
        }
        day = day + Days::new(1);
    }
    out
}

/// Writes an order log in the format [`load_orders`] reads.
pub fn write_orders<W: std::io::Write>(records: &[OrderRecord], sink: W) -> Result<(), LtStatsError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["order_date", "delivery_date", "quantity"])
        .map_err(|e| LtStatsError::Io(e.into()))?;
    for r in records {
        w.write_record([r.order_date.to_string(), r.delivery_date.to_string(), format!("{}", r.quantity)])
            .map_err(|e| LtStatsError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
