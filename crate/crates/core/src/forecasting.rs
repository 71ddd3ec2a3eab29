//! Predictors of demand, lead time and lead-time demand, plus tracking of
//! lead-time-demand forecast errors.
//!
//! The stateless functions (`ma_demand`, `ltd_ma`, `mmse_ar1`, ...) are the
//! formulas; [`Forecaster`] and [`ErrorTracker`] hold the per-echelon state the
//! simulator feeds one period at a time.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("insufficient history: need {needed} observations, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("window length must be >= 1")]
    ZeroWindow,
    #[error("autoregressive coefficient rho = {0} must satisfy |rho| < 1")]
    NonStationaryRho(f64),
    #[error("moving-average coefficient theta = {0} must satisfy |theta| < 1")]
    NonInvertibleTheta(f64),
    #[error("lead-time bound M must be >= 1")]
    ZeroLeadBound,
    #[error("sigma must be finite and >= 0, got {0}")]
    BadSigma(f64),
}

/// The last `k` observations in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastWindow {
    capacity: usize,
    values: VecDeque<f64>,
}

impl ForecastWindow {
    pub fn new(capacity: usize) -> Result<Self, ForecastError> {
        if capacity == 0 {
            return Err(ForecastError::ZeroWindow);
        }
        Ok(Self { capacity, values: VecDeque::with_capacity(capacity) })
    }

    /// Window pre-filled with `values`; keeps only the newest `capacity`.
    pub fn from_history(capacity: usize, values: &[f64]) -> Result<Self, ForecastError> {
        let mut w = Self::new(capacity)?;
        for &v in values {
            w.push(v);
        }
        Ok(w)
    }

    pub fn push(&mut self, value: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(value);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.values.len() == self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Mean of the `n` newest values.
    pub fn mean_of_last(&self, n: usize) -> Result<f64, ForecastError> {
        if n == 0 {
            return Err(ForecastError::ZeroWindow);
        }
        if self.values.len() < n {
            return Err(ForecastError::InsufficientHistory {
                needed: n,
                available: self.values.len(),
            });
        }
        Ok(self.values.iter().rev().take(n).sum::<f64>() / n as f64)
    }

    /// Mean over a full window; partial windows are rejected.
    pub fn mean(&self) -> Result<f64, ForecastError> {
        self.mean_of_last(self.capacity)
    }

    /// Sample standard deviation (n - 1 denominator) of the stored values.
    pub fn sample_std(&self) -> Result<f64, ForecastError> {
        let n = self.values.len();
        if n < 2 {
            return Err(ForecastError::InsufficientHistory { needed: 2, available: n });
        }
        let mean = self.values.iter().sum::<f64>() / n as f64;
        let ss: f64 = self.values.iter().map(|v| (v - mean).powi(2)).sum();
        Ok((ss / (n - 1) as f64).sqrt())
    }
}

/// `D̂_t`: mean of `D_{t-1} .. D_{t-n}`.
pub fn ma_demand(window: &ForecastWindow, n: usize) -> Result<f64, ForecastError> {
    window.mean_of_last(n)
}

/// `L̂_t`: mean of the lead times of the `m` most recent orders.
pub fn ma_lead_time(window: &ForecastWindow, m: usize) -> Result<f64, ForecastError> {
    window.mean_of_last(m)
}

/// Moving average of the `n` most recent fully realized lead-time demands.
///
/// The window must only ever receive `D^L_s` for `s <= t - M`: with lead
/// times bounded by `M`, those are the lead-time demands guaranteed to be
/// known at the start of period `t`.
pub fn ltd_ma(ltd_window: &ForecastWindow, n: usize) -> Result<f64, ForecastError> {
    ltd_window.mean_of_last(n)
}

/// Realized lead-time demand `D^L_s = D_s + ... + D_{s+L_s-1}` given the
/// demands from period `s` onward.
pub fn realized_lead_time_demand(demands_from_s: &[f64], lead: u32) -> Result<f64, ForecastError> {
    let l = lead as usize;
    if demands_from_s.len() < l {
        return Err(ForecastError::InsufficientHistory {
            needed: l,
            available: demands_from_s.len(),
        });
    }
    Ok(demands_from_s[..l].iter().sum())
}

/// Minimum-mean-squared-error forecast of `D_{t+i}` under AR(1) demand,
/// made at the start of period `t` from the last observed demand `D_{t-1}`.
pub fn mmse_ar1(last_demand: f64, mean: f64, rho: f64, horizon: u32) -> f64 {
    let r = rho.powi(horizon as i32 + 1);
    mean * (1.0 - r) + r * last_demand
}

/// `Σ_{i=0}^{L-1} D̂_{t+i}` when the one-step forecast `D̂_t` is known and
/// later horizons decay geometrically toward the mean. Covers AR(1) (with
/// `D̂_t = μ_D + ρ(D_{t-1} - μ_D)`) and ARMA(1,1).
pub fn ltd_from_one_step(one_step: f64, lead: u32, mean: f64, rho: f64) -> f64 {
    let l = f64::from(lead);
    let decay = if rho == 0.0 {
        1.0
    } else {
        (1.0 - rho.powi(lead as i32)) / (1.0 - rho)
    };
    l * mean + (one_step - mean) * decay
}

/// Lead-time-demand forecast with the realized lead time plugged in:
/// `L μ_D + (D_{t-1} - μ_D) ρ (1 - ρ^L) / (1 - ρ)`.
pub fn ltd_mmse_ar1(last_demand: f64, lead: u32, mean: f64, rho: f64) -> f64 {
    ltd_from_one_step(mmse_ar1(last_demand, mean, rho, 0), lead, mean, rho)
}

/// One-step MMSE forecast under ARMA(1,1): `μ + ρ D_{t-1} - θ ε_{t-1}` with
/// `μ = μ_D (1 - ρ)`.
pub fn mmse_arma_one_step(last_demand: f64, last_innovation: f64, mean: f64, rho: f64, theta: f64) -> f64 {
    mean * (1.0 - rho) + rho * last_demand - theta * last_innovation
}

/// `D̂^L_t = L̂_t D̂_t`.
pub fn ltd_product(lead_forecast: f64, demand_forecast: f64) -> f64 {
    lead_forecast * demand_forecast
}

/// How `σ̂_t` in the order-up-to level is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaMode {
    /// Fixed value. Under stationarity the true `σ̂_t` does not depend on `t`,
    /// so this keeps orders a function of the forecasts alone.
    Constant { value: f64 },
    /// Sample standard deviation of the last `window` realized
    /// lead-time-demand forecast errors.
    Empirical { window: usize },
}

impl Default for SigmaMode {
    fn default() -> Self {
        SigmaMode::Constant { value: 0.0 }
    }
}

impl SigmaMode {
    pub fn validate(&self) -> Result<(), ForecastError> {
        match *self {
            SigmaMode::Constant { value } if !(value.is_finite() && value >= 0.0) => {
                Err(ForecastError::BadSigma(value))
            }
            SigmaMode::Empirical { window } if window < 2 => {
                Err(ForecastError::InsufficientHistory { needed: 2, available: window })
            }
            _ => Ok(()),
        }
    }
}

/// `σ̂_t` from past forecast errors `D^L - D̂^L`.
pub fn forecast_error_sigma(errors: &ForecastWindow, mode: SigmaMode) -> Result<f64, ForecastError> {
    match mode {
        SigmaMode::Constant { value } => Ok(value),
        SigmaMode::Empirical { .. } => errors.sample_std(),
    }
}

/// Predictor of the lead-time demand `D̂^L_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForecasterSpec {
    /// Moving average of the `n` latest realized lead-time demands, lagged by
    /// the lead-time bound `max_lead` (M).
    LtdMovingAverage { n: usize, max_lead: u32 },
    /// MMSE demand forecast with the realized lead time of the order.
    MmseAr1 { mean: f64, rho: f64 },
    MmseArma { mean: f64, rho: f64, theta: f64 },
    /// `L̂_t · D̂_t` with windows `m` (lead times) and `n` (demands).
    ProductOfMas { m: usize, n: usize },
}

impl ForecasterSpec {
    pub fn validate(&self) -> Result<(), ForecastError> {
        match *self {
            ForecasterSpec::LtdMovingAverage { n, max_lead } => {
                if n == 0 {
                    Err(ForecastError::ZeroWindow)
                } else if max_lead == 0 {
                    Err(ForecastError::ZeroLeadBound)
                } else {
                    Ok(())
                }
            }
            ForecasterSpec::MmseAr1 { rho, .. } => check_rho(rho),
            ForecasterSpec::MmseArma { rho, theta, .. } => {
                check_rho(rho)?;
                if theta.abs() < 1.0 {
                    Ok(())
                } else {
                    Err(ForecastError::NonInvertibleTheta(theta))
                }
            }
            ForecasterSpec::ProductOfMas { m, n } => {
                if m == 0 || n == 0 {
                    Err(ForecastError::ZeroWindow)
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Periods of history needed before the first forecast.
    pub fn priming_periods(&self) -> usize {
        match *self {
            ForecasterSpec::LtdMovingAverage { n, max_lead } => max_lead as usize + n - 1,
            ForecasterSpec::MmseAr1 { .. } | ForecasterSpec::MmseArma { .. } => 1,
            ForecasterSpec::ProductOfMas { m, n } => m.max(n),
        }
    }
}

fn check_rho(rho: f64) -> Result<(), ForecastError> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(ForecastError::NonStationaryRho(rho))
    }
}

#[derive(Debug, Clone)]
enum State {
    LtdMa {
        n: usize,
        max_lead: usize,
        // D_{t-M} .. D_{t-1} and L_{t-M} .. L_{t-1}
        demands: VecDeque<f64>,
        leads: VecDeque<u32>,
        ltd: ForecastWindow,
    },
    Mmse {
        mean: f64,
        rho: f64,
        theta: f64,
        one_step: Option<f64>,
    },
    Product {
        m: usize,
        n: usize,
        leads: ForecastWindow,
        demands: ForecastWindow,
    },
}

/// Per-echelon forecaster fed one period at a time.
#[derive(Debug, Clone)]
pub struct Forecaster {
    state: State,
}

impl Forecaster {
    pub fn new(spec: &ForecasterSpec) -> Result<Self, ForecastError> {
        spec.validate()?;
        let state = match *spec {
            ForecasterSpec::LtdMovingAverage { n, max_lead } => State::LtdMa {
                n,
                max_lead: max_lead as usize,
                demands: VecDeque::with_capacity(max_lead as usize + 1),
                leads: VecDeque::with_capacity(max_lead as usize + 1),
                ltd: ForecastWindow::new(n)?,
            },
            ForecasterSpec::MmseAr1 { mean, rho } => {
                State::Mmse { mean, rho, theta: 0.0, one_step: None }
            }
            ForecasterSpec::MmseArma { mean, rho, theta } => {
                State::Mmse { mean, rho, theta, one_step: None }
            }
            ForecasterSpec::ProductOfMas { m, n } => State::Product {
                m,
                n,
                leads: ForecastWindow::new(m)?,
                demands: ForecastWindow::new(n)?,
            },
        };
        Ok(Self { state })
    }

    /// Feed period `t-1`: the demand observed in it and the lead time of the
    /// order placed at its start.
    pub fn observe(&mut self, demand: f64, lead: u32) {
        match &mut self.state {
            State::LtdMa { max_lead, demands, leads, ltd, .. } => {
                demands.push_back(demand);
                leads.push_back(lead);
                if demands.len() == *max_lead {
                    // the front is period s = t - M, whose lead-time demand is
                    // now fully observed because L_s <= M
                    let l = leads[0] as usize;
                    let d: f64 = demands.iter().take(l).sum();
                    ltd.push(d);
                    demands.pop_front();
                    leads.pop_front();
                }
            }
            State::Mmse { mean, rho, theta, one_step } => {
                let innovation = one_step.map_or(0.0, |f| demand - f);
                *one_step = Some(mmse_arma_one_step(demand, innovation, *mean, *rho, *theta));
            }
            State::Product { leads, demands, .. } => {
                leads.push(f64::from(lead));
                demands.push(demand);
            }
        }
    }

    /// `D̂^L_t` for the order being placed now; `lead` is its sampled lead
    /// time, used only by the MMSE forecasters. `None` until primed.
    pub fn forecast(&self, lead: u32) -> Option<f64> {
        match &self.state {
            State::LtdMa { n, ltd, .. } => ltd_ma(ltd, *n).ok(),
            State::Mmse { mean, rho, one_step, .. } => {
                one_step.map(|f| ltd_from_one_step(f, lead, *mean, *rho))
            }
            State::Product { m, n, leads, demands } => {
                let l = ma_lead_time(leads, *m).ok()?;
                let d = ma_demand(demands, *n).ok()?;
                Some(ltd_product(l, d))
            }
        }
    }
}

/// Collects realized lead-time-demand forecast errors `D^L_s - D̂^L_s` as
/// each order's lead time elapses, for the empirical `σ̂_t`.
#[derive(Debug, Clone)]
pub struct ErrorTracker {
    mode: SigmaMode,
    errors: ForecastWindow,
    // (placed_at, lead, forecast), placement order
    pending: VecDeque<(usize, u32, f64)>,
    // demands D_{first_period} .. D_{t-1}
    demands: VecDeque<f64>,
    first_period: usize,
}

impl ErrorTracker {
    pub fn new(mode: SigmaMode) -> Result<Self, ForecastError> {
        mode.validate()?;
        let window = match mode {
            SigmaMode::Constant { .. } => 2,
            SigmaMode::Empirical { window } => window,
        };
        Ok(Self {
            mode,
            errors: ForecastWindow::new(window)?,
            pending: VecDeque::new(),
            demands: VecDeque::new(),
            first_period: 0,
        })
    }

    pub fn mode(&self) -> SigmaMode {
        self.mode
    }

    pub fn record_forecast(&mut self, placed_at: usize, lead: u32, forecast: f64) {
        if matches!(self.mode, SigmaMode::Empirical { .. }) {
            self.pending.push_back((placed_at, lead, forecast));
        }
    }

    /// Feed the demand of period `t-1` (periods must arrive consecutively
    /// from 0).
    pub fn observe_demand(&mut self, demand: f64) {
        if !matches!(self.mode, SigmaMode::Empirical { .. }) {
            return;
        }
        self.demands.push_back(demand);
        let known_through = self.first_period + self.demands.len();
        let mut i = 0;
        while i < self.pending.len() {
            let (s, l, f) = self.pending[i];
            if s + l as usize <= known_through {
                let start = s - self.first_period;
                let actual: f64 = self.demands.range(start..start + l as usize).sum();
                self.errors.push(actual - f);
                self.pending.remove(i);
            } else {
                i += 1;
            }
        }
        // orders recorded later are placed at >= known_through
        let oldest_needed = self.pending.front().map_or(known_through, |p| p.0);
        while self.first_period < oldest_needed {
            self.demands.pop_front();
            self.first_period += 1;
        }
    }

    /// Current `σ̂_t`, or `None` while the empirical window is short.
    pub fn sigma(&self) -> Option<f64> {
        forecast_error_sigma(&self.errors, self.mode).ok()
    }

    pub fn errors(&self) -> &ForecastWindow {
        &self.errors
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(k: usize, xs: &[f64]) -> ForecastWindow {
        ForecastWindow::from_history(k, xs).unwrap()
    }

    #[test]
    fn ma_demand_examples() {
        assert_eq!(ma_demand(&window(3, &[2.0, 4.0, 6.0]), 3), Ok(4.0));
        assert_eq!(ma_demand(&window(5, &[1.0, 5.0, 9.0]), 1), Ok(9.0));
        assert_eq!(ma_demand(&window(2, &[10.0, 14.0]), 2), Ok(12.0));
        assert_eq!(
            ma_demand(&window(3, &[1.0, 2.0]), 3),
            Err(ForecastError::InsufficientHistory { needed: 3, available: 2 })
        );
    }

    #[test]
    fn ma_lead_time_examples() {
        assert_eq!(ma_lead_time(&window(1, &[3.0, 7.0]), 1), Ok(7.0));
        assert_eq!(ma_lead_time(&window(3, &[1.0, 2.0, 3.0]), 3), Ok(2.0));
        assert_eq!(ma_lead_time(&window(2, &[7.0, 3.0]), 2), Ok(5.0));
    }

    #[test]
    fn window_rejects_partial_fill_and_zero_capacity() {
        let w = window(4, &[1.0, 2.0]);
        assert!(w.mean().is_err());
        assert_eq!(ForecastWindow::new(0), Err(ForecastError::ZeroWindow));
        let w = window(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(w.iter().collect::<Vec<_>>(), vec![3.0, 4.0]);
    }

    #[test]
    fn ltd_ma_examples() {
        assert_eq!(ltd_ma(&window(2, &[12.0, 8.0]), 2), Ok(10.0));
        // deterministic L = 2 = M, n = 1: forecast is D^L_{t-2} = D_{t-2} + D_{t-1}
        let mut f = Forecaster::new(&ForecasterSpec::LtdMovingAverage { n: 1, max_lead: 2 }).unwrap();
        for d in [3.0, 5.0, 7.0, 11.0] {
            f.observe(d, 2);
        }
        assert_eq!(f.forecast(2), Some(7.0 + 11.0));
        // constant demand d, L = M: L * d
        let mut f = Forecaster::new(&ForecasterSpec::LtdMovingAverage { n: 1, max_lead: 4 }).unwrap();
        for _ in 0..4 {
            f.observe(6.0, 4);
        }
        assert_eq!(f.forecast(4), Some(24.0));
    }

    #[test]
    fn ltd_ma_waits_for_m_lag() {
        let mut f = Forecaster::new(&ForecasterSpec::LtdMovingAverage { n: 2, max_lead: 3 }).unwrap();
        for t in 0..4 {
            assert_eq!(f.forecast(1), None, "t = {t}");
            f.observe(1.0, 1);
        }
        assert_eq!(f.forecast(1), Some(1.0));
        assert_eq!(ForecasterSpec::LtdMovingAverage { n: 2, max_lead: 3 }.priming_periods(), 4);
    }

    #[test]
    fn mmse_examples() {
        assert_eq!(mmse_ar1(14.0, 10.0, 0.5, 0), 12.0);
        for i in 0..10 {
            assert_eq!(mmse_ar1(123.0, 10.0, 0.0, i), 10.0);
        }
        assert!((mmse_ar1(1e6, 10.0, 0.5, 60) - 10.0).abs() < 1e-9 * 1e6);
        assert!((mmse_ar1(14.0, 10.0, 0.5, 60) - 10.0).abs() < 1e-9);
        assert_eq!(ltd_mmse_ar1(99.0, 4, 10.0, 0.0), 40.0);
        assert_eq!(ltd_mmse_ar1(14.0, 2, 10.0, 0.5), 23.0);
    }

    #[test]
    fn product_examples() {
        assert_eq!(ltd_product(4.0, 5000.0), 20000.0);
        assert_eq!(ltd_product(2.5, 12.0), 30.0);
        let mut f = Forecaster::new(&ForecasterSpec::ProductOfMas { m: 1, n: 1 }).unwrap();
        f.observe(9.0, 3);
        assert_eq!(f.forecast(7), Some(27.0));
    }

    #[test]
    fn sigma_examples() {
        let w = window(4, &[1.0, -1.0]);
        assert!((forecast_error_sigma(&w, SigmaMode::Empirical { window: 4 }).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(forecast_error_sigma(&w, SigmaMode::Constant { value: 0.0 }), Ok(0.0));
        assert!(forecast_error_sigma(&window(4, &[1.0]), SigmaMode::Empirical { window: 4 }).is_err());
    }

    #[test]
    fn error_tracker_matches_hand_computation() {
        let mut tr = ErrorTracker::new(SigmaMode::Empirical { window: 10 }).unwrap();
        // order at 0 with L = 2 forecasting 10; order at 1 with L = 1 forecasting 4
        tr.record_forecast(0, 2, 10.0);
        tr.observe_demand(3.0); // D_0
        tr.record_forecast(1, 1, 4.0);
        tr.observe_demand(5.0); // D_1 -> both complete
        let errs: Vec<f64> = tr.errors().iter().collect();
        assert_eq!(errs, vec![8.0 - 10.0, 5.0 - 4.0]);
        assert!(tr.sigma().is_some());
    }

    #[test]
    fn error_tracker_out_of_order_completion() {
        let mut tr = ErrorTracker::new(SigmaMode::Empirical { window: 10 }).unwrap();
        tr.record_forecast(0, 5, 0.0);
        tr.observe_demand(1.0);
        tr.record_forecast(1, 1, 0.0);
        tr.observe_demand(2.0);
        assert_eq!(tr.errors().iter().collect::<Vec<_>>(), vec![2.0]);
        for d in [3.0, 4.0, 5.0] {
            tr.observe_demand(d);
        }
        assert_eq!(tr.errors().iter().collect::<Vec<_>>(), vec![2.0, 15.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(ForecasterSpec::ProductOfMas { m: 0, n: 1 }.validate().is_err());
        assert!(ForecasterSpec::LtdMovingAverage { n: 3, max_lead: 0 }.validate().is_err());
        assert!(ForecasterSpec::MmseAr1 { mean: 1.0, rho: -1.0 }.validate().is_err());
        assert!(ForecasterSpec::MmseArma { mean: 1.0, rho: 0.2, theta: 1.0 }.validate().is_err());
        assert!(SigmaMode::Constant { value: -1.0 }.validate().is_err());
    }

    // Brute-force LTD moving average straight from the definition, over a
    // full demand history with deterministic L = M.
    fn ltd_ma_oracle(history: &[f64], l: usize, n: usize) -> f64 {
        let t = history.len();
        (0..n)
            .map(|j| {
                let s = t - l - j;
                history[s..s + l].iter().sum::<f64>()
            })
            .sum::<f64>()
            / n as f64
    }

    proptest! {
        #[test]
        fn ltd_ma_deterministic_equals_sum_of_demand_forecasts(
            l in 1usize..8,
            n in 1usize..10,
            history in prop::collection::vec(-100.0f64..100.0, 40..60),
        ) {
            let mut f = Forecaster::new(&ForecasterSpec::LtdMovingAverage { n, max_lead: l as u32 }).unwrap();
            for &d in &history {
                f.observe(d, l as u32);
            }
            let got = f.forecast(l as u32).unwrap();
            prop_assert!((got - ltd_ma_oracle(&history, l, n)).abs() < 1e-9);
            // Σ_{j=0}^{L-1} D̂_{t-j}, each D̂ an n-window demand average
            let t = history.len();
            let chained: f64 = (0..l)
                .map(|j| history[t - j - n..t - j].iter().sum::<f64>() / n as f64)
                .sum();
            prop_assert!((got - chained).abs() < 1e-9);
        }

        #[test]
        fn mmse_closed_form_equals_horizon_sum(
            last in -50.0f64..50.0,
            mean in -20.0f64..20.0,
            rho in -0.99f64..0.99,
            lead in 1u32..12,
        ) {
            let brute: f64 = (0..lead).map(|i| mmse_ar1(last, mean, rho, i)).sum();
            prop_assert!((ltd_mmse_ar1(last, lead, mean, rho) - brute).abs() < 1e-12 * (1.0 + brute.abs()));
        }

        #[test]
        fn mmse_slope_is_rho_power(
            last in -50.0f64..50.0,
            mean in -20.0f64..20.0,
            rho in -0.99f64..0.99,
            i in 0u32..10,
        ) {
            let h = 1e-3;
            let slope = (mmse_ar1(last + h, mean, rho, i) - mmse_ar1(last - h, mean, rho, i)) / (2.0 * h);
            prop_assert!((slope - rho.powi(i as i32 + 1)).abs() < 1e-10);
        }

        #[test]
        fn moving_averages_are_translation_equivariant(
            xs in prop::collection::vec(-100.0f64..100.0, 5..20),
            c in -50.0f64..50.0,
            lead_hat in 0.5f64..7.0,
        ) {
            let n = xs.len();
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let a = ma_demand(&window(n, &xs), n).unwrap();
            let b = ma_demand(&window(n, &shifted), n).unwrap();
            prop_assert!((b - a - c).abs() < 1e-9);
            prop_assert!((ltd_product(lead_hat, b) - ltd_product(lead_hat, a) - lead_hat * c).abs() < 1e-8);
        }
    }
}
