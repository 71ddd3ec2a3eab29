//! Order-up-to replenishment.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::forecasting::SigmaMode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("unit costs must be positive and finite, got backorder = {backorder}, holding = {holding}")]
    NonPositiveCost { backorder: f64, holding: f64 },
    #[error("safety factor z must be finite, got {0}")]
    BadZ(f64),
}

/// `S_t = D̂^L_t + z σ̂_t`.
pub fn order_up_to_level(ltd_forecast: f64, z: f64, sigma: f64) -> f64 {
    ltd_forecast + z * sigma
}

/// `q_t = S_t - S_{t-1} + D_{t-1}`. Negative values are returns.
pub fn place_order(target: f64, previous_target: f64, previous_demand: f64) -> f64 {
    target - previous_target + previous_demand
}

/// Safety factor from unit backorder cost `p` and holding cost `h` as
/// `Φ(p / (p + h))`.
///
/// Note that this evaluates the normal CDF at the critical ratio, so the
/// result lies in `(0.5, 0.85)`; the newsvendor quantile would be
/// `Φ⁻¹(p / (p + h))`. Pass `z` directly when that is what is wanted.
pub fn z_from_service(backorder: f64, holding: f64) -> Result<f64, PolicyError> {
    if !(backorder.is_finite() && holding.is_finite() && backorder > 0.0 && holding > 0.0) {
        return Err(PolicyError::NonPositiveCost { backorder, holding });
    }
    let std = Normal::standard();
    Ok(std.cdf(backorder / (backorder + holding)))
}

/// Policy parameters of one echelon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub z: f64,
    pub sigma: SigmaMode,
}

impl Default for PolicyParams {
    fn default() -> Self {
        Self { z: 0.0, sigma: SigmaMode::default() }
    }
}

/// Carries `S_{t-1}` between periods.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderUpToState {
    params: PolicyParams,
    // (D̂^L_{t-1}, σ̂_{t-1})
    previous: Option<(f64, f64)>,
}

impl OrderUpToState {
    pub fn new(params: PolicyParams) -> Result<Self, PolicyError> {
        if !params.z.is_finite() {
            return Err(PolicyError::BadZ(params.z));
        }
        Ok(Self { params, previous: None })
    }

    pub fn params(&self) -> PolicyParams {
        self.params
    }

    pub fn previous_target(&self) -> Option<f64> {
        self.previous
            .map(|(f, s)| order_up_to_level(f, self.params.z, s))
    }

    /// Sets `S_t` and returns the order. The first target has no
    /// predecessor, so that order raises `inventory_position` to the target
    /// instead.
    ///
    /// `S_t - S_{t-1}` is evaluated as `(D̂^L_t - D̂^L_{t-1}) + z (σ̂_t - σ̂_{t-1})`
    /// so a constant `σ̂` removes `z` from the order exactly.
    pub fn step(&mut self, ltd_forecast: f64, sigma: f64, previous_demand: f64, inventory_position: f64) -> f64 {
        let z = self.params.z;
        let q = match self.previous {
            Some((f_prev, s_prev)) => {
                (ltd_forecast - f_prev) + z * (sigma - s_prev) + previous_demand
            }
            None => order_up_to_level(ltd_forecast, z, sigma) - inventory_position,
        };
        self.previous = Some((ltd_forecast, sigma));
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn level_examples() {
        assert_eq!(order_up_to_level(100.0, 0.0, 10.0), 100.0);
        assert!((order_up_to_level(100.0, 1.645, 10.0) - 116.45).abs() < 1e-12);
        assert_eq!(order_up_to_level(42.0, 3.0, 0.0), 42.0);
    }

    #[test]
    fn order_examples() {
        assert_eq!(place_order(100.0, 100.0, 30.0), 30.0);
        assert_eq!(place_order(120.0, 100.0, 30.0), 50.0);
        assert_eq!(place_order(90.0, 100.0, 5.0), -5.0);
    }

    #[test]
    fn z_from_service_examples() {
        // Φ(0.5) and Φ(0.75) from standard tables
        assert!((z_from_service(1.0, 1.0).unwrap() - 0.691_462).abs() < 1e-6);
        assert!((z_from_service(3.0, 1.0).unwrap() - 0.773_373).abs() < 1e-6);
        assert!((z_from_service(1e-12, 1.0).unwrap() - 0.5).abs() < 1e-9);
        assert!(z_from_service(0.0, 1.0).is_err());
        assert!(z_from_service(1.0, -2.0).is_err());
    }

    #[test]
    fn first_step_rebalances_then_follows_targets() {
        let mut st = OrderUpToState::new(PolicyParams { z: 0.0, ..Default::default() }).unwrap();
        assert_eq!(st.step(50.0, 0.0, 10.0, 20.0), 30.0);
        assert_eq!(st.step(60.0, 0.0, 10.0, f64::NAN), 20.0);
        assert_eq!(st.previous_target(), Some(60.0));
    }

    proptest! {
        #[test]
        fn orders_telescope(
            forecasts in prop::collection::vec(0.0f64..1000.0, 2..50),
            demands in prop::collection::vec(0.0f64..100.0, 50),
            z in -3.0f64..3.0,
            sigma in 0.0f64..20.0,
        ) {
            let mut st = OrderUpToState::new(PolicyParams { z, ..Default::default() }).unwrap();
            st.step(forecasts[0], sigma, 0.0, 0.0);
            let s0 = order_up_to_level(forecasts[0], z, sigma);
            let mut total = 0.0;
            for (i, f) in forecasts.iter().enumerate().skip(1) {
                total += st.step(*f, sigma, demands[i - 1], f64::NAN);
            }
            let sb = order_up_to_level(*forecasts.last().unwrap(), z, sigma);
            let demand_sum: f64 = demands[..forecasts.len() - 1].iter().sum();
            prop_assert!((total - (sb - s0 + demand_sum)).abs() < 1e-9);
        }

        #[test]
        fn z_cancels_with_constant_sigma(
            forecasts in prop::collection::vec(0.0f64..1000.0, 2..30),
            d in 0.0f64..100.0,
            z1 in -3.0f64..3.0,
            z2 in -3.0f64..3.0,
        ) {
            let mut a = OrderUpToState::new(PolicyParams { z: z1, ..Default::default() }).unwrap();
            let mut b = OrderUpToState::new(PolicyParams { z: z2, ..Default::default() }).unwrap();
            a.step(forecasts[0], 7.0, d, 0.0);
            b.step(forecasts[0], 7.0, d, 0.0);
            for f in &forecasts[1..] {
                let qa = a.step(*f, 7.0, d, 0.0);
                let qb = b.step(*f, 7.0, d, 0.0);
                prop_assert_eq!(qa.to_bits(), qb.to_bits());
            }
        }
    }
}
