//! Simulated bullwhip against the closed forms.

use bullwhip::analytic::{bm_deterministic_ma, bm_mmse_ar1, bm_mmse_arma, bm_ltd_ma_stochastic, bm_product_ma};
use bullwhip::forecasting::ForecasterSpec;
use bullwhip::policy::PolicyParams;
use bullwhip::simulator::{replicate, ChainConfig, EchelonConfig};
use bullwhip::stochastic::{DemandProcessSpec, LeadTimeDistSpec};

fn retailer(demand: DemandProcessSpec, lead: LeadTimeDistSpec, forecaster: ForecasterSpec, periods: usize) -> ChainConfig {
    ChainConfig {
        demand,
        echelons: vec![EchelonConfig {
            name: "retailer".into(),
            forecaster,
            lead_time: lead,
            policy: PolicyParams::default(),
        }],
        periods,
        warmup: 1000,
        seed: 2024,
        round_orders: false,
    }
}

fn simulated(cfg: &ChainConfig, reps: usize) -> f64 {
    replicate(cfg, reps).unwrap().echelons[0].pooled.bm.unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b
}

#[test]
fn deterministic_lead_time_matches_closed_form() {
    let demand = DemandProcessSpec::IidNormal { mean: 100.0, std_dev: 20.0 };
    for n in [3, 7, 12, 20] {
        let cfg = retailer(
            demand.clone(),
            LeadTimeDistSpec::Deterministic { value: 7 },
            ForecasterSpec::LtdMovingAverage { n, max_lead: 7 },
            100_000,
        );
        let sim = simulated(&cfg, 4);
        let exact = bm_deterministic_ma(7, n as u32).unwrap();
        assert!(rel(sim, exact) < 0.03, "n = {n}: {sim} vs {exact}");
    }
}

#[test]
fn ar1_with_realized_lead_time() {
    let lead = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 3 };
    for (rho, theta) in [(0.5, 0.0), (-0.6, 0.0), (0.5, 0.3), (0.7, -0.4)] {
        let demand = DemandProcessSpec::arma11(50.0, rho, theta, 10.0).unwrap();
        let mean = demand.moments().mean;
        let forecaster = if theta == 0.0 {
            ForecasterSpec::MmseAr1 { mean, rho }
        } else {
            ForecasterSpec::MmseArma { mean, rho, theta }
        };
        let cfg = retailer(demand.clone(), lead.clone(), forecaster, 200_000);
        let sim = simulated(&cfg, 4);
        let exact = if theta == 0.0 {
            bm_mmse_ar1(&lead, rho, demand.moments()).unwrap()
        } else {
            bm_mmse_arma(&lead, rho, theta, demand.moments()).unwrap()
        };
        assert!(rel(sim, exact) < 0.05, "rho = {rho}, theta = {theta}: {sim} vs {exact}");
    }
}

#[test]
fn stochastic_lead_time_ltd_ma_spot_checks() {
    let lead = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 5 };
    let demand = DemandProcessSpec::IidNormal { mean: 100.0, std_dev: 30.0 };
    for n in [5, 9] {
        let cfg = retailer(demand.clone(), lead.clone(), ForecasterSpec::LtdMovingAverage { n, max_lead: 5 }, 200_000);
        let sim = simulated(&cfg, 4);
        let exact = bm_ltd_ma_stochastic(&lead, n as u32, demand.moments()).unwrap();
        assert!(rel(sim, exact) < 0.05, "n = {n}: {sim} vs {exact}");
    }
}

#[test]
fn product_of_moving_averages_spot_checks() {
    let lead = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 7 };
    let lm = lead.moments();
    let demand = DemandProcessSpec::IidUniform { lo: 4500.0, hi: 5500.0 };
    for (m, n) in [(1, 1), (3, 6), (10, 10)] {
        let cfg = retailer(demand.clone(), lead.clone(), ForecasterSpec::ProductOfMas { m, n }, 100_000);
        let sim = simulated(&cfg, 4);
        let exact = bm_product_ma(m as u32, n as u32, lm.mean, lm.variance, demand.moments()).unwrap();
        assert!(rel(sim, exact) < 0.05, "({m},{n}): {sim} vs {exact}");
    }
}
