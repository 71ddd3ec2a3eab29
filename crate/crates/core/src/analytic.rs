//! Closed-form bullwhip measures `BM = Var q / Var D` for order-up-to
//! retailers under the forecasting schemes in [`crate::forecasting`], and the
//! reference tables built from them.

use std::fmt::Write as _;

use thiserror::Error;

use crate::stochastic::{DemandMoments, LeadTimeDistSpec, LeadTimeMoments};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("window length must be >= 1")]
    ZeroWindow,
    #[error("lead time must be >= 1")]
    ZeroLeadTime,
    #[error("not supported: closed form needs n >= M, got n = {n}, M = {max_lead}")]
    NotSupported { n: u32, max_lead: u32 },
    #[error("demand variance must be positive and finite, got {0}")]
    DegenerateDemand(f64),
    #[error("lead-time moments invalid: mean = {mean}, variance = {variance}")]
    BadLeadMoments { mean: f64, variance: f64 },
    #[error("autoregressive coefficient rho = {0} must satisfy |rho| < 1")]
    NonStationaryRho(f64),
    #[error("moving-average coefficient theta = {0} must satisfy |theta| < 1")]
    NonInvertibleTheta(f64),
}

fn check_demand(d: DemandMoments) -> Result<(), AnalyticError> {
    if d.variance.is_finite() && d.variance > 0.0 && d.mean.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::DegenerateDemand(d.variance))
    }
}

fn check_rho(rho: f64) -> Result<(), AnalyticError> {
    if rho.is_finite() && rho.abs() < 1.0 {
        Ok(())
    } else {
        Err(AnalyticError::NonStationaryRho(rho))
    }
}

/// The lead-time term `2 μ_D² σ_L² / σ_D²` shared by every measure.
fn lead_variance_term(lead_variance: f64, demand: DemandMoments) -> f64 {
    2.0 * demand.mean * demand.mean * lead_variance / demand.variance
}

/// Deterministic lead time `L`, moving-average lead-time-demand forecast
/// with window `n`, i.i.d. demand.
pub fn bm_deterministic_ma(lead: u32, n: u32) -> Result<f64, AnalyticError> {
    if lead == 0 {
        return Err(AnalyticError::ZeroLeadTime);
    }
    if n == 0 {
        return Err(AnalyticError::ZeroWindow);
    }
    let (l, n) = (f64::from(lead), f64::from(n));
    Ok(if l < n {
        1.0 + 2.0 / n + 2.0 * l / (n * n)
    } else {
        1.0 + 4.0 / n
    })
}

/// i.i.d. lead times bounded by `M`, lead-time demands forecast by the
/// `M`-lagged moving average of window `n >= M`, i.i.d. demand:
///
/// `1 + 2 p_M / n + 2 μ_L / n² + 2 μ_D² σ_L² / (σ_D² n²)`
pub fn bm_ltd_ma_stochastic(lead: &LeadTimeDistSpec, n: u32, demand: DemandMoments) -> Result<f64, AnalyticError> {
    bm_ltd_ma_from_moments(lead.moments(), n, demand)
}

/// As [`bm_ltd_ma_stochastic`], from lead-time moments directly.
pub fn bm_ltd_ma_from_moments(lead: LeadTimeMoments, n: u32, demand: DemandMoments) -> Result<f64, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroWindow);
    }
    if n < lead.max {
        return Err(AnalyticError::NotSupported { n, max_lead: lead.max });
    }
    if !(lead.mean.is_finite() && lead.variance.is_finite() && lead.variance >= 0.0) {
        return Err(AnalyticError::BadLeadMoments { mean: lead.mean, variance: lead.variance });
    }
    check_demand(demand)?;
    let n = f64::from(n);
    Ok(1.0
        + 2.0 * lead.p_max / n
        + 2.0 * lead.mean / (n * n)
        + lead_variance_term(lead.variance, demand) / (n * n))
}

/// AR(1) demand with MMSE forecasts and the realized lead time plugged into
/// the lead-time-demand forecast.
pub fn bm_mmse_ar1(lead: &LeadTimeDistSpec, rho: f64, demand: DemandMoments) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    check_demand(demand)?;
    let (e1, e2) = lead.rho_power_moments(rho);
    let core = (1.0 - rho * rho) * (1.0 - 2.0 * rho * e1) + 2.0 * rho * rho * e2
        - 2.0 * rho.powi(3) * e1 * e1;
    Ok(core / (1.0 - rho).powi(2) + lead_variance_term(lead.moments().variance, demand))
}

/// ARMA(1,1) demand `D_t = μ + ρ D_{t-1} + ε_t - θ ε_{t-1}` with MMSE
/// forecasts, realized lead time plugged in.
pub fn bm_mmse_arma(lead: &LeadTimeDistSpec, rho: f64, theta: f64, demand: DemandMoments) -> Result<f64, AnalyticError> {
    check_rho(rho)?;
    if !(theta.is_finite() && theta.abs() < 1.0) {
        return Err(AnalyticError::NonInvertibleTheta(theta));
    }
    check_demand(demand)?;
    let (e1, e2) = lead.rho_power_moments(rho);
    let num = (1.0 - rho * rho) * (1.0 - theta) * (1.0 - theta + 2.0 * (theta - rho) * e1)
        + 2.0 * (rho - theta).powi(2) * (e2 - rho * e1 * e1);
    let den = (1.0 - rho).powi(2) * (1.0 + theta * theta - 2.0 * rho * theta);
    Ok(num / den + lead_variance_term(lead.moments().variance, demand))
}

/// Lead times and demands forecast separately by moving averages of window
/// `m` and `n`, `D̂^L = L̂ D̂`, i.i.d. lead times and demands:
///
/// `2σ_L²(m+n-1)/(m²n²) + 2μ_D²σ_L²/(σ_D²m²) + 2μ_L²/n² + 2μ_L/n + 1`
pub fn bm_product_ma(
    m: u32,
    n: u32,
    lead_mean: f64,
    lead_variance: f64,
    demand: DemandMoments,
) -> Result<f64, AnalyticError> {
    if m == 0 || n == 0 {
        return Err(AnalyticError::ZeroWindow);
    }
    if !(lead_mean.is_finite() && lead_variance.is_finite() && lead_variance >= 0.0) {
        return Err(AnalyticError::BadLeadMoments { mean: lead_mean, variance: lead_variance });
    }
    check_demand(demand)?;
    let (m, n) = (f64::from(m), f64::from(n));
    Ok(2.0 * lead_variance * (m + n - 1.0) / (m * m * n * n)
        + lead_variance_term(lead_variance, demand) / (m * m)
        + 2.0 * lead_mean * lead_mean / (n * n)
        + 2.0 * lead_mean / n
        + 1.0)
}

/// How a table's cells are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFormat {
    /// Truncated (not rounded) to three decimals.
    Truncated3,
    /// Truncated to five significant digits.
    Significant5,
}

impl CellFormat {
    pub fn format(self, x: f64) -> String {
        match self {
            CellFormat::Truncated3 => truncate_decimals(x, 3),
            CellFormat::Significant5 => truncate_significant(x, 5),
        }
    }
}

/// `x` truncated toward zero to `digits` decimals. A 1e-9 guard absorbs
/// representation error such as `1.16 * 1000 = 1159.999...`.
pub fn truncate_decimals(x: f64, digits: u32) -> String {
    let scale = 10f64.powi(digits as i32);
    let scaled = (x.abs() * scale + 1e-9).floor() as u64;
    let p = 10u64.pow(digits);
    let sign = if x < 0.0 && scaled > 0 { "-" } else { "" };
    if digits == 0 {
        return format!("{sign}{scaled}");
    }
    format!("{sign}{}.{:0width$}", scaled / p, scaled % p, width = digits as usize)
}

/// `x` truncated to `digits` significant digits in fixed notation.
pub fn truncate_significant(x: f64, digits: u32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    truncate_decimals(x, (digits as i32 - magnitude).max(0) as u32)
}

/// `x` rounded to `digits` significant digits in fixed notation.
pub fn significant(x: f64, digits: u32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32 + 1;
    let decimals = (digits as i32 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

/// A bullwhip table: one labelled row per window value.
#[derive(Debug, Clone, PartialEq)]
pub struct BmTable {
    pub id: u8,
    pub title: String,
    /// Name of the row-label column (`n` or `m`).
    pub row_label: String,
    pub columns: Vec<String>,
    pub rows: Vec<(u32, Vec<f64>)>,
    pub format: CellFormat,
}

impl BmTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.row_label);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (label, values) in &self.rows {
            let _ = write!(out, "{label}");
            for v in values {
                out.push(',');
                out.push_str(&self.format.format(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn cell(&self, row: u32, column: usize) -> Option<f64> {
        self.rows.iter().find(|(l, _)| *l == row).and_then(|(_, v)| v.get(column).copied())
    }
}

/// Table identifiers accepted by [`bullwhip_table`].
pub const TABLE_IDS: [u8; 3] = [2, 3, 6];

/// Windows of the `m × n` grid used by table 6.
pub const MN_GRID_M: [u32; 5] = [1, 3, 6, 10, 20];
pub const MN_GRID_N: [u32; 5] = [1, 2, 6, 10, 20];

/// Table 2: lead-time-demand moving average, `M = 3`, `σ_D/μ_D = 0.5`,
/// uniform lead times on {1,2,3} versus {1,2} (so `p_M = 0`).
fn ltd_ma_table_m3() -> BmTable {
    let demand = DemandMoments::from_cv(1.0, 0.5);
    let with_pm = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 3 };
    let without_pm = LeadTimeDistSpec::Categorical { probs: vec![0.5, 0.5, 0.0] };
    BmTable {
        id: 2,
        title: "BM vs n, M = 3, sigma_D/mu_D = 0.5".into(),
        row_label: "n".into(),
        columns: vec!["p_max_positive".into(), "p_max_zero".into()],
        rows: (3..=15)
            .map(|n| {
                let a = bm_ltd_ma_stochastic(&with_pm, n, demand).expect("n >= M");
                let b = bm_ltd_ma_stochastic(&without_pm, n, demand).expect("n >= M");
                (n, vec![a, b])
            })
            .collect(),
        format: CellFormat::Truncated3,
    }
}

/// Lead-time moments of the `p_M = 0` column of table 3. The variance is
/// the published 3.916, not the 35/12 of a uniform law on {1..6}; the
/// published column is only reproduced with the former.
pub const TABLE3_ZERO_PMAX_MOMENTS: LeadTimeMoments =
    LeadTimeMoments { mean: 3.5, variance: 3.916, max: 7, p_max: 0.0 };

/// Table 3: as table 2 with `M = 7`.
fn ltd_ma_table_m7() -> BmTable {
    let demand = DemandMoments::from_cv(1.0, 0.5);
    let with_pm = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 7 };
    BmTable {
        id: 3,
        title: "BM vs n, M = 7, sigma_D/mu_D = 0.5".into(),
        row_label: "n".into(),
        columns: vec!["p_max_positive".into(), "p_max_zero".into()],
        rows: (7..=18)
            .map(|n| {
                let a = bm_ltd_ma_stochastic(&with_pm, n, demand).expect("n >= M");
                let b = bm_ltd_ma_from_moments(TABLE3_ZERO_PMAX_MOMENTS, n, demand).expect("n >= M");
                (n, vec![a, b])
            })
            .collect(),
        format: CellFormat::Truncated3,
    }
}

/// Moments behind table 6: uniform lead times on {1..7}, demand uniform on
/// (4500, 5500).
pub fn mn_table_inputs() -> (LeadTimeMoments, DemandMoments) {
    let lead = LeadTimeDistSpec::DiscreteUniform { min: 1, max: 7 }.moments();
    (lead, DemandMoments::new(5000.0, 1e6 / 12.0))
}

/// Table 6: separate moving averages of lead times (`m`, rows) and demands
/// (`n`, columns).
fn mn_table() -> BmTable {
    let (lead, demand) = mn_table_inputs();
    BmTable {
        id: 6,
        title: "BM on the m x n grid, L ~ U{1..7}, D ~ U(4500, 5500)".into(),
        row_label: "m".into(),
        columns: MN_GRID_N.iter().map(|n| format!("n={n}")).collect(),
        rows: MN_GRID_M
            .iter()
            .map(|&m| {
                let row = MN_GRID_N
                    .iter()
                    .map(|&n| bm_product_ma(m, n, lead.mean, lead.variance, demand).expect("valid inputs"))
                    .collect();
                (m, row)
            })
            .collect(),
        format: CellFormat::Significant5,
    }
}

pub fn bullwhip_table(id: u8) -> Option<BmTable> {
    match id {
        2 => Some(ltd_ma_table_m3()),
        3 => Some(ltd_ma_table_m7()),
        6 => Some(mn_table()),
        _ => None,
    }
}

pub fn bullwhip_tables() -> Vec<BmTable> {
    TABLE_IDS.iter().filter_map(|&id| bullwhip_table(id)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv_half() -> DemandMoments {
        DemandMoments::from_cv(1.0, 0.5)
    }

    #[test]
    fn deterministic_examples() {
        assert!((bm_deterministic_ma(7, 7).unwrap() - (1.0 + 4.0 / 7.0)).abs() < 1e-15);
        assert!((bm_deterministic_ma(7, 14).unwrap() - (1.0 + 2.0 / 14.0 + 14.0 / 196.0)).abs() < 1e-15);
        assert!((bm_deterministic_ma(7, 1_000_000).unwrap() - 1.0).abs() < 1e-5);
        assert_eq!(bm_deterministic_ma(0, 3), Err(AnalyticError::ZeroLeadTime));
        assert_eq!(bm_deterministic_ma(3, 0), Err(AnalyticError::ZeroWindow));
    }

    #[test]
    fn no_jump_at_n_equals_l() {
        // both branches agree at n = L
        for l in 1..20u32 {
            let n = f64::from(l);
            let lower = 1.0 + 2.0 / n + 2.0 * n / (n * n);
            assert!((bm_deterministic_ma(l, l).unwrap() - lower).abs() < 1e-14);
        }
    }

    #[test]
    fn stochastic_ma_examples() {
        let u3 = LeadTimeDistSpec::discrete_uniform(1, 3).unwrap();
        assert_eq!(truncate_decimals(bm_ltd_ma_stochastic(&u3, 3, cv_half()).unwrap(), 3), "2.259");
        let two_of_three = LeadTimeDistSpec::categorical(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(truncate_decimals(bm_ltd_ma_stochastic(&two_of_three, 3, cv_half()).unwrap(), 3), "1.555");
        let u7 = LeadTimeDistSpec::discrete_uniform(1, 7).unwrap();
        assert_eq!(truncate_decimals(bm_ltd_ma_stochastic(&u7, 7, cv_half()).unwrap(), 3), "1.857");
        assert_eq!(
            bm_ltd_ma_stochastic(&u3, 2, cv_half()),
            Err(AnalyticError::NotSupported { n: 2, max_lead: 3 })
        );
        assert!(bm_ltd_ma_stochastic(&u3, 3, DemandMoments::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn mmse_ar1_examples() {
        let det = LeadTimeDistSpec::deterministic(4).unwrap();
        assert_eq!(bm_mmse_ar1(&det, 0.0, cv_half()).unwrap(), 1.0);
        let u3 = LeadTimeDistSpec::discrete_uniform(1, 3).unwrap();
        let bm0 = bm_mmse_ar1(&u3, 0.0, cv_half()).unwrap();
        assert!((bm0 - (1.0 + 2.0 * 4.0 * 2.0 / 3.0)).abs() < 1e-12);
        assert!(bm_mmse_ar1(&u3, 0.6, cv_half()).unwrap() > bm0);
        assert!(bm_mmse_ar1(&u3, 1.0, cv_half()).is_err());
    }

    #[test]
    fn mmse_arma_with_theta_equal_rho_is_iid() {
        for l in 1..6 {
            let det = LeadTimeDistSpec::deterministic(l).unwrap();
            for &r in &[-0.8, -0.3, 0.2, 0.7] {
                let bm = bm_mmse_arma(&det, r, r, cv_half()).unwrap();
                assert!((bm - 1.0).abs() < 1e-12, "L = {l}, rho = {r}: {bm}");
            }
        }
    }

    #[test]
    fn mmse_arma_grid_is_finite_and_nonnegative() {
        let specs = [
            LeadTimeDistSpec::deterministic(3).unwrap(),
            LeadTimeDistSpec::discrete_uniform(1, 7).unwrap(),
            LeadTimeDistSpec::categorical(vec![0.2, 0.5, 0.3]).unwrap(),
        ];
        for spec in &specs {
            for i in -9..=9 {
                for j in -9..=9 {
                    let (rho, theta) = (f64::from(i) / 10.0, f64::from(j) / 10.0);
                    let bm = bm_mmse_arma(spec, rho, theta, cv_half()).unwrap();
                    assert!(bm.is_finite() && bm >= 0.0, "{rho} {theta} {bm}");
                }
            }
        }
    }

    #[test]
    fn product_ma_examples() {
        let (lead, demand) = mn_table_inputs();
        let bm = bm_product_ma(1, 1, lead.mean, lead.variance, demand).unwrap();
        assert!((bm - 2449.0).abs() < 1e-9);
        let bm = bm_product_ma(20, 20, lead.mean, lead.variance, demand).unwrap();
        assert!((bm - 7.48195).abs() < 1e-9);
        let bm = bm_product_ma(3, 5, 4.0, 0.0, demand).unwrap();
        assert!((bm - (2.0 * 16.0 / 25.0 + 8.0 / 5.0 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn lead_variance_enters_linearly() {
        // d BM / d σ_L² by finite differences against the shared term
        let demand = DemandMoments::new(10.0, 4.0);
        let k = 2.0 * 100.0 / 4.0;
        let (m, n) = (3u32, 5u32);
        let f = |v: f64| bm_product_ma(m, n, 2.0, v, demand).unwrap();
        let slope = (f(1.5) - f(0.5)) / 1.0;
        let expected = k / 9.0 + 2.0 * f64::from(m + n - 1) / 225.0;
        assert!((slope - expected).abs() < 1e-9);
        let g = |v: f64| {
            bm_ltd_ma_from_moments(LeadTimeMoments { mean: 2.0, variance: v, max: 3, p_max: 0.2 }, n, demand).unwrap()
        };
        assert!(((g(1.5) - g(0.5)) - k / 25.0).abs() < 1e-9);
    }

    #[test]
    fn table_cell_examples() {
        let t2 = bullwhip_table(2).unwrap();
        assert_eq!(truncate_decimals(t2.cell(15, 0).unwrap(), 3), "1.085");
        assert_eq!(truncate_decimals(t2.cell(10, 0).unwrap(), 3), "1.160");
        assert_eq!(truncate_decimals(t2.cell(10, 1).unwrap(), 3), "1.050");
        let t3 = bullwhip_table(3).unwrap();
        assert_eq!(truncate_decimals(t3.cell(18, 1).unwrap(), 3), "1.118");
        assert_eq!(truncate_decimals(t3.cell(12, 0).unwrap(), 3), "1.301");
        assert_eq!(truncate_decimals(t3.cell(12, 1).unwrap(), 3), "1.266");
        let t6 = bullwhip_table(6).unwrap();
        assert!((t6.cell(10, 2).unwrap() - 27.255).abs() / 27.255 < 5e-4);
        assert!((t6.cell(3, 2).unwrap() - 270.08).abs() / 270.08 < 5e-4);
        assert!(bullwhip_table(4).is_none());
    }

    #[test]
    fn csv_layout() {
        let csv = bullwhip_table(2).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,p_max_positive,p_max_zero"));
        assert_eq!(lines.next(), Some("3,2.259,1.555"));
        assert_eq!(csv.lines().count(), 14);
        let csv6 = bullwhip_table(6).unwrap().to_csv();
        assert!(csv6.starts_with("m,n=1,n=2,n=6,n=10,n=20\n1,2449.0,2417.0,2404.5,2402.9,2401.8\n"));
    }

    #[test]
    fn number_formatting() {
        assert_eq!(truncate_decimals(1.16, 3), "1.160");
        assert_eq!(truncate_decimals(1.5066, 3), "1.506");
        assert_eq!(truncate_decimals(-0.0004, 3), "0.000");
        assert_eq!(truncate_decimals(-2.5, 1), "-2.5");
        assert_eq!(significant(7.48195, 5), "7.4820");
        assert_eq!(significant(2449.0, 5), "2449.0");
        assert_eq!(significant(194700.4, 5), "194700");
        assert_eq!(significant(0.012345678, 5), "0.012346");
        assert_eq!(truncate_significant(270.0864, 5), "270.08");
        assert_eq!(truncate_significant(7.48195, 5), "7.4819");
        assert_eq!(truncate_significant(2449.0, 5), "2449.0");
    }
}
