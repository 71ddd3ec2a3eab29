//! C ABI over the bullwhip toolkit.
//!
//! Every function returns a [`BwStatus`]; results go through out-pointers.
//! On failure `bw_last_error_message` describes the most recent error on the
//! calling thread. Lead-time laws are passed as probability vectors:
//! `probs[k-1] = P(L = k)` for `k = 1..=len`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use bullwhip::analytic::{self, AnalyticError};
use bullwhip::config::{ConfigError, ExperimentFile, Overrides};
use bullwhip::ltstats::{self, LtStatsError};
use bullwhip::simulator::{replicate, EchelonSummary, ReplicatedResult, SimError};
use bullwhip::stochastic::{DemandMoments, LeadTimeDistSpec, SpecError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BwStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// The closed form does not cover the requested parameters (`n < M`).
    NotSupported = 2,
    /// Zero-variance input or output series.
    Degenerate = 3,
    Parse = 4,
    NullPointer = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(BwStatus, String);

impl From<AnalyticError> for Failure {
    fn from(e: AnalyticError) -> Self {
        let status = match e {
            AnalyticError::NotSupported { .. } => BwStatus::NotSupported,
            AnalyticError::DegenerateDemand(_) => BwStatus::Degenerate,
            _ => BwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure(BwStatus::InvalidArgument, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let status = match e {
            SimError::DegenerateSeries(_) => BwStatus::Degenerate,
            _ => BwStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(_) => Failure(BwStatus::Parse, e.to_string()),
            ConfigError::Chain(s) => s.into(),
            _ => Failure(BwStatus::InvalidArgument, e.to_string()),
        }
    }
}

impl From<LtStatsError> for Failure {
    fn from(e: LtStatsError) -> Self {
        Failure(BwStatus::InvalidArgument, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(BwStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, turning errors and panics into a status and the thread's last
/// error message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> BwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            BwStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {message}"));
            BwStatus::Panic
        }
    }
}

fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: non-null and, by contract, valid for writes
    unsafe { out.write(value) };
    Ok(())
}

/// # Safety
/// `ptr` must be null or point to `len` readable doubles.
unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if ptr.is_null() {
        if len == 0 {
            return Ok(&[]);
        }
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn lead_law(probs: *const f64, len: usize) -> Result<LeadTimeDistSpec, Failure> {
    let probs = slice(probs, len, "lead-time probabilities")?;
    Ok(LeadTimeDistSpec::categorical(probs.to_vec())?)
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Deterministic lead time `lead`, lead-time-demand moving average of
/// window `n`.
#[no_mangle]
pub extern "C" fn bw_bm_deterministic_ma(lead: u32, n: u32, out: *mut f64) -> BwStatus {
    guard(|| write_out(out, analytic::bm_deterministic_ma(lead, n)?))
}

/// Stochastic lead times, moving average of lead-time demand over `n`
/// periods. Needs `n >= len`.
///
/// # Safety
/// `probs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bw_bm_ltd_ma(
    probs: *const f64,
    len: usize,
    n: u32,
    demand_mean: f64,
    demand_variance: f64,
    out: *mut f64,
) -> BwStatus {
    guard(|| {
        let lead = lead_law(probs, len)?;
        let bm = analytic::bm_ltd_ma_stochastic(&lead, n, DemandMoments::new(demand_mean, demand_variance))?;
        write_out(out, bm)
    })
}

/// AR(1) demand with coefficient `rho`, MMSE forecasts.
///
/// # Safety
/// `probs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bw_bm_ar1(
    probs: *const f64,
    len: usize,
    rho: f64,
    demand_mean: f64,
    demand_variance: f64,
    out: *mut f64,
) -> BwStatus {
    guard(|| {
        let lead = lead_law(probs, len)?;
        write_out(out, analytic::bm_mmse_ar1(&lead, rho, DemandMoments::new(demand_mean, demand_variance))?)
    })
}

/// ARMA(1,1) demand, MMSE forecasts.
///
/// # Safety
/// `probs` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bw_bm_arma(
    probs: *const f64,
    len: usize,
    rho: f64,
    theta: f64,
    demand_mean: f64,
    demand_variance: f64,
    out: *mut f64,
) -> BwStatus {
    guard(|| {
        let lead = lead_law(probs, len)?;
        let demand = DemandMoments::new(demand_mean, demand_variance);
        write_out(out, analytic::bm_mmse_arma(&lead, rho, theta, demand)?)
    })
}

/// Lead times and demands forecast by moving averages of window `m` and
/// `n`, from lead-time moments.
#[no_mangle]
pub extern "C" fn bw_bm_mn(
    m: u32,
    n: u32,
    lead_mean: f64,
    lead_variance: f64,
    demand_mean: f64,
    demand_variance: f64,
    out: *mut f64,
) -> BwStatus {
    guard(|| {
        let demand = DemandMoments::new(demand_mean, demand_variance);
        write_out(out, analytic::bm_product_ma(m, n, lead_mean, lead_variance, demand)?)
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwKsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with asymptotic p-value.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles.
#[no_mangle]
pub unsafe extern "C" fn bw_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut BwKsResult,
) -> BwStatus {
    guard(|| {
        let r = ltstats::ks_two_sample(slice(a, na, "a")?, slice(b, nb, "b")?)?;
        write_out(out, BwKsResult { statistic: r.statistic, p_value: r.p_value })
    })
}

/// Opaque experiment: a resolved configuration plus, after
/// `bw_experiment_run`, one result per grid cell.
pub struct BwExperiment {
    experiment: bullwhip::config::Experiment,
    results: Vec<ReplicatedResult>,
}

/// Per-echelon statistics of one cell. Undefined ratios are NaN; a window
/// the forecasters lack is 0.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BwEchelonStats {
    pub m: u32,
    pub n: u32,
    pub demand_mean: f64,
    pub demand_variance: f64,
    pub order_mean: f64,
    pub order_variance: f64,
    pub net_stock_variance: f64,
    pub bm: f64,
    pub bm_mean_scaled: f64,
    pub nsm: f64,
    pub amplification: f64,
}

/// Parses and validates an experiment from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` receives a handle to
/// release with `bw_experiment_free`.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_from_toml(toml: *const c_char, out: *mut *mut BwExperiment) -> BwStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Failure(BwStatus::Parse, format!("not UTF-8: {e}")))?;
        let experiment = ExperimentFile::from_toml(text)?.resolve(&Overrides::default())?;
        for cell in &experiment.cells {
            experiment.chain(*cell)?;
        }
        let handle = Box::new(BwExperiment { experiment, results: Vec::new() });
        out.write(Box::into_raw(handle));
        Ok(())
    })
}

unsafe fn handle<'a>(h: *const BwExperiment) -> Result<&'a BwExperiment, Failure> {
    h.as_ref().ok_or_else(|| null("experiment"))
}

/// Number of grid cells (1 without a grid).
///
/// # Safety
/// `h` must come from `bw_experiment_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_cell_count(h: *const BwExperiment, out: *mut usize) -> BwStatus {
    guard(|| write_out(out, handle(h)?.experiment.cells.len()))
}

/// Number of ordering stages in the chain.
///
/// # Safety
/// `h` must come from `bw_experiment_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_echelon_count(h: *const BwExperiment, out: *mut usize) -> BwStatus {
    guard(|| write_out(out, handle(h)?.experiment.base.echelons.len()))
}

/// Simulates every cell with the configured replications. Running again
/// replaces the previous results with identical ones.
///
/// # Safety
/// `h` must come from `bw_experiment_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_run(h: *mut BwExperiment) -> BwStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(|| null("experiment"))?;
        let exp = &h.experiment;
        let results = exp
            .cells
            .iter()
            .map(|cell| Ok(replicate(&exp.chain(*cell)?, exp.replications)?))
            .collect::<Result<Vec<_>, Failure>>()?;
        h.results = results;
        Ok(())
    })
}

fn stats(s: &EchelonSummary, m: Option<usize>, n: Option<usize>) -> BwEchelonStats {
    let nan = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let window = |w: Option<usize>| w.map_or(0, |w| w as u32);
    BwEchelonStats {
        m: window(m),
        n: window(n),
        demand_mean: s.demand_mean,
        demand_variance: s.demand_variance,
        order_mean: s.order_mean,
        order_variance: s.order_variance,
        net_stock_variance: s.net_stock_variance,
        bm: nan(s.bm),
        bm_mean_scaled: nan(s.bm_mean_scaled),
        nsm: nan(s.nsm),
        amplification: nan(s.amplification),
    }
}

/// Pooled statistics of `echelon` (0 = closest to the customer) in `cell`.
///
/// # Safety
/// `h` must come from `bw_experiment_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_result(
    h: *const BwExperiment,
    cell: usize,
    echelon: usize,
    out: *mut BwEchelonStats,
) -> BwStatus {
    guard(|| {
        let h = handle(h)?;
        if h.results.is_empty() {
            return Err(Failure(BwStatus::InvalidArgument, "experiment has not been run".into()));
        }
        let result = h
            .results
            .get(cell)
            .ok_or_else(|| Failure(BwStatus::InvalidArgument, format!("cell {cell} out of range")))?;
        let e = result
            .echelons
            .get(echelon)
            .ok_or_else(|| Failure(BwStatus::InvalidArgument, format!("echelon {echelon} out of range")))?;
        let c = h.experiment.cells[cell];
        write_out(out, stats(&e.pooled, c.m, c.n))
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `h` must be null or come from `bw_experiment_from_toml`, and is invalid
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn bw_experiment_free(h: *mut BwExperiment) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[doc(hidden)]
pub fn last_error() -> String {
    // SAFETY: the thread-local string is NUL-terminated and alive
    unsafe { CStr::from_ptr(bw_last_error_message()) }.to_string_lossy().into_owned()
}
