use std::path::Path;
use std::process::{Command, Output};

use bullwhip::ltstats::{synthetic_order_log, write_orders, SyntheticLeadTimes, IID_VERDICT};
use chrono::NaiveDate;

fn bullwhip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bullwhip")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const SINGLE: &str = r#"
periods = 20000
seed = 11
replications = 2

[demand]
kind = "iid_uniform"
lo = 4500.0
hi = 5500.0

[[echelons]]
lead_time = { kind = "discrete_uniform", min = 1, max = 7 }
forecaster = { kind = "product_of_mas", m = 6, n = 6 }
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn order_log(dir: &Path, pattern: SyntheticLeadTimes) -> String {
    let p = dir.join("orders.csv");
    let log = synthetic_order_log(pattern, NaiveDate::from_ymd_opt(2021, 3, 1).unwrap(), 481, 14.5, 7);
    write_orders(&log, std::fs::File::create(&p).unwrap()).unwrap();
    p.display().to_string()
}

#[test]
fn analytic_prop1() {
    let o = bullwhip(&["analytic", "prop1", "--l", "2", "--n", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("1.75"), "{}", stdout(&o));
}

#[test]
fn th1_window_below_max_lead_is_unsupported() {
    let o = bullwhip(&["analytic", "th1", "--n", "2", "--lead-min", "1", "--lead-max", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!stderr(&o).is_empty());
}

#[test]
fn missing_periods_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SINGLE.replace("periods = 20000\n", ""));
    let o = bullwhip(&["simulate", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("periods"), "{}", stderr(&o));
}

#[test]
fn empty_order_log_fails() {
    let dir = tempfile::tempdir().unwrap();
    let log = write(dir.path(), "empty.csv", "order_date,delivery_date,quantity\n");
    let o = bullwhip(&["analyze", &log]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_rejects_multi_stage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let two = format!(
        "{SINGLE}\n[[echelons]]\nlead_time = {{ kind = \"deterministic\", value = 2 }}\nforecaster = {{ kind = \"product_of_mas\", m = 6, n = 6 }}\n"
    );
    let cfg = write(dir.path(), "two.toml", &two);
    let o = bullwhip(&["compare", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mismatch"), "{}", stderr(&o));
}

#[test]
fn compare_single_stage_within_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "one.toml", SINGLE);
    let o = bullwhip(&["compare", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("m,n,analytic,simulated,ci_half_width,relative_gap,within_tolerance"));
    assert!(text.contains(",true"));
    // an impossible tolerance flips the exit code, not the output shape
    let strict = bullwhip(&["compare", &cfg, "--tolerance", "1e-9"]);
    assert_eq!(strict.status.code(), Some(1));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "one.toml", SINGLE);
    let a = bullwhip(&["simulate", &cfg, "--seed", "3"]);
    let b = bullwhip(&["simulate", &cfg, "--seed", "3"]);
    let c = bullwhip(&["simulate", &cfg, "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn analyze_iid_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = order_log(dir.path(), SyntheticLeadTimes::Iid { mean: 5.0, std_dev: 2.0 });
    let o = bullwhip(&["analyze", &log]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("lag,acf,pacf,band_lower,band_upper"));
    assert!(text.trim_end().ends_with(&format!("verdict: {IID_VERDICT}")), "{text}");
}

#[test]
fn analyze_autocorrelated_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = order_log(dir.path(), SyntheticLeadTimes::Ar1 { mean: 8.0, rho: 0.8, std_dev: 2.0, order_noise: 0.5 });
    let o = bullwhip(&["analyze", &log]);
    assert!(o.status.success());
    assert!(!stdout(&o).contains(&format!("verdict: {IID_VERDICT}")), "{}", stdout(&o));
}

#[test]
fn table_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let o = bullwhip(&["table", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(out).unwrap();
    assert!(text.starts_with("n,p_max_positive,p_max_zero\n3,2.259,1.555\n"), "{text}");
}
