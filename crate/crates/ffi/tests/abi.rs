use std::ffi::CString;
use std::process::Command;
use std::ptr;

use bullwhip_ffi::*;

const EXPERIMENT: &str = r#"
periods = 30000
seed = 2
replications = 2

[demand]
kind = "iid_uniform"
lo = 4500.0
hi = 5500.0

[[echelons]]
lead_time = { kind = "discrete_uniform", min = 1, max = 7 }
forecaster = { kind = "product_of_mas", m = 6, n = 6 }

[[echelons]]
lead_time = { kind = "deterministic", value = 2 }
forecaster = { kind = "product_of_mas", m = 6, n = 6 }

[grid]
m = [1, 20]
n = [6]
"#;

#[test]
fn deterministic_ma() {
    let mut bm = 0.0;
    assert_eq!(bw_bm_deterministic_ma(2, 4, &mut bm), BwStatus::Ok);
    assert!((bm - 1.75).abs() < 1e-12);
    assert_eq!(bw_bm_deterministic_ma(2, 0, &mut bm), BwStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn stochastic_lead_formulas() {
    let probs = [1.0 / 3.0; 3];
    let mut bm = 0.0;
    unsafe {
        assert_eq!(bw_bm_ltd_ma(probs.as_ptr(), 3, 3, 1.0, 0.25, &mut bm), BwStatus::Ok);
        // p_M > 0 at n = M = 3
        assert_eq!(format!("{:.3}", bm - 0.0005), "2.259");
        assert_eq!(bw_bm_ltd_ma(probs.as_ptr(), 3, 2, 1.0, 0.25, &mut bm), BwStatus::NotSupported);
        assert!(last_error().contains("n >= M"));
        assert_eq!(bw_bm_ltd_ma(probs.as_ptr(), 3, 5, 1.0, 0.0, &mut bm), BwStatus::Degenerate);
        assert_eq!(bw_bm_ltd_ma(ptr::null(), 3, 5, 1.0, 1.0, &mut bm), BwStatus::NullPointer);

        let one = [0.0, 1.0];
        assert_eq!(bw_bm_ar1(one.as_ptr(), 2, 0.0, 10.0, 4.0, &mut bm), BwStatus::Ok);
        assert_eq!(bm, 1.0);
        let mut arma = 0.0;
        assert_eq!(bw_bm_ar1(probs.as_ptr(), 3, 0.4, 10.0, 4.0, &mut bm), BwStatus::Ok);
        assert_eq!(bw_bm_arma(probs.as_ptr(), 3, 0.4, 0.0, 10.0, 4.0, &mut arma), BwStatus::Ok);
        assert!((bm - arma).abs() < 1e-12);
        assert_eq!(bw_bm_ar1(probs.as_ptr(), 3, 1.0, 10.0, 4.0, &mut bm), BwStatus::InvalidArgument);
    }
    let mut mn = 0.0;
    assert_eq!(bw_bm_mn(1, 1, 4.0, 4.0, 5000.0, 1e6 / 12.0, &mut mn), BwStatus::Ok);
    assert!((mn - 2449.0).abs() / 2449.0 < 5e-4);
}

#[test]
fn ks() {
    let a: Vec<f64> = (0..100).map(f64::from).collect();
    let b: Vec<f64> = (50..150).map(f64::from).collect();
    let mut r = BwKsResult { statistic: 0.0, p_value: 0.0 };
    unsafe {
        assert_eq!(bw_ks_two_sample(a.as_ptr(), a.len(), b.as_ptr(), b.len(), &mut r), BwStatus::Ok);
        assert!((r.statistic - 0.5).abs() < 1e-12);
        assert!(r.p_value < 1e-4);
        assert_eq!(bw_ks_two_sample(a.as_ptr(), a.len(), a.as_ptr(), a.len(), &mut r), BwStatus::Ok);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(bw_ks_two_sample(a.as_ptr(), 0, b.as_ptr(), 5, &mut r), BwStatus::InvalidArgument);
    }
}

#[test]
fn experiment_lifecycle() {
    let text = CString::new(EXPERIMENT).unwrap();
    let mut h: *mut BwExperiment = ptr::null_mut();
    unsafe {
        assert_eq!(bw_experiment_from_toml(text.as_ptr(), &mut h), BwStatus::Ok);
        let (mut cells, mut stages) = (0usize, 0usize);
        assert_eq!(bw_experiment_cell_count(h, &mut cells), BwStatus::Ok);
        assert_eq!(bw_experiment_echelon_count(h, &mut stages), BwStatus::Ok);
        assert_eq!((cells, stages), (2, 2));

        let mut s = std::mem::zeroed::<BwEchelonStats>();
        assert_eq!(bw_experiment_result(h, 0, 0, &mut s), BwStatus::InvalidArgument);
        assert_eq!(bw_experiment_run(h), BwStatus::Ok);
        assert_eq!(bw_experiment_result(h, 0, 0, &mut s), BwStatus::Ok);
        assert_eq!((s.m, s.n), (1, 6));
        // retailer at (1, 6) is near the closed form 2404.6
        assert!((s.bm - 2404.6).abs() / 2404.6 < 0.05, "{}", s.bm);
        let first = s;
        let mut far = s;
        assert_eq!(bw_experiment_result(h, 1, 1, &mut far), BwStatus::Ok);
        assert_eq!(far.m, 20);
        assert!(far.amplification > far.bm);
        assert_eq!(bw_experiment_result(h, 2, 0, &mut s), BwStatus::InvalidArgument);
        assert_eq!(bw_experiment_result(h, 0, 2, &mut s), BwStatus::InvalidArgument);

        assert_eq!(bw_experiment_run(h), BwStatus::Ok);
        assert_eq!(bw_experiment_result(h, 0, 0, &mut s), BwStatus::Ok);
        assert_eq!(s, first);
        bw_experiment_free(h);
        bw_experiment_free(ptr::null_mut());
    }
}

#[test]
fn experiment_errors() {
    let mut h: *mut BwExperiment = ptr::null_mut();
    unsafe {
        let bad = CString::new("periods = [").unwrap();
        assert_eq!(bw_experiment_from_toml(bad.as_ptr(), &mut h), BwStatus::Parse);
        let missing = CString::new(EXPERIMENT.replace("periods = 30000\n", "")).unwrap();
        assert_eq!(bw_experiment_from_toml(missing.as_ptr(), &mut h), BwStatus::Parse);
        assert!(last_error().contains("periods"));
        assert!(h.is_null());
        assert_eq!(bw_experiment_from_toml(ptr::null(), &mut h), BwStatus::NullPointer);
        assert_eq!(bw_experiment_run(ptr::null_mut()), BwStatus::NullPointer);
    }
}

fn header() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/bullwhip.h")).unwrap()
}

#[test]
fn header_declares_every_export() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let h = header();
    let mut exported = 0;
    for line in src.lines() {
        if let Some(rest) = line.split("extern \"C\" fn ").nth(1) {
            let name = rest.split('(').next().unwrap();
            assert!(h.contains(&format!("{name}(")), "{name} missing from header");
            exported += 1;
        }
    }
    assert_eq!(exported, 13);
    for item in ["typedef struct BwExperiment BwExperiment;", "BW_STATUS_PANIC = 6", "typedef struct BwEchelonStats"] {
        assert!(h.contains(item), "{item}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.c");
    std::fs::write(
        &main,
        "#include \"bullwhip.h\"\nint main(void) { double x; BwStatus s = bw_bm_deterministic_ma(2, 4, &x); return s == BW_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I", concat!(env!("CARGO_MANIFEST_DIR"), "/include")])
        .arg(&main)
        .status()
        .unwrap();
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
