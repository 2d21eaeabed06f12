use std::ffi::{CStr, CString};
use std::ptr;

use macrolab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { ml_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_string();
    assert_eq!(s.len(), n.min(255));
    s
}

struct Panel(*mut MlPanel);

impl Drop for Panel {
    fn drop(&mut self) {
        unsafe { ml_panel_free(self.0) }
    }
}

fn simulate(n: usize, years: usize) -> Panel {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ml_panel_simulate_default(n, years, 7, &mut p) }, MlStatus::Ok);
    Panel(p)
}

#[test]
fn simulated_panel_dimensions() {
    let p = simulate(20, 1);
    unsafe {
        assert_eq!(ml_panel_num_days(p.0), 253);
        assert_eq!(ml_panel_num_stocks(p.0), 20);
        assert_eq!(ml_panel_num_days(ptr::null()), 0);
    }
}

#[test]
fn simulate_rejects_bad_sizes() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ml_panel_simulate_default(1, 1, 7, &mut p) }, MlStatus::InvalidArgument);
    assert!(last_error().contains("n must be"));
    assert!(p.is_null());
}

#[test]
fn scalar_statistics() {
    let w = [0.5, 0.5];
    let r = [std::f64::consts::LN_2, 0.0];
    let mut out = 0.0;
    unsafe {
        assert_eq!(ml_excess_growth_rate(w.as_ptr(), r.as_ptr(), 2, &mut out), MlStatus::Ok);
        assert!((out - (1.5f64.ln() - std::f64::consts::LN_2 / 2.0)).abs() < 1e-15);
        assert_eq!(ml_diversity_p(w.as_ptr(), 2, 0.5, &mut out), MlStatus::Ok);
        assert!((out - 2.0).abs() < 1e-12);
        assert_eq!(ml_diversity_p(ptr::null(), 2, 0.5, &mut out), MlStatus::NullPointer);
    }
    let p = simulate(10, 1);
    unsafe {
        assert_eq!(ml_entropy_topk(p.0, 0, 10, &mut out), MlStatus::Ok);
        assert!(out > 0.0 && out <= 10f64.ln());
        assert_eq!(ml_entropy_topk(p.0, 10_000, 10, &mut out), MlStatus::InvalidArgument);
        assert!(!last_error().is_empty());
    }
}

#[test]
fn buffer_too_small_reports_length() {
    let p = simulate(10, 1);
    let mut len = 0;
    unsafe {
        assert_eq!(ml_cumulative_egr(p.0, 10, 5, ptr::null_mut(), 0, &mut len), MlStatus::BufferTooSmall);
        assert_eq!(len, 252 / 5 + 1);
        let mut buf = vec![f64::NAN; len];
        assert_eq!(ml_cumulative_egr(p.0, 10, 5, buf.as_mut_ptr(), buf.len(), &mut len), MlStatus::Ok);
        assert_eq!(buf[0], 0.0);
        assert!(buf.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn backtest_wealth_path() {
    let p = simulate(10, 1);
    let mut len = 0;
    let mut buf = vec![0.0; 300];
    unsafe {
        assert_eq!(ml_backtest_run(p.0, 1.0, 0, 10, 0.0, 0, 100, buf.as_mut_ptr(), buf.len(), &mut len), MlStatus::Ok);
        assert_eq!(len, 101);
        assert!((buf[0] - 1000.0).abs() < 1e-9);
        assert!(buf[..len].iter().all(|v| *v > 0.0));
        let s = ml_backtest_run(p.0, 0.5, 5, 10, 0.0, 50, 10, buf.as_mut_ptr(), buf.len(), &mut len);
        assert_eq!(s, MlStatus::InvalidArgument);
        assert_eq!(ml_backtest_run(ptr::null(), 0.5, 5, 10, 0.0, 0, 10, buf.as_mut_ptr(), 1, &mut len), MlStatus::NullPointer);
    }
}

#[test]
fn load_csv_roundtrip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("panel.csv");
    std::fs::write(
        &good,
        "date,id,cap,total_return,delist_return\n2001-01-02,A,2,,\n2001-01-02,B,1,,\n2001-01-03,A,2.2,0.1,\n2001-01-03,B,1,0,\n",
    )
    .unwrap();
    let path = CString::new(good.to_str().unwrap()).unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(ml_panel_load_csv(path.as_ptr(), &mut p), MlStatus::Ok);
        let p = Panel(p);
        assert_eq!(ml_panel_num_days(p.0), 2);
        assert_eq!(ml_panel_num_stocks(p.0), 2);
    }

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "date,id,cap,total_return,delist_return\n2001-01-02,A,-2,,\n").unwrap();
    let path = CString::new(bad.to_str().unwrap()).unwrap();
    let mut p = ptr::null_mut();
    let status = unsafe { ml_panel_load_csv(path.as_ptr(), &mut p) };
    assert!(matches!(status, MlStatus::Parse | MlStatus::Validation), "{status:?}");
    assert!(p.is_null());

    let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { ml_panel_load_csv(missing.as_ptr(), &mut p) }, MlStatus::Io);
    assert_eq!(unsafe { ml_panel_load_csv(ptr::null(), &mut p) }, MlStatus::NullPointer);
}

#[test]
fn error_message_truncates() {
    let mut out = 0.0;
    unsafe { ml_diversity_p(ptr::null(), 3, 0.5, &mut out) };
    let mut buf = [0 as std::ffi::c_char; 5];
    let n = unsafe { ml_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 4);
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 4);
    let s = unsafe { CStr::from_ptr(ml_status_string(MlStatus::BufferTooSmall)) };
    assert_eq!(s.to_str().unwrap(), "buffer too small");
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/macrolab.h");
    for name in [
        "ml_status_string",
        "ml_last_error_message",
        "ml_panel_load_csv",
        "ml_panel_simulate_default",
        "ml_panel_free",
        "ml_panel_num_days",
        "ml_panel_num_stocks",
        "ml_entropy_topk",
        "ml_diversity_p",
        "ml_excess_growth_rate",
        "ml_cumulative_egr",
        "ml_backtest_run",
        "ML_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
