//! C ABI for `macrolab`.
//!
//! Panels are opaque handles created by `ml_panel_load_csv` or
//! `ml_panel_simulate_default` and released with `ml_panel_free`. Every
//! fallible call returns an [`MlStatus`]; on failure the message is kept per
//! thread and can be copied out with `ml_last_error_message`. Buffer-filling
//! calls always store the required length in `*len` and return
//! `ML_STATUS_BUFFER_TOO_SMALL` when `cap` is short, leaving the buffer
//! untouched.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use macrolab::backtest::{run_backtest, Frequency, RunSpec};
use macrolab::macrostats::{self, Weighting};
use macrolab::market_data::load_panel;
use macrolab::synthetic::{default_atlas_params, simulate_atlas, TRADING_DAYS_PER_YEAR};
use macrolab::{Error, MarketPanel};

/// Opaque panel handle.
pub struct MlPanel {
    inner: MarketPanel,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    BufferTooSmall = 6,
    TotalLoss = 7,
    Internal = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|b| *b != 0));
    });
}

fn status_of(err: &Error) -> MlStatus {
    match err {
        Error::Parse { .. } | Error::Csv(_) | Error::Json(_) => MlStatus::Parse,
        Error::Validation(_) => MlStatus::Validation,
        Error::InvalidArgument(_) | Error::RankDeficient { .. } => MlStatus::InvalidArgument,
        Error::BenchmarkMissing { .. } | Error::MissingWindow(..) => MlStatus::InvalidArgument,
        Error::TotalLoss { .. } => MlStatus::TotalLoss,
        Error::Io { .. } => MlStatus::Io,
        _ => MlStatus::Internal,
    }
}

fn fail(status: MlStatus, msg: &str) -> MlStatus {
    set_error(msg);
    status
}

/// Runs `f`, mapping errors and panics to a status.
fn guard(f: impl FnOnce() -> Result<MlStatus, Error>) -> MlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err(e)) => fail(status_of(&e), &e.to_string()),
        Err(_) => fail(MlStatus::Internal, "panic inside macrolab"),
    }
}

unsafe fn panel_ref<'a>(panel: *const MlPanel) -> Option<&'a MarketPanel> {
    panel.as_ref().map(|p| &p.inner)
}

unsafe fn slice<'a>(data: *const f64, n: usize) -> Option<&'a [f64]> {
    if n == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(data, n))
    }
}

unsafe fn fill(values: &[f64], buf: *mut f64, cap: usize, len: *mut usize) -> MlStatus {
    *len = values.len();
    if cap < values.len() {
        return fail(
            MlStatus::BufferTooSmall,
            &format!("buffer holds {cap} values, {} needed", values.len()),
        );
    }
    if !values.is_empty() {
        if buf.is_null() {
            return fail(MlStatus::NullPointer, "null output buffer");
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    }
    MlStatus::Ok
}

unsafe fn put_panel(panel: MarketPanel, out: *mut *mut MlPanel) -> MlStatus {
    *out = Box::into_raw(Box::new(MlPanel { inner: panel }));
    MlStatus::Ok
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn ml_status_string(status: MlStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        MlStatus::Ok => b"ok\0",
        MlStatus::NullPointer => b"null pointer\0",
        MlStatus::InvalidArgument => b"invalid argument\0",
        MlStatus::Parse => b"parse error\0",
        MlStatus::Validation => b"validation error\0",
        MlStatus::Io => b"i/o error\0",
        MlStatus::BufferTooSmall => b"buffer too small\0",
        MlStatus::TotalLoss => b"total loss\0",
        MlStatus::Internal => b"internal error\0",
    };
    s.as_ptr().cast()
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap` bytes. Returns the full length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ml_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Loads a panel-CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ml_panel_load_csv(path: *const c_char, out: *mut *mut MlPanel) -> MlStatus {
    if path.is_null() || out.is_null() {
        return fail(MlStatus::NullPointer, "null argument");
    }
    guard(|| {
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::InvalidArgument("path is not UTF-8".into()))?;
        Ok(put_panel(load_panel(Path::new(path))?, out))
    })
}

/// Simulates the default rank-based panel with `n` stocks over `years`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ml_panel_simulate_default(
    n: usize,
    years: usize,
    seed: u64,
    out: *mut *mut MlPanel,
) -> MlStatus {
    if out.is_null() {
        return fail(MlStatus::NullPointer, "null argument");
    }
    guard(|| {
        if years == 0 {
            return Err(Error::InvalidArgument("years must be at least 1".into()));
        }
        let (mut params, _) = default_atlas_params(n, seed)?;
        params.horizon = years * TRADING_DAYS_PER_YEAR;
        Ok(put_panel(simulate_atlas(&params)?, out))
    })
}

/// Releases a panel; null is ignored.
///
/// # Safety
/// `panel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ml_panel_free(panel: *mut MlPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// Number of trading days; 0 for null.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_panel_num_days(panel: *const MlPanel) -> usize {
    panel_ref(panel).map_or(0, |p| p.n_days())
}

/// Number of distinct stocks; 0 for null.
///
/// # Safety
/// `panel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ml_panel_num_stocks(panel: *const MlPanel) -> usize {
    panel_ref(panel).map_or(0, |p| p.n_stocks())
}

/// Shannon entropy of the top-`k` cap weights on day `t`.
///
/// # Safety
/// `panel` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ml_entropy_topk(panel: *const MlPanel, t: usize, k: usize, out: *mut f64) -> MlStatus {
    let (Some(p), false) = (panel_ref(panel), out.is_null()) else {
        return fail(MlStatus::NullPointer, "null argument");
    };
    guard(|| {
        *out = macrostats::top_k_entropy(p, t, k)?;
        Ok(MlStatus::Ok)
    })
}

/// `(sum w^p)^(1/p)`.
///
/// # Safety
/// `weights` must point to `n` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ml_diversity_p(weights: *const f64, n: usize, p: f64, out: *mut f64) -> MlStatus {
    let (Some(w), false) = (slice(weights, n), out.is_null()) else {
        return fail(MlStatus::NullPointer, "null argument");
    };
    guard(|| {
        *out = macrostats::diversity_p(w, p)?;
        Ok(MlStatus::Ok)
    })
}

/// Excess growth rate of weights `w` over log returns `r`.
///
/// # Safety
/// `w` and `r` must point to `n` values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn ml_excess_growth_rate(w: *const f64, r: *const f64, n: usize, out: *mut f64) -> MlStatus {
    let (Some(w), Some(r), false) = (slice(w, n), slice(r, n), out.is_null()) else {
        return fail(MlStatus::NullPointer, "null argument");
    };
    guard(|| {
        *out = macrostats::excess_growth_rate(w, r)?;
        Ok(MlStatus::Ok)
    })
}

/// Cumulative cap-weighted excess growth of the top-`k` market on the grid
/// `0, dt, 2 dt, ...`; one value per grid point, starting with 0.
///
/// # Safety
/// `panel` must be a live handle, `buf` null or `cap` writable values, `len`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn ml_cumulative_egr(
    panel: *const MlPanel,
    k: usize,
    dt: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MlStatus {
    let (Some(p), false) = (panel_ref(panel), len.is_null()) else {
        return fail(MlStatus::NullPointer, "null argument");
    };
    guard(|| {
        let s = macrostats::cumulative_egr(p, k, dt, Weighting::Cap)?;
        Ok(fill(&s.cumulative, buf, cap, len))
    })
}

/// Wealth path of one diversity-weighted run over `[start, end]` starting at
/// 1000. `f = 0` never rebalances. Costs are proportional at rate `cost`.
///
/// # Safety
/// `panel` must be a live handle, `buf` null or `cap` writable values, `len`
/// valid.
#[no_mangle]
pub unsafe extern "C" fn ml_backtest_run(
    panel: *const MlPanel,
    p: f64,
    f: usize,
    k: usize,
    cost: f64,
    start: usize,
    end: usize,
    buf: *mut f64,
    cap: usize,
    len: *mut usize,
) -> MlStatus {
    let (Some(panel), false) = (panel_ref(panel), len.is_null()) else {
        return fail(MlStatus::NullPointer, "null argument");
    };
    guard(|| {
        let freq = if f == 0 { Frequency::Never } else { Frequency::Every(f) };
        let mut spec = RunSpec::new(p, freq);
        spec.k = k;
        spec.cost_rate = cost;
        let series = run_backtest(panel, &spec, (start, end))?;
        Ok(fill(&series.wealth, buf, cap, len))
    })
}
