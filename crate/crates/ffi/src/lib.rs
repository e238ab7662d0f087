//! C ABI over the `pleaders` library.
//!
//! Every fallible function returns a [`PlStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can be
//! read with [`pl_last_error`]. Handles (`PlPyramid`, `PlLeaders`,
//! `PlAnalysis`, `PlSignal`) are opaque and released with the matching
//! `*_free` function, which accepts NULL.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pleaders::analysis::{analyze_leaders, LeaderAnalysis, LeaderConfig};
use pleaders::dwt::{daubechies_filter, dwt1d, dwt2d, CoefficientPyramid};
use pleaders::formalism::Weighting;
use pleaders::harness::{estimate_p0, P0Config};
use pleaders::leaders::{coefficient_weights, compute_p_leaders, hmin_weighted, LeaderPyramid, Neighborhood};
use pleaders::mfdfa::{dyadic_scales, fluctuations, mfdfa_analyze, MfdfaOptions};
use pleaders::synth::{gen_mrw, MrwParams};
use pleaders::{Error, ErrorKind, PValue};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlStatus {
    PlOk = 0,
    /// A required pointer argument was NULL.
    PlErrNullPointer = 1,
    /// Invalid parameter or input shape.
    PlErrUsage = 2,
    /// Data too short, degenerate, or with too few scales.
    PlErrData = 3,
    /// Singular regression, invalid correction or similar.
    PlErrNumerical = 4,
    PlErrIo = 5,
    /// A Rust panic was caught at the boundary.
    PlErrPanic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlNeighborhood {
    /// The cube and its 3^d - 1 neighbours.
    PlFull = 0,
    /// The cube alone.
    PlRestricted = 1,
}

impl From<PlNeighborhood> for Neighborhood {
    fn from(n: PlNeighborhood) -> Self {
        match n {
            PlNeighborhood::PlFull => Neighborhood::Full,
            PlNeighborhood::PlRestricted => Neighborhood::Restricted,
        }
    }
}

/// Estimation settings. Obtain defaults from `pl_config_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlConfig {
    pub j1: usize,
    /// Coarsest octave; 0 selects the coarsest one with enough leaders.
    pub j2: usize,
    pub corrected: bool,
    pub neighborhood: PlNeighborhood,
    /// Highest log-cumulant order, 1..=4.
    pub m_max: usize,
    /// Uniform q grid `q_min + i * q_step`, `i < q_count`.
    pub q_min: f64,
    pub q_step: f64,
    pub q_count: usize,
    /// Weight octaves by leader counts (true) or equally (false).
    pub count_weights: bool,
}

/// Scalar results of one analysis.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlSummary {
    /// Log-cumulants; entries above `m_max` are NaN.
    pub cumulants: [f64; 4],
    pub m_max: usize,
    /// Wavelet scaling function at p; NaN for p = infinity.
    pub eta_p: f64,
    pub correction_applied: bool,
    pub j1: usize,
    pub j2: usize,
    /// Abscissa of the spectrum maximum.
    pub mode: f64,
    /// Number of q values (length of the curve arrays).
    pub q_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PlMrwParams {
    pub hurst: f64,
    pub lambda: f64,
    /// Fractional differentiation order.
    pub nu: f64,
    pub n: usize,
    /// Correlation length; 0 means `n`.
    pub corr_len: usize,
    pub seed: u64,
}

pub struct PlPyramid(CoefficientPyramid);
pub struct PlLeaders(LeaderPyramid);
pub struct PlAnalysis(LeaderAnalysis);
pub struct PlSignal(Vec<f64>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn status_of(kind: ErrorKind) -> PlStatus {
    match kind {
        ErrorKind::Usage => PlStatus::PlErrUsage,
        ErrorKind::Data => PlStatus::PlErrData,
        ErrorKind::Numerical => PlStatus::PlErrNumerical,
        ErrorKind::Io => PlStatus::PlErrIo,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PlStatus::PlOk
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PlStatus::PlErrNullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(e.kind())
        }
        Err(_) => {
            set_error("internal panic".into());
            PlStatus::PlErrPanic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn p_value(p: f64) -> PValue {
    if p.is_infinite() && p > 0.0 {
        PValue::Infinite
    } else {
        PValue::Finite(p)
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn pl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn pl_status_name(status: PlStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        PlStatus::PlOk => b"ok\0",
        PlStatus::PlErrNullPointer => b"null pointer\0",
        PlStatus::PlErrUsage => b"usage error\0",
        PlStatus::PlErrData => b"data error\0",
        PlStatus::PlErrNumerical => b"numerical error\0",
        PlStatus::PlErrIo => b"i/o error\0",
        PlStatus::PlErrPanic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn pl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Wavelet pyramid of `n` samples with a Daubechies wavelet.
///
/// # Safety
/// `x` must point to `n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_dwt_1d(
    x: *const f64,
    n: usize,
    vanishing_moments: usize,
    out: *mut *mut PlPyramid,
) -> PlStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        let pyr = dwt1d(x, &daubechies_filter(vanishing_moments)?, None)?;
        put(out, PlPyramid(pyr), "out")
    })
}

/// Wavelet pyramid of a `side × side` row-major field.
///
/// # Safety
/// `x` must point to `side * side` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pl_dwt_2d(
    x: *const f64,
    side: usize,
    vanishing_moments: usize,
    out: *mut *mut PlPyramid,
) -> PlStatus {
    guard(|| {
        let len = side.checked_mul(side).ok_or_else(|| Error::InvalidInput("side overflows".into()))?;
        let x = slice(x, len, "x")?;
        let pyr = dwt2d(x, side, &daubechies_filter(vanishing_moments)?, None)?;
        put(out, PlPyramid(pyr), "out")
    })
}

/// # Safety
/// `p` must come from `pl_dwt_1d`/`pl_dwt_2d` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_pyramid_free(p: *mut PlPyramid) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Number of octaves and, if `valid_counts` is not NULL, the valid
/// coefficient count of octaves `1..=min(count, capacity)`.
///
/// # Safety
/// `p` must be a live pyramid; `count` writable; `valid_counts` NULL or
/// writable for `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn pl_pyramid_octaves(
    p: *const PlPyramid,
    count: *mut usize,
    valid_counts: *mut usize,
    capacity: usize,
) -> PlStatus {
    guard(|| {
        let p = &deref(p, "pyramid")?.0;
        if count.is_null() {
            return Err(Failure::Null("count"));
        }
        *count = p.num_octaves();
        if !valid_counts.is_null() {
            for (i, c) in p.valid_counts().into_iter().take(capacity).enumerate() {
                *valid_counts.add(i) = c;
            }
        }
        Ok(())
    })
}

/// p-leaders of a pyramid; `p` may be `INFINITY` for wavelet leaders.
///
/// # Safety
/// `pyramid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_leaders_compute(
    pyramid: *const PlPyramid,
    p: f64,
    neighborhood: PlNeighborhood,
    out: *mut *mut PlLeaders,
) -> PlStatus {
    guard(|| {
        let pyr = &deref(pyramid, "pyramid")?.0;
        let l = compute_p_leaders(pyr, p_value(p), neighborhood.into())?;
        put(out, PlLeaders(l), "out")
    })
}

/// Borrowed view of octave `j` (1-based). Pointers stay valid while the
/// handle lives.
///
/// # Safety
/// `leaders` must be live; every out-pointer writable.
#[no_mangle]
pub unsafe extern "C" fn pl_leaders_octave(
    leaders: *const PlLeaders,
    j: usize,
    rows: *mut usize,
    cols: *mut usize,
    values: *mut *const f64,
    valid: *mut *const bool,
) -> PlStatus {
    guard(|| {
        let l = &deref(leaders, "leaders")?.0;
        if j == 0 || j > l.num_octaves() {
            return Err(Error::InvalidParameter(format!("octave {j} outside 1..={}", l.num_octaves())).into());
        }
        if rows.is_null() || cols.is_null() || values.is_null() || valid.is_null() {
            return Err(Failure::Null("octave outputs"));
        }
        let o = l.octave(j);
        *rows = o.rows;
        *cols = o.cols;
        *values = o.values.as_ptr();
        *valid = o.valid.as_ptr();
        Ok(())
    })
}

/// # Safety
/// `l` must come from `pl_leaders_compute` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_leaders_free(l: *mut PlLeaders) {
    if !l.is_null() {
        drop(Box::from_raw(l));
    }
}

#[no_mangle]
pub extern "C" fn pl_config_default() -> PlConfig {
    let d = LeaderConfig::default();
    PlConfig {
        j1: d.j1,
        j2: 0,
        corrected: d.corrected,
        neighborhood: PlNeighborhood::PlFull,
        m_max: d.m_max,
        q_min: -5.0,
        q_step: 0.25,
        q_count: 41,
        count_weights: true,
    }
}

fn leader_config(c: &PlConfig) -> Result<LeaderConfig, Failure> {
    if c.q_count == 0 || !c.q_min.is_finite() || !c.q_step.is_finite() {
        return Err(Error::InvalidParameter("q grid needs q_count > 0 and finite bounds".into()).into());
    }
    Ok(LeaderConfig {
        q_grid: (0..c.q_count).map(|i| c.q_min + i as f64 * c.q_step).collect(),
        j1: c.j1,
        j2: (c.j2 > 0).then_some(c.j2),
        weighting: if c.count_weights { Weighting::Counts } else { Weighting::Uniform },
        corrected: c.corrected,
        neighborhood: c.neighborhood.into(),
        m_max: c.m_max,
        ..LeaderConfig::default()
    })
}

/// Full p-leader estimation at one `p`. `config` may be NULL for defaults.
///
/// # Safety
/// `pyramid` must be live; `config` NULL or readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_analyze(
    pyramid: *const PlPyramid,
    p: f64,
    config: *const PlConfig,
    out: *mut *mut PlAnalysis,
) -> PlStatus {
    guard(|| {
        let pyr = &deref(pyramid, "pyramid")?.0;
        let cfg = match config.as_ref() {
            Some(c) => leader_config(c)?,
            None => leader_config(&pl_config_default())?,
        };
        put(out, PlAnalysis(analyze_leaders(pyr, p_value(p), &cfg)?), "out")
    })
}

/// # Safety
/// `a` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_analysis_summary(a: *const PlAnalysis, out: *mut PlSummary) -> PlStatus {
    guard(|| {
        let a = &deref(a, "analysis")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let e = &a.estimates;
        let mut c = [f64::NAN; 4];
        for (slot, v) in c.iter_mut().zip(&e.cumulants) {
            *slot = *v;
        }
        *out = PlSummary {
            cumulants: c,
            m_max: e.cumulants.len(),
            eta_p: e.eta_p.unwrap_or(f64::NAN),
            correction_applied: e.correction_applied,
            j1: e.j1,
            j2: e.j2,
            mode: a.spectrum.mode(),
            q_count: e.q_grid.len(),
        };
        Ok(())
    })
}

/// Copies `q`, `ζ(q)`, `h(q)` and `L(q)`; any array may be NULL. Each
/// non-NULL array must hold `capacity >= q_count` entries.
///
/// # Safety
/// `a` must be live; non-NULL arrays writable for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_analysis_curves(
    a: *const PlAnalysis,
    q: *mut f64,
    zeta: *mut f64,
    h: *mut f64,
    l: *mut f64,
    capacity: usize,
) -> PlStatus {
    guard(|| {
        let a = &deref(a, "analysis")?.0;
        let n = a.estimates.q_grid.len();
        if capacity < n {
            return Err(Error::InvalidParameter(format!("capacity {capacity} < {n} q values")).into());
        }
        for (dst, src) in [
            (q, &a.estimates.q_grid),
            (zeta, &a.estimates.zeta),
            (h, &a.spectrum.h),
            (l, &a.spectrum.l),
        ] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `a` must come from `pl_analyze` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_analysis_free(a: *mut PlAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Slope of the log of the largest coefficient per octave over `j1..=j2`.
///
/// # Safety
/// `pyramid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_hmin(pyramid: *const PlPyramid, j1: usize, j2: usize, out: *mut f64) -> PlStatus {
    guard(|| {
        let pyr = &deref(pyramid, "pyramid")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let w = coefficient_weights(pyr, j1, j2, Weighting::Counts)?;
        *out = hmin_weighted(pyr, &w)?;
        Ok(())
    })
}

/// Estimated critical Lebesgue index (`INFINITY` when unbounded on the grid).
///
/// # Safety
/// `pyramid` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_p0(pyramid: *const PlPyramid, out: *mut f64) -> PlStatus {
    guard(|| {
        let pyr = &deref(pyramid, "pyramid")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let (_, p0) = estimate_p0(pyr, &P0Config::default())?;
        *out = p0.as_f64();
        Ok(())
    })
}

/// MFDFA log-cumulants `c1..c4` of a series over dyadic scales `2^j1..2^j2`.
///
/// # Safety
/// `x` must hold `n` doubles; `cumulants` must be writable for 4 doubles.
#[no_mangle]
pub unsafe extern "C" fn pl_mfdfa_cumulants(
    x: *const f64,
    n: usize,
    degree: usize,
    j1: usize,
    j2: usize,
    cumulants: *mut f64,
) -> PlStatus {
    guard(|| {
        let x = slice(x, n, "x")?;
        if cumulants.is_null() {
            return Err(Failure::Null("cumulants"));
        }
        let table = fluctuations(x, &dyadic_scales(n, degree), degree, true, false)?;
        let opts = MfdfaOptions {
            range: Some((j1, j2)),
            ..MfdfaOptions::default()
        };
        let (e, _) = mfdfa_analyze(&table, &opts)?;
        for (i, c) in e.cumulants.iter().take(4).enumerate() {
            *cumulants.add(i) = *c;
        }
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn pl_mrw_params_default() -> PlMrwParams {
    let d = MrwParams::default();
    PlMrwParams {
        hurst: d.hurst,
        lambda: d.lambda,
        nu: d.nu,
        n: d.n,
        corr_len: 0,
        seed: d.seed,
    }
}

/// Multifractal random walk sample.
///
/// # Safety
/// `params` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_gen_mrw(params: *const PlMrwParams, out: *mut *mut PlSignal) -> PlStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let params = MrwParams {
            hurst: p.hurst,
            lambda: p.lambda,
            nu: p.nu,
            n: p.n,
            corr_len: (p.corr_len > 0).then_some(p.corr_len),
            seed: p.seed,
            ..MrwParams::default()
        };
        put(out, PlSignal(gen_mrw(&params)?), "out")
    })
}

/// Borrowed samples of a signal, valid while the handle lives.
///
/// # Safety
/// `s` must be live; `data` and `len` writable.
#[no_mangle]
pub unsafe extern "C" fn pl_signal_data(s: *const PlSignal, data: *mut *const f64, len: *mut usize) -> PlStatus {
    guard(|| {
        let s = &deref(s, "signal")?.0;
        if data.is_null() || len.is_null() {
            return Err(Failure::Null("data/len"));
        }
        *data = s.as_ptr();
        *len = s.len();
        Ok(())
    })
}

/// # Safety
/// `s` must come from a generator and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pl_signal_free(s: *mut PlSignal) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}
