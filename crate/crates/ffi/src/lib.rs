//! C ABI for the `doppler-track` estimators and streaming tracker.
//!
//! Every fallible call returns a [`DtStatus`]; results are written through
//! out-pointers. The text of the most recent failure on the calling thread
//! is available from [`dt_last_error`]. Complex vectors are passed as
//! interleaved `re, im` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use doppler_track::channel::{simulate_frame, ChannelProfile, OfdmConfig, PilotObservation};
use doppler_track::estimators::{
    accumulate_corr, bias_diagnostics, estimate_fd, estimate_from_corr, BatchMethod,
    DopplerEstimate, RankChoice,
};
use doppler_track::math::{bessel_j0, bessel_j0_inv, xi, TimingParams};
use doppler_track::tracker::{TrackerConfig, TrackerState};
use doppler_track::Error;
use nalgebra::DVector;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    OutOfBranch = 3,
    InsufficientData = 4,
    Degenerate = 5,
    RankTooLarge = 6,
    DimensionMismatch = 7,
    Parse = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtTiming {
    pub n_fft: u32,
    pub cp_len: u32,
    /// Seconds.
    pub sample_period: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtEstimate {
    pub eta: f64,
    /// NaN when the ratio could not be formed.
    pub fd_hz: f64,
    pub rank: u32,
    pub valid: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtMethod {
    Frobenius = 0,
    SubspaceEvd = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtTrackerConfig {
    pub pilots: u32,
    pub max_rank: u32,
    pub beta: u32,
    pub alpha: f64,
    pub hold_off: u32,
    pub timing: DtTiming,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtBias {
    pub rho: f64,
    pub rho_r: f64,
    pub rho_lower_bound: f64,
}

/// Tap-delay-line profile: delays in samples, linear powers (normalized
/// internally), `taps` entries each.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DtProfile {
    pub delays: *const f64,
    pub powers: *const f64,
    pub taps: usize,
}

/// Opaque streaming tracker.
pub struct DtTracker {
    state: TrackerState,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> DtStatus {
    match err {
        Error::InvalidConfig(_) => DtStatus::InvalidConfig,
        Error::OutOfBranch(_) => DtStatus::OutOfBranch,
        Error::InsufficientData { .. } => DtStatus::InsufficientData,
        Error::Degenerate(_) => DtStatus::Degenerate,
        Error::RankTooLarge { .. } => DtStatus::RankTooLarge,
        Error::DimensionMismatch { .. } => DtStatus::DimensionMismatch,
        Error::Parse { .. } => DtStatus::Parse,
        Error::Io(_) => DtStatus::Io,
    }
}

fn fail(status: DtStatus, msg: &str) -> DtStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> Result<(), DtStatus>>(f: F) -> DtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DtStatus::Panic, "internal panic"),
    }
}

fn lift(err: Error) -> DtStatus {
    fail(status_of(&err), &err.to_string())
}

fn null() -> DtStatus {
    fail(DtStatus::NullPointer, "null pointer argument")
}

fn timing_of(t: &DtTiming) -> Result<TimingParams, DtStatus> {
    TimingParams::new(t.n_fft as usize, t.cp_len as usize, t.sample_period).map_err(lift)
}

fn to_c(e: DopplerEstimate) -> DtEstimate {
    DtEstimate {
        eta: e.eta,
        fd_hz: e.fd_hz,
        rank: e.rank as u32,
        valid: e.valid,
    }
}

unsafe fn complex_vec(data: *const f64, len: usize) -> DVector<Complex64> {
    let raw = slice::from_raw_parts(data, 2 * len);
    DVector::from_iterator(len, raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])))
}

unsafe fn profile_of(p: &DtProfile) -> Result<ChannelProfile, DtStatus> {
    if p.taps > 0 && (p.delays.is_null() || p.powers.is_null()) {
        return Err(null());
    }
    let (d, w) = if p.taps == 0 {
        (vec![], vec![])
    } else {
        (
            slice::from_raw_parts(p.delays, p.taps).to_vec(),
            slice::from_raw_parts(p.powers, p.taps).to_vec(),
        )
    };
    ChannelProfile::new(d, w).map_err(lift)
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn dt_status_message(status: DtStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        DtStatus::Ok => b"ok\0",
        DtStatus::NullPointer => b"null pointer argument\0",
        DtStatus::InvalidConfig => b"invalid configuration\0",
        DtStatus::OutOfBranch => b"value outside the invertible branch of J0\0",
        DtStatus::InsufficientData => b"insufficient symbols\0",
        DtStatus::Degenerate => b"degenerate input\0",
        DtStatus::RankTooLarge => b"rank exceeds dimension\0",
        DtStatus::DimensionMismatch => b"dimension mismatch\0",
        DtStatus::Parse => b"parse error\0",
        DtStatus::Io => b"io error\0",
        DtStatus::BufferTooSmall => b"output buffer too small\0",
        DtStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Message of the last failure on this thread. Valid until the next call
/// that fails on the same thread.
#[no_mangle]
pub extern "C" fn dt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// N = 512, Lcp = 64, T = 200 ns.
#[no_mangle]
pub extern "C" fn dt_timing_lte_5mhz() -> DtTiming {
    DtTiming {
        n_fft: 512,
        cp_len: 64,
        sample_period: 200e-9,
    }
}

#[no_mangle]
pub extern "C" fn dt_bessel_j0(x: f64) -> f64 {
    bessel_j0(x)
}

/// Inverse of J0 on `[0, 2.404826)`; `y` must lie in `(0, 1]`.
///
/// # Safety
/// `out` must be null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn dt_bessel_j0_inv(y: f64, out: *mut f64) -> DtStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = bessel_j0_inv(y).map_err(lift)?;
        Ok(())
    })
}

/// Symbol-averaged correlation factor at lag `beta` for Doppler `fd` (Hz).
///
/// # Safety
/// `timing` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_xi(
    beta: u32,
    timing: *const DtTiming,
    fd: f64,
    out: *mut f64,
) -> DtStatus {
    guard(|| {
        let t = timing_of(timing.as_ref().ok_or_else(null)?)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = xi(beta as usize, &t, fd);
        Ok(())
    })
}

/// Maps a correlation ratio to a Doppler estimate.
///
/// # Safety
/// `timing` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_estimate_fd(
    eta: f64,
    beta: u32,
    timing: *const DtTiming,
    out: *mut DtEstimate,
) -> DtStatus {
    guard(|| {
        let t = timing_of(timing.as_ref().ok_or_else(null)?)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = to_c(estimate_fd(eta, beta as usize, &t));
        Ok(())
    })
}

/// Batch estimate over `symbols` consecutive observations of `pilots`
/// complex values each (`2 * symbols * pilots` doubles, symbol-major).
/// `rank = 0` selects the subspace rank by MDL; it is ignored for the
/// Frobenius method.
///
/// # Safety
/// `observations` must hold `2 * symbols * pilots` doubles; `timing` and
/// `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_estimate_batch(
    observations: *const f64,
    symbols: usize,
    pilots: usize,
    beta: u32,
    timing: *const DtTiming,
    method: DtMethod,
    rank: u32,
    out: *mut DtEstimate,
) -> DtStatus {
    guard(|| {
        let t = timing_of(timing.as_ref().ok_or_else(null)?)?;
        let out = out.as_mut().ok_or_else(null)?;
        if observations.is_null() && symbols * pilots > 0 {
            return Err(null());
        }
        let obs: Vec<PilotObservation> = (0..symbols)
            .map(|m| {
                let v = complex_vec(observations.add(2 * m * pilots), pilots);
                PilotObservation::new(m as u64, v)
            })
            .collect();
        let method = match method {
            DtMethod::Frobenius => BatchMethod::Frobenius,
            DtMethod::SubspaceEvd if rank == 0 => BatchMethod::SubspaceEvd(RankChoice::Mdl),
            DtMethod::SubspaceEvd => BatchMethod::SubspaceEvd(RankChoice::Fixed(rank as usize)),
        };
        let corr = accumulate_corr(&obs, beta as usize).map_err(lift)?;
        *out = to_c(estimate_from_corr(&corr, &t, method).map_err(lift)?);
        Ok(())
    })
}

/// Closed-form noise-bias terms for a comb with `pilots` pilots.
///
/// # Safety
/// `timing`, `profile` and `out` must be null or valid; `profile` arrays
/// must hold `taps` entries.
#[no_mangle]
pub unsafe extern "C" fn dt_bias(
    timing: *const DtTiming,
    pilots: u32,
    profile: *const DtProfile,
    snr_db: f64,
    out: *mut DtBias,
) -> DtStatus {
    guard(|| {
        let t = timing_of(timing.as_ref().ok_or_else(null)?)?;
        let prof = profile_of(profile.as_ref().ok_or_else(null)?)?;
        let out = out.as_mut().ok_or_else(null)?;
        let cfg = OfdmConfig::new(t, pilots as usize, 0).map_err(lift)?;
        let b = bias_diagnostics(&cfg, &prof, snr_db);
        *out = DtBias {
            rho: b.rho,
            rho_r: b.rho_r,
            rho_lower_bound: b.rho_lower_bound,
        };
        Ok(())
    })
}

/// Simulates `symbols` LS pilot observations of a fading channel into
/// `out` (`2 * symbols * pilots` doubles). `snr_db = INFINITY` is noiseless.
///
/// # Safety
/// `timing` and `profile` must be null or valid; `out` must hold `out_len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_simulate(
    timing: *const DtTiming,
    pilots: u32,
    profile: *const DtProfile,
    fd: f64,
    snr_db: f64,
    seed: u64,
    symbols: usize,
    out: *mut f64,
    out_len: usize,
) -> DtStatus {
    guard(|| {
        let t = timing_of(timing.as_ref().ok_or_else(null)?)?;
        let prof = profile_of(profile.as_ref().ok_or_else(null)?)?;
        let cfg = OfdmConfig::new(t, pilots as usize, 0).map_err(lift)?;
        let need = 2 * symbols * pilots as usize;
        if out_len < need {
            return Err(fail(
                DtStatus::BufferTooSmall,
                &format!("need {need} doubles, got {out_len}"),
            ));
        }
        if out.is_null() && need > 0 {
            return Err(null());
        }
        let obs = simulate_frame(&cfg, &prof, fd, snr_db, seed, symbols).map_err(lift)?;
        let dst = slice::from_raw_parts_mut(out, need);
        for (chunk, v) in dst
            .chunks_exact_mut(2)
            .zip(obs.iter().flat_map(|o| o.values.iter()))
        {
            chunk[0] = v.re;
            chunk[1] = v.im;
        }
        Ok(())
    })
}

/// Default tracker settings: `alpha = 0.995`, `max_rank = min(10, pilots)`,
/// `beta = 1`, 30-symbol hold-off.
///
/// # Safety
/// `timing` must be null or valid; a null `timing` selects the 5 MHz preset.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_default_config(
    pilots: u32,
    timing: *const DtTiming,
) -> DtTrackerConfig {
    let t = timing
        .as_ref()
        .copied()
        .unwrap_or_else(|| dt_timing_lte_5mhz());
    let cfg = TrackerConfig::new(pilots as usize, TimingParams::lte_5mhz());
    DtTrackerConfig {
        pilots,
        max_rank: cfg.max_rank as u32,
        beta: cfg.beta as u32,
        alpha: cfg.alpha,
        hold_off: cfg.hold_off as u32,
        timing: t,
    }
}

/// Creates a tracker. Free it with [`dt_tracker_free`].
///
/// # Safety
/// `config` and `out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_new(
    config: *const DtTrackerConfig,
    out: *mut *mut DtTracker,
) -> DtStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        *out = ptr::null_mut();
        let cfg = TrackerConfig {
            pilots: c.pilots as usize,
            max_rank: c.max_rank as usize,
            beta: c.beta as usize,
            alpha: c.alpha,
            hold_off: c.hold_off as usize,
            timing: timing_of(&c.timing)?,
        };
        let state = TrackerState::new(cfg).map_err(lift)?;
        *out = Box::into_raw(Box::new(DtTracker { state }));
        Ok(())
    })
}

/// # Safety
/// `tracker` must be null or come from [`dt_tracker_new`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_free(tracker: *mut DtTracker) {
    if !tracker.is_null() {
        drop(Box::from_raw(tracker));
    }
}

/// Feeds one observation of `pilots` complex values. `*has_estimate` is
/// set when the tracker emitted an estimate this step.
///
/// # Safety
/// `tracker` must be a live handle; `observation` must hold `2 * pilots`
/// doubles; `out` and `has_estimate` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_step(
    tracker: *mut DtTracker,
    observation: *const f64,
    pilots: usize,
    out: *mut DtEstimate,
    has_estimate: *mut bool,
) -> DtStatus {
    guard(|| {
        let t = tracker.as_mut().ok_or_else(null)?;
        if observation.is_null() {
            return Err(null());
        }
        let h = complex_vec(observation, pilots);
        let est = t.state.step(&h).map_err(lift)?;
        if let Some(flag) = has_estimate.as_mut() {
            *flag = est.is_some();
        }
        if let (Some(o), Some(e)) = (out.as_mut(), est) {
            *o = to_c(e);
        }
        Ok(())
    })
}

/// Latest estimate, including ones still inside the hold-off period.
///
/// # Safety
/// `tracker` must be a live handle; `out` and `has_estimate` must be null or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_latest(
    tracker: *const DtTracker,
    out: *mut DtEstimate,
    has_estimate: *mut bool,
) -> DtStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(null)?;
        let latest = t.state.latest();
        if let Some(flag) = has_estimate.as_mut() {
            *flag = latest.is_some();
        }
        if let (Some(o), Some(e)) = (out.as_mut(), latest) {
            *o = to_c(e);
        }
        Ok(())
    })
}

/// Symbols consumed; 0 for a null handle.
///
/// # Safety
/// `tracker` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_symbols(tracker: *const DtTracker) -> u64 {
    tracker.as_ref().map_or(0, |t| t.state.symbols())
}

/// Current MDL rank; 0 for a null handle.
///
/// # Safety
/// `tracker` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_rank(tracker: *const DtTracker) -> u32 {
    tracker.as_ref().map_or(0, |t| t.state.rank() as u32)
}

/// Copies the tracked basis of the lag-0 (`lag = 0`) or lag-beta
/// (`lag != 0`) tracker, `pilots x max_rank` complex values in row-major
/// order, into `out`.
///
/// # Safety
/// `tracker` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_basis(
    tracker: *const DtTracker,
    lag: u32,
    out: *mut f64,
    out_len: usize,
) -> DtStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(null)?;
        let lt = if lag == 0 {
            t.state.lag0()
        } else {
            t.state.lag_beta()
        };
        let q = lt.basis();
        let need = 2 * q.nrows() * q.ncols();
        if out_len < need {
            return Err(fail(
                DtStatus::BufferTooSmall,
                &format!("need {need} doubles, got {out_len}"),
            ));
        }
        if out.is_null() {
            return Err(null());
        }
        let dst = slice::from_raw_parts_mut(out, need);
        let mut k = 0;
        for i in 0..q.nrows() {
            for j in 0..q.ncols() {
                dst[k] = q[(i, j)].re;
                dst[k + 1] = q[(i, j)].im;
                k += 2;
            }
        }
        Ok(())
    })
}

/// Copies `|diag(R)|` (`max_rank` doubles) of the selected tracker.
///
/// # Safety
/// `tracker` must be a live handle; `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dt_tracker_rdiag(
    tracker: *const DtTracker,
    lag: u32,
    out: *mut f64,
    out_len: usize,
) -> DtStatus {
    guard(|| {
        let t = tracker.as_ref().ok_or_else(null)?;
        let lt = if lag == 0 {
            t.state.lag0()
        } else {
            t.state.lag_beta()
        };
        let r = lt.rdiag();
        if out_len < r.len() {
            return Err(fail(
                DtStatus::BufferTooSmall,
                &format!("need {} doubles, got {out_len}", r.len()),
            ));
        }
        if out.is_null() {
            return Err(null());
        }
        slice::from_raw_parts_mut(out, r.len()).copy_from_slice(r);
        Ok(())
    })
}
