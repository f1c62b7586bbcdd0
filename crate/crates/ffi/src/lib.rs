//! C ABI over `reinforce_sim`.
//!
//! Every function returns an [`RsStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and can be copied out
//! with [`rs_last_error_message`]. Handles are opaque and must be released
//! with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_traits::ToPrimitive;
use reinforce_sim::coupling::{run_coupling, CouplingOptions};
use reinforce_sim::direct::{direct_step, ModelParams, ParticleConfig, WeightMap};
use reinforce_sim::distributions::{digamma, integrate_log_odds, BetaParams, RngStream};
use reinforce_sim::rwre::{criterion, Classification, ExtReal};
use reinforce_sim::urn::PolyaUrn;
use reinforce_sim::urn_process::{enumerate_exact, tv_distance, Model};
use reinforce_sim::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    SubUnitWeight = 3,
    NegativeMass = 4,
    Decoupled = 5,
    HorizonTooLarge = 6,
    SandwichViolation = 7,
    Quadrature = 8,
    Mismatch = 9,
    Insufficient = 10,
    Panic = 11,
}

impl From<&Error> for RsStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) => RsStatus::InvalidParameter,
            Error::SubUnitWeight { .. } => RsStatus::SubUnitWeight,
            Error::NegativeMass { .. } => RsStatus::NegativeMass,
            Error::Decoupled { .. } => RsStatus::Decoupled,
            Error::HorizonTooLarge { .. } => RsStatus::HorizonTooLarge,
            Error::SandwichViolation(_) => RsStatus::SandwichViolation,
            Error::Quadrature { .. } => RsStatus::Quadrature,
            Error::Mismatch(_) => RsStatus::Mismatch,
            Error::Insufficient(_) => RsStatus::Insufficient,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsClassification {
    TransientRight = 0,
    TransientLeft = 1,
    Recurrent = 2,
}

/// Criteria for i.i.d. Beta(alpha1, alpha2) right-jump probabilities.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsCriterion {
    /// E[log(p/(1-p))].
    pub log_odds_mean: f64,
    /// E[log((1-p)/p)].
    pub mu: f64,
    /// E[(1-p)/p]; only meaningful when `mean_inverse_odds_finite`.
    pub mean_inverse_odds: f64,
    pub mean_inverse_odds_finite: bool,
    pub classification: RsClassification,
    pub finite_mean_return: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsCouplingSummary {
    pub violations: u64,
    /// -1 when l = r was not reached within the budget.
    pub tau1_event: i64,
    pub max_rp_minus_lp: i64,
    pub events_run: u64,
}

/// Seeded random stream.
pub struct RsStream {
    inner: RngStream,
}

/// Direct weight dynamics of `n` particles.
pub struct RsDirect {
    params: ModelParams,
    weights: WeightMap,
    config: ParticleConfig,
    rng: RngStream,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), RsStatus>) -> RsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            RsStatus::Panic
        }
    }
}

fn fail(e: Error) -> RsStatus {
    let s = RsStatus::from(&e);
    set_error(e.to_string());
    s
}

fn out<T>(p: *mut T, v: T) -> Result<(), RsStatus> {
    if p.is_null() {
        set_error("null output pointer".into());
        return Err(RsStatus::NullPointer);
    }
    // SAFETY: non-null and, per the API contract, valid for writes.
    unsafe { p.write(v) };
    Ok(())
}

fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, RsStatus> {
    // SAFETY: per the API contract a non-null handle came from the matching
    // constructor and has not been freed.
    unsafe { p.as_mut() }.ok_or_else(|| {
        set_error("null handle".into());
        RsStatus::NullPointer
    })
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rs_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out_handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_stream_new(seed: u64, stream_id: u64, out_handle: *mut *mut RsStream) -> RsStatus {
    guard(|| {
        let h = Box::new(RsStream {
            inner: RngStream::new(seed, stream_id),
        });
        out(out_handle, Box::into_raw(h))
    })
}

/// Uniform draw in [0, 1).
///
/// # Safety
/// `stream` must be a live handle; `out_value` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_stream_uniform(stream: *mut RsStream, out_value: *mut f64) -> RsStatus {
    guard(|| {
        let s = handle(stream)?;
        out(out_value, s.inner.uniform())
    })
}

/// # Safety
/// `stream` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_stream_free(stream: *mut RsStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// # Safety
/// `out_value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_digamma(x: f64, out_value: *mut f64) -> RsStatus {
    guard(|| out(out_value, digamma(x).map_err(fail)?))
}

/// E[log(p/(1-p))] for p ~ Beta(alpha1, alpha2) by adaptive quadrature.
///
/// # Safety
/// `out_value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_log_odds_quadrature(alpha1: f64, alpha2: f64, out_value: *mut f64) -> RsStatus {
    guard(|| {
        let p = BetaParams::new(alpha1, alpha2).map_err(fail)?;
        out(out_value, integrate_log_odds(p).map_err(fail)?)
    })
}

/// # Safety
/// `out_result` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_criterion(alpha1: f64, alpha2: f64, out_result: *mut RsCriterion) -> RsStatus {
    guard(|| {
        let p = BetaParams::new(alpha1, alpha2).map_err(fail)?;
        let c = criterion(p).map_err(fail)?;
        let (mean_inverse_odds, finite) = match c.mean_inverse_odds {
            ExtReal::Finite(x) => (x, true),
            ExtReal::PosInfinity => (f64::INFINITY, false),
        };
        out(
            out_result,
            RsCriterion {
                log_odds_mean: c.log_odds_mean,
                mu: c.mu,
                mean_inverse_odds,
                mean_inverse_odds_finite: finite,
                classification: match c.classification {
                    Classification::TransientRight => RsClassification::TransientRight,
                    Classification::TransientLeft => RsClassification::TransientLeft,
                    Classification::Recurrent => RsClassification::Recurrent,
                },
                finite_mean_return: c.finite_mean_return,
            },
        )
    })
}

/// Limit law Beta(red/d, blue/d) of a Polya urn's red fraction.
///
/// # Safety
/// The out pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_polya_limit_law(
    red: f64,
    blue: f64,
    d: f64,
    out_alpha: *mut f64,
    out_beta: *mut f64,
) -> RsStatus {
    guard(|| {
        let law = PolyaUrn::new(red, blue, d)
            .and_then(|u| u.limit_law())
            .map_err(fail)?;
        out(out_alpha, law.alpha())?;
        out(out_beta, law.beta())
    })
}

/// Exact total-variation distance between the direct and urn trajectory
/// laws up to `horizon` jumps.
///
/// # Safety
/// `out_tv` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_urn_verify(
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    horizon: usize,
    allow_sub_unit: bool,
    out_tv: *mut f64,
) -> RsStatus {
    guard(|| {
        let params = ModelParams::new(a, delta, l0, r0).map_err(fail)?;
        let d = enumerate_exact(Model::Direct, &params, horizon, allow_sub_unit).map_err(fail)?;
        let u = enumerate_exact(Model::Urn, &params, horizon, allow_sub_unit).map_err(fail)?;
        let tv = tv_distance(&d, &u).map_err(fail)?;
        out(out_tv, tv.to_f64().unwrap_or(f64::INFINITY))
    })
}

/// One coupled run until l = r or `max_events` events.
///
/// # Safety
/// `out_summary` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_coupling_run(
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    max_events: u64,
    seed: u64,
    stream_id: u64,
    env_seed: u64,
    out_summary: *mut RsCouplingSummary,
) -> RsStatus {
    guard(|| {
        let params = ModelParams::new(a, delta, l0, r0).map_err(fail)?;
        let mut rng = RngStream::new(seed, stream_id);
        let (s, _) = run_coupling(&params, max_events, env_seed, &mut rng, CouplingOptions::default())
            .map_err(fail)?;
        out(
            out_summary,
            RsCouplingSummary {
                violations: s.violations,
                tau1_event: s.tau1_event.map_or(-1, |e| e as i64),
                max_rp_minus_lp: s.max_rp_minus_lp,
                events_run: s.events_run,
            },
        )
    })
}

/// # Safety
/// `out_handle` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_direct_new(
    a: f64,
    delta: f64,
    l0: i64,
    r0: i64,
    n_particles: usize,
    seed: u64,
    stream_id: u64,
    out_handle: *mut *mut RsDirect,
) -> RsStatus {
    guard(|| {
        let params = ModelParams::new(a, delta, l0, r0).map_err(fail)?;
        if n_particles == 0 {
            return Err(fail(Error::InvalidParameter("need at least one particle".into())));
        }
        let h = Box::new(RsDirect {
            params,
            weights: WeightMap::new(),
            config: ParticleConfig::start(&params, n_particles),
            rng: RngStream::new(seed, stream_id),
        });
        out(out_handle, Box::into_raw(h))
    })
}

/// Advance one event; reports the mover and its jump.
///
/// # Safety
/// `sim` must be a live handle; out pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rs_direct_step(
    sim: *mut RsDirect,
    out_particle: *mut usize,
    out_from: *mut i64,
    out_to: *mut i64,
) -> RsStatus {
    guard(|| {
        let s = handle(sim)?;
        let (p, from, to) = direct_step(&mut s.weights, &mut s.config, &s.params, &mut s.rng);
        out(out_particle, p)?;
        out(out_from, from)?;
        out(out_to, to)
    })
}

/// Copy up to `len` particle positions into `buf`; writes the particle count.
///
/// # Safety
/// `sim` must be a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn rs_direct_positions(
    sim: *mut RsDirect,
    buf: *mut i64,
    len: usize,
    out_count: *mut usize,
) -> RsStatus {
    guard(|| {
        let s = handle(sim)?;
        let pos = &s.config.positions;
        if len > 0 && buf.is_null() {
            set_error("null position buffer".into());
            return Err(RsStatus::NullPointer);
        }
        let n = pos.len().min(len);
        if n > 0 {
            std::ptr::copy_nonoverlapping(pos.as_ptr(), buf, n);
        }
        out(out_count, pos.len())
    })
}

/// # Safety
/// `sim` must be null or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_direct_free(sim: *mut RsDirect) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
