//! C ABI over `mcrx`.
//!
//! Objects cross the boundary as opaque handles created by `mcrx_*_new` /
//! `mcrx_*_from_*` functions and released with the matching `_free`.
//! Fallible calls return an [`McrxStatus`]; the message of the last failure
//! on the calling thread is available from [`mcrx_last_error`].
//!
//! The header `include/mcrx.h` is regenerated by the build script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcrx::queue::{self, ChainOptions, ChainSpec, RateSet, SteadyState};
use mcrx::sim::{self, SimConfig, SimResult};
use mcrx::{dosage, params, Error, SystemParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum McrxStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidParam = 4,
    Domain = 5,
    Infeasible = 6,
    EmptyInterval = 7,
    Numerical = 8,
    ChainTooLarge = 9,
    Simulation = 10,
    BufferSize = 11,
    Panic = 12,
}

impl From<&Error> for McrxStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => McrxStatus::Parse,
            Error::MissingKey(_) | Error::InvalidParam { .. } => McrxStatus::InvalidParam,
            Error::Capacity { .. }
            | Error::Domain { .. }
            | Error::AbsorbingChain { .. }
            | Error::StateOutOfRange { .. } => McrxStatus::Domain,
            Error::ChainTooLarge { .. } => McrxStatus::ChainTooLarge,
            Error::Numerical(_) => McrxStatus::Numerical,
            Error::Infeasible { .. } => McrxStatus::Infeasible,
            Error::EmptyInterval { .. } => McrxStatus::EmptyInterval,
            Error::Deadlock { .. } | Error::SimConfig(_) => McrxStatus::Simulation,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: McrxStatus, msg: impl Into<String>) -> McrxStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), McrxStatus>) -> McrxStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McrxStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(McrxStatus::Panic, "panic inside mcrx"),
    }
}

fn lift<T>(r: mcrx::Result<T>) -> Result<T, McrxStatus> {
    r.map_err(|e| fail(McrxStatus::from(&e), e.to_string()))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, McrxStatus> {
    p.as_ref().ok_or_else(|| fail(McrxStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), McrxStatus> {
    if out.is_null() {
        return Err(fail(McrxStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mcrx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Opaque system configuration.
pub struct McrxParams(SystemParams);

/// Opaque birth-death chain.
pub struct McrxChain(ChainSpec);

/// Opaque stationary distribution.
pub struct McrxSteadyState(SteadyState);

/// Opaque simulation result.
pub struct McrxSimResult(SimResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McrxRates {
    pub lambda: f64,
    pub mu: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub capacity: u64,
}

/// Lower-bound fields are NaN when `feasible` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McrxDoseBounds {
    pub q_min_rate: f64,
    pub q_max_rate: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub f_star: f64,
    pub feasible: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McrxSteadyMetrics {
    pub blocking: f64,
    pub unbind_throughput: f64,
    pub reject_throughput: f64,
    pub rejection_fraction: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McrxEventCounts {
    pub arrivals: u64,
    pub blocked: u64,
    pub unbinds: u64,
    pub rejects: u64,
}

/// The reference operating point. Never NULL.
#[no_mangle]
pub extern "C" fn mcrx_params_reference() -> *mut McrxParams {
    Box::into_raw(Box::new(McrxParams(SystemParams::reference())))
}

/// Parses a JSON config into `*out`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_params_from_json(json: *const c_char, out: *mut *mut McrxParams) -> McrxStatus {
    guard(|| {
        if json.is_null() {
            return Err(fail(McrxStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| fail(McrxStatus::InvalidUtf8, e.to_string()))?;
        let p = lift(params::load_params(text))?;
        write_out(out, Box::into_raw(Box::new(McrxParams(p))))
    })
}

/// # Safety
/// `p` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcrx_params_free(p: *mut McrxParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_params_capacity(p: *const McrxParams, out: *mut u64) -> McrxStatus {
    guard(|| {
        let p = deref(p, "params")?;
        write_out(out, lift(params::capacity(&p.0))?)
    })
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_rates(p: *const McrxParams, out: *mut McrxRates) -> McrxStatus {
    guard(|| {
        let p = deref(p, "params")?;
        let r = lift(RateSet::from_params(&p.0))?;
        write_out(
            out,
            McrxRates {
                lambda: r.lambda,
                mu: r.mu,
                gamma: r.gamma,
                gamma_prime: r.gamma_prime,
                gamma_a: r.gamma_a,
                gamma_b: r.gamma_b,
                capacity: r.capacity,
            },
        )
    })
}

/// Rejection rate for `(lambda, mu)`; never fails.
#[no_mangle]
pub extern "C" fn mcrx_rejection_rate(lambda: f64, mu: f64) -> f64 {
    queue::rejection_rate(lambda, mu)
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_gamma_prime(lambda: f64, mu: f64, out: *mut f64) -> McrxStatus {
    guard(|| write_out(out, lift(queue::gamma_prime(lambda, mu))?))
}

/// # Safety
/// `mu_i` and `gamma_i` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_state_rates(
    i: u64,
    receptors: u64,
    mu: f64,
    gamma: f64,
    mu_i: *mut f64,
    gamma_i: *mut f64,
) -> McrxStatus {
    guard(|| {
        let (m, g) = lift(queue::state_rates(i, receptors, mu, gamma))?;
        write_out(mu_i, m)?;
        write_out(gamma_i, g)
    })
}

/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_dose_bounds(p: *const McrxParams, out: *mut McrxDoseBounds) -> McrxStatus {
    guard(|| {
        let p = deref(p, "params")?;
        let b = lift(dosage::dose_bounds(&p.0))?;
        write_out(
            out,
            McrxDoseBounds {
                q_min_rate: b.q_min_rate.unwrap_or(f64::NAN),
                q_max_rate: b.q_max_rate,
                q_min: b.q_min.unwrap_or(f64::NAN),
                q_max: b.q_max,
                f_star: b.f_star,
                feasible: b.feasible,
            },
        )
    })
}

/// Builds the chain of `p`. A zero `capacity` or `receptors` keeps the
/// value derived from `p`.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_chain_new(
    p: *const McrxParams,
    capacity: u64,
    receptors: u64,
    out: *mut *mut McrxChain,
) -> McrxStatus {
    guard(|| {
        let p = deref(p, "params")?;
        let opts = ChainOptions {
            capacity: (capacity > 0).then_some(capacity),
            receptors: (receptors > 0).then_some(receptors),
            ..ChainOptions::default()
        };
        let chain = lift(queue::build_chain_with(&p.0, &opts))?;
        write_out(out, Box::into_raw(Box::new(McrxChain(chain))))
    })
}

/// # Safety
/// `c` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcrx_chain_free(c: *mut McrxChain) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Number of states `N_m + 1`; 0 for NULL.
///
/// # Safety
/// `c` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn mcrx_chain_state_count(c: *const McrxChain) -> usize {
    c.as_ref().map_or(0, |c| c.0.state_count())
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_steady_state(c: *const McrxChain, out: *mut *mut McrxSteadyState) -> McrxStatus {
    guard(|| {
        let c = deref(c, "chain")?;
        let ss = lift(queue::steady_state(&c.0))?;
        write_out(out, Box::into_raw(Box::new(McrxSteadyState(ss))))
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcrx_steady_state_free(s: *mut McrxSteadyState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Copies `P_0..P_{N_m}` into `buf`, which must hold exactly `len`
/// values where `len` is the chain's state count.
///
/// # Safety
/// `s` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mcrx_steady_state_probs(s: *const McrxSteadyState, buf: *mut f64, len: usize) -> McrxStatus {
    guard(|| {
        let s = deref(s, "steady state")?;
        copy_out(&s.0.probs, buf, len)
    })
}

/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_steady_state_metrics(s: *const McrxSteadyState, out: *mut McrxSteadyMetrics) -> McrxStatus {
    guard(|| {
        let s = &deref(s, "steady state")?.0;
        write_out(
            out,
            McrxSteadyMetrics {
                blocking: s.blocking,
                unbind_throughput: s.unbind_throughput,
                reject_throughput: s.reject_throughput,
                rejection_fraction: s.rejection_fraction(),
            },
        )
    })
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), McrxStatus> {
    if buf.is_null() {
        return Err(fail(McrxStatus::NullPointer, "buffer is null"));
    }
    if len != src.len() {
        return Err(fail(
            McrxStatus::BufferSize,
            format!("buffer holds {len} values, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, len);
    Ok(())
}

/// Simulates `replications` independent runs of `events` events each,
/// with a 10% warmup.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_simulate(
    c: *const McrxChain,
    events: u64,
    replications: usize,
    seed: u64,
    out: *mut *mut McrxSimResult,
) -> McrxStatus {
    guard(|| {
        let c = deref(c, "chain")?;
        let config = SimConfig::new(c.0.clone(), events, seed).with_replications(replications);
        let r = lift(sim::simulate(&config))?;
        write_out(out, Box::into_raw(Box::new(McrxSimResult(r))))
    })
}

/// # Safety
/// `r` must come from this library and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcrx_sim_result_free(r: *mut McrxSimResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Copies the pooled occupancy into `buf` (exactly the chain's state count).
///
/// # Safety
/// `r` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn mcrx_sim_result_occupancy(r: *const McrxSimResult, buf: *mut f64, len: usize) -> McrxStatus {
    guard(|| {
        let r = deref(r, "sim result")?;
        copy_out(&r.0.occupancy, buf, len)
    })
}

/// Event counts summed over replications, from time 0.
///
/// # Safety
/// `r` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mcrx_sim_result_counts(r: *const McrxSimResult, out: *mut McrxEventCounts) -> McrxStatus {
    guard(|| {
        let c = deref(r, "sim result")?.0.counts;
        write_out(
            out,
            McrxEventCounts {
                arrivals: c.arrivals,
                blocked: c.blocked,
                unbinds: c.unbinds,
                rejects: c.rejects,
            },
        )
    })
}
