//! C ABI over the heartbeat toolkit: the emitter behind opaque handles, and
//! buffer-based wrappers for the alignment primitives. Every function returns
//! a flat [`PmStatus`]; results come back through out-pointers.
//!
//! Ownership rules are the usual ones for handle APIs: a `*mut PmEmitter`
//! from [`pm_emitter_start`] is released by exactly one [`pm_emitter_stop`],
//! a `*mut PmThread` from [`pm_emitter_register_thread`] by exactly one
//! [`pm_thread_free`], in either order. Thread handles stay valid after the
//! emitter stops; their beats are simply no longer flushed anywhere.

use std::ffi::{c_char, CStr};
use std::path::PathBuf;
use std::slice;

use pulsemark::emitter::{start, EmitterConfig, EmitterSession, SinkSpec, ThreadHandle};
use pulsemark::similarity::{dtw, envelope, lb_keogh, CostKind};
use pulsemark::Error;

/// Result of every call in this interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    /// The call succeeded and any out-pointer was written.
    Ok = 0,
    /// A required pointer argument was null.
    NullArg = 1,
    /// A string argument was not valid UTF-8.
    BadUtf8 = 2,
    /// An argument was rejected by validation (empty input, infeasible band,
    /// duplicate thread id, zero flush interval, and the like).
    InvalidArg = 3,
    /// Two sequences that must have equal lengths did not.
    LengthMismatch = 4,
    /// The sink could not be opened or written.
    Io = 5,
}

/// Pointwise cost for the alignment functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmCost {
    /// |a - b|
    Abs = 0,
    /// (a - b)^2
    Sq = 1,
}

impl From<PmCost> for CostKind {
    fn from(c: PmCost) -> CostKind {
        match c {
            PmCost::Abs => CostKind::Absolute,
            PmCost::Sq => CostKind::Squared,
        }
    }
}

fn status_of(e: &Error) -> PmStatus {
    match e {
        Error::Io { .. } => PmStatus::Io,
        Error::LengthMismatch(..) => PmStatus::LengthMismatch,
        _ => PmStatus::InvalidArg,
    }
}

/// Heartbeat emitter session; create with [`pm_emitter_start`].
pub struct PmEmitter {
    session: EmitterSession,
}

/// Per-thread beat counter; create with [`pm_emitter_register_thread`].
pub struct PmThread {
    handle: ThreadHandle,
}

/// Version of the library as a static NUL-terminated string; never null,
/// never freed by the caller.
#[no_mangle]
pub extern "C" fn pm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Start a heartbeat emitter writing to the file at `path`, flushing every
/// `flush_interval_ms` milliseconds, stamping records with `trace_id`. On
/// success writes the new handle to `*out`.
///
/// # Safety
/// `trace_id` and `path` must point to NUL-terminated strings and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn pm_emitter_start(
    trace_id: *const c_char,
    path: *const c_char,
    flush_interval_ms: u64,
    out: *mut *mut PmEmitter,
) -> PmStatus {
    if trace_id.is_null() || path.is_null() || out.is_null() {
        return PmStatus::NullArg;
    }
    let Ok(trace_id) = CStr::from_ptr(trace_id).to_str() else {
        return PmStatus::BadUtf8;
    };
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return PmStatus::BadUtf8;
    };
    let config = EmitterConfig {
        flush_interval_ms,
        sink: SinkSpec::File(PathBuf::from(path)),
    };
    match start(&config, trace_id) {
        Ok(session) => {
            *out = Box::into_raw(Box::new(PmEmitter { session }));
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Register a beat counter for `thread_id` on a running emitter. Thread ids
/// must be unique within the session. On success writes the new handle to
/// `*out`.
///
/// # Safety
/// `emitter` must be a live handle from [`pm_emitter_start`] and `out` a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn pm_emitter_register_thread(
    emitter: *mut PmEmitter,
    thread_id: u32,
    out: *mut *mut PmThread,
) -> PmStatus {
    if emitter.is_null() || out.is_null() {
        return PmStatus::NullArg;
    }
    match (*emitter).session.register_thread(thread_id) {
        Ok(handle) => {
            *out = Box::into_raw(Box::new(PmThread { handle }));
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Count one heartbeat. Safe to call concurrently from the thread that owns
/// the handle while other threads beat their own handles; the counter is
/// atomic and the call never blocks.
///
/// # Safety
/// `thread` must be a live handle from [`pm_emitter_register_thread`].
#[no_mangle]
pub unsafe extern "C" fn pm_thread_beat(thread: *mut PmThread) -> PmStatus {
    if thread.is_null() {
        return PmStatus::NullArg;
    }
    (*thread).handle.beat();
    PmStatus::Ok
}

/// Release a thread handle. The emitter keeps flushing the thread's counter
/// until the session stops.
///
/// # Safety
/// `thread` must be a handle from [`pm_emitter_register_thread`] not yet
/// freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn pm_thread_free(thread: *mut PmThread) {
    if !thread.is_null() {
        drop(Box::from_raw(thread));
    }
}

/// Flush the final partial interval, stop the background flusher, and
/// release the emitter handle. The handle is invalid afterwards even though
/// outstanding thread handles remain safe to beat and free.
///
/// # Safety
/// `emitter` must be a handle from [`pm_emitter_start`] not yet stopped.
#[no_mangle]
pub unsafe extern "C" fn pm_emitter_stop(emitter: *mut PmEmitter) -> PmStatus {
    if emitter.is_null() {
        return PmStatus::NullArg;
    }
    let mut boxed = Box::from_raw(emitter);
    boxed.session.stop();
    PmStatus::Ok
}

/// Alignment distance between `q` (length `q_len`) and `c` (length `c_len`)
/// under the chosen cost, written to `*out`. A negative `band` means
/// unconstrained; a non-negative one restricts matching to |i - j| <= band
/// and must be at least the length difference.
///
/// # Safety
/// `q` and `c` must point to readable arrays of the stated lengths and `out`
/// to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_dtw(
    q: *const f64,
    q_len: usize,
    c: *const f64,
    c_len: usize,
    cost: PmCost,
    band: i64,
    out: *mut f64,
) -> PmStatus {
    if q.is_null() || c.is_null() || out.is_null() {
        return PmStatus::NullArg;
    }
    let q = slice::from_raw_parts(q, q_len);
    let c = slice::from_raw_parts(c, c_len);
    let band = usize::try_from(band).ok();
    match dtw(q, c, cost.into(), band) {
        Ok(d) => {
            *out = d;
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Envelope-based lower bound on the banded alignment distance between two
/// equal-length sequences, envelope half-width `w`, written to `*out`. The
/// bound never exceeds `pm_dtw` of the same pair with `band = w`.
///
/// # Safety
/// `q` and `c` must point to readable arrays of the stated lengths and `out`
/// to a writable double.
#[no_mangle]
pub unsafe extern "C" fn pm_lb_keogh(
    q: *const f64,
    q_len: usize,
    c: *const f64,
    c_len: usize,
    w: usize,
    cost: PmCost,
    out: *mut f64,
) -> PmStatus {
    if q.is_null() || c.is_null() || out.is_null() {
        return PmStatus::NullArg;
    }
    let q = slice::from_raw_parts(q, q_len);
    let c = slice::from_raw_parts(c, c_len);
    match lb_keogh(q, c, w, cost.into()) {
        Ok(v) => {
            *out = v;
            PmStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Running upper and lower bounds of `q` over the window [i - w, i + w],
/// written elementwise to `upper` and `lower`, each `q_len` long.
///
/// # Safety
/// `q` must point to a readable array and `upper` and `lower` to writable
/// arrays, all of length `q_len`.
#[no_mangle]
pub unsafe extern "C" fn pm_envelope(
    q: *const f64,
    q_len: usize,
    w: usize,
    upper: *mut f64,
    lower: *mut f64,
) -> PmStatus {
    if q.is_null() || upper.is_null() || lower.is_null() {
        return PmStatus::NullArg;
    }
    if q_len == 0 {
        return PmStatus::InvalidArg;
    }
    let q = slice::from_raw_parts(q, q_len);
    let env = envelope(q, w);
    slice::from_raw_parts_mut(upper, q_len).copy_from_slice(&env.u);
    slice::from_raw_parts_mut(lower, q_len).copy_from_slice(&env.l);
    PmStatus::Ok
}
