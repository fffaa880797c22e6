//! C ABI over the `repcl` crate.
//!
//! Objects are opaque handles created by `*_new`/`*_load`/`*_initial`/
//! `*_decode` functions and released by the matching `*_free`. Every fallible
//! call returns a [`RepclStatus`]; on failure a description is available from
//! [`repcl_last_error_message`] on the same thread. Results are written
//! through out-pointers, which are left untouched on failure.
//!
//! Handles are not synchronized: a session must not be used from two threads
//! at once. Configs, timestamps and traces are immutable after creation.
//!
//! # Safety
//!
//! Every pointer argument must be null or valid for its use: handles must
//! come from this library and not yet be freed, buffers must hold `cap`
//! elements, and strings must be NUL-terminated.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use repcl::clock::{self, ClockConfig, Timestamp};
use repcl::codec::{self, CodecLayout};
use repcl::replay::{ReplayError, ReplaySession};
use repcl::sim::{self, Trace};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepclStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Clock = 3,
    Codec = 4,
    Trace = 5,
    NotInFrontline = 6,
    /// The output buffer is too short; the required length was written.
    BufferTooSmall = 7,
    /// The session has no events left to replay.
    SessionComplete = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepclOrdering {
    Before = 0,
    After = 1,
    Concurrent = 2,
}

impl From<clock::Ordering> for RepclOrdering {
    fn from(o: clock::Ordering) -> Self {
        match o {
            clock::Ordering::Before => RepclOrdering::Before,
            clock::Ordering::After => RepclOrdering::After,
            clock::Ordering::Concurrent => RepclOrdering::Concurrent,
        }
    }
}

/// Clock parameters: process count, skew bound and epoch length.
pub struct RepclConfig(ClockConfig);

pub struct RepclTimestamp(Timestamp);

/// A loaded trace. Sessions keep their trace alive, so the handle may be
/// freed while sessions created from it are still in use.
pub struct RepclTrace(Arc<Trace>);

pub struct RepclSession(ReplaySession);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(RepclStatus, String);

impl Fail {
    fn new(status: RepclStatus, msg: impl ToString) -> Self {
        Fail(status, msg.to_string())
    }
}

/// Runs `f`, converting errors and panics to a status and recording the
/// message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RepclStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RepclStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            RepclStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    // SAFETY: the caller passes either null or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Fail::new(RepclStatus::NullPointer, format!("{what} is null")))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    // SAFETY: as for `get`, and the handle is not aliased for the call.
    unsafe { p.as_mut() }.ok_or_else(|| Fail::new(RepclStatus::NullPointer, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(RepclStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: non-null and, by contract, valid for writes.
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(RepclStatus::NullPointer, "output pointer is null"));
    }
    // SAFETY: as for `put`.
    unsafe { out.write(Box::into_raw(Box::new(value))) };
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: `p` came from `Box::into_raw` in this library and is freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Copies `src` into a caller buffer of `cap` elements. Always reports the
/// full length through `out_len`.
unsafe fn copy_out(src: &[u64], buf: *mut u64, cap: usize, out_len: *mut usize) -> Result<(), Fail> {
    unsafe { put(out_len, src.len())? };
    if src.len() > cap {
        return Err(Fail::new(
            RepclStatus::BufferTooSmall,
            format!("need {} elements, buffer holds {cap}", src.len()),
        ));
    }
    if !src.is_empty() {
        if buf.is_null() {
            return Err(Fail::new(RepclStatus::NullPointer, "buffer is null"));
        }
        // SAFETY: `buf` is valid for `cap >= src.len()` writes by contract.
        unsafe { ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    }
    Ok(())
}

fn clock_err(e: impl ToString) -> Fail {
    Fail::new(RepclStatus::Clock, e)
}

/// Message for the last failed call on this thread, or an empty string. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn repcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Skew bound `epsilon_us` and epoch length `interval_us` are in
/// microseconds; the interval must divide the bound.
#[no_mangle]
pub unsafe extern "C" fn repcl_config_new(
    n: usize,
    epsilon_us: u64,
    interval_us: u64,
    out: *mut *mut RepclConfig,
) -> RepclStatus {
    guard(|| {
        let cfg = ClockConfig::new(n, epsilon_us, interval_us).map_err(clock_err)?;
        unsafe { put_handle(out, RepclConfig(cfg)) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_config_free(cfg: *mut RepclConfig) {
    unsafe { free(cfg) }
}

/// The skew bound in epochs, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn repcl_config_epsilon(cfg: *const RepclConfig) -> u64 {
    unsafe { cfg.as_ref() }.map_or(0, |c| c.0.epsilon())
}

/// Epoch of physical time `pt_us`.
#[no_mangle]
pub unsafe extern "C" fn repcl_derive_epoch(
    cfg: *const RepclConfig,
    pt_us: u64,
    out: *mut u64,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        unsafe { put(out, clock::derive_epoch(pt_us, &cfg.0)) }
    })
}

/// Timestamp of a process before its first event.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_initial(
    cfg: *const RepclConfig,
    owner: usize,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        if owner >= cfg.0.n() {
            return Err(Fail::new(
                RepclStatus::InvalidArgument,
                format!("owner {owner} out of range for n={}", cfg.0.n()),
            ));
        }
        unsafe { put_handle(out, RepclTimestamp(Timestamp::initial(owner))) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_free(ts: *mut RepclTimestamp) {
    unsafe { free(ts) }
}

#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_clone(
    ts: *const RepclTimestamp,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        let ts = unsafe { get(ts, "timestamp")? };
        unsafe { put_handle(out, RepclTimestamp(ts.0.clone())) }
    })
}

/// New timestamp for a local or send event at local epoch `epoch_now`.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_advance(
    cfg: *const RepclConfig,
    ts: *const RepclTimestamp,
    epoch_now: u64,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        let ts = unsafe { get(ts, "timestamp")? };
        ts.0.validate(&cfg.0).map_err(clock_err)?;
        let next = clock::advance(&ts.0, epoch_now, &cfg.0);
        unsafe { put_handle(out, RepclTimestamp(next)) }
    })
}

/// New timestamp for receiving a message stamped `msg` on the process whose
/// latest timestamp is `local`, at local epoch `epoch_now`.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_receive(
    cfg: *const RepclConfig,
    local: *const RepclTimestamp,
    msg: *const RepclTimestamp,
    epoch_now: u64,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        let local = unsafe { get(local, "local timestamp")? };
        let msg = unsafe { get(msg, "message timestamp")? };
        local.0.validate(&cfg.0).map_err(clock_err)?;
        msg.0.validate(&cfg.0).map_err(clock_err)?;
        let next = clock::receive(&local.0, &msg.0, epoch_now, &cfg.0);
        unsafe { put_handle(out, RepclTimestamp(next)) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_compare(
    cfg: *const RepclConfig,
    e: *const RepclTimestamp,
    f: *const RepclTimestamp,
    out: *mut RepclOrdering,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        let e = unsafe { get(e, "first timestamp")? };
        let f = unsafe { get(f, "second timestamp")? };
        unsafe { put(out, clock::compare(&e.0, &f.0, &cfg.0).into()) }
    })
}

/// Largest epoch the timestamp knows of, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_mx(ts: *const RepclTimestamp) -> u64 {
    unsafe { ts.as_ref() }.map_or(0, |t| t.0.mx())
}

#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_owner(ts: *const RepclTimestamp) -> usize {
    unsafe { ts.as_ref() }.map_or(0, |t| t.0.owner())
}

/// Offset of process `proc`; epsilon when no entry is stored.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_offset(
    cfg: *const RepclConfig,
    ts: *const RepclTimestamp,
    proc_: usize,
    out: *mut u64,
) -> RepclStatus {
    guard(|| {
        let cfg = unsafe { get(cfg, "config")? };
        let ts = unsafe { get(ts, "timestamp")? };
        unsafe { put(out, ts.0.offset(proc_, &cfg.0)) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_counter(ts: *const RepclTimestamp, proc_: usize) -> u64 {
    unsafe { ts.as_ref() }.map_or(0, |t| t.0.counter(proc_))
}

fn layout(n: usize, offset_bits: u32, counter_bits: u32) -> Result<CodecLayout, Fail> {
    CodecLayout::new(n, offset_bits, counter_bits).map_err(|e| Fail::new(RepclStatus::Codec, e))
}

/// Encodes into `buf` (capacity `cap` words). The word count is written to
/// `out_len` even when the buffer is too small.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_encode(
    ts: *const RepclTimestamp,
    n: usize,
    offset_bits: u32,
    counter_bits: u32,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> RepclStatus {
    guard(|| {
        let ts = unsafe { get(ts, "timestamp")? };
        let l = layout(n, offset_bits, counter_bits)?;
        let words = codec::encode(&ts.0, &l).map_err(|e| Fail::new(RepclStatus::Codec, e))?;
        unsafe { copy_out(&words, buf, cap, out_len) }
    })
}

/// Decodes `len` words produced by [`repcl_timestamp_encode`] with the same
/// layout. The owner is not part of the encoding and must be supplied.
#[no_mangle]
pub unsafe extern "C" fn repcl_timestamp_decode(
    words: *const u64,
    len: usize,
    n: usize,
    offset_bits: u32,
    counter_bits: u32,
    owner: usize,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        if words.is_null() && len > 0 {
            return Err(Fail::new(RepclStatus::NullPointer, "words is null"));
        }
        let slice = if len == 0 {
            &[][..]
        } else {
            // SAFETY: non-null and valid for `len` reads by contract.
            unsafe { std::slice::from_raw_parts(words, len) }
        };
        let l = layout(n, offset_bits, counter_bits)?;
        let ts = codec::decode(slice, &l, owner).map_err(|e| Fail::new(RepclStatus::Codec, e))?;
        unsafe { put_handle(out, RepclTimestamp(ts)) }
    })
}

/// Loads a JSON-lines trace file.
#[no_mangle]
pub unsafe extern "C" fn repcl_trace_load(path: *const c_char, out: *mut *mut RepclTrace) -> RepclStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::new(RepclStatus::NullPointer, "path is null"));
        }
        // SAFETY: non-null, NUL-terminated by contract.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|e| Fail::new(RepclStatus::InvalidArgument, format!("path is not UTF-8: {e}")))?;
        let t = sim::read_trace(path).map_err(|e| Fail::new(RepclStatus::Trace, format!("{path}: {e}")))?;
        unsafe { put_handle(out, RepclTrace(Arc::new(t))) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_trace_free(trace: *mut RepclTrace) {
    unsafe { free(trace) }
}

/// Number of events, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn repcl_trace_len(trace: *const RepclTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.0.events.len())
}

/// Copy of the timestamp of the event at `index` in trace order.
#[no_mangle]
pub unsafe extern "C" fn repcl_trace_timestamp(
    trace: *const RepclTrace,
    index: usize,
    out: *mut *mut RepclTimestamp,
) -> RepclStatus {
    guard(|| {
        let t = unsafe { get(trace, "trace")? };
        let e = t.0.events.get(index).ok_or_else(|| {
            Fail::new(
                RepclStatus::InvalidArgument,
                format!("index {index} out of range for {} events", t.0.events.len()),
            )
        })?;
        unsafe { put_handle(out, RepclTimestamp(e.repcl.clone())) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_session_new(
    trace: *const RepclTrace,
    seed: u64,
    out: *mut *mut RepclSession,
) -> RepclStatus {
    guard(|| {
        let t = unsafe { get(trace, "trace")? };
        unsafe { put_handle(out, RepclSession(ReplaySession::new(t.0.clone(), seed))) }
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_session_free(session: *mut RepclSession) {
    unsafe { free(session) }
}

/// Replays `event_id`, which must be in the current frontline.
#[no_mangle]
pub unsafe extern "C" fn repcl_session_step(session: *mut RepclSession, event_id: u64) -> RepclStatus {
    guard(|| {
        let s = unsafe { get_mut(session, "session")? };
        s.0.step(event_id).map_err(|e| match e {
            ReplayError::NotInFrontline { .. } => Fail::new(RepclStatus::NotInFrontline, e),
            other => Fail::new(RepclStatus::InvalidArgument, other),
        })
    })
}

/// Replays a frontline event chosen by the session's generator and writes
/// its id, or returns `SessionComplete`.
#[no_mangle]
pub unsafe extern "C" fn repcl_session_auto_step(session: *mut RepclSession, out_event_id: *mut u64) -> RepclStatus {
    guard(|| {
        let s = unsafe { get_mut(session, "session")? };
        if out_event_id.is_null() {
            return Err(Fail::new(RepclStatus::NullPointer, "output pointer is null"));
        }
        let id = s
            .0
            .auto_step()
            .ok_or_else(|| Fail::new(RepclStatus::SessionComplete, "session is complete"))?;
        unsafe { put(out_event_id, id) }
    })
}

/// Restores the initial frontline and reseeds the generator.
#[no_mangle]
pub unsafe extern "C" fn repcl_session_reset(session: *mut RepclSession) -> RepclStatus {
    guard(|| {
        unsafe { get_mut(session, "session")? }.0.reset();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn repcl_session_remaining(session: *const RepclSession) -> usize {
    unsafe { session.as_ref() }.map_or(0, |s| s.0.remaining_count())
}

/// Event ids replayable next, ascending by trace position.
#[no_mangle]
pub unsafe extern "C" fn repcl_session_frontline(
    session: *const RepclSession,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> RepclStatus {
    guard(|| {
        let s = unsafe { get(session, "session")? };
        unsafe { copy_out(&s.0.frontline(), buf, cap, out_len) }
    })
}

/// Event ids replayed so far, in order.
#[no_mangle]
pub unsafe extern "C" fn repcl_session_prefix(
    session: *const RepclSession,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> RepclStatus {
    guard(|| {
        let s = unsafe { get(session, "session")? };
        unsafe { copy_out(&s.0.prefix(), buf, cap, out_len) }
    })
}
