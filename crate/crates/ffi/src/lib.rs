//! C ABI for the Quanty-Hall simulator.
//!
//! Every function returns a [`QhStatus`]; on failure the message is kept per
//! thread and can be copied out with [`qh_last_error_message`]. Sessions are
//! opaque handles created by [`qh_session_new`] and released with
//! [`qh_session_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use quanty_hall::adversary::{bell_curve, threshold_p, AttackKind, AttackPolicy, PairQubit};
use quanty_hall::bell::Verdict;
use quanty_hall::session::{run_session, write_transcript, SessionConfig, SessionOutput};
use quanty_hall::{Error, Protocol, ResidualId};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ProtocolError = 3,
    IoError = 4,
    BufferTooSmall = 5,
    NotRun = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhProtocol {
    Qutrit = 0,
    Qubit = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhAttack {
    None = 0,
    IrFirstLeg = 1,
    IrSecondLeg = 2,
    DoubleIr = 3,
    /// Qubit protocol: `A0` on the first leg, `A1` on the second.
    SingleQubitA0A1 = 4,
    /// Qubit protocol: `A1` on the first leg, `A0` on the second.
    SingleQubitA1A0 = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QhVerdict {
    Safe = 0,
    Compromised = 1,
}

/// Opaque session handle.
pub struct QhSession {
    config: SessionConfig,
    output: Option<SessionOutput>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: QhStatus, msg: impl Into<String>) -> QhStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> QhStatus {
    let status = match e {
        Error::Io(_) => QhStatus::IoError,
        Error::InvalidConfig(_)
        | Error::ProbabilityOutOfRange { .. }
        | Error::ChiTooLow(_)
        | Error::InvalidWeights(_) => QhStatus::InvalidArgument,
        _ => QhStatus::ProtocolError,
    };
    fail(status, e.to_string())
}

fn guard<F: FnOnce() -> QhStatus>(f: F) -> QhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(QhStatus::Panic, "internal panic"),
    }
}

fn protocol(p: QhProtocol) -> Protocol {
    match p {
        QhProtocol::Qutrit => Protocol::Qutrit,
        QhProtocol::Qubit => Protocol::Qubit,
    }
}

fn attack_kind(a: QhAttack) -> AttackKind {
    match a {
        QhAttack::None => AttackKind::None,
        QhAttack::IrFirstLeg => AttackKind::IrFirstLeg,
        QhAttack::IrSecondLeg => AttackKind::IrSecondLeg,
        QhAttack::DoubleIr => AttackKind::DoubleIr,
        QhAttack::SingleQubitA0A1 => AttackKind::SingleQubitIr {
            first: PairQubit::A0,
            second: PairQubit::A1,
        },
        QhAttack::SingleQubitA1A0 => AttackKind::SingleQubitIr {
            first: PairQubit::A1,
            second: PairQubit::A0,
        },
    }
}

/// Copy the last error message of this thread into `buf` (NUL-terminated,
/// truncated to fit). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qh_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// `|Bell value|` of residual `residual` (0, 1 or 2) when Eve runs the
/// two-leg attack with probability `p`.
///
/// # Safety
/// `out` must be NULL or a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn qh_bell_value(
    proto: QhProtocol,
    residual: u32,
    p: f64,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        let id = match ResidualId::from_index(residual as usize) {
            Ok(id) => id,
            Err(e) => return from_error(e),
        };
        match bell_curve(protocol(proto), id, p) {
            Ok(v) => {
                *out = v;
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Attack probability at which the Bell value reaches the classical bound.
///
/// # Safety
/// `out` must be NULL or a valid pointer to a `double`.
#[no_mangle]
pub unsafe extern "C" fn qh_threshold(proto: QhProtocol, out: *mut f64) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match threshold_p(protocol(proto)) {
            Ok(v) => {
                *out = v;
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Create an unattacked session in exact Bell mode.
///
/// # Safety
/// `out` must be NULL or a valid pointer; on success it receives a handle that
/// must be released with [`qh_session_free`].
#[no_mangle]
pub unsafe extern "C" fn qh_session_new(
    proto: QhProtocol,
    rounds: usize,
    chi: f64,
    seed: u64,
    out: *mut *mut QhSession,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match SessionConfig::new(protocol(proto), rounds, chi, seed) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(QhSession {
                    config,
                    output: None,
                }));
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Set the eavesdropper and channel noise; discards any previous run.
///
/// # Safety
/// `session` must be NULL or a live handle from [`qh_session_new`].
#[no_mangle]
pub unsafe extern "C" fn qh_session_set_attack(
    session: *mut QhSession,
    attack: QhAttack,
    p: f64,
    noise: f64,
) -> QhStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(QhStatus::NullPointer, "session is NULL");
        };
        let policy = match AttackPolicy::new(attack_kind(attack), p, noise) {
            Ok(policy) => policy,
            Err(e) => return from_error(e),
        };
        match s.config.clone().with_attack(policy) {
            Ok(config) => {
                s.config = config;
                s.output = None;
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `session` must be NULL or a live handle from [`qh_session_new`].
#[no_mangle]
pub unsafe extern "C" fn qh_session_run(session: *mut QhSession) -> QhStatus {
    guard(|| {
        let Some(s) = session.as_mut() else {
            return fail(QhStatus::NullPointer, "session is NULL");
        };
        match run_session(&s.config) {
            Ok(out) => {
                s.output = Some(out);
                QhStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

unsafe fn output<'a>(session: *const QhSession) -> Result<&'a SessionOutput, QhStatus> {
    let s = session
        .as_ref()
        .ok_or_else(|| fail(QhStatus::NullPointer, "session is NULL"))?;
    s.output
        .as_ref()
        .ok_or_else(|| fail(QhStatus::NotRun, "session has not been run"))
}

/// Number of key bits, available after [`qh_session_run`].
///
/// # Safety
/// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_session_key_len(
    session: *const QhSession,
    out: *mut usize,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match output(session) {
            Ok(o) => {
                *out = o.result.key_alice.len();
                QhStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Copy both raw keys, one bit per byte, into buffers of `len` bytes.
///
/// # Safety
/// `session` must be NULL or a live handle; `alice` and `bob` NULL or
/// pointers to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qh_session_keys(
    session: *const QhSession,
    alice: *mut u8,
    bob: *mut u8,
    len: usize,
) -> QhStatus {
    guard(|| {
        if alice.is_null() || bob.is_null() {
            return fail(QhStatus::NullPointer, "key buffer is NULL");
        }
        let o = match output(session) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let n = o.result.key_alice.len();
        if len < n {
            return fail(
                QhStatus::BufferTooSmall,
                format!("need {n} bytes, got {len}"),
            );
        }
        ptr::copy_nonoverlapping(o.result.key_alice.as_ptr(), alice, n);
        ptr::copy_nonoverlapping(o.result.key_bob.as_ptr(), bob, n);
        QhStatus::Ok
    })
}

/// # Safety
/// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_session_mean_bell(
    session: *const QhSession,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match output(session) {
            Ok(o) => {
                *out = o.result.mean_bell;
                QhStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Fraction of rounds whose key bit Eve learned.
///
/// # Safety
/// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_session_eve_known_fraction(
    session: *const QhSession,
    out: *mut f64,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match output(session) {
            Ok(o) => {
                *out = o.result.eve_known_fraction;
                QhStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// # Safety
/// `session` must be NULL or a live handle; `out` NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qh_session_verdict(
    session: *const QhSession,
    out: *mut QhVerdict,
) -> QhStatus {
    guard(|| {
        if out.is_null() {
            return fail(QhStatus::NullPointer, "out is NULL");
        }
        match output(session) {
            Ok(o) => {
                *out = match o.result.verdict {
                    Verdict::Safe => QhVerdict::Safe,
                    Verdict::Compromised => QhVerdict::Compromised,
                };
                QhStatus::Ok
            }
            Err(status) => status,
        }
    })
}

/// Write the transcript as JSON lines to the UTF-8 path `path`.
///
/// # Safety
/// `session` must be NULL or a live handle; `path` NULL or a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn qh_session_write_transcript(
    session: *const QhSession,
    path: *const c_char,
) -> QhStatus {
    guard(|| {
        if path.is_null() {
            return fail(QhStatus::NullPointer, "path is NULL");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(QhStatus::InvalidArgument, "path is not UTF-8");
        };
        let o = match output(session) {
            Ok(o) => o,
            Err(status) => return status,
        };
        let file = match File::create(path) {
            Ok(f) => f,
            Err(e) => return fail(QhStatus::IoError, format!("{path}: {e}")),
        };
        match write_transcript(BufWriter::new(file), &o.transcript) {
            Ok(()) => QhStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Release a handle; NULL is ignored.
///
/// # Safety
/// `session` must be NULL or a handle from [`qh_session_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qh_session_free(session: *mut QhSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}
