//! C ABI for `multibell`.
//!
//! Every function returns an [`MbStatus`]; results are written through out
//! pointers. After a status other than `MB_STATUS_OK`, [`mb_last_error_message`] describes
//! the failure on the calling thread. Handles are opaque and must be released
//! with the matching `*_free` function. Panics never cross the boundary: they
//! are reported as `MB_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use multibell::bell::{self, BellArgs, BellError};
use multibell::multidiff::{self, DiffError, MultiIndex, YCache};
use multibell::symbolic::{self, Expr, ExprContext, ExprError, SymbolicProvider};

/// Status codes shared by every function of the interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument is malformed: bad lengths, invalid UTF-8, block counts.
    InvalidArgument = 2,
    /// The expression text could not be parsed.
    Parse = 3,
    /// A function was evaluated outside its domain (log of a non-positive
    /// value, division by zero).
    Domain = 4,
    /// Multi-index, point and expression disagree on the number of variables.
    Arity = 5,
    /// The requested total order exceeds the supported cap.
    OrderCap = 6,
    /// The result overflowed to infinity or NaN.
    NonFinite = 7,
    /// A log-form session was created for a `g` that vanishes at the point.
    ZeroValue = 8,
    /// The operation needs a session of the other kind.
    WrongSession = 9,
    /// The symbolic oracle ran out of nodes or time.
    Budget = 10,
    /// An internal panic was caught.
    Panic = 11,
}

/// Parsed expression over `x1..xn`.
pub struct MbExpr {
    expr: Expr,
    arity: usize,
}

/// A provider bound to one expression and one point, plus its memo cache.
/// Created either for `exp(f)` or, in log form, for a non-zero `g`.
pub struct MbSession {
    provider: SymbolicProvider,
    cache: YCache,
    /// Value of `g` at the point for log-form sessions.
    g_value: Option<f64>,
}

struct Failure {
    status: MbStatus,
    message: String,
}

impl Failure {
    fn new(status: MbStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<BellError> for Failure {
    fn from(e: BellError) -> Self {
        let status = match e {
            BellError::BinomialRange { .. } => MbStatus::OrderCap,
            _ => MbStatus::InvalidArgument,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<ExprError> for Failure {
    fn from(e: ExprError) -> Self {
        let status = match e {
            ExprError::Parse(_) => MbStatus::Parse,
            ExprError::VariableOutOfRange { .. } | ExprError::PointLength { .. } => MbStatus::Arity,
            ExprError::Domain { .. } => MbStatus::Domain,
            ExprError::TreeTooLarge { .. } | ExprError::BudgetExceeded { .. } => MbStatus::Budget,
        };
        Failure::new(status, e.to_string())
    }
}

impl From<DiffError> for Failure {
    fn from(e: DiffError) -> Self {
        let status = match &e {
            DiffError::ArityMismatch { .. } | DiffError::CacheArity { .. } => MbStatus::Arity,
            DiffError::OrderCap { .. } => MbStatus::OrderCap,
            DiffError::ZeroValue => MbStatus::ZeroValue,
            DiffError::NonFinite(_) => MbStatus::NonFinite,
            DiffError::Provider { source, .. } => match source.downcast_ref::<ExprError>() {
                Some(inner) => Failure::from(inner.clone()).status,
                None => MbStatus::InvalidArgument,
            },
        };
        Failure::new(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> MbStatus {
    let failure = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            return MbStatus::Ok;
        }
        Ok(Err(f)) => f,
        Err(payload) => {
            let message = payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Failure::new(MbStatus::Panic, message)
        }
    };
    set_last_error(&failure.message);
    failure.status
}

fn null(name: &str) -> Failure {
    Failure::new(MbStatus::NullPointer, format!("`{name}` is null"))
}

/// # Safety
/// `data` must point to `len` readable values, or may be null when `len` is 0.
unsafe fn slice<'a, T>(data: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

/// Clears a handle out-slot so a failed constructor leaves null behind.
///
/// # Safety
/// `out` must be null or valid for a write of a pointer.
unsafe fn reset<T>(out: *mut *mut T) {
    if !out.is_null() {
        out.write(ptr::null_mut());
    }
}

/// # Safety
/// `handle` must be null or a live handle created by this library.
unsafe fn borrow<'a, T>(handle: *const T, name: &str) -> Result<&'a T, Failure> {
    handle.as_ref().ok_or_else(|| null(name))
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next call into this library on the same
/// thread.
#[no_mangle]
pub extern "C" fn mb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Complete Bell polynomial `Y_n(z_1, ..., z_n)` with `n = len`.
///
/// # Safety
/// `z` must point to `len` doubles (or be null when `len` is 0) and `out` to
/// one writable double.
#[no_mangle]
pub unsafe extern "C" fn mb_complete_bell(z: *const f64, len: usize, out: *mut f64) -> MbStatus {
    guard(|| {
        let z = slice(z, len, "z")?;
        write(out, bell::complete_bell(BellArgs::new(z))?)
    })
}

/// Incomplete Bell polynomial `B_{n,k}(z_1, ..., z_{n-k+1})`.
///
/// # Safety
/// As for [`mb_complete_bell`].
#[no_mangle]
pub unsafe extern "C" fn mb_incomplete_bell(
    n: usize,
    k: usize,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let z = slice(z, len, "z")?;
        write(out, bell::incomplete_bell(n, k, z)?)
    })
}

/// Parses a NUL-terminated expression over `x1..x{arity}`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer slot.
/// On success `*out` owns a handle to be released with [`mb_expr_free`].
#[no_mangle]
pub unsafe extern "C" fn mb_expr_parse(
    text: *const c_char,
    arity: usize,
    out: *mut *mut MbExpr,
) -> MbStatus {
    reset(out);
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| {
            Failure::new(MbStatus::InvalidArgument, "expression is not valid UTF-8")
        })?;
        let expr = symbolic::parse(text, arity).map_err(ExprError::from)?;
        write(out, Box::into_raw(Box::new(MbExpr { expr, arity })))
    })
}

/// Releases an expression. Null is ignored.
///
/// # Safety
/// `expr` must be null or a handle from [`mb_expr_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_expr_free(expr: *mut MbExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Evaluates the expression at `point` (`len` must equal its arity).
///
/// # Safety
/// `expr` must be a live handle, `point` must hold `len` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_expr_evaluate(
    expr: *const MbExpr,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let expr = borrow(expr, "expr")?;
        let point = point_for(expr, point, len)?;
        write(out, symbolic::evaluate(&expr.expr, point)?)
    })
}

unsafe fn point_for<'a>(
    expr: &MbExpr,
    point: *const f64,
    len: usize,
) -> Result<&'a [f64], Failure> {
    if len != expr.arity {
        return Err(ExprError::PointLength {
            expected: expr.arity,
            got: len,
        }
        .into());
    }
    slice(point, len, "point")
}

unsafe fn index_for(orders: *const u32, len: usize) -> Result<MultiIndex, Failure> {
    Ok(MultiIndex::new(slice(orders, len, "orders")?.to_vec()))
}

/// Session for derivatives of `exp(f)` at `point`.
///
/// # Safety
/// `f` must be a live handle, `point` must hold `len` doubles and `out` must
/// be a writable pointer slot. The session does not borrow `f`.
#[no_mangle]
pub unsafe extern "C" fn mb_session_new(
    f: *const MbExpr,
    point: *const f64,
    len: usize,
    out: *mut *mut MbSession,
) -> MbStatus {
    reset(out);
    guard(|| {
        let f = borrow(f, "f")?;
        let point = point_for(f, point, len)?.to_vec();
        let provider = SymbolicProvider::new(f.expr.clone(), point)?;
        let session = MbSession {
            provider,
            cache: YCache::new(),
            g_value: None,
        };
        write(out, Box::into_raw(Box::new(session)))
    })
}

/// Log-form session for derivatives of a non-zero `g` at `point`.
///
/// # Safety
/// As for [`mb_session_new`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_new_log(
    g: *const MbExpr,
    point: *const f64,
    len: usize,
    out: *mut *mut MbSession,
) -> MbStatus {
    reset(out);
    guard(|| {
        let g = borrow(g, "g")?;
        let point = point_for(g, point, len)?.to_vec();
        let g_value = symbolic::evaluate(&g.expr, &point)?;
        if g_value == 0.0 {
            return Err(DiffError::ZeroValue.into());
        }
        let provider = symbolic::make_log_provider(&g.expr, ExprContext::new(point))?;
        let session = MbSession {
            provider,
            cache: YCache::new(),
            g_value: Some(g_value),
        };
        write(out, Box::into_raw(Box::new(session)))
    })
}

/// Releases a session. Null is ignored.
///
/// # Safety
/// `session` must be null or a live session handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mb_session_free(session: *mut MbSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// The tensor `Y_k` of the session's provider (for a log-form session this
/// is `T_k`).
///
/// # Safety
/// `session` must be live, `orders` must hold `len` values and `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mb_session_y_tensor(
    session: *const MbSession,
    orders: *const u32,
    len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let s = borrow(session, "session")?;
        let k = index_for(orders, len)?;
        write(out, multidiff::y_tensor(&k, &s.provider, &s.cache)?)
    })
}

/// Mixed partial `d^k exp(f)` for a session from [`mb_session_new`].
///
/// # Safety
/// As for [`mb_session_y_tensor`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_exp_derivative(
    session: *const MbSession,
    orders: *const u32,
    len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let s = borrow(session, "session")?;
        if s.g_value.is_some() {
            return Err(Failure::new(
                MbStatus::WrongSession,
                "session is in log form",
            ));
        }
        let k = index_for(orders, len)?;
        write(out, multidiff::exp_derivative(&k, &s.provider, &s.cache)?)
    })
}

/// Mixed partial `d^k g` for a session from [`mb_session_new_log`].
///
/// # Safety
/// As for [`mb_session_y_tensor`].
#[no_mangle]
pub unsafe extern "C" fn mb_session_general_derivative(
    session: *const MbSession,
    orders: *const u32,
    len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let s = borrow(session, "session")?;
        let g_value = s
            .g_value
            .ok_or_else(|| Failure::new(MbStatus::WrongSession, "session is not in log form"))?;
        let k = index_for(orders, len)?;
        write(
            out,
            multidiff::general_derivative(&k, g_value, &s.provider, &s.cache)?,
        )
    })
}

/// Number of provider evaluations made through the session's cache.
///
/// # Safety
/// `session` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mb_session_provider_calls(
    session: *const MbSession,
    out: *mut u64,
) -> MbStatus {
    guard(|| {
        let s = borrow(session, "session")?;
        write(out, s.cache.provider_call_count())
    })
}

/// Empties the session's cache and resets its counters.
///
/// # Safety
/// `session` must be live and not in use by another thread.
#[no_mangle]
pub unsafe extern "C" fn mb_session_clear(session: *mut MbSession) -> MbStatus {
    guard(|| {
        let s = session.as_mut().ok_or_else(|| null("session"))?;
        s.cache.clear();
        Ok(())
    })
}

/// Mixed partial `d^k exp(f)` by direct symbolic differentiation.
///
/// # Safety
/// `f` must be live, `point` must hold `point_len` doubles, `orders` must hold
/// `orders_len` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mb_oracle_derivative(
    f: *const MbExpr,
    point: *const f64,
    point_len: usize,
    orders: *const u32,
    orders_len: usize,
    out: *mut f64,
) -> MbStatus {
    guard(|| {
        let f = borrow(f, "f")?;
        let point = point_for(f, point, point_len)?;
        let k = index_for(orders, orders_len)?;
        if k.arity() != f.arity {
            return Err(DiffError::ArityMismatch {
                index: k.arity(),
                provider: f.arity,
            }
            .into());
        }
        write(out, symbolic::oracle_derivative(&f.expr, &k, point)?)
    })
}
