use std::ffi::{CStr, CString};
use std::ptr;

use multibell_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mb_last_error_message()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn parse(text: &str, arity: usize) -> *mut MbExpr {
    let text = CString::new(text).unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(
        unsafe { mb_expr_parse(text.as_ptr(), arity, &mut e) },
        MbStatus::Ok
    );
    assert!(!e.is_null());
    e
}

#[test]
fn bell_polynomials() {
    let mut out = 0.0;
    let ones = [1.0; 10];
    assert_eq!(
        unsafe { mb_complete_bell(ones.as_ptr(), 10, &mut out) },
        MbStatus::Ok
    );
    assert_eq!(out, 115_975.0);
    assert_eq!(
        unsafe { mb_complete_bell(ptr::null(), 0, &mut out) },
        MbStatus::Ok
    );
    assert_eq!(out, 1.0);
    let z = [2.0, 3.0];
    assert_eq!(
        unsafe { mb_incomplete_bell(3, 2, z.as_ptr(), 2, &mut out) },
        MbStatus::Ok
    );
    assert_eq!(out, 18.0);

    assert_eq!(
        unsafe { mb_incomplete_bell(3, 4, z.as_ptr(), 2, &mut out) },
        MbStatus::InvalidArgument
    );
    assert!(last_error().contains("exceeds"));
    assert_eq!(
        unsafe { mb_complete_bell(ptr::null(), 3, &mut out) },
        MbStatus::NullPointer
    );
    assert_eq!(
        unsafe { mb_complete_bell(ones.as_ptr(), 3, ptr::null_mut()) },
        MbStatus::NullPointer
    );
    assert_eq!(
        unsafe { mb_complete_bell(ones.as_ptr(), 3, &mut out) },
        MbStatus::Ok
    );
    assert_eq!(last_error(), "");
}

#[test]
fn expressions() {
    let e = parse("x1*sin(x2)", 2);
    let mut out = 0.0;
    let point = [2.0, 0.5];
    assert_eq!(
        unsafe { mb_expr_evaluate(e, point.as_ptr(), 2, &mut out) },
        MbStatus::Ok
    );
    assert_eq!(out, 2.0 * 0.5f64.sin());
    assert_eq!(
        unsafe { mb_expr_evaluate(e, point.as_ptr(), 1, &mut out) },
        MbStatus::Arity
    );
    unsafe { mb_expr_free(e) };

    let log = parse("log(x1)", 1);
    assert_eq!(
        unsafe { mb_expr_evaluate(log, [-1.0].as_ptr(), 1, &mut out) },
        MbStatus::Domain
    );
    assert!(last_error().contains("logarithm"));
    unsafe { mb_expr_free(log) };

    let bad = CString::new("x1 + ").unwrap();
    let mut handle = ptr::NonNull::<MbExpr>::dangling().as_ptr();
    assert_eq!(
        unsafe { mb_expr_parse(bad.as_ptr(), 1, &mut handle) },
        MbStatus::Parse
    );
    assert!(handle.is_null());
    assert!(last_error().contains("position 5"), "{}", last_error());
    assert_eq!(
        unsafe { mb_expr_parse(ptr::null(), 1, &mut handle) },
        MbStatus::NullPointer
    );
    unsafe { mb_expr_free(ptr::null_mut()) };
}

#[test]
fn exp_session_matches_oracle_and_counts_calls() {
    let f = parse("x1*x2*x3*x4 + x1^2*x2^2*x3^2*x4^2 + x1^3*x2^3*x3^3*x4^3", 4);
    let point = [1.0; 4];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mb_session_new(f, point.as_ptr(), 4, &mut s) },
        MbStatus::Ok
    );
    let k = [2u32, 3, 1, 2];
    let (mut fast, mut slow, mut y) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { mb_session_exp_derivative(s, k.as_ptr(), 4, &mut fast) },
        MbStatus::Ok
    );
    assert_eq!(
        unsafe { mb_oracle_derivative(f, point.as_ptr(), 4, k.as_ptr(), 4, &mut slow) },
        MbStatus::Ok
    );
    assert!((fast - slow).abs() <= 1e-12 * slow.abs());
    assert_eq!(
        unsafe { mb_session_y_tensor(s, k.as_ptr(), 4, &mut y) },
        MbStatus::Ok
    );
    assert!((fast - 3f64.exp() * y).abs() <= 1e-12 * fast.abs());

    let mut calls = 0;
    assert_eq!(
        unsafe { mb_session_provider_calls(s, &mut calls) },
        MbStatus::Ok
    );
    assert!(calls > 0 && calls <= 3 * 4 * 2 * 3);
    let mut again = 0.0;
    assert_eq!(
        unsafe { mb_session_exp_derivative(s, k.as_ptr(), 4, &mut again) },
        MbStatus::Ok
    );
    assert_eq!(again.to_bits(), fast.to_bits());
    let mut after = 0;
    unsafe { mb_session_provider_calls(s, &mut after) };
    assert_eq!(after, calls);
    assert_eq!(unsafe { mb_session_clear(s) }, MbStatus::Ok);
    unsafe { mb_session_provider_calls(s, &mut after) };
    assert_eq!(after, 0);

    assert_eq!(
        unsafe { mb_session_exp_derivative(s, k.as_ptr(), 3, &mut fast) },
        MbStatus::Arity
    );
    assert_eq!(
        unsafe { mb_session_general_derivative(s, k.as_ptr(), 4, &mut fast) },
        MbStatus::WrongSession
    );
    let huge = [61u32, 0, 0, 0];
    assert_eq!(
        unsafe { mb_session_y_tensor(s, huge.as_ptr(), 4, &mut y) },
        MbStatus::OrderCap
    );
    assert_eq!(
        unsafe { mb_oracle_derivative(f, point.as_ptr(), 4, k.as_ptr(), 2, &mut slow) },
        MbStatus::Arity
    );
    unsafe {
        mb_session_free(s);
        mb_session_free(ptr::null_mut());
        mb_expr_free(f);
    }
}

#[test]
fn log_session() {
    let g = parse("x1^2*x2 + x2", 2);
    let point = [0.5, 2.0];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { mb_session_new_log(g, point.as_ptr(), 2, &mut s) },
        MbStatus::Ok
    );
    let mut out = 0.0;
    // d^2/dx1^2 d/dx2 of x1^2*x2 + x2 is 2.
    assert_eq!(
        unsafe { mb_session_general_derivative(s, [2u32, 1].as_ptr(), 2, &mut out) },
        MbStatus::Ok
    );
    assert!((out - 2.0).abs() < 1e-12, "{out}");
    assert_eq!(
        unsafe { mb_session_exp_derivative(s, [1u32, 0].as_ptr(), 2, &mut out) },
        MbStatus::WrongSession
    );
    unsafe { mb_session_free(s) };

    let mut z = ptr::NonNull::<MbSession>::dangling().as_ptr();
    assert_eq!(
        unsafe { mb_session_new_log(g, [0.5, 0.0].as_ptr(), 2, &mut z) },
        MbStatus::ZeroValue
    );
    assert!(z.is_null());
    unsafe { mb_expr_free(g) };
}

#[test]
fn errors_are_thread_local() {
    let mut out = 0.0;
    assert_eq!(
        unsafe { mb_complete_bell(ptr::null(), 2, &mut out) },
        MbStatus::NullPointer
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(last_error().contains("null"));
}

#[test]
fn header_is_generated() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/multibell.h"))
            .unwrap();
    for name in [
        "mb_last_error_message",
        "mb_complete_bell",
        "mb_incomplete_bell",
        "mb_expr_parse",
        "mb_expr_evaluate",
        "mb_expr_free",
        "mb_session_new",
        "mb_session_new_log",
        "mb_session_y_tensor",
        "mb_session_exp_derivative",
        "mb_session_general_derivative",
        "mb_session_provider_calls",
        "mb_session_clear",
        "mb_session_free",
        "mb_oracle_derivative",
        "typedef struct MbSession MbSession;",
        "MB_STATUS_PANIC = 11",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
