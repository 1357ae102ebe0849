#ifndef MULTIBELL_H
#define MULTIBELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every function of the interface.
typedef enum MbStatus {
  MB_STATUS_OK = 0,
  // A required pointer argument was null.
  MB_STATUS_NULL_POINTER = 1,
  // An argument is malformed: bad lengths, invalid UTF-8, block counts.
  MB_STATUS_INVALID_ARGUMENT = 2,
  // The expression text could not be parsed.
  MB_STATUS_PARSE = 3,
  // A function was evaluated outside its domain (log of a non-positive
  // value, division by zero).
  MB_STATUS_DOMAIN = 4,
  // Multi-index, point and expression disagree on the number of variables.
  MB_STATUS_ARITY = 5,
  // The requested total order exceeds the supported cap.
  MB_STATUS_ORDER_CAP = 6,
  // The result overflowed to infinity or NaN.
  MB_STATUS_NON_FINITE = 7,
  // A log-form session was created for a `g` that vanishes at the point.
  MB_STATUS_ZERO_VALUE = 8,
  // The operation needs a session of the other kind.
  MB_STATUS_WRONG_SESSION = 9,
  // The symbolic oracle ran out of nodes or time.
  MB_STATUS_BUDGET = 10,
  // An internal panic was caught.
  MB_STATUS_PANIC = 11,
} MbStatus;

// Parsed expression over `x1..xn`.
typedef struct MbExpr MbExpr;

// A provider bound to one expression and one point, plus its memo cache.
// Created either for `exp(f)` or, in log form, for a non-zero `g`.
typedef struct MbSession MbSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or an empty string.
// The pointer stays valid until the next call into this library on the same
// thread.
const char *mb_last_error_message(void);

// Complete Bell polynomial `Y_n(z_1, ..., z_n)` with `n = len`.
//
// # Safety
// `z` must point to `len` doubles (or be null when `len` is 0) and `out` to
// one writable double.
enum MbStatus mb_complete_bell(const double *z, size_t len, double *out);

// Incomplete Bell polynomial `B_{n,k}(z_1, ..., z_{n-k+1})`.
//
// # Safety
// As for [`mb_complete_bell`].
enum MbStatus mb_incomplete_bell(size_t n, size_t k, const double *z, size_t len, double *out);

// Parses a NUL-terminated expression over `x1..x{arity}`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a writable pointer slot.
// On success `*out` owns a handle to be released with [`mb_expr_free`].
enum MbStatus mb_expr_parse(const char *text, size_t arity, struct MbExpr **out);

// Releases an expression. Null is ignored.
//
// # Safety
// `expr` must be null or a handle from [`mb_expr_parse`] not yet freed.
void mb_expr_free(struct MbExpr *expr);

// Evaluates the expression at `point` (`len` must equal its arity).
//
// # Safety
// `expr` must be a live handle, `point` must hold `len` doubles and `out`
// must be writable.
enum MbStatus mb_expr_evaluate(const struct MbExpr *expr,
                               const double *point,
                               size_t len,
                               double *out);

// Session for derivatives of `exp(f)` at `point`.
//
// # Safety
// `f` must be a live handle, `point` must hold `len` doubles and `out` must
// be a writable pointer slot. The session does not borrow `f`.
enum MbStatus mb_session_new(const struct MbExpr *f,
                             const double *point,
                             size_t len,
                             struct MbSession **out);

// Log-form session for derivatives of a non-zero `g` at `point`.
//
// # Safety
// As for [`mb_session_new`].
enum MbStatus mb_session_new_log(const struct MbExpr *g,
                                 const double *point,
                                 size_t len,
                                 struct MbSession **out);

// Releases a session. Null is ignored.
//
// # Safety
// `session` must be null or a live session handle not yet freed.
void mb_session_free(struct MbSession *session);

// The tensor `Y_k` of the session's provider (for a log-form session this
// is `T_k`).
//
// # Safety
// `session` must be live, `orders` must hold `len` values and `out` must be
// writable.
enum MbStatus mb_session_y_tensor(const struct MbSession *session,
                                  const uint32_t *orders,
                                  size_t len,
                                  double *out);

// Mixed partial `d^k exp(f)` for a session from [`mb_session_new`].
//
// # Safety
// As for [`mb_session_y_tensor`].
enum MbStatus mb_session_exp_derivative(const struct MbSession *session,
                                        const uint32_t *orders,
                                        size_t len,
                                        double *out);

// Mixed partial `d^k g` for a session from [`mb_session_new_log`].
//
// # Safety
// As for [`mb_session_y_tensor`].
enum MbStatus mb_session_general_derivative(const struct MbSession *session,
                                            const uint32_t *orders,
                                            size_t len,
                                            double *out);

// Number of provider evaluations made through the session's cache.
//
// # Safety
// `session` must be live and `out` writable.
enum MbStatus mb_session_provider_calls(const struct MbSession *session, uint64_t *out);

// Empties the session's cache and resets its counters.
//
// # Safety
// `session` must be live and not in use by another thread.
enum MbStatus mb_session_clear(struct MbSession *session);

// Mixed partial `d^k exp(f)` by direct symbolic differentiation.
//
// # Safety
// `f` must be live, `point` must hold `point_len` doubles, `orders` must hold
// `orders_len` values and `out` must be writable.
enum MbStatus mb_oracle_derivative(const struct MbExpr *f,
                                   const double *point,
                                   size_t point_len,
                                   const uint32_t *orders,
                                   size_t orders_len,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MULTIBELL_H */
