//! Arbitrary-order mixed partial derivatives of `exp(f(x1, ..., xn))`.
//!
//! - [`bell`]: univariate complete and incomplete exponential Bell polynomials.
//! - [`multidiff`]: the memoized multivariate recursion behind
//!   `d^{|k|} exp(f) = exp(f) * Y_k`, and its `log g` variant.
//! - [`symbolic`]: expression parsing and symbolic differentiation, used as a
//!   derivative provider and as an independent brute-force oracle.
//! - [`bench`]: the benchmark sweep, CSV output and the corpus check.

pub mod bell;
pub mod bench;
pub mod multidiff;
pub mod symbolic;

pub use multidiff::{
    exp_derivative, general_derivative, t_tensor, y_tensor, DerivativeProvider, DiffError,
    MultiIndex, YCache,
};
