//! Mixed partial derivatives of `exp(f)` by memoized tensor accumulation.
//!
//! For a multi-index `k = (k_1, ..., k_n)`,
//! `d^{|k|} exp(f) / dx^k = exp(f) * Y_k`, where
//!
//! ```text
//! Y_k = sum_{j} C(k_1, j_1) ... C(k_p - 1, j_p) * Y_j * f^{(k - j)}
//! ```
//!
//! with `p` the rightmost non-zero position of `k`, `j_i` running over
//! `0..=k_i` for `i < p`, `j_p` over `0..k_p`, and `j_i = 0` past `p`.
//! `Y_0 = 1`. The same recursion fed with the derivatives of `log g` gives
//! `d^{|k|} g = g * T_k`.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::error::Error as StdError;
use std::fmt;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::RwLock;

use thiserror::Error;

use crate::bell::{binomial, BINOMIAL_MAX_ROW};

/// Default cap on the total order `|k|`.
pub const DEFAULT_ORDER_CAP: u32 = BINOMIAL_MAX_ROW as u32;

/// Boxed failure coming out of a [`DerivativeProvider`].
pub type ProviderError = Box<dyn StdError + Send + Sync + 'static>;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("multi-index has {index} entries but the provider has arity {provider}")]
    ArityMismatch { index: usize, provider: usize },
    #[error("total order {order} exceeds the cap of {cap}")]
    OrderCap { order: u64, cap: u32 },
    #[error("cache was populated for arity {cache}, provider has arity {provider}")]
    CacheArity { cache: usize, provider: usize },
    #[error("g must be non-zero at the evaluation point")]
    ZeroValue,
    #[error("result is not finite: {0}")]
    NonFinite(f64),
    #[error("provider failed at {index}: {source}")]
    Provider {
        index: MultiIndex,
        #[source]
        source: ProviderError,
    },
}

/// Orders `(k_1, ..., k_n)` of a mixed partial derivative. Equality is positional.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(orders: impl Into<Vec<u32>>) -> Self {
        MultiIndex(orders.into())
    }

    pub fn zeros(arity: usize) -> Self {
        MultiIndex(vec![0; arity])
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn orders(&self) -> &[u32] {
        &self.0
    }

    pub fn total_order(&self) -> u64 {
        self.0.iter().map(|&k| u64::from(k)).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    /// Rightmost position holding a non-zero order.
    pub fn pivot(&self) -> Option<usize> {
        self.0.iter().rposition(|&k| k != 0)
    }

    /// Every multi-index of this arity with total order at most `max_total`,
    /// in lexicographic order.
    pub fn all_up_to(arity: usize, max_total: u32) -> Vec<MultiIndex> {
        fn fill(prefix: &mut Vec<u32>, arity: usize, budget: u32, out: &mut Vec<MultiIndex>) {
            if prefix.len() == arity {
                out.push(MultiIndex(prefix.clone()));
                return;
            }
            for k in 0..=budget {
                prefix.push(k);
                fill(prefix, arity, budget - k, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        fill(&mut Vec::with_capacity(arity), arity, max_total, &mut out);
        out
    }
}

impl Borrow<[u32]> for MultiIndex {
    fn borrow(&self) -> &[u32] {
        &self.0
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Supplies mixed partials of the inner function `f` at one fixed point.
///
/// `eval` of the zero index is `f` itself. Implementations must be
/// deterministic; if the same cache is shared across threads the provider
/// must be `Sync` as well.
pub trait DerivativeProvider {
    fn arity(&self) -> usize;

    fn eval(&self, index: &[u32]) -> Result<f64, ProviderError>;

    /// Highest order in variable `var` (zero-based) with a possibly non-zero
    /// partial. `None` means unknown.
    fn max_order(&self, _var: usize) -> Option<u32> {
        None
    }
}

impl<P: DerivativeProvider + ?Sized> DerivativeProvider for &P {
    fn arity(&self) -> usize {
        (**self).arity()
    }

    fn eval(&self, index: &[u32]) -> Result<f64, ProviderError> {
        (**self).eval(index)
    }

    fn max_order(&self, var: usize) -> Option<u32> {
        (**self).max_order(var)
    }
}

/// Provider backed by a closure, for hand-written closed forms.
pub struct FnProvider<F> {
    arity: usize,
    eval: F,
    hint: Option<Vec<Option<u32>>>,
}

impl<F> FnProvider<F>
where
    F: Fn(&[u32]) -> f64,
{
    pub fn new(arity: usize, eval: F) -> Self {
        FnProvider {
            arity,
            eval,
            hint: None,
        }
    }

    pub fn with_vanishing_hint(mut self, hint: Vec<Option<u32>>) -> Self {
        assert_eq!(hint.len(), self.arity, "one hint entry per variable");
        self.hint = Some(hint);
        self
    }
}

impl<F> DerivativeProvider for FnProvider<F>
where
    F: Fn(&[u32]) -> f64,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, index: &[u32]) -> Result<f64, ProviderError> {
        Ok((self.eval)(index))
    }

    fn max_order(&self, var: usize) -> Option<u32> {
        self.hint.as_ref().and_then(|h| h[var])
    }
}

/// Snapshot of a cache's counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    /// Y lookups answered from the cache.
    pub hits: u64,
    /// Y entries that had to be computed.
    pub misses: u64,
    /// `eval` invocations on the provider; each distinct index is asked once.
    pub provider_calls: u64,
    /// The subset of `provider_calls` whose index has every order `>= 1`.
    pub provider_calls_all_positive: u64,
    /// Terms dropped through the provider's vanishing hint, without a call.
    pub skipped_terms: u64,
}

#[derive(Default)]
struct Counters {
    hits: AtomicU64,
    misses: AtomicU64,
    provider_calls: AtomicU64,
    provider_calls_all_positive: AtomicU64,
    skipped_terms: AtomicU64,
}

/// Memo of Y (or T) entries and of provider values for one `(f, point)` context.
///
/// All methods take `&self`; insertion is idempotent per key so the cache can
/// be shared between threads working on the same provider.
pub struct YCache {
    entries: RwLock<HashMap<MultiIndex, f64>>,
    derivs: RwLock<HashMap<MultiIndex, f64>>,
    counters: Counters,
    arity: AtomicUsize,
    order_cap: u32,
}

const UNBOUND: usize = usize::MAX;

impl Default for YCache {
    fn default() -> Self {
        YCache::new()
    }
}

impl fmt::Debug for YCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("YCache")
            .field("len", &self.len())
            .field("stats", &self.stats())
            .field("order_cap", &self.order_cap)
            .finish()
    }
}

impl YCache {
    pub fn new() -> Self {
        YCache::with_order_cap(DEFAULT_ORDER_CAP)
    }

    /// Cache refusing total orders above `cap`. `cap` is clamped to the binomial table.
    pub fn with_order_cap(cap: u32) -> Self {
        YCache {
            entries: RwLock::new(HashMap::new()),
            derivs: RwLock::new(HashMap::new()),
            counters: Counters::default(),
            arity: AtomicUsize::new(UNBOUND),
            order_cap: cap.min(DEFAULT_ORDER_CAP),
        }
    }

    pub fn order_cap(&self) -> u32 {
        self.order_cap
    }

    /// Number of Y entries stored.
    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of distinct provider indices memoized.
    pub fn distinct_provider_indices(&self) -> usize {
        self.derivs.read().unwrap().len()
    }

    pub fn get(&self, index: &[u32]) -> Option<f64> {
        self.entries.read().unwrap().get(index).copied()
    }

    pub fn stats(&self) -> CacheStats {
        let c = &self.counters;
        CacheStats {
            hits: c.hits.load(Ordering::Relaxed),
            misses: c.misses.load(Ordering::Relaxed),
            provider_calls: c.provider_calls.load(Ordering::Relaxed),
            provider_calls_all_positive: c.provider_calls_all_positive.load(Ordering::Relaxed),
            skipped_terms: c.skipped_terms.load(Ordering::Relaxed),
        }
    }

    pub fn provider_call_count(&self) -> u64 {
        self.counters.provider_calls.load(Ordering::Relaxed)
    }

    /// Drops every entry and zeroes the counters.
    pub fn clear(&mut self) {
        self.entries.get_mut().unwrap().clear();
        self.derivs.get_mut().unwrap().clear();
        self.counters = Counters::default();
        *self.arity.get_mut() = UNBOUND;
    }

    fn bind_arity(&self, arity: usize) -> Result<(), DiffError> {
        match self
            .arity
            .compare_exchange(UNBOUND, arity, Ordering::AcqRel, Ordering::Acquire)
        {
            Ok(_) => Ok(()),
            Err(bound) if bound == arity => Ok(()),
            Err(bound) => Err(DiffError::CacheArity {
                cache: bound,
                provider: arity,
            }),
        }
    }

    fn insert(&self, index: &[u32], value: f64) {
        let mut entries = self.entries.write().unwrap();
        let stored = *entries.entry(MultiIndex::from(index)).or_insert(value);
        debug_assert!(stored.to_bits() == value.to_bits() || (stored.is_nan() && value.is_nan()));
    }

    fn derivative<P>(&self, provider: &P, index: &[u32]) -> Result<f64, DiffError>
    where
        P: DerivativeProvider + ?Sized,
    {
        if let Some(&v) = self.derivs.read().unwrap().get(index) {
            return Ok(v);
        }
        let value = provider.eval(index).map_err(|source| DiffError::Provider {
            index: MultiIndex::from(index),
            source,
        })?;
        self.counters.provider_calls.fetch_add(1, Ordering::Relaxed);
        if index.iter().all(|&k| k > 0) {
            self.counters
                .provider_calls_all_positive
                .fetch_add(1, Ordering::Relaxed);
        }
        self.derivs
            .write()
            .unwrap()
            .entry(MultiIndex::from(index))
            .or_insert(value);
        Ok(value)
    }
}

/// Free-function form of [`YCache::provider_call_count`].
pub fn provider_call_count(cache: &YCache) -> u64 {
    cache.provider_call_count()
}

/// Free-function form of [`YCache::clear`].
pub fn clear(cache: &mut YCache) {
    cache.clear()
}

fn check_index<P>(k: &MultiIndex, provider: &P, cache: &YCache) -> Result<(), DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    if k.arity() != provider.arity() {
        return Err(DiffError::ArityMismatch {
            index: k.arity(),
            provider: provider.arity(),
        });
    }
    let order = k.total_order();
    if order > u64::from(cache.order_cap) {
        return Err(DiffError::OrderCap {
            order,
            cap: cache.order_cap,
        });
    }
    cache.bind_arity(provider.arity())
}

/// `Y_k` such that `d^{|k|} exp(f) = exp(f) * Y_k`.
pub fn y_tensor<P>(k: &MultiIndex, provider: &P, cache: &YCache) -> Result<f64, DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    check_index(k, provider, cache)?;
    let hint: Vec<Option<u32>> = (0..provider.arity())
        .map(|i| provider.max_order(i))
        .collect();
    accumulate(k.orders(), provider, cache, &hint)
}

fn accumulate<P>(
    k: &[u32],
    provider: &P,
    cache: &YCache,
    hint: &[Option<u32>],
) -> Result<f64, DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    let Some(pivot) = k.iter().rposition(|&v| v != 0) else {
        return Ok(1.0);
    };
    if let Some(v) = cache.get(k) {
        cache.counters.hits.fetch_add(1, Ordering::Relaxed);
        return Ok(v);
    }
    cache.counters.misses.fetch_add(1, Ordering::Relaxed);

    // Upper bounds of the summation box; the pivot loses one.
    let mut upper = k.to_vec();
    upper[pivot] -= 1;
    let mut j = vec![0u32; k.len()];
    let mut rest = vec![0u32; k.len()];
    let mut acc = 0.0;
    'terms: loop {
        let vanishes = (0..=pivot).any(|i| matches!(hint[i], Some(m) if k[i] - j[i] > m));
        if vanishes {
            cache.counters.skipped_terms.fetch_add(1, Ordering::Relaxed);
        } else {
            for i in 0..k.len() {
                rest[i] = k[i] - j[i];
            }
            let d = cache.derivative(provider, &rest)?;
            if d != 0.0 {
                let mut coef = 1.0;
                for i in 0..=pivot {
                    // Orders are below the binomial cap once check_index has passed.
                    coef *= binomial(upper[i] as usize, j[i] as usize).expect("order within cap")
                        as f64;
                }
                let y = accumulate(&j, provider, cache, hint)?;
                acc += coef * y * d;
            }
        }
        // Lexicographic odometer over j in the box [0, upper], positions 0..=pivot.
        let mut pos = pivot;
        loop {
            if j[pos] < upper[pos] {
                j[pos] += 1;
                for t in &mut j[pos + 1..=pivot] {
                    *t = 0;
                }
                continue 'terms;
            }
            if pos == 0 {
                break 'terms;
            }
            pos -= 1;
        }
    }
    cache.insert(k, acc);
    Ok(acc)
}

/// `d^{|k|} exp(f) / dx^k` at the provider's point.
pub fn exp_derivative<P>(k: &MultiIndex, provider: &P, cache: &YCache) -> Result<f64, DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    let y = y_tensor(k, provider, cache)?;
    let f0 = cache.derivative(provider, &vec![0; k.arity()])?;
    let value = f0.exp() * y;
    if !value.is_finite() {
        return Err(DiffError::NonFinite(value));
    }
    Ok(value)
}

/// `T_k` such that `d^{|k|} g = g * T_k`, where `log_provider` supplies the
/// partials of `log g`.
pub fn t_tensor<P>(k: &MultiIndex, log_provider: &P, cache: &YCache) -> Result<f64, DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    y_tensor(k, log_provider, cache)
}

/// `d^{|k|} g / dx^k` given `g` at the point and the partials of `log g`.
pub fn general_derivative<P>(
    k: &MultiIndex,
    g_value: f64,
    log_provider: &P,
    cache: &YCache,
) -> Result<f64, DiffError>
where
    P: DerivativeProvider + ?Sized,
{
    if g_value == 0.0 {
        return Err(DiffError::ZeroValue);
    }
    let value = g_value * t_tensor(k, log_provider, cache)?;
    if !value.is_finite() {
        return Err(DiffError::NonFinite(value));
    }
    Ok(value)
}
