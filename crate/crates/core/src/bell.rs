//! Univariate exponential Bell polynomials.
//!
//! Complete polynomials `Y_n(z_1, ..., z_n)` are evaluated through the ladder
//! `Y_n = sum_{k<n} C(n-1, k) Y_k z_{n-k}` starting from `Y_0 = 1`. Incomplete
//! polynomials `B_{n,k}` use the companion recurrence
//! `B_{n,k} = sum_{i=1}^{n-k+1} C(n-1, i-1) z_i B_{n-i,k-1}`, and a
//! set-partition enumerator is kept alongside as an independent reference.

use std::collections::HashMap;
use std::sync::OnceLock;

use thiserror::Error;

/// Highest Pascal-triangle row held in the exact binomial table.
pub const BINOMIAL_MAX_ROW: usize = 60;

/// Largest `n` accepted by [`incomplete_bell_oracle`].
pub const ORACLE_MAX_N: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BellError {
    #[error("binomial row {row} exceeds the table cap of {BINOMIAL_MAX_ROW}")]
    BinomialRange { row: usize },
    #[error("block count k = {k} exceeds n = {n}")]
    BlockCount { n: usize, k: usize },
    #[error("need at least {needed} arguments, got {got}")]
    ShortArguments { needed: usize, got: usize },
    #[error("order n must be at least 1")]
    ZeroOrder,
    #[error("enumeration refused for n = {n} (cap {ORACLE_MAX_N})")]
    EnumerationTooLarge { n: usize },
}

fn pascal() -> &'static [Vec<u64>] {
    static TABLE: OnceLock<Vec<Vec<u64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<u64>> = Vec::with_capacity(BINOMIAL_MAX_ROW + 1);
        for n in 0..=BINOMIAL_MAX_ROW {
            let mut row = vec![1u64; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Exact `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> Result<u64, BellError> {
    if n > BINOMIAL_MAX_ROW {
        return Err(BellError::BinomialRange { row: n });
    }
    Ok(if k > n { 0 } else { pascal()[n][k] })
}

/// Arguments `z_1..z_n` of a Bell polynomial. Position `i` of the slice holds `z_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellArgs<'a> {
    z: &'a [f64],
}

impl<'a> BellArgs<'a> {
    pub fn new(z: &'a [f64]) -> Self {
        BellArgs { z }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// `z_i` with one-based `i`.
    pub fn z(&self, i: usize) -> f64 {
        self.z[i - 1]
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.z
    }
}

impl<'a> From<&'a [f64]> for BellArgs<'a> {
    fn from(z: &'a [f64]) -> Self {
        BellArgs::new(z)
    }
}

/// Complete exponential Bell polynomial `Y_n(z_1, ..., z_n)` with `n = args.n()`.
///
/// The only failure is an order past the binomial table (`n > 61`).
pub fn complete_bell(args: BellArgs<'_>) -> Result<f64, BellError> {
    Ok(complete_bell_ladder(args)?[args.n()])
}

/// All of `Y_0, ..., Y_n`, built in one pass.
pub fn complete_bell_ladder(args: BellArgs<'_>) -> Result<Vec<f64>, BellError> {
    let n = args.n();
    if n > BINOMIAL_MAX_ROW + 1 {
        return Err(BellError::BinomialRange { row: n - 1 });
    }
    let mut ladder = Vec::with_capacity(n + 1);
    ladder.push(1.0);
    for m in 1..=n {
        let row = &pascal()[m - 1];
        let mut acc = 0.0;
        for (k, &y) in ladder.iter().enumerate() {
            acc += row[k] as f64 * y * args.z(m - k);
        }
        ladder.push(acc);
    }
    Ok(ladder)
}

/// Incomplete exponential Bell polynomial `B_{n,k}(z_1, ..., z_{n-k+1})`.
///
/// `z` must hold at least `n - k + 1` entries whenever `k >= 1`; extra entries are ignored.
pub fn incomplete_bell(n: usize, k: usize, z: &[f64]) -> Result<f64, BellError> {
    if k > n {
        return Err(BellError::BlockCount { n, k });
    }
    if k == 0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let needed = n - k + 1;
    if z.len() < needed {
        return Err(BellError::ShortArguments {
            needed,
            got: z.len(),
        });
    }
    if n > BINOMIAL_MAX_ROW + 1 {
        return Err(BellError::BinomialRange { row: n - 1 });
    }
    // table[m][j] = B_{m,j}; only cells with m - j <= n - k are reachable from (n, k).
    let span = n - k;
    let mut table = vec![vec![0.0f64; k + 1]; n + 1];
    table[0][0] = 1.0;
    for j in 1..=k {
        for m in j..=(j + span).min(n) {
            let row = &pascal()[m - 1];
            let mut acc = 0.0;
            for i in 1..=(m - j + 1) {
                acc += row[i - 1] as f64 * z[i - 1] * table[m - i][j - 1];
            }
            table[m][j] = acc;
        }
    }
    Ok(table[n][k])
}

/// `B_{n,k}` by walking every partition of `{1..n}` into exactly `k` blocks and
/// summing the products `z_{|block|}`. Exponential cost; meant for checking
/// [`incomplete_bell`].
pub fn incomplete_bell_oracle(n: usize, k: usize, z: &[f64]) -> Result<f64, BellError> {
    if k > n {
        return Err(BellError::BlockCount { n, k });
    }
    if n > ORACLE_MAX_N {
        return Err(BellError::EnumerationTooLarge { n });
    }
    if n == 0 {
        return Ok(1.0);
    }
    if k == 0 {
        return Ok(0.0);
    }
    let needed = n - k + 1;
    if z.len() < needed {
        return Err(BellError::ShortArguments {
            needed,
            got: z.len(),
        });
    }
    let mut memo = HashMap::new();
    Ok(enumerate_blocks(
        n,
        k,
        z,
        &mut Vec::with_capacity(k),
        &mut memo,
    ))
}

/// Places the next element (there are `remaining`) into one of the open blocks
/// or into a fresh block, so every set partition is reached exactly once.
/// Elements are indistinguishable once placed, so the contribution of the
/// remaining placements depends only on the multiset of current block sizes;
/// that suffix sum is memoized and blocks of equal size are visited once with
/// their multiplicity as weight.
fn enumerate_blocks(
    remaining: usize,
    k: usize,
    z: &[f64],
    sizes: &mut Vec<usize>,
    memo: &mut HashMap<(Vec<usize>, usize), f64>,
) -> f64 {
    if remaining == 0 {
        return if sizes.len() == k {
            sizes.iter().map(|&s| z[s - 1]).product()
        } else {
            0.0
        };
    }
    // Not enough elements left to open the missing blocks.
    if sizes.len() + remaining < k {
        return 0.0;
    }
    let key = (sizes.clone(), remaining);
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut total = 0.0;
    // `sizes` is kept sorted in descending order.
    let mut b = 0;
    while b < sizes.len() {
        let size = sizes[b];
        let run = sizes[b..].iter().take_while(|&&s| s == size).count();
        sizes[b] += 1;
        total += run as f64 * enumerate_blocks(remaining - 1, k, z, sizes, memo);
        sizes[b] -= 1;
        b += run;
    }
    if sizes.len() < k {
        sizes.push(1);
        total += enumerate_blocks(remaining - 1, k, z, sizes, memo);
        sizes.pop();
    }
    memo.insert(key, total);
    total
}

/// `d^n/dx^n g(f(x)) = sum_{k=1}^n g^(k)(f(x)) B_{n,k}(f'(x), ..., f^(n-k+1)(x))`.
///
/// `g_derivs[i]` is `g^(i+1)` at `f(x)`; `f_derivs[i]` is `f^(i+1)` at `x`.
pub fn riordan_compose(g_derivs: &[f64], f_derivs: &[f64], n: usize) -> Result<f64, BellError> {
    if n < 1 {
        return Err(BellError::ZeroOrder);
    }
    for len in [g_derivs.len(), f_derivs.len()] {
        if len < n {
            return Err(BellError::ShortArguments {
                needed: n,
                got: len,
            });
        }
    }
    let mut acc = 0.0;
    for k in 1..=n {
        acc += g_derivs[k - 1] * incomplete_bell(n, k, f_derivs)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bell_number_oracle(n: usize) -> f64 {
        let ones = vec![1.0; n.max(1)];
        (0..=n)
            .map(|k| incomplete_bell_oracle(n, k, &ones).unwrap())
            .sum()
    }

    #[test]
    fn binomial_table() {
        assert_eq!(binomial(0, 0).unwrap(), 1);
        assert_eq!(binomial(5, 2).unwrap(), 10);
        assert_eq!(binomial(3, 7).unwrap(), 0);
        assert_eq!(binomial(60, 30).unwrap(), 118_264_581_564_861_424);
        assert_eq!(binomial(61, 1), Err(BellError::BinomialRange { row: 61 }));
    }

    #[test]
    fn complete_bell_examples() {
        assert_eq!(complete_bell(BellArgs::new(&[])).unwrap(), 1.0);
        assert_eq!(complete_bell(BellArgs::new(&[1.0, 1.0, 1.0])).unwrap(), 5.0);
        assert_eq!(complete_bell(BellArgs::new(&[3.0, 4.0])).unwrap(), 13.0);
    }

    #[test]
    fn complete_bell_order_cap() {
        let z = vec![0.5; 61];
        assert!(complete_bell(BellArgs::new(&z)).is_ok());
        let z = vec![0.5; 62];
        assert!(matches!(
            complete_bell(BellArgs::new(&z)),
            Err(BellError::BinomialRange { .. })
        ));
    }

    #[test]
    fn bell_number_20_is_exact() {
        let z = vec![1.0; 20];
        assert_eq!(
            complete_bell(BellArgs::new(&z)).unwrap(),
            51_724_158_235_372.0
        );
    }

    #[test]
    fn incomplete_bell_examples() {
        assert_eq!(incomplete_bell(3, 3, &[2.0]).unwrap(), 8.0);
        assert_eq!(incomplete_bell(4, 1, &[2.0, 3.0, 5.0, 7.0]).unwrap(), 7.0);
        assert_eq!(incomplete_bell(4, 2, &[1.0, 1.0, 1.0]).unwrap(), 7.0);
        assert_eq!(incomplete_bell(0, 0, &[]).unwrap(), 1.0);
        assert_eq!(incomplete_bell(3, 0, &[]).unwrap(), 0.0);
    }

    #[test]
    fn incomplete_bell_rejects_bad_arguments() {
        assert_eq!(
            incomplete_bell(2, 3, &[1.0]),
            Err(BellError::BlockCount { n: 2, k: 3 })
        );
        assert_eq!(
            incomplete_bell(4, 2, &[1.0, 1.0]),
            Err(BellError::ShortArguments { needed: 3, got: 2 })
        );
    }

    #[test]
    fn b42_matches_closed_form() {
        // B_{4,2} = 3 z2^2 + 4 z1 z3
        let z = [2.0, 3.0, 5.0];
        let expected = 3.0 * 9.0 + 4.0 * 2.0 * 5.0;
        assert_eq!(incomplete_bell(4, 2, &z).unwrap(), expected);
        assert_eq!(incomplete_bell_oracle(4, 2, &z).unwrap(), expected);
    }

    #[test]
    fn oracle_examples() {
        assert_eq!(incomplete_bell_oracle(4, 2, &[1.0, 1.0, 1.0]).unwrap(), 7.0);
        assert_eq!(incomplete_bell_oracle(3, 3, &[2.0]).unwrap(), 8.0);
        assert_eq!(incomplete_bell_oracle(5, 5, &[1.0]).unwrap(), 1.0);
        assert_eq!(
            incomplete_bell_oracle(3, 4, &[1.0]),
            Err(BellError::BlockCount { n: 3, k: 4 })
        );
        assert_eq!(
            incomplete_bell_oracle(16, 2, &[1.0; 16]),
            Err(BellError::EnumerationTooLarge { n: 16 })
        );
    }

    #[test]
    fn oracle_bell_numbers() {
        let expected = [1.0, 1.0, 2.0, 5.0, 15.0, 52.0, 203.0, 877.0, 4140.0];
        for (n, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number_oracle(n), b, "n = {n}");
        }
    }

    #[test]
    fn riordan_examples() {
        let g = [2.0, 3.0, 5.0];
        assert_eq!(riordan_compose(&g, &[1.0, 0.0, 0.0], 3).unwrap(), 5.0);

        let e0 = [1.0, 1.0];
        assert_eq!(riordan_compose(&e0, &[0.0, 2.0], 2).unwrap(), 2.0);

        let e = std::f64::consts::E;
        assert_eq!(riordan_compose(&[e], &[2.0], 1).unwrap(), 2.0 * e);
    }

    #[test]
    fn riordan_rejects_bad_arguments() {
        assert_eq!(riordan_compose(&[], &[], 0), Err(BellError::ZeroOrder));
        assert_eq!(
            riordan_compose(&[1.0], &[1.0, 2.0], 2),
            Err(BellError::ShortArguments { needed: 2, got: 1 })
        );
    }

    #[test]
    fn complete_bell_of_leading_term_only_is_power() {
        for n in 0..=12 {
            let mut z = vec![0.0; n];
            if n > 0 {
                z[0] = 3.0;
            }
            assert_eq!(
                complete_bell(BellArgs::new(&z)).unwrap(),
                3f64.powi(n as i32)
            );
        }
    }

    proptest! {
        #[test]
        fn complete_is_sum_of_incomplete(z in prop::collection::vec(-4i32..=4, 0..=12)) {
            let z: Vec<f64> = z.into_iter().map(f64::from).collect();
            let n = z.len();
            let total: f64 = (0..=n).map(|k| incomplete_bell(n, k, &z).unwrap()).sum();
            prop_assert_eq!(complete_bell(BellArgs::new(&z)).unwrap(), total);
        }

        #[test]
        fn recurrence_matches_enumeration(z in prop::collection::vec(-3i32..=3, 1..=8), k in 0usize..=8) {
            let z: Vec<f64> = z.into_iter().map(f64::from).collect();
            let n = z.len();
            prop_assume!(k <= n);
            prop_assert_eq!(incomplete_bell(n, k, &z).unwrap(), incomplete_bell_oracle(n, k, &z).unwrap());
        }

        #[test]
        fn riordan_with_exp_is_complete_bell(f in prop::collection::vec(0.0f64..1.5, 1..=10), f0 in -1.0f64..1.0) {
            let n = f.len();
            let g = vec![f0.exp(); n];
            let lhs = riordan_compose(&g, &f, n).unwrap();
            let rhs = f0.exp() * complete_bell(BellArgs::new(&f)).unwrap();
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            prop_assert!((lhs - rhs).abs() / scale <= 1e-12);
        }
    }
}
