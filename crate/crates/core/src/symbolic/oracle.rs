use std::collections::HashMap;

use super::context::ExprContext;
use super::expr::Expr;
use super::ExprError;
use crate::multidiff::MultiIndex;

/// Brute-force reference for derivatives of `exp(f)`.
///
/// Builds the tree of `exp(f)` and applies plain symbolic differentiation
/// `k_1` times in `x1`, then `k_2` times in `x2`, and so on, before
/// evaluating. Nothing here knows about Bell polynomials. Trees for
/// different multi-indices share their common prefixes through the context.
pub struct Oracle {
    ctx: ExprContext,
    root: Expr,
    trees: HashMap<MultiIndex, Expr>,
}

impl Oracle {
    pub fn new(f: &Expr, point: Vec<f64>) -> Result<Self, ExprError> {
        Oracle::with_context(f, ExprContext::new(point))
    }

    pub fn with_context(f: &Expr, mut ctx: ExprContext) -> Result<Self, ExprError> {
        ctx.check_arity(f)?;
        let root = ctx.exp_of(f.clone())?;
        Ok(Oracle {
            ctx,
            root,
            trees: HashMap::new(),
        })
    }

    pub fn context(&self) -> &ExprContext {
        &self.ctx
    }

    /// Symbolic tree of `d^{|k|} exp(f) / dx^k`.
    pub fn tree(&mut self, k: &MultiIndex) -> Result<Expr, ExprError> {
        if k.arity() != self.ctx.arity() {
            return Err(ExprError::PointLength {
                expected: self.ctx.arity(),
                got: k.arity(),
            });
        }
        self.tree_rec(k.orders())
    }

    fn tree_rec(&mut self, k: &[u32]) -> Result<Expr, ExprError> {
        let Some(last) = k.iter().rposition(|&j| j != 0) else {
            return Ok(self.root.clone());
        };
        if let Some(t) = self.trees.get(k) {
            return Ok(t.clone());
        }
        let mut prev = k.to_vec();
        prev[last] -= 1;
        let base = self.tree_rec(&prev)?;
        let t = self.ctx.differentiate(&base, last + 1)?;
        self.trees.insert(MultiIndex::from(k), t.clone());
        Ok(t)
    }

    pub fn derivative(&mut self, k: &MultiIndex) -> Result<f64, ExprError> {
        let t = self.tree(k)?;
        self.ctx.evaluate(&t)
    }
}

/// `d^{|k|} exp(f) / dx^k` at `point`, by direct symbolic differentiation.
pub fn oracle_derivative(f: &Expr, k: &MultiIndex, point: &[f64]) -> Result<f64, ExprError> {
    Oracle::new(f, point.to_vec())?.derivative(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{evaluate, parse};
    use std::f64::consts::E;

    fn idx(v: &[u32]) -> MultiIndex {
        MultiIndex::from(v)
    }

    #[test]
    fn examples() {
        let f = parse("x1*x2", 2).unwrap();
        let v = oracle_derivative(&f, &idx(&[1, 1]), &[1.0, 1.0]).unwrap();
        assert!((v - 2.0 * E).abs() < 1e-15);

        let zero = parse("0", 1).unwrap();
        assert_eq!(oracle_derivative(&zero, &idx(&[3]), &[0.4]).unwrap(), 0.0);

        let sq = parse("x1^2", 1).unwrap();
        let v = oracle_derivative(&sq, &idx(&[2]), &[1.0]).unwrap();
        assert!((v - 6.0 * E).abs() < 1e-14);
    }

    #[test]
    fn zero_order_is_plain_evaluation() {
        let f = parse("x1*sin(x2) - x2^3", 2).unwrap();
        let point = [0.8, 1.7];
        let exp_f = f.clone().exp();
        assert_eq!(
            oracle_derivative(&f, &MultiIndex::zeros(2), &point)
                .unwrap()
                .to_bits(),
            evaluate(&exp_f, &point).unwrap().to_bits()
        );
    }

    #[test]
    fn node_cap_fails_loudly() {
        let f = parse("x1*x2*sin(x1)", 2).unwrap();
        let mut o =
            Oracle::with_context(&f, ExprContext::new(vec![1.0, 1.0]).with_node_cap(200)).unwrap();
        assert_eq!(
            o.derivative(&idx(&[6, 6])),
            Err(ExprError::TreeTooLarge { cap: 200 })
        );
    }

    #[test]
    fn time_budget_fails_loudly() {
        let f = parse("x1*x2*sin(x1)*cos(x2)", 2).unwrap();
        let ctx = ExprContext::new(vec![1.0, 1.0]).with_time_budget(0.0);
        let mut o = Oracle::with_context(&f, ctx).unwrap();
        assert!(matches!(
            o.derivative(&idx(&[12, 12])),
            Err(ExprError::BudgetExceeded { .. })
        ));
    }
}
