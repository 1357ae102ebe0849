use std::collections::HashMap;
use std::sync::Mutex;

use super::context::ExprContext;
use super::expr::Expr;
use super::ExprError;
use crate::multidiff::{DerivativeProvider, MultiIndex, ProviderError};

struct State {
    ctx: ExprContext,
    trees: HashMap<MultiIndex, Expr>,
}

/// [`DerivativeProvider`] that differentiates an expression symbolically and
/// evaluates the result at a fixed point.
///
/// The tree for index `j` is derived from the tree for `j` with its rightmost
/// non-zero order decremented, so `x1` is always differentiated first and
/// chains share prefixes. Variables in which `f` is polynomial get a
/// vanishing hint from their degree.
pub struct SymbolicProvider {
    f: Expr,
    arity: usize,
    hint: Vec<Option<u32>>,
    state: Mutex<State>,
}

impl SymbolicProvider {
    pub fn new(f: Expr, point: Vec<f64>) -> Result<Self, ExprError> {
        make_provider(f, ExprContext::new(point))
    }

    /// The expression whose partials are supplied.
    pub fn expr(&self) -> &Expr {
        &self.f
    }

    pub fn vanishing_hint(&self) -> &[Option<u32>] {
        &self.hint
    }

    /// Partial `d^{|j|} f / dx^j` at the point.
    pub fn partial(&self, index: &[u32]) -> Result<f64, ExprError> {
        if index.len() != self.arity {
            return Err(ExprError::PointLength {
                expected: self.arity,
                got: index.len(),
            });
        }
        if index
            .iter()
            .zip(&self.hint)
            .any(|(&j, h)| matches!(h, Some(m) if j > *m))
        {
            return Ok(0.0);
        }
        let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
        let tree = tree_for(&mut state, &self.f, index)?;
        state.ctx.evaluate(&tree)
    }
}

fn tree_for(state: &mut State, f: &Expr, index: &[u32]) -> Result<Expr, ExprError> {
    let Some(last) = index.iter().rposition(|&j| j != 0) else {
        return Ok(f.clone());
    };
    if let Some(t) = state.trees.get(index) {
        return Ok(t.clone());
    }
    let mut prev = index.to_vec();
    prev[last] -= 1;
    let base = tree_for(state, f, &prev)?;
    let t = state.ctx.differentiate(&base, last + 1)?;
    state.trees.insert(MultiIndex::from(index), t.clone());
    Ok(t)
}

/// Provider for `f` at the context's point.
pub fn make_provider(f: Expr, ctx: ExprContext) -> Result<SymbolicProvider, ExprError> {
    ctx.check_arity(&f)?;
    let arity = ctx.arity();
    let hint = (1..=arity).map(|v| f.degree_in(v)).collect();
    Ok(SymbolicProvider {
        f,
        arity,
        hint,
        state: Mutex::new(State {
            ctx,
            trees: HashMap::new(),
        }),
    })
}

/// Provider for `log g` given `g`; used for derivatives of a general positive `g`.
pub fn make_log_provider(g: &Expr, mut ctx: ExprContext) -> Result<SymbolicProvider, ExprError> {
    ctx.check_arity(g)?;
    let log_g = ctx.log_of(g.clone())?;
    make_provider(log_g, ctx)
}

impl DerivativeProvider for SymbolicProvider {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, index: &[u32]) -> Result<f64, ProviderError> {
        Ok(self.partial(index)?)
    }

    fn max_order(&self, var: usize) -> Option<u32> {
        self.hint[var]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{evaluate, parse};

    const F: &str = "x1*x2*x3*x4 + x1^2*x2^2*x3^2*x4^2 + x1^3*x2^3*x3^3*x4^3";
    const G: &str = "x1*x2*x3*sin(x4) + x1*x2*sin(x3)*x4 + x1*sin(x2)*x3*x4 + sin(x1)*x2*x3*x4";

    #[test]
    fn benchmark_function_partials() {
        let f = parse(F, 4).unwrap();
        let p = SymbolicProvider::new(f, vec![1.0; 4]).unwrap();
        assert_eq!(p.vanishing_hint(), &[Some(3); 4]);
        assert_eq!(p.partial(&[1, 1, 1, 1]).unwrap(), 98.0);
        assert_eq!(p.partial(&[4, 0, 0, 0]).unwrap(), 0.0);
        assert_eq!(p.partial(&[0, 0, 0, 0]).unwrap(), 3.0);

        let g = parse(G, 4).unwrap();
        let p = SymbolicProvider::new(g.clone(), vec![1.0; 4]).unwrap();
        assert_eq!(p.vanishing_hint(), &[None; 4]);
        assert_eq!(
            p.partial(&[0, 0, 0, 0]).unwrap(),
            evaluate(&g, &[1.0; 4]).unwrap()
        );
    }

    #[test]
    fn repeated_eval_is_bitwise_stable() {
        let g = parse(G, 4).unwrap();
        let p = SymbolicProvider::new(g, vec![0.7, 1.1, 0.9, 1.3]).unwrap();
        let a = p.partial(&[2, 1, 0, 3]).unwrap();
        let b = p.partial(&[2, 1, 0, 3]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn arity_is_checked() {
        let f = parse("x1 * x3", 3).unwrap();
        assert!(matches!(
            SymbolicProvider::new(f, vec![1.0, 1.0]),
            Err(ExprError::VariableOutOfRange { var: 3, arity: 2 })
        ));
    }

    #[test]
    fn log_provider() {
        let g = parse("x1^2", 1).unwrap();
        let p = make_log_provider(&g, ExprContext::new(vec![1.0])).unwrap();
        assert_eq!(p.partial(&[0]).unwrap(), 0.0);
        assert_eq!(p.partial(&[1]).unwrap(), 2.0);
        assert_eq!(p.partial(&[2]).unwrap(), -2.0);
    }
}
