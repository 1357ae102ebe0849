//! Small symbolic engine: parsing, differentiation and evaluation of
//! expressions over `x1..xn`.
//!
//! It serves two roles. [`oracle_derivative`] differentiates `exp(f)`
//! directly, one variable at a time, as an independent reference for the
//! recursive method. [`SymbolicProvider`] differentiates `f` itself and feeds
//! the evaluated partials to [`crate::multidiff`].

mod context;
mod expr;
mod oracle;
mod parse;
mod provider;

use std::collections::HashMap;

use thiserror::Error;

pub use context::{differentiate, ExprContext, DEFAULT_NODE_CAP};
pub use expr::{Expr, Node};
pub use oracle::{oracle_derivative, Oracle};
pub use parse::{parse, ParseError};
pub use provider::{make_log_provider, make_provider, SymbolicProvider};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("variable x{var} is outside 1..={arity}")]
    VariableOutOfRange { var: usize, arity: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointLength { expected: usize, got: usize },
    #[error("{message} in `{subexpr}`")]
    Domain {
        message: &'static str,
        subexpr: String,
    },
    #[error("symbolic tree grew past {cap} nodes")]
    TreeTooLarge { cap: usize },
    #[error("time budget of {seconds} s exhausted")]
    BudgetExceeded { seconds: f64 },
}

const SUBEXPR_PRINT_LIMIT: usize = 120;

pub(crate) fn domain_error(message: &'static str, e: &Expr) -> ExprError {
    ExprError::Domain {
        message,
        subexpr: e.to_string_truncated(SUBEXPR_PRINT_LIMIT),
    }
}

/// Applies one node's operation to already-evaluated children.
pub(crate) fn apply(e: &Expr, point: &[f64], a: f64, b: f64) -> Result<f64, ExprError> {
    Ok(match *e.node() {
        Node::Const(v) => v,
        Node::Var(i) => match point.get(i.wrapping_sub(1)) {
            Some(&v) if i >= 1 => v,
            _ => {
                return Err(ExprError::VariableOutOfRange {
                    var: i,
                    arity: point.len(),
                })
            }
        },
        Node::Add(..) => a + b,
        Node::Sub(..) => a - b,
        Node::Mul(..) => a * b,
        Node::Div(..) => {
            if b == 0.0 {
                return Err(domain_error("division by zero", e));
            }
            a / b
        }
        Node::Pow(_, n) => powu(a, n),
        Node::Sin(_) => a.sin(),
        Node::Cos(_) => a.cos(),
        Node::Exp(_) => a.exp(),
        Node::Log(_) => {
            if a <= 0.0 {
                return Err(domain_error("logarithm of a non-positive value", e));
            }
            a.ln()
        }
    })
}

pub(crate) fn powu(base: f64, n: u32) -> f64 {
    match i32::try_from(n) {
        Ok(n) => base.powi(n),
        Err(_) => base.powf(f64::from(n)),
    }
}

/// Evaluates `e` at `point` (`point[i]` is `x_{i+1}`). Shared subtrees are
/// evaluated once.
pub fn evaluate(e: &Expr, point: &[f64]) -> Result<f64, ExprError> {
    let mut memo = HashMap::new();
    eval_rec(e, point, &mut memo)
}

fn eval_rec(e: &Expr, point: &[f64], memo: &mut HashMap<usize, f64>) -> Result<f64, ExprError> {
    if let Some(&v) = memo.get(&e.id()) {
        return Ok(v);
    }
    let mut args = [0.0; 2];
    for (slot, child) in args.iter_mut().zip(e.children()) {
        *slot = eval_rec(child, point, memo)?;
    }
    let v = apply(e, point, args[0], args[1])?;
    memo.insert(e.id(), v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluate_examples() {
        let f = parse("x1*x2*x3*x4 + x1^2*x2^2*x3^2*x4^2 + x1^3*x2^3*x3^3*x4^3", 4).unwrap();
        assert_eq!(evaluate(&f, &[1.0; 4]).unwrap(), 3.0);
        let g = parse(
            "x1*x2*x3*sin(x4) + x1*x2*sin(x3)*x4 + x1*sin(x2)*x3*x4 + sin(x1)*x2*x3*x4",
            4,
        )
        .unwrap();
        let v = evaluate(&g, &[1.0; 4]).unwrap();
        assert!((v - 3.365_883_939_231_586).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let log = parse("log(x1)", 1).unwrap();
        let err = evaluate(&log, &[0.0]).unwrap_err();
        assert!(matches!(&err, ExprError::Domain { subexpr, .. } if subexpr == "log(x1)"));
        let div = parse("1 / (x1 - 1)", 1).unwrap();
        assert!(matches!(
            evaluate(&div, &[1.0]),
            Err(ExprError::Domain { .. })
        ));
        assert!(matches!(
            evaluate(&log, &[]),
            Err(ExprError::VariableOutOfRange { var: 1, arity: 0 })
        ));
    }
}
