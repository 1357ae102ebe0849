#![allow(dead_code)]

use multibell::symbolic::{Expr, Node};

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}

/// Copy of `e` with `x_i` renamed to `x_{perm[i-1]}`.
pub fn rename(e: &Expr, perm: &[usize]) -> Expr {
    let r = |c: &Expr| rename(c, perm);
    match e.node() {
        Node::Const(v) => Expr::constant(*v),
        Node::Var(i) => Expr::var(perm[i - 1]),
        Node::Add(a, b) => r(a) + r(b),
        Node::Sub(a, b) => r(a) - r(b),
        Node::Mul(a, b) => r(a) * r(b),
        Node::Div(a, b) => r(a) / r(b),
        Node::Pow(a, n) => r(a).pow(*n),
        Node::Sin(a) => r(a).sin(),
        Node::Cos(a) => r(a).cos(),
        Node::Exp(a) => r(a).exp(),
        Node::Log(a) => r(a).log(),
    }
}

/// All permutations of `1..=n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n);
            out.push(q);
        }
    }
    out
}

/// Moves `values[i]` to slot `perm[i] - 1`.
pub fn scatter<T: Copy + Default>(values: &[T], perm: &[usize]) -> Vec<T> {
    let mut out = vec![T::default(); values.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p - 1] = values[i];
    }
    out
}

/// Separable exponents: (text, arity, number of leading variables in the
/// first summand).
pub const SEPARABLE_CASES: [(&str, usize, usize); 5] = [
    ("x1^2 + x2", 2, 1),
    ("x1*sin(x1) + x2^3 - x2", 2, 1),
    ("x1*x2 + sin(x3)", 3, 2),
    ("exp(x1) + x2*x3", 3, 1),
    ("x1*x2 + x3^2*x4 + sin(x4)", 4, 2),
];
