use std::collections::HashMap;
use std::fmt::{self, Write};
use std::sync::Arc;

use super::ExprError;

/// Immutable, cheaply clonable expression. Subtrees are shared, so an `Expr`
/// is in general a DAG; identity (not structure) is what memo tables key on.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

#[derive(Debug)]
pub enum Node {
    Const(f64),
    /// One-based variable index.
    Var(usize),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, u32),
    Sin(Expr),
    Cos(Expr),
    Exp(Expr),
    Log(Expr),
}

impl Expr {
    pub fn new(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn constant(value: f64) -> Self {
        Expr::new(Node::Const(value))
    }

    /// Variable `x_index`, one-based.
    pub fn var(index: usize) -> Self {
        Expr::new(Node::Var(index))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    /// Address of the shared node, stable while any clone is alive.
    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.node() {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn exp(self) -> Expr {
        Expr::new(Node::Exp(self))
    }

    pub fn log(self) -> Expr {
        Expr::new(Node::Log(self))
    }

    pub fn sin(self) -> Expr {
        Expr::new(Node::Sin(self))
    }

    pub fn cos(self) -> Expr {
        Expr::new(Node::Cos(self))
    }

    pub fn pow(self, exponent: u32) -> Expr {
        Expr::new(Node::Pow(self, exponent))
    }

    /// Children in evaluation order.
    pub fn children(&self) -> impl Iterator<Item = &Expr> {
        let (a, b) = match self.node() {
            Node::Const(_) | Node::Var(_) => (None, None),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                (Some(a), Some(b))
            }
            Node::Pow(a, _) | Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Log(a) => {
                (Some(a), None)
            }
        };
        a.into_iter().chain(b)
    }

    /// Highest variable index referenced, 0 for a closed expression.
    pub fn max_var(&self) -> usize {
        let mut memo = HashMap::new();
        max_var_rec(self, &mut memo)
    }

    /// Number of distinct nodes reachable from `self`.
    pub fn dag_size(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            if seen.insert(e.id()) {
                stack.extend(e.children());
            }
        }
        seen.len()
    }

    /// Polynomial degree in `x_var`, treating other variables as constants.
    /// `None` when the expression is not a polynomial in that variable.
    pub fn degree_in(&self, var: usize) -> Option<u32> {
        let mut memo = HashMap::new();
        degree_rec(self, var, &mut memo)
    }

    /// Printed form cut off after roughly `limit` bytes.
    pub fn to_string_truncated(&self, limit: usize) -> String {
        let mut out = Printer {
            buf: String::new(),
            limit,
        };
        // Overflow of the limit surfaces as fmt::Error; the prefix is what we want.
        let _ = out.expr(self);
        if out.buf.len() >= limit {
            out.buf.push_str("...");
        }
        out.buf
    }

    /// Closed expression value; errors if a variable appears.
    pub fn constant_value(&self) -> Result<f64, ExprError> {
        super::evaluate(self, &[])
    }
}

fn max_var_rec(e: &Expr, memo: &mut HashMap<usize, usize>) -> usize {
    if let Some(&v) = memo.get(&e.id()) {
        return v;
    }
    let v = match e.node() {
        Node::Var(i) => *i,
        _ => e
            .children()
            .map(|c| max_var_rec(c, memo))
            .max()
            .unwrap_or(0),
    };
    memo.insert(e.id(), v);
    v
}

fn degree_rec(e: &Expr, var: usize, memo: &mut HashMap<usize, Option<u32>>) -> Option<u32> {
    if let Some(&d) = memo.get(&e.id()) {
        return d;
    }
    let d = match e.node() {
        Node::Const(_) => Some(0),
        Node::Var(i) => Some(u32::from(*i == var)),
        Node::Add(a, b) | Node::Sub(a, b) => {
            let (da, db) = (degree_rec(a, var, memo), degree_rec(b, var, memo));
            da.zip(db).map(|(x, y)| x.max(y))
        }
        Node::Mul(a, b) => {
            let (da, db) = (degree_rec(a, var, memo), degree_rec(b, var, memo));
            da.zip(db).and_then(|(x, y)| x.checked_add(y))
        }
        Node::Div(a, b) => match degree_rec(b, var, memo) {
            Some(0) => degree_rec(a, var, memo),
            _ => None,
        },
        Node::Pow(a, n) => degree_rec(a, var, memo).and_then(|x| x.checked_mul(*n)),
        Node::Sin(a) | Node::Cos(a) | Node::Exp(a) | Node::Log(a) => match degree_rec(a, var, memo)
        {
            Some(0) => Some(0),
            _ => None,
        },
    };
    memo.insert(e.id(), d);
    d
}

struct Printer {
    buf: String,
    limit: usize,
}

impl Printer {
    fn push(&mut self, s: &str) -> fmt::Result {
        if self.buf.len() >= self.limit {
            return Err(fmt::Error);
        }
        self.buf.push_str(s);
        Ok(())
    }

    fn expr(&mut self, e: &Expr) -> fmt::Result {
        match e.node() {
            Node::Const(v) => {
                if v.is_sign_negative() {
                    self.push("(-")?;
                    self.constant(-v)?;
                    self.push(")")
                } else {
                    self.constant(*v)
                }
            }
            Node::Var(i) => {
                let s = format!("x{i}");
                self.push(&s)
            }
            Node::Add(a, b) => self.binary(a, " + ", b),
            Node::Sub(a, b) => self.binary(a, " - ", b),
            Node::Mul(a, b) => self.binary(a, " * ", b),
            Node::Div(a, b) => self.binary(a, " / ", b),
            Node::Pow(a, n) => {
                self.push("(")?;
                self.expr(a)?;
                let s = format!("^{n})");
                self.push(&s)
            }
            Node::Sin(a) => self.call("sin", a),
            Node::Cos(a) => self.call("cos", a),
            Node::Exp(a) => self.call("exp", a),
            Node::Log(a) => self.call("log", a),
        }
    }

    fn constant(&mut self, v: f64) -> fmt::Result {
        let mut s = String::new();
        write!(s, "{v}")?;
        self.push(&s)
    }

    fn binary(&mut self, a: &Expr, op: &str, b: &Expr) -> fmt::Result {
        self.push("(")?;
        self.expr(a)?;
        self.push(op)?;
        self.expr(b)?;
        self.push(")")
    }

    fn call(&mut self, name: &str, a: &Expr) -> fmt::Result {
        self.push(name)?;
        self.push("(")?;
        self.expr(a)?;
        self.push(")")
    }
}

/// Fully parenthesized form accepted back by [`super::parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            buf: String::new(),
            limit: usize::MAX,
        };
        p.expr(self)?;
        f.write_str(&p.buf)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self.to_string_truncated(200))
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::new(Node::Add(self, rhs))
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::new(Node::Sub(self, rhs))
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::new(Node::Mul(self, rhs))
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::new(Node::Div(self, rhs))
    }
}
