use std::collections::HashMap;
use std::time::Instant;

use super::expr::{Expr, Node};
use super::{apply, powu, ExprError};

/// Default limit on nodes a context may create while differentiating.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// Check the clock once per this many created or evaluated nodes.
const CLOCK_STRIDE: usize = 4096;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, u32),
    Sin(usize),
    Cos(usize),
    Exp(usize),
    Log(usize),
}

/// Differentiation and evaluation state for expressions over `arity`
/// variables at one fixed `point`.
///
/// Nodes built here are hash-consed, derivatives are memoized per
/// `(node, variable)` and values per node, so repeated differentiation of
/// related trees shares work. Entries are never rewritten once created.
pub struct ExprContext {
    arity: usize,
    point: Vec<f64>,
    derivatives: HashMap<(usize, usize), (Expr, Expr)>,
    interned: HashMap<Key, Expr>,
    values: HashMap<usize, (Expr, f64)>,
    created: usize,
    node_cap: usize,
    deadline: Option<(Instant, f64)>,
    ticks: usize,
}

impl ExprContext {
    pub fn new(point: Vec<f64>) -> Self {
        ExprContext {
            arity: point.len(),
            point,
            derivatives: HashMap::new(),
            interned: HashMap::new(),
            values: HashMap::new(),
            created: 0,
            node_cap: DEFAULT_NODE_CAP,
            deadline: None,
            ticks: 0,
        }
    }

    pub fn with_node_cap(mut self, cap: usize) -> Self {
        self.node_cap = cap;
        self
    }

    /// Abort work with [`ExprError::BudgetExceeded`] once `seconds` have
    /// elapsed from now.
    pub fn with_time_budget(mut self, seconds: f64) -> Self {
        self.set_time_budget(seconds);
        self
    }

    pub fn set_time_budget(&mut self, seconds: f64) {
        let deadline = std::time::Duration::try_from_secs_f64(seconds.max(0.0))
            .ok()
            .and_then(|d| Instant::now().checked_add(d));
        self.deadline = deadline.map(|d| (d, seconds));
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    /// Nodes created so far by differentiation.
    pub fn nodes_created(&self) -> usize {
        self.created
    }

    pub fn node_cap(&self) -> usize {
        self.node_cap
    }

    fn tick(&mut self) -> Result<(), ExprError> {
        self.ticks += 1;
        if self.ticks.is_multiple_of(CLOCK_STRIDE) {
            if let Some((deadline, seconds)) = self.deadline {
                if Instant::now() >= deadline {
                    return Err(ExprError::BudgetExceeded { seconds });
                }
            }
        }
        Ok(())
    }

    fn intern(&mut self, key: Key, node: impl FnOnce() -> Node) -> Result<Expr, ExprError> {
        if let Some(e) = self.interned.get(&key) {
            return Ok(e.clone());
        }
        if self.created >= self.node_cap {
            return Err(ExprError::TreeTooLarge { cap: self.node_cap });
        }
        self.tick()?;
        self.created += 1;
        let e = Expr::new(node());
        self.interned.insert(key, e.clone());
        Ok(e)
    }

    fn constant(&mut self, v: f64) -> Result<Expr, ExprError> {
        self.intern(Key::Const(v.to_bits()), || Node::Const(v))
    }

    fn zero(&mut self) -> Result<Expr, ExprError> {
        self.constant(0.0)
    }

    fn one(&mut self) -> Result<Expr, ExprError> {
        self.constant(1.0)
    }

    fn add(&mut self, a: Expr, b: Expr) -> Result<Expr, ExprError> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => self.constant(x + y),
            (Some(0.0), _) => Ok(b),
            (_, Some(0.0)) => Ok(a),
            _ => self.intern(Key::Add(a.id(), b.id()), || Node::Add(a, b)),
        }
    }

    fn sub(&mut self, a: Expr, b: Expr) -> Result<Expr, ExprError> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => self.constant(x - y),
            (_, Some(0.0)) => Ok(a),
            _ => self.intern(Key::Sub(a.id(), b.id()), || Node::Sub(a, b)),
        }
    }

    fn mul(&mut self, a: Expr, b: Expr) -> Result<Expr, ExprError> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => self.constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => self.zero(),
            (Some(1.0), _) => Ok(b),
            (_, Some(1.0)) => Ok(a),
            _ => self.intern(Key::Mul(a.id(), b.id()), || Node::Mul(a, b)),
        }
    }

    fn div(&mut self, a: Expr, b: Expr) -> Result<Expr, ExprError> {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => self.constant(x / y),
            (_, Some(1.0)) => Ok(a),
            _ => self.intern(Key::Div(a.id(), b.id()), || Node::Div(a, b)),
        }
    }

    fn pow(&mut self, a: Expr, n: u32) -> Result<Expr, ExprError> {
        match (a.as_const(), n) {
            (_, 0) => self.one(),
            (_, 1) => Ok(a),
            (Some(x), n) => self.constant(powu(x, n)),
            _ => self.intern(Key::Pow(a.id(), n), || Node::Pow(a, n)),
        }
    }

    fn unary(
        &mut self,
        kind: fn(Expr) -> Node,
        key: fn(usize) -> Key,
        a: Expr,
    ) -> Result<Expr, ExprError> {
        if let Some(x) = a.as_const() {
            let folded = match kind(a.clone()) {
                Node::Sin(_) => Some(x.sin()),
                Node::Cos(_) => Some(x.cos()),
                Node::Exp(_) => Some(x.exp()),
                Node::Log(_) if x > 0.0 => Some(x.ln()),
                _ => None,
            };
            if let Some(v) = folded {
                return self.constant(v);
            }
        }
        self.intern(key(a.id()), || kind(a))
    }

    /// `d e / d x_var`, memoized per `(e, var)`.
    pub fn differentiate(&mut self, e: &Expr, var: usize) -> Result<Expr, ExprError> {
        if var == 0 || var > self.arity {
            return Err(ExprError::VariableOutOfRange {
                var,
                arity: self.arity,
            });
        }
        self.diff_rec(e, var)
    }

    fn diff_rec(&mut self, e: &Expr, var: usize) -> Result<Expr, ExprError> {
        if let Some((_, d)) = self.derivatives.get(&(e.id(), var)) {
            return Ok(d.clone());
        }
        let d = match e.node() {
            Node::Const(_) => self.zero()?,
            Node::Var(i) if *i == var => self.one()?,
            Node::Var(_) => self.zero()?,
            Node::Add(a, b) => {
                let (da, db) = (self.diff_rec(a, var)?, self.diff_rec(b, var)?);
                self.add(da, db)?
            }
            Node::Sub(a, b) => {
                let (da, db) = (self.diff_rec(a, var)?, self.diff_rec(b, var)?);
                self.sub(da, db)?
            }
            Node::Mul(a, b) => {
                let (da, db) = (self.diff_rec(a, var)?, self.diff_rec(b, var)?);
                let left = self.mul(da, b.clone())?;
                let right = self.mul(a.clone(), db)?;
                self.add(left, right)?
            }
            Node::Div(a, b) => {
                let (da, db) = (self.diff_rec(a, var)?, self.diff_rec(b, var)?);
                let left = self.mul(da, b.clone())?;
                let right = self.mul(a.clone(), db)?;
                let num = self.sub(left, right)?;
                let den = self.pow(b.clone(), 2)?;
                self.div(num, den)?
            }
            Node::Pow(a, n) => {
                let da = self.diff_rec(a, var)?;
                let c = self.constant(f64::from(*n))?;
                let lower = self.pow(a.clone(), n - 1)?;
                let outer = self.mul(c, lower)?;
                self.mul(outer, da)?
            }
            Node::Sin(a) => {
                let da = self.diff_rec(a, var)?;
                let cos = self.unary(Node::Cos, Key::Cos, a.clone())?;
                self.mul(cos, da)?
            }
            Node::Cos(a) => {
                let da = self.diff_rec(a, var)?;
                let sin = self.unary(Node::Sin, Key::Sin, a.clone())?;
                let zero = self.zero()?;
                let neg = self.sub(zero, sin)?;
                self.mul(neg, da)?
            }
            Node::Exp(a) => {
                let da = self.diff_rec(a, var)?;
                self.mul(e.clone(), da)?
            }
            Node::Log(a) => {
                let da = self.diff_rec(a, var)?;
                self.div(da, a.clone())?
            }
        };
        self.derivatives
            .insert((e.id(), var), (e.clone(), d.clone()));
        Ok(d)
    }

    /// Value of `e` at this context's point, memoized per node.
    pub fn evaluate(&mut self, e: &Expr) -> Result<f64, ExprError> {
        if let Some((_, v)) = self.values.get(&e.id()) {
            return Ok(*v);
        }
        let mut args = [0.0; 2];
        for (slot, child) in args.iter_mut().zip(e.children()) {
            *slot = self.evaluate(child)?;
        }
        self.tick()?;
        let v = apply(e, &self.point, args[0], args[1])?;
        self.values.insert(e.id(), (e.clone(), v));
        Ok(v)
    }

    /// Rejects expressions referring to variables past the context's arity.
    pub fn check_arity(&self, e: &Expr) -> Result<(), ExprError> {
        let max = e.max_var();
        if max > self.arity {
            return Err(ExprError::VariableOutOfRange {
                var: max,
                arity: self.arity,
            });
        }
        Ok(())
    }

    pub(crate) fn exp_of(&mut self, e: Expr) -> Result<Expr, ExprError> {
        self.unary(Node::Exp, Key::Exp, e)
    }

    /// `log(e)`, with `log(exp(a))` reduced to `a`.
    pub(crate) fn log_of(&mut self, e: Expr) -> Result<Expr, ExprError> {
        if let Node::Exp(inner) = e.node() {
            return Ok(inner.clone());
        }
        self.unary(Node::Log, Key::Log, e)
    }
}

/// `d e / d x_var` within `ctx`.
pub fn differentiate(e: &Expr, var: usize, ctx: &mut ExprContext) -> Result<Expr, ExprError> {
    ctx.differentiate(e, var)
}
