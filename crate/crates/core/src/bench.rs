//! Benchmark sweep of the recursive method against the symbolic oracle, its
//! CSV serialization, and the oracle-equivalence corpus check.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::multidiff::{exp_derivative, DiffError, MultiIndex, YCache};
use crate::symbolic::{parse, Expr, ExprContext, ExprError, Oracle, ParseError, SymbolicProvider};

/// Exponent of the polynomial benchmark function.
pub const F_EXPONENT: &str = "x1*x2*x3*x4 + x1^2*x2^2*x3^2*x4^2 + x1^3*x2^3*x3^3*x4^3";
/// Exponent of the trigonometric benchmark function.
pub const G_EXPONENT: &str =
    "x1*x2*x3*sin(x4) + x1*x2*sin(x3)*x4 + x1*sin(x2)*x3*x4 + sin(x1)*x2*x3*x4";

/// Two values match when their relative difference is at most this.
pub const MATCH_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_ORACLE_BUDGET: f64 = 120.0;
pub const DEFAULT_REPETITIONS: usize = 3;

pub const CSV_HEADER: [&str; 7] = [
    "function",
    "method",
    "orders",
    "seconds",
    "value",
    "provider_calls",
    "match",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed csv row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("no records to write")]
    Empty,
}

impl From<ParseError> for BenchError {
    fn from(e: ParseError) -> Self {
        BenchError::Expr(e.into())
    }
}

/// `|a - b| / max(|a|, |b|)`, zero when the two are identical.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenchFunction {
    F,
    G,
    Expr(String),
}

impl BenchFunction {
    pub fn label(&self) -> String {
        match self {
            BenchFunction::F => "F".into(),
            BenchFunction::G => "G".into(),
            BenchFunction::Expr(text) => format!("expr:{text}"),
        }
    }

    fn text(&self) -> &str {
        match self {
            BenchFunction::F => F_EXPONENT,
            BenchFunction::G => G_EXPONENT,
            BenchFunction::Expr(text) => text,
        }
    }

    /// Arity of the exponent: 4 for the builtins, the highest variable used
    /// (at least 1) for an expression.
    pub fn natural_arity(&self) -> Result<usize, BenchError> {
        match self {
            BenchFunction::F | BenchFunction::G => Ok(4),
            BenchFunction::Expr(text) => Ok(parse(text, usize::MAX)?.max_var().max(1)),
        }
    }

    pub fn exponent(&self, arity: usize) -> Result<Expr, BenchError> {
        Ok(parse(self.text(), arity)?)
    }
}

impl FromStr for BenchFunction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(BenchFunction::F),
            "G" => Ok(BenchFunction::G),
            _ => match s.strip_prefix("expr:") {
                Some(text) => Ok(BenchFunction::Expr(text.to_string())),
                None => Err(format!("expected F, G or expr:<text>, got `{s}`")),
            },
        }
    }
}

/// One sweep: orders `(.., k, ..)` with `k` at `sweep_var` running over
/// `sweep_min..=sweep_max` and the remaining variables held at `fixed`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub function: BenchFunction,
    pub point: Vec<f64>,
    /// One-based.
    pub sweep_var: usize,
    pub sweep_min: u32,
    pub sweep_max: u32,
    /// Orders of the other variables, in variable order.
    pub fixed: Vec<u32>,
    pub repetitions: usize,
    pub clear_cache: bool,
    pub oracle_budget: f64,
}

impl BenchmarkSpec {
    /// All-ones point, sweep over `x1` for `k = 0..=6`, other orders 4.
    pub fn new(function: BenchFunction) -> Result<Self, BenchError> {
        let arity = function.natural_arity()?;
        Ok(BenchmarkSpec {
            function,
            point: vec![1.0; arity],
            sweep_var: 1,
            sweep_min: 0,
            sweep_max: 6,
            fixed: vec![4; arity - 1],
            repetitions: DEFAULT_REPETITIONS,
            clear_cache: true,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
        })
    }

    pub fn arity(&self) -> usize {
        self.point.len()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let n = self.arity();
        let bad = |m: String| Err(BenchError::InvalidSpec(m));
        if n == 0 {
            return bad("point must have at least one coordinate".into());
        }
        if !(1..=n).contains(&self.sweep_var) {
            return bad(format!(
                "sweep variable x{} outside 1..={n}",
                self.sweep_var
            ));
        }
        if self.fixed.len() != n - 1 {
            return bad(format!(
                "{} fixed orders given, need {}",
                self.fixed.len(),
                n - 1
            ));
        }
        if self.sweep_min > self.sweep_max {
            return bad("empty sweep range".into());
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1".into());
        }
        if self.oracle_budget.is_nan() || self.oracle_budget < 0.0 {
            return bad("oracle budget must be non-negative".into());
        }
        Ok(())
    }

    /// Multi-index of one sweep point.
    pub fn orders_at(&self, k: u32) -> MultiIndex {
        let mut orders = self.fixed.clone();
        orders.insert(self.sweep_var - 1, k);
        MultiIndex::new(orders)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Recursive,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Recursive => "recursive",
            Method::Oracle => "oracle",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "recursive" => Ok(Method::Recursive),
            "oracle" => Ok(Method::Oracle),
            _ => Err(format!("unknown method `{s}`")),
        }
    }
}

/// One row of benchmark output.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRecord {
    pub function: String,
    pub method: Method,
    pub orders: MultiIndex,
    /// Best wall time over the repetitions.
    pub seconds: f64,
    /// `None` when the method was skipped.
    pub value: Option<f64>,
    /// Recursive method only: provider calls made by the last repetition.
    pub provider_calls: Option<u64>,
    /// Set only when both methods produced a value at this sweep point.
    pub matched: Option<bool>,
}

/// Runs the sweep. Each sweep point yields a recursive record followed by an
/// oracle record. Once the oracle runs out of budget (time or tree size) it
/// is recorded as skipped for the rest of the sweep.
pub fn run_benchmark(spec: &BenchmarkSpec) -> Result<Vec<BenchmarkRecord>, BenchError> {
    spec.validate()?;
    let f = spec.function.exponent(spec.arity())?;
    let label = spec.function.label();
    let point = spec.point.clone();

    // Used only when the cache is kept across the sweep.
    let mut kept: Option<(SymbolicProvider, YCache)> = None;
    let mut kept_oracle: Option<Oracle> = None;
    let mut oracle_exhausted = false;

    let mut records = Vec::new();
    for k in spec.sweep_min..=spec.sweep_max {
        let orders = spec.orders_at(k);

        let mut best = f64::INFINITY;
        let mut value = 0.0;
        let mut calls = 0;
        for _ in 0..spec.repetitions {
            let start = Instant::now();
            if spec.clear_cache {
                let provider = SymbolicProvider::new(f.clone(), point.clone())?;
                let cache = YCache::new();
                value = exp_derivative(&orders, &provider, &cache)?;
                calls = cache.provider_call_count();
            } else {
                if kept.is_none() {
                    kept = Some((
                        SymbolicProvider::new(f.clone(), point.clone())?,
                        YCache::new(),
                    ));
                }
                let (provider, cache) = kept.as_ref().expect("initialized above");
                let before = cache.provider_call_count();
                value = exp_derivative(&orders, provider, cache)?;
                calls = cache.provider_call_count() - before;
            }
            best = best.min(start.elapsed().as_secs_f64());
        }
        let mut recursive = BenchmarkRecord {
            function: label.clone(),
            method: Method::Recursive,
            orders: orders.clone(),
            seconds: best,
            value: Some(value),
            provider_calls: Some(calls),
            matched: None,
        };

        let mut oracle = BenchmarkRecord {
            function: label.clone(),
            method: Method::Oracle,
            orders,
            seconds: 0.0,
            value: None,
            provider_calls: None,
            matched: None,
        };
        if !oracle_exhausted {
            let mut spent = 0.0;
            let mut best = f64::INFINITY;
            let mut result = None;
            for _ in 0..spec.repetitions {
                let remaining = spec.oracle_budget - spent;
                if remaining <= 0.0 || (result.is_some() && remaining <= best) {
                    break;
                }
                let start = Instant::now();
                let outcome = if spec.clear_cache {
                    let ctx = ExprContext::new(point.clone()).with_time_budget(remaining);
                    Oracle::with_context(&f, ctx).and_then(|mut o| o.derivative(&oracle.orders))
                } else {
                    if kept_oracle.is_none() {
                        kept_oracle = Some(Oracle::new(&f, point.clone())?);
                    }
                    let o = kept_oracle.as_mut().expect("initialized above");
                    o.derivative(&oracle.orders)
                };
                let elapsed = start.elapsed().as_secs_f64();
                spent += elapsed;
                match outcome {
                    Ok(v) => {
                        best = best.min(elapsed);
                        result = Some(v);
                    }
                    Err(ExprError::BudgetExceeded { .. } | ExprError::TreeTooLarge { .. }) => break,
                    Err(e) => return Err(e.into()),
                }
            }
            if result.is_none() || spent > spec.oracle_budget {
                oracle_exhausted = true;
            }
            if let Some(v) = result {
                oracle.value = Some(v);
                oracle.seconds = best;
                let matched = relative_difference(v, value) <= MATCH_TOLERANCE;
                oracle.matched = Some(matched);
                recursive.matched = Some(matched);
            }
        }
        records.push(recursive);
        records.push(oracle);
    }
    Ok(records)
}

fn format_orders(orders: &MultiIndex) -> String {
    orders
        .orders()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// Writes `records` as CSV with the header [`CSV_HEADER`].
pub fn emit_csv(records: &[BenchmarkRecord], destination: &Path) -> Result<(), BenchError> {
    if records.is_empty() {
        return Err(BenchError::Empty);
    }
    let mut w = csv::Writer::from_path(destination)?;
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.function.clone(),
            r.method.to_string(),
            format_orders(&r.orders),
            r.seconds.to_string(),
            r.value
                .map_or_else(|| "skipped".to_string(), |v| v.to_string()),
            r.provider_calls.map_or_else(String::new, |c| c.to_string()),
            r.matched.map_or_else(String::new, |m| m.to_string()),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads back what [`emit_csv`] wrote.
pub fn read_csv(source: &Path) -> Result<Vec<BenchmarkRecord>, BenchError> {
    let mut r = csv::Reader::from_path(source)?;
    let header = r.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(BenchError::Row {
            row: 0,
            message: "unexpected header".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row?;
        let line = i + 1;
        let err = |message: String| BenchError::Row { row: line, message };
        let orders = row[2]
            .split(';')
            .map(|s| s.parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(format!("orders: {e}")))?;
        out.push(BenchmarkRecord {
            function: row[0].to_string(),
            method: row[1].parse().map_err(err)?,
            orders: MultiIndex::new(orders),
            seconds: row[3].parse().map_err(|e| err(format!("seconds: {e}")))?,
            value: match &row[4] {
                "skipped" => None,
                v => Some(v.parse().map_err(|e| err(format!("value: {e}")))?),
            },
            provider_calls: match &row[5] {
                "" => None,
                c => Some(c.parse().map_err(|e| err(format!("provider_calls: {e}")))?),
            },
            matched: match &row[6] {
                "" => None,
                m => Some(m.parse().map_err(|e| err(format!("match: {e}")))?),
            },
        });
    }
    Ok(out)
}

/// A function of the oracle-equivalence corpus.
#[derive(Debug, Clone, Copy)]
pub struct CorpusFunction {
    pub label: &'static str,
    pub text: &'static str,
    pub arity: usize,
}

pub const CORPUS: [CorpusFunction; 10] = [
    CorpusFunction {
        label: "x^2",
        text: "x1^2",
        arity: 1,
    },
    CorpusFunction {
        label: "x^3+x",
        text: "x1^3 + x1",
        arity: 1,
    },
    CorpusFunction {
        label: "sin(x)",
        text: "sin(x1)",
        arity: 1,
    },
    CorpusFunction {
        label: "x*sin(x)",
        text: "x1*sin(x1)",
        arity: 1,
    },
    CorpusFunction {
        label: "x1*x2",
        text: "x1*x2",
        arity: 2,
    },
    CorpusFunction {
        label: "x1^2+x2",
        text: "x1^2 + x2",
        arity: 2,
    },
    CorpusFunction {
        label: "x1*sin(x2)",
        text: "x1*sin(x2)",
        arity: 2,
    },
    CorpusFunction {
        label: "x1*x2*x3",
        text: "x1*x2*x3",
        arity: 3,
    },
    CorpusFunction {
        label: "F",
        text: F_EXPONENT,
        arity: 4,
    },
    CorpusFunction {
        label: "G",
        text: G_EXPONENT,
        arity: 4,
    },
];

/// Highest total order checked by [`check_corpus`].
pub const CORPUS_MAX_ORDER: u32 = 8;

/// Evaluation points of the corpus check: all ones, and an asymmetric point.
pub fn corpus_points(arity: usize) -> Vec<Vec<f64>> {
    const OFF: [f64; 4] = [0.7, 1.2, 0.9, 1.1];
    vec![vec![1.0; arity], OFF[..arity].to_vec()]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub label: &'static str,
    pub point: Vec<f64>,
    pub indices_checked: usize,
    pub max_relative_error: f64,
    pub worst: MultiIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusReport {
    pub entries: Vec<CorpusEntry>,
    pub tolerance: f64,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.max_relative_error <= self.tolerance)
    }

    pub fn max_relative_error(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.max_relative_error)
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for CorpusReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            let status = if e.max_relative_error <= self.tolerance {
                "ok"
            } else {
                "FAIL"
            };
            writeln!(
                f,
                "{:<12} at {:?}: {} indices, max rel error {:.3e} at {} [{}]",
                e.label, e.point, e.indices_checked, e.max_relative_error, e.worst, status
            )?;
        }
        write!(
            f,
            "overall max rel error {:.3e} (tolerance {:e}): {}",
            self.max_relative_error(),
            self.tolerance,
            if self.passed() { "PASS" } else { "FAIL" }
        )
    }
}

/// Compares the recursive method with the oracle for one function at one
/// point over every multi-index with `|k| <= max_order`.
pub fn compare_with_oracle(
    label: &'static str,
    f: &Expr,
    point: &[f64],
    max_order: u32,
) -> Result<CorpusEntry, BenchError> {
    let provider = SymbolicProvider::new(f.clone(), point.to_vec())?;
    let cache = YCache::new();
    let mut oracle = Oracle::new(f, point.to_vec())?;
    let indices = MultiIndex::all_up_to(point.len(), max_order);
    let mut worst = MultiIndex::zeros(point.len());
    let mut max_err = 0.0;
    for k in &indices {
        let fast = exp_derivative(k, &provider, &cache)?;
        let slow = oracle.derivative(k)?;
        let err = relative_difference(fast, slow);
        if err > max_err || err.is_nan() {
            max_err = err;
            worst = k.clone();
        }
    }
    Ok(CorpusEntry {
        label,
        point: point.to_vec(),
        indices_checked: indices.len(),
        max_relative_error: max_err,
        worst,
    })
}

/// Oracle-equivalence check over [`CORPUS`] at every [`corpus_points`] point.
pub fn check_corpus() -> Result<CorpusReport, BenchError> {
    let mut entries = Vec::new();
    for c in CORPUS {
        let f = parse(c.text, c.arity)?;
        for point in corpus_points(c.arity) {
            entries.push(compare_with_oracle(c.label, &f, &point, CORPUS_MAX_ORDER)?);
        }
    }
    Ok(CorpusReport {
        entries,
        tolerance: MATCH_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn function_labels_round_trip() {
        for f in [
            BenchFunction::F,
            BenchFunction::G,
            BenchFunction::Expr("x1*x2".into()),
        ] {
            assert_eq!(f.label().parse::<BenchFunction>().unwrap(), f);
        }
        assert!("H".parse::<BenchFunction>().is_err());
        assert_eq!(
            BenchFunction::Expr("x1 + x3".into())
                .natural_arity()
                .unwrap(),
            3
        );
        assert_eq!(BenchFunction::Expr("2".into()).natural_arity().unwrap(), 1);
    }

    #[test]
    fn spec_defaults_and_validation() {
        let spec = BenchmarkSpec::new(BenchFunction::F).unwrap();
        assert_eq!(spec.point, vec![1.0; 4]);
        assert_eq!(spec.fixed, vec![4, 4, 4]);
        assert_eq!(spec.orders_at(2), MultiIndex::new(vec![2, 4, 4, 4]));
        assert!(spec.clear_cache);
        spec.validate().unwrap();

        let mut s = spec.clone();
        s.sweep_var = 3;
        assert_eq!(s.orders_at(6), MultiIndex::new(vec![4, 4, 6, 4]));
        for broken in [
            BenchmarkSpec {
                repetitions: 0,
                ..spec.clone()
            },
            BenchmarkSpec {
                sweep_min: 3,
                sweep_max: 2,
                ..spec.clone()
            },
            BenchmarkSpec {
                fixed: vec![4, 4],
                ..spec.clone()
            },
            BenchmarkSpec {
                sweep_var: 5,
                ..spec.clone()
            },
        ] {
            assert!(matches!(
                run_benchmark(&broken),
                Err(BenchError::InvalidSpec(_))
            ));
        }
    }

    #[test]
    fn exp_of_identity_sweep() {
        let mut spec = BenchmarkSpec::new(BenchFunction::Expr("x1".into())).unwrap();
        spec.sweep_max = 2;
        spec.repetitions = 1;
        let records = run_benchmark(&spec).unwrap();
        assert_eq!(records.len(), 6);
        for r in &records {
            let v = r.value.unwrap();
            assert!((v - E).abs() <= 1e-15 * E, "{r:?}");
            assert_eq!(r.matched, Some(true));
            assert!(r.seconds >= 0.0);
        }
        assert_eq!(records[0].method, Method::Recursive);
        assert_eq!(records[1].method, Method::Oracle);
        assert_eq!(records[1].provider_calls, None);
    }

    #[test]
    fn kept_cache_makes_repeats_free() {
        let mut spec = BenchmarkSpec::new(BenchFunction::Expr("x1*sin(x2)".into())).unwrap();
        spec.sweep_max = 3;
        spec.repetitions = 2;
        spec.clear_cache = false;
        let records = run_benchmark(&spec).unwrap();
        for r in records.iter().filter(|r| r.method == Method::Recursive) {
            assert_eq!(r.provider_calls, Some(0));
            assert_eq!(r.matched, Some(true));
        }
        spec.repetitions = 1;
        let first = run_benchmark(&spec).unwrap();
        assert!(first[0].provider_calls.unwrap() > 0);
    }

    #[test]
    fn zero_budget_skips_oracle() {
        let mut spec = BenchmarkSpec::new(BenchFunction::G).unwrap();
        spec.sweep_max = 1;
        spec.repetitions = 1;
        spec.oracle_budget = 0.0;
        let records = run_benchmark(&spec).unwrap();
        let oracle: Vec<_> = records
            .iter()
            .filter(|r| r.method == Method::Oracle)
            .collect();
        assert!(oracle
            .iter()
            .all(|r| r.value.is_none() && r.matched.is_none()));
        assert!(records
            .iter()
            .filter(|r| r.method == Method::Recursive)
            .all(|r| r.value.is_some()));
    }

    #[test]
    fn relative_difference_cases() {
        assert_eq!(relative_difference(0.0, 0.0), 0.0);
        assert_eq!(relative_difference(2.0, 2.0), 0.0);
        assert_eq!(relative_difference(1.0, 0.0), 1.0);
        assert!((relative_difference(1.0, 1.0 + 1e-10) - 1e-10).abs() < 1e-15);
    }

    #[test]
    fn zero_function_is_exactly_zero_on_both_paths() {
        let f = parse("0", 2).unwrap();
        let entry = compare_with_oracle("0", &f, &[0.3, 0.4], 4).unwrap();
        assert_eq!(entry.max_relative_error, 0.0);
        let provider = SymbolicProvider::new(f.clone(), vec![0.3, 0.4]).unwrap();
        let k = MultiIndex::new(vec![2, 1]);
        assert_eq!(exp_derivative(&k, &provider, &YCache::new()).unwrap(), 0.0);
        assert_eq!(
            Oracle::new(&f, vec![0.3, 0.4])
                .unwrap()
                .derivative(&k)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn worked_example_both_paths() {
        let f = parse("x1*x2", 2).unwrap();
        let k = MultiIndex::new(vec![1, 1]);
        let provider = SymbolicProvider::new(f.clone(), vec![1.0, 1.0]).unwrap();
        let fast = exp_derivative(&k, &provider, &YCache::new()).unwrap();
        let slow = Oracle::new(&f, vec![1.0, 1.0])
            .unwrap()
            .derivative(&k)
            .unwrap();
        assert!((fast - 2.0 * E).abs() < 1e-15);
        assert!((slow - 2.0 * E).abs() < 1e-15);
    }
}
