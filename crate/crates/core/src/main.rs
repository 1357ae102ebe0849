use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use multibell::bell::{complete_bell, BellArgs};
use multibell::bench::{
    check_corpus, emit_csv, run_benchmark, BenchFunction, BenchmarkSpec, Method,
};
use multibell::multidiff::{exp_derivative, general_derivative, MultiIndex, YCache};
use multibell::symbolic::{evaluate, make_log_provider, parse, ExprContext, SymbolicProvider};

#[derive(Parser)]
#[command(
    name = "multibell",
    version,
    about = "High-order mixed partial derivatives of exp(f)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the complete Bell polynomial Y_N(z1, ..., zN).
    Bell {
        n: usize,
        /// Comma-separated z1,...,zN.
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        z: Vec<f64>,
    },
    /// Print a mixed partial derivative of exp(f), or of g with --log-form.
    Derive {
        #[arg(long)]
        expr: String,
        /// Number of variables; defaults to the length of --point.
        #[arg(long)]
        arity: Option<usize>,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_negative_numbers = true
        )]
        point: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        order: Vec<u32>,
        /// Treat the expression as a positive g and differentiate g itself.
        #[arg(long)]
        log_form: bool,
    },
    /// Time the recursive method against the symbolic oracle over a sweep.
    Bench {
        /// F, G, or expr:<text>.
        #[arg(long, default_value = "F")]
        function: BenchFunction,
        #[arg(long, default_value_t = 1)]
        sweep_var: usize,
        #[arg(long, default_value_t = 6)]
        sweep_max: u32,
        /// Orders of the non-swept variables; defaults to 4 each.
        #[arg(long, value_delimiter = ',')]
        fixed: Option<Vec<u32>>,
        /// Evaluation point; defaults to all ones.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        #[arg(long, default_value_t = multibell::bench::DEFAULT_REPETITIONS)]
        reps: usize,
        /// Keep one provider and cache across repetitions and sweep points.
        #[arg(long)]
        no_clear_cache: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = multibell::bench::DEFAULT_ORACLE_BUDGET)]
        oracle_budget: f64,
    },
    /// Compare the recursive method with the oracle on the built-in corpus.
    Check,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type CliResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Bell { n, z } => {
            if z.len() != n {
                return Err(format!("expected {n} arguments, got {}", z.len()).into());
            }
            println!("{}", complete_bell(BellArgs::new(&z))?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Derive {
            expr,
            arity,
            point,
            order,
            log_form,
        } => {
            let arity = arity.unwrap_or(point.len());
            if point.len() != arity || order.len() != arity {
                return Err(format!(
                    "--point has {} and --order has {} entries, expected {arity}",
                    point.len(),
                    order.len()
                )
                .into());
            }
            let f = parse(&expr, arity)?;
            let k = MultiIndex::new(order);
            let cache = YCache::new();
            let value = if log_form {
                let g_value = evaluate(&f, &point)?;
                let provider = make_log_provider(&f, ExprContext::new(point))?;
                general_derivative(&k, g_value, &provider, &cache)?
            } else {
                let provider = SymbolicProvider::new(f, point)?;
                exp_derivative(&k, &provider, &cache)?
            };
            println!("{value}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            function,
            sweep_var,
            sweep_max,
            fixed,
            point,
            reps,
            no_clear_cache,
            csv,
            oracle_budget,
        } => {
            let mut spec = BenchmarkSpec::new(function)?;
            if let Some(point) = point {
                spec.fixed = vec![4; point.len().saturating_sub(1)];
                spec.point = point;
            }
            if let Some(fixed) = fixed {
                spec.fixed = fixed;
            }
            spec.sweep_var = sweep_var;
            spec.sweep_max = sweep_max;
            spec.repetitions = reps;
            spec.clear_cache = !no_clear_cache;
            spec.oracle_budget = oracle_budget;

            let records = run_benchmark(&spec)?;
            println!(
                "{:<14} {:>12} {:>12} {:>24} {:>8} {:>6}",
                "orders", "recursive_s", "oracle_s", "value", "calls", "match"
            );
            for pair in records.chunks(2) {
                let (rec, orc) = (&pair[0], &pair[1]);
                debug_assert!(rec.method == Method::Recursive && orc.method == Method::Oracle);
                let oracle_s = match orc.value {
                    Some(_) => format!("{:.6}", orc.seconds),
                    None => "skipped".into(),
                };
                println!(
                    "{:<14} {:>12.6} {:>12} {:>24e} {:>8} {:>6}",
                    rec.orders.to_string(),
                    rec.seconds,
                    oracle_s,
                    rec.value.unwrap_or(f64::NAN),
                    rec.provider_calls.unwrap_or(0),
                    rec.matched.map_or("-".to_string(), |m| m.to_string())
                );
            }
            if let Some(path) = csv {
                emit_csv(&records, &path)?;
                eprintln!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check => {
            let report = check_corpus()?;
            println!("{report}");
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
