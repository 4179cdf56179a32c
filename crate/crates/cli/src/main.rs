use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nqn_bench::classify::{classify, Flag, OtherCause};
use nqn_bench::spec::{parse_list, parse_problems, parse_seeds, parse_variants};
use nqn_bench::{emit, parse_spec, resolve, run_matrix, Source, SpecOverrides};
use nqn_core::{nqn_solve_observed, SolverConfig, Termination, Variant};
use nqn_problems::{fd_check_random, start_for_seed, valid_names, Problem, ProblemKind};

const EXIT_OTHER: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "nqn", version, about = "Quasi-Newton solver for bound-constrained nonsmooth problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem instance.
    Solve(SolveArgs),
    /// Run a benchmark matrix and write CSV, summary and SVG profiles.
    Bench(BenchArgs),
    /// Compare analytic gradients with central differences.
    CheckGrads(CheckArgs),
    /// Print the problem catalog.
    ListProblems,
}

#[derive(Args)]
struct SolveArgs {
    /// Problem name; see `list-problems`.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "V3")]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Gradient-evaluation budget as a multiple of n.
    #[arg(long, default_value_t = 100)]
    budget_mult: usize,
    /// Relative tolerance for the reported flag.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    /// Write one line per iteration: k,f,|A_init|,|A_final|,alpha,ls_status,grad_evals
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Run-spec file with `key = value` lines.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory; falls back to NQN_OUT_DIR, then the spec file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated names, or `all`.
    #[arg(long)]
    problems: Option<String>,
    #[arg(long)]
    dims: Option<String>,
    /// Comma-separated seeds and `a-b` ranges.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    variants: Option<String>,
    #[arg(long)]
    epsilons: Option<String>,
    #[arg(long)]
    budget_mult: Option<usize>,
    /// Record wall time in the CSV.
    #[arg(long)]
    timing: bool,
    /// Print the resolved settings and where each came from.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 50)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest acceptable relative error.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::CheckGrads(a) => check_grads(a),
        Command::ListProblems => {
            list_problems();
            Ok(ExitCode::SUCCESS)
        }
    };
    result.unwrap_or_else(|Failure { code, message }| {
        eprintln!("error: {message}");
        ExitCode::from(code)
    })
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn runtime(message: impl ToString) -> Failure {
    Failure { code: EXIT_OTHER, message: message.to_string() }
}

fn solve(a: SolveArgs) -> Result<ExitCode, Failure> {
    let name = a
        .problem
        .as_deref()
        .ok_or_else(|| usage(format!("--problem is required; valid names: {}", valid_names().join(", "))))?;
    let problem = Problem::by_name(name, a.n).map_err(usage)?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(usage(format!("--eps must lie in (0, 1), got {}", a.eps)));
    }
    let b = problem.bounds();
    let x0 = start_for_seed(&b, a.seed);
    let cfg = SolverConfig {
        budget: Some(
            a.budget_mult.checked_mul(a.n).filter(|&v| v > 0).ok_or_else(|| usage("--budget-mult must be positive"))?,
        ),
        ..SolverConfig::with_variant(a.variant)
    };
    let mut trace = match &a.trace {
        Some(path) => {
            Some(BufWriter::new(File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?))
        }
        None => None,
    };
    let mut trace_err = None;
    let record = nqn_solve_observed(&problem, &b, &x0, &cfg, |ev| {
        if let Some(w) = trace.as_mut() {
            let r = ev.record;
            if let Err(e) = writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.k,
                r.f,
                r.a_init,
                r.a_final,
                r.alpha,
                r.ls_status.as_str(),
                r.grad_evals
            ) {
                trace_err.get_or_insert(e);
            }
        }
    })
    .map_err(usage)?;
    if let Some(w) = trace.as_mut() {
        if let Err(e) = w.flush() {
            trace_err.get_or_insert(e);
        }
    }
    if let (Some(e), Some(path)) = (trace_err, &a.trace) {
        return Err(runtime(format!("{}: {e}", path.display())));
    }

    // With a known optimum, flag by relative reduction; otherwise by how the run ended.
    let flag = match problem.f_star_hint() {
        Some(hint) => classify(&record, hint.min(record.best_f), a.eps),
        None => match record.termination {
            Termination::Stationary => Flag::Ok,
            Termination::BudgetExhausted => Flag::Max,
            Termination::NoDirection => Flag::Other(OtherCause::NoDirection),
            Termination::LineSearchError => Flag::Other(OtherCause::SearchError),
        },
    };
    println!("problem: {} (n = {}, variant {}, seed {})", problem.name(), a.n, a.variant, a.seed);
    println!("flag: {}", flag.as_str());
    println!("best_f: {}", record.best_f);
    println!("grad_evals: {}", record.grad_eval_count);
    println!("iterations: {}", record.iterations.len());
    println!("termination: {}", record.termination.as_str());
    Ok(if matches!(flag, Flag::Other(_)) { ExitCode::from(EXIT_OTHER) } else { ExitCode::SUCCESS })
}

fn bench(a: BenchArgs) -> Result<ExitCode, Failure> {
    let file = match &a.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            parse_spec(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => SpecOverrides::default(),
    };
    let env = SpecOverrides {
        output_dir: std::env::var_os("NQN_OUT_DIR").filter(|v| !v.is_empty()).map(PathBuf::from),
        ..SpecOverrides::default()
    };
    let flags = SpecOverrides {
        problems: flag_value("problems", &a.problems, parse_problems)?,
        dims: flag_value("dims", &a.dims, parse_list)?,
        seeds: flag_value("seeds", &a.seeds, parse_seeds)?,
        variants: flag_value("variants", &a.variants, parse_variants)?,
        epsilons: flag_value("epsilons", &a.epsilons, parse_list)?,
        budget_multiplier: a.budget_mult,
        output_dir: a.out.clone(),
        timing: a.timing.then_some(true),
        jobs: a.jobs,
        ..SpecOverrides::default()
    };
    let resolved =
        resolve(&[(Source::SpecFile, &file), (Source::Environment, &env), (Source::Flag, &flags)]).map_err(usage)?;
    if a.verbose {
        eprint!("{}", resolved.describe());
    }
    let spec = resolved.spec;
    let results = run_matrix(&spec).map_err(runtime)?;
    let written = emit(&results, &spec).map_err(runtime)?;
    print!("{}", nqn_bench::emit::summary_text(&results, &spec));
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn flag_value<T>(
    name: &str,
    raw: &Option<String>,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, Failure> {
    raw.as_deref().map(|v| parse(v).map_err(|e| usage(format!("--{name}: {e}")))).transpose()
}

fn check_grads(a: CheckArgs) -> Result<ExitCode, Failure> {
    if a.n < 2 || !a.n.is_multiple_of(2) {
        return Err(usage(format!("--n must be even and at least 2, got {}", a.n)));
    }
    let mut worst = 0.0_f64;
    println!("{:<20}{:>8}{:>11}{:>14}", "problem", "points", "resampled", "max_rel_err");
    for kind in ProblemKind::ALL {
        let problem = Problem::new(kind, a.n).map_err(usage)?;
        let s = fd_check_random(&problem, a.points, a.seed);
        worst = worst.max(s.max_rel_error);
        println!("{:<20}{:>8}{:>11}{:>14.3e}", s.name, s.points, s.resampled, s.max_rel_error);
    }
    let pass = worst <= a.tol;
    println!("max relative error {worst:.3e} ({} tolerance {:e})", if pass { "within" } else { "exceeds" }, a.tol);
    Ok(if pass { ExitCode::SUCCESS } else { ExitCode::from(EXIT_OTHER) })
}

fn list_problems() {
    for kind in ProblemKind::ALL {
        let e = kind.catalog();
        println!("{:<18} f(x) = {}; x* = {}; {}", kind.name(), e.formula, e.minimizer, e.source);
    }
}
