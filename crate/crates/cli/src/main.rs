use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eed_core::driver::TraceMode;
use eed_core::experiment::{
    load_matrix, run_experiment, run_single, verify, ExperimentName, ExperimentSpec, RunSpec,
    RunSummary,
};
use eed_core::lanczos::ConvergenceCheck;
use eed_core::oracle::inertia;
use eed_core::{EedError, MuStrategy, SymmetricOperator};

const EXIT_SOLVER: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_BOUND: u8 = 4;

#[derive(Parser)]
#[command(
    name = "eed",
    version,
    about = "Interval eigenpairs by explicit external deflation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute all eigenpairs in [lo, hi] and write a run directory.
    Solve(SolveArgs),
    /// Run a preset experiment.
    Experiment(ExperimentArgs),
    /// Recompute diagnostics from a results directory and check them.
    Verify {
        #[arg(long)]
        results: PathBuf,
    },
    /// Sylvester inertia of A - shift*I.
    Inertia {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_hyphen_values = true)]
        shift: f64,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Matrix Market file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Built-in generator: example51[:n], example52[:n], laplacian[:m].
    #[arg(long)]
    gen: Option<String>,
}

impl Source {
    fn spec(&self) -> String {
        match (&self.matrix, &self.gen) {
            (Some(p), _) => format!("file:{}", p.display()),
            (None, Some(g)) => format!("gen:{g}"),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Trace {
    PerStep,
    Final,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    PerIteration,
    PerRestart,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, allow_hyphen_values = true)]
    hi: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Maximum Lanczos basis size.
    #[arg(long, default_value_t = 40)]
    m: usize,
    /// Vectors kept across restarts and solves; defaults to m/2.
    #[arg(long)]
    m0: Option<usize>,
    /// `auto` for the recommended shift, or a fixed value.
    #[arg(long, default_value = "auto", allow_hyphen_values = true)]
    mu: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Trace::PerStep)]
    trace: Trace,
    #[arg(long, value_enum, default_value_t = Check::PerIteration)]
    check: Check,
    /// Cross-check the count with an inertia computation.
    #[arg(long)]
    validate_inertia: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// table1, table2, example2-flipped or laplacian.
    #[arg(long)]
    name: ExperimentName,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated tolerances replacing the preset ones.
    #[arg(long, value_delimiter = ',')]
    tol: Vec<f64>,
    /// Fixed shift target replacing the preset one.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_mu(s: &str) -> Result<MuStrategy, String> {
    if s == "auto" {
        return Ok(MuStrategy::Recommended);
    }
    s.parse()
        .map(MuStrategy::Fixed)
        .map_err(|_| format!("--mu expects 'auto' or a number, got '{s}'"))
}

enum Failure {
    Solver(String),
    Parse(String),
    Bounds(Vec<String>),
    Other(String),
}

impl From<EedError> for Failure {
    fn from(e: EedError) -> Self {
        match e {
            EedError::Parse { .. } | EedError::Json(_) | EedError::Csv(_) => {
                Failure::Parse(e.to_string())
            }
            EedError::Io(_) => Failure::Other(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

fn print_summary(s: &RunSummary) {
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3e}"));
    println!(
        "{}: n={} count={} strays={} steps={} omega={} R={} anorm={}",
        s.spec.label,
        s.n,
        s.count,
        s.strays,
        s.eed_steps,
        f(s.omega),
        f(s.res_frob),
        f(s.anorm)
    );
    for w in &s.warnings {
        println!("  warning: {w}");
    }
}

/// Exit status for a finished summary.
fn judge(s: &RunSummary) -> Result<(), Failure> {
    if let Some(e) = &s.failure {
        return Err(Failure::Solver(format!("{}: {e}", s.spec.label)));
    }
    if !s.bound_violations.is_empty() {
        return Err(Failure::Bounds(s.bound_violations.clone()));
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let mu = parse_mu(&a.mu).map_err(Failure::Parse)?;
    let spec = RunSpec {
        label: "run".into(),
        matrix: a.source.spec(),
        lo: a.lo,
        hi: a.hi,
        tol: a.tol,
        m: a.m,
        m0: a.m0.unwrap_or(a.m / 2),
        mu,
        seed: a.seed,
        trace: match a.trace {
            Trace::PerStep => TraceMode::PerStep,
            Trace::Final => TraceMode::Final,
        },
        convergence_check: match a.check {
            Check::PerIteration => ConvergenceCheck::PerIteration,
            Check::PerRestart => ConvergenceCheck::PerRestart,
        },
        validate_inertia: a.validate_inertia,
    };
    spec.solver_config().validate()?;
    let summary = run_single(&spec, &a.out)?;
    print_summary(&summary);
    if let Some(c) = summary.inertia_count {
        println!("  inertia count {c}");
    }
    judge(&summary)
}

fn experiment(a: ExperimentArgs) -> Result<(), Failure> {
    let mut spec = ExperimentSpec::preset(a.name, a.out);
    if !a.tol.is_empty() {
        spec.tols = a.tol;
    }
    spec.mu_override = a.mu;
    spec.seed = a.seed;
    let report = run_experiment(&spec)?;
    report.summaries.iter().for_each(print_summary);
    report.summaries.iter().try_for_each(judge)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify { results } => {
            let r = verify(&results)?;
            println!(
                "{} runs, {} mismatches, {} bound violations",
                r.runs,
                r.mismatches.len(),
                r.violations.len()
            );
            r.mismatches
                .iter()
                .for_each(|m| println!("  mismatch: {m}"));
            if !r.mismatches.is_empty() {
                return Err(Failure::Other("recorded trace does not reproduce".into()));
            }
            if !r.violations.is_empty() {
                return Err(Failure::Bounds(r.violations));
            }
            Ok(())
        }
        Command::Inertia { source, shift } => {
            let m = load_matrix(&source.spec())?;
            let t = inertia(&m, shift)?;
            println!(
                "{}",
                serde_json::json!({
                    "n": m.dim(),
                    "shift": shift,
                    "negatives": t.negatives,
                    "zeros": t.zeros,
                    "positives": t.positives,
                })
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = match f {
                Failure::Solver(e) => {
                    eprintln!("error: {e}");
                    EXIT_SOLVER
                }
                Failure::Parse(e) => {
                    eprintln!("error: {e}");
                    EXIT_PARSE
                }
                Failure::Bounds(v) => {
                    v.iter().for_each(|x| eprintln!("bound violated: {x}"));
                    EXIT_BOUND
                }
                Failure::Other(e) => {
                    eprintln!("error: {e}");
                    1
                }
            };
            ExitCode::from(code)
        }
    }
}
