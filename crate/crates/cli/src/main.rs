use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use revbound::bounds::{analyze_with_limit, BoundReport, CHECK_TOL};
use revbound::distribution::DiscreteDistribution;
use revbound::harness::{
    run_random_suite, worst_case_search, write_atomically, ExperimentConfig, OutputFormat,
};
use revbound::lp::{solve_lp, LinearProgram, LpStatus};
use revbound::mechanism::{build_revenue_lp, ProductInstance, DEFAULT_GRID_LIMIT};
use revbound::myerson::optimal_price;
use revbound::Error;

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;

/// Runs above this fraction of unsolved instances exit with code 3.
const MAX_UNSOLVED_FRACTION: f64 = 0.1;

#[derive(Parser)]
#[command(name = "revbound", version, about = "Two-item revenue bounds for discrete value distributions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal posted price for a single item.
    Myerson {
        #[arg(long)]
        dist: PathBuf,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Optimal two-item revenue and bound slacks for one instance.
    Analyze {
        #[arg(long)]
        d1: PathBuf,
        #[arg(long)]
        d2: PathBuf,
        #[arg(long, default_value_t = DEFAULT_GRID_LIMIT)]
        grid_limit: usize,
        #[arg(long, default_value_t = CHECK_TOL)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        /// Write the revenue LP in text form to this file.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
    },
    /// Bound checks over seeded random instances.
    Sweep {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        #[arg(long, default_value_t = 8)]
        max_support: usize,
        /// Values are drawn uniformly from `lo,hi`.
        #[arg(long, value_parser = parse_pair, default_value = "0,10")]
        value_range: (f64, f64),
        #[arg(long, default_value_t = DEFAULT_GRID_LIMIT)]
        grid_limit: usize,
        #[arg(long, default_value_t = CHECK_TOL)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hill-climbing search for instances with a high Rev/SRev ratio.
    Search {
        #[arg(long)]
        seed: u64,
        /// Keep only instances with `lo <= alpha <= hi`.
        #[arg(long, value_parser = parse_pair)]
        alpha_window: Option<(f64, f64)>,
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        #[arg(long, default_value_t = 4)]
        max_support: usize,
        #[arg(long, value_parser = parse_pair, default_value = "0,10")]
        value_range: (f64, f64),
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_GRID_LIMIT)]
        grid_limit: usize,
        #[arg(long, default_value_t = CHECK_TOL)]
        tolerance: f64,
        #[arg(long, value_enum, default_value_t = DataFormat::Csv)]
        format: DataFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a linear program given as JSON.
    LpSolve {
        #[arg(long)]
        lp: PathBuf,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataFormat {
    Csv,
    Json,
}

impl From<DataFormat> for OutputFormat {
    fn from(f: DataFormat) -> Self {
        match f {
            DataFormat::Csv => OutputFormat::Csv,
            DataFormat::Json => OutputFormat::Json,
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn solver(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_SOLVER,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::DegeneratePivot { .. } | Error::NotOptimal(_) => Failure::solver(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

type CliResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Myerson { dist, format } => myerson(&dist, format),
        Command::Analyze {
            d1,
            d2,
            grid_limit,
            tolerance,
            format,
            dump_lp,
        } => analyze(&d1, &d2, grid_limit, tolerance, format, dump_lp.as_deref()),
        Command::Sweep {
            seed,
            count,
            min_support,
            max_support,
            value_range,
            grid_limit,
            tolerance,
            format,
            out,
        } => sweep(ExperimentConfig {
            seed,
            num_instances: count,
            support_sizes: (min_support, max_support),
            value_range,
            grid_limit,
            output_path: out,
            format: format.into(),
            tolerance,
            ..ExperimentConfig::default()
        }),
        Command::Search {
            seed,
            alpha_window,
            min_support,
            max_support,
            value_range,
            restarts,
            steps,
            grid_limit,
            tolerance,
            format,
            out,
        } => search(ExperimentConfig {
            seed,
            support_sizes: (min_support, max_support),
            value_range,
            alpha_window,
            grid_limit,
            output_path: out,
            format: format.into(),
            tolerance,
            restarts,
            steps,
            ..ExperimentConfig::default()
        }),
        Command::LpSolve { lp, format } => lp_solve(&lp, format),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| format!("`{t}`: {e}"))
    };
    Ok((parse(a)?, parse(b)?))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Failure::input(e.to_string()))
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    write_atomically(path, contents)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn myerson(path: &Path, format: TextFormat) -> CliResult {
    let dist: DiscreteDistribution = read_json(path)?;
    let best = optimal_price(&dist);
    match format {
        TextFormat::Json => print!("{}", to_json(&best)?),
        TextFormat::Text => println!(
            "price={} revenue={} argmax={:?}",
            best.price, best.revenue, best.argmax_prices
        ),
    }
    Ok(0)
}

fn analyze(
    d1: &Path,
    d2: &Path,
    grid_limit: usize,
    tolerance: f64,
    format: ReportFormat,
    dump_lp: Option<&Path>,
) -> CliResult {
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Failure::input("tolerance must be nonnegative"));
    }
    let inst = ProductInstance::new(read_json(d1)?, read_json(d2)?);
    if let Some(path) = dump_lp {
        write_output(path, &build_revenue_lp(&inst, grid_limit)?.to_text())?;
    }
    let report = analyze_with_limit(&inst, grid_limit)?;
    match format {
        ReportFormat::Json => print!("{}", to_json(&report)?),
        ReportFormat::Csv => print!("{}", report.to_csv()?),
        ReportFormat::Text => print!("{}", render_report(&report)),
    }
    if report.degenerate {
        eprintln!("notice: second item has zero revenue; alpha-dependent checks skipped");
    }
    Ok(if report.passes(tolerance) {
        0
    } else {
        eprintln!("bound violation beyond tolerance {tolerance:e}");
        EXIT_VIOLATION
    })
}

fn render_report(r: &BoundReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| x.to_string());
    let mut out = String::new();
    let _ = writeln!(out, "r1={}", r.r1);
    let _ = writeln!(out, "r2={}", r.r2);
    let _ = writeln!(out, "alpha={}", opt(r.alpha));
    let _ = writeln!(out, "srev={}", r.srev);
    let _ = writeln!(out, "rev={}", r.rev);
    let _ = writeln!(out, "emin={}", r.emin);
    let _ = writeln!(out, "ratio={}", r.ratio());
    let _ = writeln!(out, "g_alpha={}", opt(r.g_alpha));
    let _ = writeln!(out, "theorem_slack={}", opt(r.theorem_slack));
    let _ = writeln!(out, "lemma1_slack={}", r.lemma1_slack);
    let _ = writeln!(out, "lemma2_slack={}", opt(r.lemma2_slack));
    let _ = writeln!(out, "labels_swapped={}", r.labels_swapped);
    let _ = writeln!(out, "degenerate={}", r.degenerate);
    out
}

/// Sends `data` to `path` or stdout and returns the stream for the summary line.
fn emit(path: Option<&Path>, data: &str) -> Result<bool, Failure> {
    match path {
        Some(p) => {
            write_output(p, data)?;
            Ok(true)
        }
        None => {
            print!("{data}");
            Ok(false)
        }
    }
}

fn summary(to_stdout: bool, line: &str) {
    if to_stdout {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn run_exit_code(violations: usize, unsolved_fraction: f64) -> u8 {
    if violations > 0 {
        EXIT_VIOLATION
    } else if unsolved_fraction > MAX_UNSOLVED_FRACTION {
        EXIT_SOLVER
    } else {
        0
    }
}

fn sweep(cfg: ExperimentConfig) -> CliResult {
    let result = run_random_suite(&cfg)?;
    let stdout = emit(cfg.output_path.as_deref(), &result.render(cfg.format)?)?;
    let ratio = result
        .max_ratio
        .map_or_else(|| "n/a".to_string(), |r| format!("{r:.6}"));
    summary(
        stdout,
        &format!(
            "instances={} passed={} degenerate={} unsolved={} violations={} max_ratio={ratio}",
            result.records.len(),
            result.passed,
            result.degenerate,
            result.unsolved,
            result.violations.len(),
        ),
    );
    Ok(run_exit_code(result.violations.len(), result.unsolved_fraction()))
}

fn search(cfg: ExperimentConfig) -> CliResult {
    let result = worst_case_search(&cfg)?;
    let stdout = emit(cfg.output_path.as_deref(), &result.render(cfg.format)?)?;
    let line = match &result.best {
        Some(best) => format!(
            "best_ratio={:.6} alpha={} restart={} evaluations={} unsolved={} violations={}",
            best.report.ratio(),
            best.report.alpha.map_or_else(|| "n/a".to_string(), |a| a.to_string()),
            best.restart,
            result.evaluations,
            result.unsolved,
            result.violations.len(),
        ),
        None => format!(
            "best_ratio=n/a evaluations={} unsolved={}",
            result.evaluations, result.unsolved
        ),
    };
    summary(stdout, &line);
    if result.best.is_none() && result.unsolved == 0 {
        return Err(Failure::input("no starting instance fell inside the alpha window"));
    }
    Ok(run_exit_code(result.violations.len(), result.unsolved_fraction()))
}

fn lp_solve(path: &Path, format: TextFormat) -> CliResult {
    let lp: LinearProgram = read_json(path)?;
    let sol = solve_lp(&lp)?;
    match format {
        TextFormat::Json => print!("{}", to_json(&sol)?),
        TextFormat::Text => {
            println!("status={}", status_name(sol.status));
            if sol.status == LpStatus::Optimal {
                println!("objective={}", sol.objective_value);
                for (j, x) in sol.assignment.iter().enumerate() {
                    match lp.names.get(j) {
                        Some(name) => println!("{name}={x}"),
                        None => println!("x{j}={x}"),
                    }
                }
            }
        }
    }
    Ok(match sol.status {
        LpStatus::Optimal | LpStatus::Infeasible | LpStatus::Unbounded => 0,
        LpStatus::IterationLimit => EXIT_SOLVER,
    })
}

fn status_name(status: LpStatus) -> &'static str {
    match status {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
        LpStatus::IterationLimit => "iteration_limit",
    }
}
