use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use ptsolver::closed_form::{self, DEFAULT_REL_TOL};
use ptsolver::config::{self, ScenarioDocument};
use ptsolver::oracle::{self, OracleConfig};
use ptsolver::report::{format_number, write_csv_atomic};
use ptsolver::sweep::{run_sweep_with_workers, SweepTable};
use ptsolver::{Error, SolveResult};

const EXIT_MISMATCH: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ptsolver",
    version,
    about = "Optimal spectrum sensing under prospect theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Closed,
    Oracle,
    Both,
}

#[derive(clap::Args)]
struct SolveOpts {
    /// Oracle grid step in Hz [default: 1e-4 * demand]
    #[arg(long)]
    grid_step: Option<f64>,
    /// Closed-form bisection width in Hz [default: 1e-9 * demand]
    #[arg(long)]
    tol: Option<f64>,
    /// Fail with exit code 3 instead of falling back to the oracle
    #[arg(long)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario document and print the decision
    Solve {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "closed")]
        solver: SolverArg,
        #[command(flatten)]
        opts: SolveOpts,
    },
    /// Run a sweep spec and write a CSV table
    ///
    /// The header row lists the axes, then the requested outputs, then
    /// `status`. Numbers carry 12 significant digits; lines end in LF. The
    /// file is written to a temporary name and renamed on success.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads [default: available cores]
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare the closed form with the oracle; exit 1 on disagreement
    Verify {
        file: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Allowed |delta B_s| in Hz [default: 2 grid steps]
        #[arg(long)]
        tol_bs: Option<f64>,
        /// Allowed relative utility deficit
        #[arg(long, default_value_t = 1e-8)]
        tol_u: f64,
    },
    /// Print a document in canonical form
    DumpConfig { file: PathBuf },
}

enum Failure {
    Parse(String),
    Assumption(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioDocument, Failure> {
    config::parse_scenario(&read(path)?)
        .map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn is_assumption(e: &Error) -> bool {
    matches!(
        e,
        Error::AssumptionViolated(_)
            | Error::PivotOutOfRange { .. }
            | Error::NoSignChange { .. }
            | Error::InvalidReference(_)
    )
}

fn oracle_config(opts: &SolveOpts) -> OracleConfig {
    OracleConfig {
        grid_step: opts.grid_step,
        ..OracleConfig::default()
    }
}

fn run_oracle(doc: &ScenarioDocument, opts: &SolveOpts) -> Result<SolveResult, Failure> {
    oracle::maximize_utility(
        &doc.scenario,
        &doc.dist,
        &doc.profile,
        &doc.reference,
        &oracle_config(opts),
    )
    .context("oracle failed")
    .map_err(Failure::Other)
}

/// Closed form, or `None` after warning when it does not apply.
fn run_closed(doc: &ScenarioDocument, opts: &SolveOpts) -> Result<Option<SolveResult>, Failure> {
    let tol = opts.tol.unwrap_or(DEFAULT_REL_TOL * doc.scenario.demand());
    match closed_form::solve(&doc.scenario, &doc.dist, &doc.profile, &doc.reference, tol) {
        Ok(r) => Ok(Some(r)),
        Err(e) if is_assumption(&e) && !opts.strict => {
            eprintln!("warning: closed form not applicable ({e}); using the numeric oracle");
            Ok(None)
        }
        Err(e) if is_assumption(&e) => Err(Failure::Assumption(e.to_string())),
        Err(e) => Err(Failure::Other(e.into())),
    }
}

fn print_result(r: &SolveResult) {
    println!("provenance: {}", r.provenance);
    println!("b_s_star: {}", format_number(r.b_s_star));
    println!("utility: {}", format_number(r.utility));
    println!("expected_profit: {}", format_number(r.expected_profit));
    println!("min_possible: {}", format_number(r.min_possible_profit));
    println!("max_possible: {}", format_number(r.max_possible_profit));
    println!("outcomes:");
    for o in &r.per_outcome {
        println!(
            "  alpha = {}, p = {}: b_l_star = {}, profit = {}",
            format_number(o.alpha),
            format_number(o.prob),
            format_number(o.b_l_star),
            format_number(o.profit)
        );
    }
}

fn verify_and_print(
    closed: &SolveResult,
    oracle_result: &SolveResult,
    doc: &ScenarioDocument,
    opts: &SolveOpts,
    tol_bs: Option<f64>,
    tol_u: f64,
) -> Result<u8, Failure> {
    let step = oracle_config(opts).step_for(&doc.scenario);
    let report = oracle::verify(closed, oracle_result, tol_bs.unwrap_or(2.0 * step), tol_u)
        .context("verification failed")?;
    println!("{report}");
    Ok(if report.passed { 0 } else { EXIT_MISMATCH })
}

fn cmd_solve(file: &Path, solver: SolverArg, opts: &SolveOpts) -> Result<u8, Failure> {
    let doc = load_scenario(file)?;
    match solver {
        SolverArg::Oracle => {
            print_result(&run_oracle(&doc, opts)?);
            Ok(0)
        }
        SolverArg::Closed => {
            let r = match run_closed(&doc, opts)? {
                Some(r) => r,
                None => run_oracle(&doc, opts)?,
            };
            print_result(&r);
            Ok(0)
        }
        SolverArg::Both => {
            let oracle_result = run_oracle(&doc, opts)?;
            match run_closed(&doc, opts)? {
                Some(closed) => {
                    print_result(&closed);
                    verify_and_print(&closed, &oracle_result, &doc, opts, None, 1e-8)
                }
                None => {
                    print_result(&oracle_result);
                    Ok(0)
                }
            }
        }
    }
}

fn cmd_verify(
    file: &Path,
    opts: &SolveOpts,
    tol_bs: Option<f64>,
    tol_u: f64,
) -> Result<u8, Failure> {
    let doc = load_scenario(file)?;
    let tol = opts.tol.unwrap_or(DEFAULT_REL_TOL * doc.scenario.demand());
    let closed = closed_form::solve(&doc.scenario, &doc.dist, &doc.profile, &doc.reference, tol)
        .map_err(|e| {
            if is_assumption(&e) {
                Failure::Assumption(e.to_string())
            } else {
                Failure::Other(e.into())
            }
        })?;
    let oracle_result = run_oracle(&doc, opts)?;
    verify_and_print(&closed, &oracle_result, &doc, opts, tol_bs, tol_u)
}

fn cmd_sweep(spec_path: &Path, out: &Path, workers: Option<usize>) -> Result<u8, Failure> {
    let spec = config::parse_sweep_spec(&read(spec_path)?)
        .map_err(|e| Failure::Parse(format!("{}: {e}", spec_path.display())))?;
    let workers = workers
        .or_else(|| std::thread::available_parallelism().ok().map(|n| n.get()))
        .unwrap_or(1)
        .max(1);
    let table: SweepTable =
        run_sweep_with_workers(&spec, workers).map_err(|e| Failure::Other(e.into()))?;
    let skipped = table.rows.iter().filter(|r| r.status != "ok").count();
    write_csv_atomic(&table, out).with_context(|| format!("writing {}", out.display()))?;
    eprintln!(
        "wrote {} rows to {} ({skipped} not ok)",
        table.rows.len(),
        out.display()
    );
    Ok(0)
}

fn cmd_dump(file: &Path) -> Result<u8, Failure> {
    let text = read(file)?;
    let parse_err = |e: config::DocError| Failure::Parse(format!("{}: {e}", file.display()));
    let out = if config::is_sweep_spec(&text) {
        config::emit_sweep_spec(&config::parse_sweep_spec(&text).map_err(parse_err)?)
    } else {
        config::emit_scenario(&config::parse_scenario(&text).map_err(parse_err)?)
    };
    print!("{out}");
    Ok(0)
}

fn run(cli: &Cli) -> u8 {
    let outcome = match &cli.command {
        Command::Solve { file, solver, opts } => cmd_solve(file, *solver, opts),
        Command::Sweep { spec, out, workers } => cmd_sweep(spec, out, *workers),
        Command::Verify {
            file,
            opts,
            tol_bs,
            tol_u,
        } => cmd_verify(file, opts, *tol_bs, *tol_u),
        Command::DumpConfig { file } => cmd_dump(file),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Parse(msg)) => {
            eprintln!("error: {msg}");
            EXIT_PARSE
        }
        Err(Failure::Assumption(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ASSUMPTION
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(run(&Cli::parse()))
}
