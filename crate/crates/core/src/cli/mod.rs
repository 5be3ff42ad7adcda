//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/parse/config/io error, 2 numerical
//! failure, 3 tolerance breach.

pub mod compare;
pub mod presets;
pub mod run;
pub mod scenario;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::corr_kernel::{FcorrEvaluator, FcorrOracle, FcorrTable, OracleGrid};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::quadrature::QuadraturePolicy;
use run::{RunOptions, RunReport};
use scenario::Scenario;
use table::Table;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "spinbath", version, about = "Collective spins in an Ohmic bath with preparation-induced correlations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run scenario files and/or presets, writing CSV and .meta files.
    Run(RunArgs),
    /// Compare two result CSV files column by column.
    Compare(CompareArgs),
    /// Tabulate the correlation drive f_corr(t) for a scenario.
    FcorrTable(FcorrArgs),
    /// List the built-in presets.
    ListPresets {
        /// Also print each preset's scenario text.
        #[arg(long)]
        verbose: bool,
    },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario files.
    pub scenarios: Vec<PathBuf>,
    /// Built-in preset (repeatable).
    #[arg(long = "preset")]
    pub presets: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Skip the runs that include the correlation term.
    #[arg(long)]
    pub no_corr: bool,
    /// Check the master equation against the exact solution.
    #[arg(long)]
    pub oracle: bool,
    /// Max-abs tolerance on j_z for --oracle.
    #[arg(long, default_value_t = 1e-2)]
    pub tol: f64,
    /// Disable data parallelism.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Max-abs tolerance; exceeding it exits with code 3.
    #[arg(long, default_value_t = 0.0)]
    pub tol: f64,
    /// Resample the second file onto the first file's times.
    #[arg(long)]
    pub interpolate: bool,
    /// Restrict to these columns (repeatable).
    #[arg(long = "column")]
    pub columns: Vec<String>,
}

#[derive(Debug, Args)]
pub struct FcorrArgs {
    /// Scenario file (alternative to --preset).
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    /// Grid spacing; defaults to the scenario's dt.
    #[arg(long)]
    pub step: Option<f64>,
    /// Add the brute-force discrete-mode evaluation as a column.
    #[arg(long)]
    pub oracle: bool,
    /// Relative tolerance between the closed form and --oracle.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub sequential: bool,
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Integration { .. }
        | Error::NumericalConsistency(_)
        | Error::FailedRun { .. }
        | Error::OutOfRange { .. }
        | Error::DegenerateHamiltonian => EXIT_NUMERICAL,
        Error::Domain(_)
        | Error::Unsupported(_)
        | Error::Parse { .. }
        | Error::Config(_)
        | Error::Io(_)
        | Error::Csv(_) => EXIT_USAGE,
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::FcorrTable(a) => cmd_fcorr(&a),
        Command::ListPresets { verbose } => {
            for (name, summary) in presets::catalogue() {
                println!("{name:<8} {summary}");
                if verbose {
                    if let Ok(text) = presets::text(name) {
                        println!("{text}");
                    }
                }
            }
            EXIT_OK
        }
    }
}

fn collect_scenarios(files: &[PathBuf], names: &[String]) -> Result<Vec<Scenario>> {
    let mut out = Vec::new();
    for f in files {
        out.push(run::load_scenario(f)?);
    }
    for n in names {
        out.push(presets::load(n)?);
    }
    if out.is_empty() {
        return Err(Error::Config("give at least one scenario file or --preset".into()));
    }
    let mut seen = std::collections::HashSet::new();
    for s in &out {
        if !seen.insert(s.name.clone()) {
            return Err(Error::Config(format!("scenario name '{}' appears twice", s.name)));
        }
    }
    Ok(out)
}

fn print_report(r: &RunReport) {
    println!("{}: f_corr(0) = {:.6e}", r.name, r.f_corr0);
    for f in &r.files {
        println!("  wrote {}", f.display());
    }
    for c in &r.oracle {
        let tag = if c.with_corr { "corr" } else { "nocorr" };
        let verdict = if c.passed() { "ok" } else { "BREACH" };
        println!("  oracle jz {tag}: max |ME - exact| = {:.3e} (tol {:.3e}) {verdict}", c.max_abs, c.tol);
    }
}

fn cmd_run(a: &RunArgs) -> i32 {
    let scenarios = match collect_scenarios(&a.scenarios, &a.presets) {
        Ok(s) => s,
        Err(e) => return report_error(&e),
    };
    if !(a.tol.is_finite() && a.tol >= 0.0) {
        return report_error(&Error::Config(format!("--tol {} must be >= 0", a.tol)));
    }
    let opts = RunOptions {
        out_dir: a.out.clone(),
        execution: execution(a.sequential),
        no_corr: a.no_corr,
        oracle_tol: a.oracle.then_some(a.tol),
    };
    let mut code = EXIT_OK;
    for (s, res) in scenarios.iter().zip(run::run_batch(&scenarios, &opts)) {
        match res {
            Ok(r) => {
                print_report(&r);
                if r.tolerance_breached() {
                    code = code.max(EXIT_TOLERANCE);
                }
            }
            Err(e) => {
                eprintln!("error in scenario '{}': {e}", s.name);
                code = code.max(exit_code(&e));
            }
        }
    }
    // A hard failure outranks a tolerance breach.
    if code == EXIT_TOLERANCE || code == EXIT_OK {
        code
    } else {
        code.min(EXIT_NUMERICAL)
    }
}

fn cmd_compare(a: &CompareArgs) -> i32 {
    let result = Table::read(&a.a)
        .and_then(|ta| Ok((ta, Table::read(&a.b)?)))
        .and_then(|(ta, tb)| compare::compare_tables(&ta, &tb, &a.columns, a.interpolate));
    let diffs = match result {
        Ok(d) => d,
        Err(e) => return report_error(&e),
    };
    let mut breach = false;
    for d in &diffs {
        let flag = if d.max_abs > a.tol { "BREACH" } else { "ok" };
        breach |= d.max_abs > a.tol;
        println!("{:<6} max_abs = {:.6e}  rms = {:.6e}  {flag}", d.name, d.max_abs, d.rms);
    }
    if breach {
        EXIT_TOLERANCE
    } else {
        EXIT_OK
    }
}

fn cmd_fcorr(a: &FcorrArgs) -> i32 {
    match fcorr_table(a) {
        Ok(worst) => {
            if let Some(w) = worst {
                println!("max relative |closed - oracle| = {w:.3e} (tol {:.3e})", a.tol);
                if w > a.tol {
                    return EXIT_TOLERANCE;
                }
            }
            EXIT_OK
        }
        Err(e) => report_error(&e),
    }
}

/// Writes the table; returns the worst relative oracle deviation when
/// `--oracle` is set.
fn fcorr_table(a: &FcorrArgs) -> Result<Option<f64>> {
    let s = match (&a.scenario, &a.preset) {
        (Some(p), None) => run::load_scenario(p)?,
        (None, Some(n)) => presets::load(n)?,
        _ => return Err(Error::Config("give exactly one of a scenario file or --preset".into())),
    };
    let step = a.step.unwrap_or(s.sim.dt);
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Config(format!("--step {step} must be > 0")));
    }
    let exec = execution(a.sequential);
    let n = (s.sim.t_max / step).round().max(1.0) as usize;
    let step = s.sim.t_max / n as f64;
    let policy = QuadraturePolicy::default();
    let ev = FcorrEvaluator::new(s.prep, &s.sys, &s.bath, &policy)?;
    let closed = FcorrTable::build(&ev, step, n, exec)?;
    let mut table = Table::new();
    table.push_column("t", (0..=n).map(|k| k as f64 * step).collect());
    table.push_column("f_corr", closed.values.clone());
    let mut worst = None;
    if a.oracle {
        let oracle = FcorrOracle::new(s.prep, &s.sys, &s.bath, OracleGrid::default(), exec)?;
        let vals = exec.map_range(n + 1, |k| oracle.eval(k as f64 * step).re);
        let scale = closed.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let w = closed
            .values
            .iter()
            .zip(&vals)
            .fold(0.0_f64, |m, (c, o)| m.max((c - o).abs() / scale.max(f64::MIN_POSITIVE)));
        table.push_column("f_corr_oracle", vals);
        worst = Some(w);
    }
    table.write(&a.out)?;
    Ok(worst)
}
