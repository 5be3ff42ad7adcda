//! Executes scenarios: one CSV per engine and correlation setting plus a
//! `.meta` sidecar describing the run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::scenario::{Engine, Scenario};
use super::table::Table;
use crate::corr_kernel::{f_corr, initial_state, state_vector};
use crate::error::{Error, Result};
use crate::exact_dephasing::ExactDephasing;
use crate::master_equation::{MeSolver, Trajectory, STATE_TOLERANCE};
use crate::parallel::Execution;
use crate::quadrature::QuadraturePolicy;
use crate::short_time::{ShortTimeCoeffs, ShortTimeExpansion, Validity};
use crate::spin_algebra::build_spin_operators;

/// `t² · curvature` and `t · Δ̃` bound used for the reported short-time
/// horizon.
pub const SHORT_TIME_BOUND: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub execution: Execution,
    /// Drop the correlated runs regardless of the scenario.
    pub no_corr: bool,
    /// Compare master equation against the exact solution (`j_z`) with this
    /// max-abs tolerance.
    pub oracle_tol: Option<f64>,
}

/// Master equation vs exact solution for one correlation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub with_corr: bool,
    pub max_abs: f64,
    pub tol: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.max_abs <= self.tol
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub name: String,
    pub files: Vec<PathBuf>,
    pub meta: PathBuf,
    pub f_corr0: f64,
    pub oracle: Vec<OracleCheck>,
}

impl RunReport {
    pub fn tolerance_breached(&self) -> bool {
        self.oracle.iter().any(|c| !c.passed())
    }
}

/// Recording times of the master-equation integrator, reused by the other
/// engines so every CSV of a scenario shares one grid.
pub fn record_times(s: &Scenario) -> Vec<f64> {
    let n = s.sim.n_steps();
    let mut times = vec![0.0];
    for k in 0..n {
        if (k + 1) % s.sim.record_every == 0 || k + 1 == n {
            times.push(if k + 1 == n { s.sim.t_max } else { (k + 1) as f64 * s.sim.dt });
        }
    }
    times
}

pub fn file_name(s: &Scenario, engine: Engine, with_corr: bool) -> String {
    let corr = if with_corr { "corr" } else { "nocorr" };
    format!("{}_{}_{}.csv", s.name, engine.tag(), corr)
}

fn trajectories(
    s: &Scenario,
    engine: Engine,
    settings: &[bool],
    times: &[f64],
    exec: Execution,
) -> Result<Vec<(bool, Trajectory)>> {
    let policy = QuadraturePolicy::default();
    match engine {
        Engine::MasterEquation => {
            let mut cfg = s.sim;
            cfg.execution = exec;
            let solver = MeSolver::new(&s.sys, &s.bath, s.prep, &cfg)?;
            let rho0 = initial_state(s.prep, solver.operators());
            settings
                .iter()
                .map(|&c| Ok((c, solver.run(&rho0, c)?)))
                .collect()
        }
        Engine::ExactDephasing => {
            let model = ExactDephasing::with_policy(s.prep, &s.sys, &s.bath, &policy)?;
            settings
                .iter()
                .map(|&c| Ok((c, model.trajectory(times, c, exec)?)))
                .collect()
        }
        Engine::ShortTime => {
            let ops = build_spin_operators(s.sys.n_atoms)?;
            let psi = state_vector(s.prep, &ops);
            settings
                .iter()
                .map(|&c| {
                    let coeffs = ShortTimeCoeffs::new(&s.sys, &s.bath, s.prep, c, &policy)?;
                    let traj = ShortTimeExpansion::new(&psi, &coeffs, &ops)?.trajectory(times);
                    if traj.max_trace_err() > STATE_TOLERANCE {
                        return Err(Error::NumericalConsistency(format!(
                            "short-time expansion lost normalization ({:e})",
                            traj.max_trace_err()
                        )));
                    }
                    Ok((c, traj))
                })
                .collect()
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<RunReport> {
    s.validate()?;
    let settings: Vec<bool> = if opts.no_corr {
        vec![false]
    } else {
        s.correlations.settings().to_vec()
    };
    if opts.oracle_tol.is_some()
        && !(s.engines.contains(&Engine::MasterEquation) && s.engines.contains(&Engine::ExactDephasing))
    {
        return Err(Error::Config(
            "--oracle needs both master_equation and exact_dephasing enabled".into(),
        ));
    }
    fs::create_dir_all(&opts.out_dir)?;
    let times = record_times(s);
    let mut files = Vec::new();
    let mut me_runs = Vec::new();
    let mut exact_runs = Vec::new();
    for &engine in &s.engines {
        for (c, traj) in trajectories(s, engine, &settings, &times, opts.execution)? {
            let path = opts.out_dir.join(file_name(s, engine, c));
            Table::from_trajectory(&traj).write(&path)?;
            files.push(path);
            match engine {
                Engine::MasterEquation => me_runs.push((c, traj)),
                Engine::ExactDephasing => exact_runs.push((c, traj)),
                Engine::ShortTime => {}
            }
        }
    }

    let mut oracle = Vec::new();
    if let Some(tol) = opts.oracle_tol {
        for ((c, me), (_, ex)) in me_runs.iter().zip(&exact_runs) {
            oracle.push(OracleCheck {
                with_corr: *c,
                max_abs: max_abs_diff(&me.jz, &ex.jz),
                tol,
            });
        }
    }

    let policy = QuadraturePolicy::default();
    let f_corr0 = f_corr(0.0, s.prep, &s.sys, &s.bath, &policy)?;
    let meta = opts.out_dir.join(format!("{}.meta", s.name));
    fs::write(&meta, meta_text(s, opts, f_corr0, &files, &oracle, &policy)?)?;
    Ok(RunReport {
        name: s.name.clone(),
        files,
        meta,
        f_corr0,
        oracle,
    })
}

fn meta_text(
    s: &Scenario,
    opts: &RunOptions,
    f_corr0: f64,
    files: &[PathBuf],
    oracle: &[OracleCheck],
    policy: &QuadraturePolicy,
) -> Result<String> {
    let mut m = String::new();
    let _ = writeln!(m, "name = {}", s.name);
    let _ = writeln!(m, "version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "epsilon = {}", s.sys.epsilon);
    let _ = writeln!(m, "delta = {}", s.sys.delta);
    let _ = writeln!(m, "delta_tilde = {}", s.sys.delta_tilde());
    let _ = writeln!(m, "n_atoms = {}", s.sys.n_atoms);
    let _ = writeln!(m, "g = {}", s.bath.g);
    let _ = writeln!(m, "omega_c = {}", s.bath.omega_c);
    let _ = writeln!(m, "beta = {}", s.bath.beta);
    let _ = writeln!(m, "state = {}", s.prep);
    let _ = writeln!(m, "t_max = {}", s.sim.t_max);
    let _ = writeln!(m, "dt = {}", s.sim.dt);
    let _ = writeln!(m, "kernel_grid_dt = {}", s.sim.kernel_grid_dt);
    let _ = writeln!(m, "record_every = {}", s.sim.record_every);
    let _ = writeln!(m, "quadrature_rel_tol = {}", policy.rel_tol);
    let _ = writeln!(m, "quadrature_abs_tol = {}", policy.abs_tol);
    let _ = writeln!(m, "quadrature_cutoff_multiplier = {}", policy.tail_cutoff_multiplier);
    let _ = writeln!(m, "state_tolerance = {}", STATE_TOLERANCE);
    let _ = writeln!(m, "execution = {}", if opts.execution.is_parallel() { "parallel" } else { "sequential" });
    let _ = writeln!(m, "observables = {}", s.outputs.join(", "));
    let _ = writeln!(m, "f_corr_0 = {f_corr0}");
    if s.engines.contains(&Engine::ShortTime) {
        let dt = s.sys.delta_tilde();
        let c = ShortTimeCoeffs::new(&s.sys, &s.bath, s.prep, true, policy)?;
        let v = c.validity(s.sim.t_max, dt);
        let _ = writeln!(m, "short_time_curvature = {}", c.curvature());
        let _ = writeln!(m, "short_time_horizon = {}", Validity::horizon(&c, dt, SHORT_TIME_BOUND));
        let _ = writeln!(m, "short_time_t2_curvature_at_t_max = {}", v.t2_curvature);
    }
    for o in oracle {
        let tag = if o.with_corr { "corr" } else { "nocorr" };
        let _ = writeln!(m, "oracle_max_abs_jz_{tag} = {}", o.max_abs);
        let _ = writeln!(m, "oracle_tol = {}", o.tol);
    }
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
        .collect();
    let _ = writeln!(m, "files = {}", names.join(", "));
    Ok(m)
}

/// Runs a batch, scenarios in parallel. Results keep input order.
pub fn run_batch(scenarios: &[Scenario], opts: &RunOptions) -> Vec<Result<RunReport>> {
    opts.execution.map_slice(scenarios, |s| run_scenario(s, opts))
}

/// Loads a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    Scenario::parse(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => Error::Parse {
            line,
            column,
            message: format!("{message} ({})", path.display()),
        },
        other => other,
    })
}
