use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate system Hamiltonian: sqrt(delta^2 + epsilon^2) = 0")]
    DegenerateHamiltonian,

    #[error("quadrature did not converge: error estimate {estimate:e} exceeds tolerance {tolerance:e} after {subdivisions} subdivisions")]
    Integration {
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },

    #[error("numerical consistency check failed: {0}")]
    NumericalConsistency(String),

    #[error("time {t} lies outside the precomputed grid [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },

    #[error("run failed at t = {t}: trace error {trace_err:e}, hermiticity error {herm_err:e}")]
    FailedRun {
        t: f64,
        trace_err: f64,
        herm_err: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
