//! Reduced dynamics of `N` collective two-level atoms coupled to an Ohmic
//! bosonic bath, including the drive term produced by preparing the spins
//! out of the correlated spin–bath equilibrium state.

pub mod bath;
pub mod cli;
pub mod corr_kernel;
pub mod error;
pub mod exact_dephasing;
pub mod master_equation;
pub mod parallel;
pub mod quadrature;
pub mod short_time;
pub mod spin_algebra;

pub use error::{Error, Result};
