//! Command-line front end for `stratalloc`: allocation from CSV, certificate
//! checks, timing benchmarks, population generation and the rounding report.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error, 3 infeasible
//! problem.

pub mod bench;
pub mod commands;
pub mod error;
pub mod io;

pub use commands::run;
pub use error::{CliError, CliResult};
