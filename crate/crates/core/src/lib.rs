//! Optimal sample allocation in stratified sampling under upper bounds on
//! the per-stratum sample sizes.
//!
//! The allocation problem is: given `n > 0` and strata with `a_w, b_w > 0`,
//! minimize `Σ a_w² / x_w` subject to `Σ x_w = n` and `0 < x_w ≤ b_w`.
//! Stratified SRSWOR is the special case `a_w = N_w·S_w`, `b_w = N_w`.
//!
//! The solution is always a *V-allocation*: strata in the take-all set `V`
//! get their bound, every other stratum gets `a_w·s(V)` where
//! `s(V) = (n − Σ_{V} b) / Σ_{W∖V} a`. The three solvers in [`algorithms`]
//! differ only in how they search for `V`:
//!
//! * [`algorithms::rna`], the recursive Neyman algorithm,
//! * [`algorithms::sga`], the Stenger–Gabler sequential search over strata
//!   sorted by `c_w = a_w / b_w`,
//! * [`algorithms::coma`], which stops at the first decrease of `s`.
//!
//! [`oracles`] holds independent checks (exhaustive subset search, a KKT
//! certificate, multiplier bisection, a greedy integer optimum), and
//! [`rounding`] and [`popgen`] support the variance and timing experiments.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod model;
pub mod oracles;
pub mod popgen;
pub mod rounding;

pub use algorithms::{coma, rna, sga, solve};
pub use error::{AllocError, Result};
pub use model::{
    is_optimal_takeall, objective, s_of, srswor_variance, v_allocation, Algorithm, AllocationProblem, AllocationResult,
    IterationRecord, Stratum, TakeAllSet,
};
