//! Greedy low-rank matrix estimation by selecting rank-1 atoms.
//!
//! A concave objective `ℓ` over `n × d` matrices is maximized under a rank
//! budget by growing a support set of unit-norm atoms `u vᵀ` one at a time and
//! refitting all coefficients on the support after each addition. The set
//! function `f(L) = max_H ℓ(U_Lᵀ H V_L) − ℓ(0)` is monotone and normalized;
//! [`analysis`] checks numerically how close to submodular it is and how the
//! solvers' results compare with the approximation and recovery bounds.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod atoms;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mtx;
pub mod objective;
pub mod seed;
pub mod solvers;

pub use atoms::{refit, set_value, Atom, RefitOptions, RefitSolution, SupportSet};
pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SingularTriple};
pub use objective::{
    BinomialCounts, CurvaturePair, LinearMeasurements, LogisticPca, Objective, QuadraticFull,
};
pub use solvers::{run_distributed_greedy, run_geco, run_greedy, RunHistory, SolverConfig};
