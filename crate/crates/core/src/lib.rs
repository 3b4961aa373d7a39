//! Eigenpairs of an operator `L` from the orthonormal eigenbasis of a nearby,
//! already solved operator `K`.
//!
//! The family `M(θ) = θL + (1 − θ)K` joins `K` to `L`. Its eigenvalues and
//! eigenvector coordinates are expanded in Maclaurin series in `θ` whose
//! coefficients follow from a forward recursion on the base eigenpairs of `K`
//! and the interaction matrix `X[m][n] = <L e_m, e_n>`. Summing at `θ = 1`
//! gives the eigenpairs of `L` when the series converge there.
//!
//! Modules:
//! - [`operator`]: dense matrices, eigenbases, the interaction matrix.
//! - [`series`]: coefficient recursion and low-order closed forms.
//! - [`eval`]: evaluation, residuals, radius and tail diagnostics.
//! - [`oracle`]: Jacobi eigensolver and eigenvector matching for validation.
//! - [`continuation`]: staged homotopy and parameter sweeps.
//! - [`io`]: Matrix Market, JSON reports, CSV trajectories.
//!
//! Eigen-indices are 0-based in the API and 1-based in reports and messages.

pub mod continuation;
pub mod error;
pub mod eval;
pub mod io;
pub mod operator;
pub mod oracle;
pub mod series;

pub use continuation::{auto_stage, staged_solve, sweep, StagePlan, StagedSolution, TrajectoryTable};
pub use error::{Error, Result};
pub use eval::{solve_at, solve_at_one, EigenpairResult, SolveOptions};
pub use operator::{DenseMatrix, EigenBasis, HomotopyProblem, InteractionMatrix, Tolerances};
pub use oracle::{jacobi_eigen, problem_from_symmetric, OracleEigenDecomposition};
pub use series::{compute_coefficients, SeriesCoefficients};
