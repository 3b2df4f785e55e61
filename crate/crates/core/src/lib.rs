//! Radial principal eigenvalues, bifurcation thresholds and positive steady
//! states of the logistic equation `-Δu = λ(V(x)u - f(u))` with a
//! sign-changing weight `V`.
//!
//! Everything lives on radial grids ([`RadialGrid`]): the weighted
//! eigenproblem `-Δφ = λ V φ` on balls ([`eigen`]), its large-ball limit `Λ`
//! ([`threshold`]), monotone sub/supersolution iteration for the logistic
//! problem on balls and on the whole space ([`logistic`]), and numerical
//! checks of decay, integrability and the Newtonian-potential identity
//! ([`diagnostics`]).

// `!(x > 0.0)` is used on purpose so that NaN fails positivity checks, and
// the banded kernels read best with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod banded;
pub mod diagnostics;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod logistic;
pub mod oracle;
pub mod problem;
pub mod threshold;

pub use eigen::{principal_shifted, principal_weighted, EigenOptions, Pencil, ShiftedEigenResult, WeightedEigenResult};
pub use error::{Error, Result};
pub use grid::{RadialGrid, StiffnessForm};
pub use logistic::{
    bifurcation_sweep, minimal_maximal_gap, minimal_maximal_pair, monotone_solve_ball, solve_entire, BallOutcome,
    EntireOutcome, EntireSolution, Extinct, SolutionProfile, SolveOptions, Start, SweepTable,
};
pub use oracle::{dense_oracle, DenseSpectrum, OracleProblem};
pub use problem::{
    supersolution_bound, validate_absorption, validate_potential, AbsorptionTerm, CheckGrid, CheckStatus, Potential,
    ValidationReport,
};
pub use threshold::{estimate_big_lambda, lambda_curve, LambdaCurve, LambdaEstimate};
