//! Conic programming layer: Hermitian-block problems lowered onto a real
//! symmetric standard form, an embedded primal-dual interior-point solver,
//! and a plain-text interchange export for cross-validation.

mod export;
mod problem;
mod solver;

pub use export::{export_sdpa, import_sdpa, SdpaData};
pub use problem::{
    embed_hermitian, extract_hermitian, ConicProblem, ConicSolution, HermitianConstraint, Sense,
    StandardForm,
};
pub use solver::{solve_conic, solve_standard_form, SolveReport, SolveStatus, SolverOptions};
