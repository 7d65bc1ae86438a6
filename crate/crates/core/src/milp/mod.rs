//! The time-indexed integer model, its LP-format export and an exact solver.

mod bnb;
mod lp;
mod model;

pub use bnb::{solve_exact, solve_exact_with, Budget, ExactSolution, SolveOptions, SolveStatus};
pub use lp::export_lp;
pub use model::{
    build_model, linearize_product, rescale, Constraint, LinearRow, MilpModel, ModelPoint, Sense, Var, VarCounts,
    VarKind,
};
