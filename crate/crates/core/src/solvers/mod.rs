//! Linear programming, the optimistic per-step program and online convex optimization.

pub mod lp;
mod oco;
mod ucb_step;

pub use lp::{solve_lp, LinearProgram, LpProblem, LpSolution, LpStatus, Relation};
pub use oco::{OcoKind, OcoState};
pub use ucb_step::{
    constraint_gap, constraint_gap_dual, objective_value, objective_value_dual, solve_ucb_step,
    solve_ucb_step_pooled, solve_ucb_step_with, CutPool, UcbStep, UcbStepOptions,
};
