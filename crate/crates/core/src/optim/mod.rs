//! Feasible sets, problems decoupled from solvers, and the solvers.

mod constraint;
mod problem;
mod solvers;

pub use constraint::Constraint;
pub use problem::{
    GradientFn, ObjectiveFn, Problem, SolverConfig, SolverMethod, SolverTrace, StopReason,
    DEFAULT_MAX_ITER,
};
pub use solvers::{solve, solve_pgd, solve_pgd_ls, solve_random_search};
