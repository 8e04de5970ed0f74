//! Approximate `(s, S)` policies for finite-horizon inventory problems with
//! setup costs, together with computable bounds on their optimality gap.

pub mod bounds;
pub mod catalog;
pub mod demand;
pub mod error;
pub mod grid;
pub mod oracle;
pub mod problem;
pub mod solver;

pub use bounds::{certify, certify_with, BoundTables, Certificate, SimpleBounds};
pub use demand::DemandModel;
pub use error::{Error, Result};
pub use grid::{Grid, GridIndex};
pub use problem::{InventoryProblem, PeriodParams, ValidationReport, Violation};
pub use solver::{solve, solve_with, ApproximatePolicy, Solution, SolverOptions};
