//! Independent checks on the solver and the certificate: Monte-Carlo policy
//! evaluation, exact dynamic programming for discrete demands, and a
//! fine-grid reference value.

mod exact;
mod reference;
mod simulate;

pub use exact::{
    evaluate_policy_exact, exact_dp, exact_dp_in_window, DiscreteProblem, ExactSolution,
};
pub use reference::{fine_grid_reference, ReferenceValue};
pub use simulate::{simulate_policy, SimulationResult};
