use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::problem::InventoryProblem;
use crate::solver::ApproximatePolicy;

/// Normal quantile for a two-sided 95% interval.
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationResult {
    pub mean_cost: f64,
    /// Half-width of the 95% confidence interval.
    pub ci_half_width: f64,
    pub n_reps: u64,
    pub seed: u64,
}

/// Estimates the expected discounted cost of running `policy` from `x0`.
///
/// Replication `r` draws its demands from its own ChaCha stream `r`, so the
/// result does not depend on how replications are scheduled.
pub fn simulate_policy(
    prob: &InventoryProblem,
    policy: &ApproximatePolicy,
    x0: f64,
    n_reps: u64,
    seed: u64,
) -> SimulationResult {
    assert!(n_reps >= 1, "at least one replication is required");
    let costs: Vec<f64> = (0..n_reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep);
            replicate(prob, policy, x0, &mut rng)
        })
        .collect();

    let n = n_reps as f64;
    let mean = costs.iter().sum::<f64>() / n;
    let ci_half_width = if n_reps > 1 {
        let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1.0);
        Z_95 * (var / n).sqrt()
    } else {
        0.0
    };
    SimulationResult {
        mean_cost: mean,
        ci_half_width,
        n_reps,
        seed,
    }
}

fn replicate(
    prob: &InventoryProblem,
    policy: &ApproximatePolicy,
    x0: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut x = x0;
    let mut discount = 1.0;
    let mut total = 0.0;
    for (t, p) in prob.periods.iter().enumerate() {
        let y = policy.post_order_level(t, x);
        let mut cost = 0.0;
        if y > x {
            cost += p.setup + p.unit_cost * (y - x);
        }
        let d = p.demand.quantile(rng.random::<f64>());
        cost += p.holding * (y - d).max(0.0) + p.penalty * (d - y).max(0.0);
        total += discount * cost;
        discount *= prob.alpha;
        x = y - d;
    }
    total - discount * prob.salvage * x
}
