//! Reference instances used throughout the tests and bundled CLI configs.

use crate::demand::DemandModel;
use crate::problem::{InventoryProblem, PeriodParams};

/// Mean demand per period for the 30-period reference instances.
pub const MEAN_DEMAND: [f64; 30] = [
    110.0, 40.0, 10.0, 62.0, 12.0, 80.0, 122.0, 130.0, 123.0, 32.0, 13.0, 61.0, 15.0, 87.0, 120.0,
    115.0, 119.0, 38.0, 14.0, 70.0, 14.0, 86.0, 112.0, 127.0, 123.0, 52.0, 8.0, 73.0, 11.0, 75.0,
];

/// Three-period instance with uniform demands on `[0, 1/8]`, `[0, 1/3]`, `[0, 1]`.
pub fn three_period_uniform() -> InventoryProblem {
    let penalty = [9.0, 4.0, 3.0];
    let rate = [8.0, 3.0, 1.0];
    let periods = (0..3)
        .map(|t| PeriodParams {
            unit_cost: 1.0,
            holding: 1.0,
            penalty: penalty[t],
            setup: 1.0,
            demand: DemandModel::uniform(1.0 / rate[t]).unwrap(),
        })
        .collect();
    InventoryProblem::new(1.0, periods, 1.0)
}

fn stationary_costs(horizon: usize, demand: impl Fn(f64) -> DemandModel) -> InventoryProblem {
    assert!(
        horizon <= MEAN_DEMAND.len(),
        "reference instances have at most 30 periods"
    );
    let periods = MEAN_DEMAND[..horizon]
        .iter()
        .map(|&mu| PeriodParams {
            unit_cost: 5.0,
            holding: 0.5,
            penalty: 12.0,
            setup: 48.0,
            demand: demand(mu),
        })
        .collect();
    InventoryProblem::new(1.0, periods, 5.0)
}

/// Truncated-normal demands with `σ_t = μ_t / 5`.
pub fn truncated_normal(horizon: usize) -> InventoryProblem {
    stationary_costs(horizon, |mu| {
        DemandModel::truncated_normal(mu, mu / 5.0).unwrap()
    })
}

/// Uniform demands on `[0, 2μ_t]`.
pub fn uniform(horizon: usize) -> InventoryProblem {
    stationary_costs(horizon, |mu| DemandModel::uniform(2.0 * mu).unwrap())
}

/// Gamma demands with shape 25 and rate `25/μ_t`.
pub fn gamma(horizon: usize) -> InventoryProblem {
    stationary_costs(horizon, |mu| DemandModel::gamma(25.0, 25.0 / mu).unwrap())
}
