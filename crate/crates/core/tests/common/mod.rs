#![allow(dead_code)]

pub mod invariants;

use invcert::{DemandModel, InventoryProblem, PeriodParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Valid problem with costs drawn so the coercivity and setup-ordering
/// conditions hold by construction.
pub fn random_problem(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    demand: impl Fn(&mut ChaCha8Rng) -> DemandModel,
) -> InventoryProblem {
    let alpha = if rng.random_bool(0.5) {
        1.0
    } else {
        rng.random_range(0.8..1.0)
    };
    let c = rng.random_range(0.5..3.0);
    let mut setup = rng.random_range(0.0..20.0);
    let periods = (0..horizon)
        .map(|_| {
            let p = PeriodParams {
                unit_cost: c,
                holding: rng.random_range(0.2..2.0),
                penalty: c + rng.random_range(1.0..10.0),
                setup,
                demand: demand(rng),
            };
            setup *= rng.random_range(0.3..1.0);
            p
        })
        .collect();
    InventoryProblem::new(alpha, periods, c * rng.random_range(0.0..1.0))
}

/// Discrete demand with up to `max_atoms` atoms on `{0, 1, ..., 7}`.
pub fn grid_pmf(rng: &mut ChaCha8Rng, max_atoms: usize) -> DemandModel {
    let n = rng.random_range(1..=max_atoms);
    let atoms: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(0..8) as f64, rng.random_range(0.05..1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    DemandModel::discrete(atoms.into_iter().map(|(v, p)| (v, p / total)).collect()).unwrap()
}

pub fn continuous(rng: &mut ChaCha8Rng) -> DemandModel {
    match rng.random_range(0..3) {
        0 => {
            let mu = rng.random_range(2.0..20.0);
            DemandModel::truncated_normal(mu, mu * rng.random_range(0.1..0.6)).unwrap()
        }
        1 => DemandModel::uniform(rng.random_range(2.0..30.0)).unwrap(),
        _ => {
            let mu = rng.random_range(2.0..20.0);
            let shape = rng.random_range(1.0..30.0);
            DemandModel::gamma(shape, shape / mu).unwrap()
        }
    }
}
