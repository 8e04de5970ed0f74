use crate::error::{Error, Result};
use crate::grid::{Grid, GridIndex};
use crate::problem::InventoryProblem;
use crate::solver::{ApproximatePolicy, GridTable};
use crate::DemandModel;

/// Problem whose demands are finite distributions supported on the grid,
/// so every expectation is an exact finite sum over grid points.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    problem: InventoryProblem,
    grid: Grid,
    /// Per period: `(demand index, probability)`.
    pmfs: Vec<Vec<(GridIndex, f64)>>,
}

impl DiscreteProblem {
    pub fn new(problem: InventoryProblem, grid: Grid) -> Result<Self> {
        problem.ensure_valid()?;
        let mut pmfs = Vec::with_capacity(problem.horizon());
        for (t, p) in problem.periods.iter().enumerate() {
            let DemandModel::Discrete { atoms } = &p.demand else {
                return Err(Error::InvalidDemand(format!(
                    "period {t}: demand is not discrete"
                )));
            };
            let mut pmf = Vec::with_capacity(atoms.len());
            for &(v, prob) in atoms {
                if !grid.is_on_grid(v) {
                    return Err(Error::InvalidDemand(format!(
                        "period {t}: atom {v} is not a multiple of the grid step {}",
                        grid.theta()
                    )));
                }
                pmf.push((grid.floor_index(v), prob));
            }
            let total: f64 = pmf.iter().map(|a| a.1).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDemand(format!(
                    "period {t}: probabilities sum to {total}"
                )));
            }
            pmfs.push(pmf);
        }
        Ok(Self {
            problem,
            grid,
            pmfs,
        })
    }

    pub fn problem(&self) -> &InventoryProblem {
        &self.problem
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn max_demand(&self, t: usize) -> GridIndex {
        self.pmfs[t].iter().map(|a| a.0).max().unwrap_or(0)
    }

    /// Expected holding plus backlog cost after raising inventory to grid index `y`.
    fn expected_period_cost(&self, t: usize, y: GridIndex) -> f64 {
        let p = self.problem.period(t);
        self.pmfs[t]
            .iter()
            .map(|&(d, prob)| {
                let left = self.grid.coord(y - d);
                prob * (p.holding * left.max(0.0) + p.penalty * (-left).max(0.0))
            })
            .sum()
    }

    fn expected_next(&self, t: usize, y: GridIndex, next: &GridTable) -> f64 {
        self.pmfs[t]
            .iter()
            .map(|&(d, prob)| {
                prob * next
                    .get(y - d)
                    .expect("window covers every reachable state")
            })
            .sum()
    }

    /// Lowest state index per period when period 0 starts at `floor`.
    fn lower_states(&self, floor: GridIndex) -> Vec<GridIndex> {
        let mut lows = vec![floor];
        for t in 0..self.problem.horizon() {
            lows.push(lows[t] - self.max_demand(t));
        }
        lows
    }

    fn terminal_values(&self, lo: GridIndex, hi: GridIndex) -> GridTable {
        let c = self.problem.salvage;
        GridTable::new(lo, (lo..=hi).map(|k| -c * self.grid.coord(k)).collect())
    }
}

/// Optimal policy and costs from exact backward induction.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub grid: Grid,
    /// `H*_t` over the state window of each period.
    pub h: Vec<GridTable>,
    /// Optimal expected cost `v*_0` over the period-0 window.
    pub v0: GridTable,
    pub reorder_index: Vec<GridIndex>,
    /// Leftmost minimizer of `H*_t`.
    pub order_up_to_index: Vec<GridIndex>,
}

impl ExactSolution {
    pub fn optimal_cost(&self, x0: f64) -> Option<f64> {
        if !self.grid.is_on_grid(x0) {
            return None;
        }
        self.v0.get(self.grid.floor_index(x0))
    }

    pub fn policy(&self) -> ApproximatePolicy {
        ApproximatePolicy {
            reorder: self
                .reorder_index
                .iter()
                .map(|&k| self.grid.coord(k))
                .collect(),
            order_up_to: self
                .order_up_to_index
                .iter()
                .map(|&k| self.grid.coord(k))
                .collect(),
        }
    }
}

/// Exact DP over a state window that is widened until no argmin touches it.
pub fn exact_dp(dp: &DiscreteProblem) -> Result<ExactSolution> {
    let total: GridIndex = (0..dp.problem.horizon())
        .map(|t| dp.max_demand(t))
        .sum::<GridIndex>()
        .max(1);
    let (mut lo, mut hi) = (-total, 2 * total + 4);
    for _ in 0..16 {
        match exact_dp_in_window(dp, lo, hi) {
            Err(Error::WindowTooSmall { .. }) => {
                let span = hi - lo;
                lo -= span;
                hi += span;
            }
            other => return other,
        }
    }
    Err(Error::WindowTooSmall { period: 0 })
}

/// Exact DP with period-0 states restricted to grid indices `[lo, hi]`.
/// Later periods extend the window downward by the largest demand so every
/// expectation is exact; order-up-to levels are capped at `hi`.
pub fn exact_dp_in_window(
    dp: &DiscreteProblem,
    lo: GridIndex,
    hi: GridIndex,
) -> Result<ExactSolution> {
    let horizon = dp.problem.horizon();
    let lows = dp.lower_states(lo);
    let mut next = dp.terminal_values(lows[horizon], hi);
    let mut h_tables = vec![GridTable::default(); horizon];
    let mut reorder_index = vec![0; horizon];
    let mut order_up_to_index = vec![0; horizon];

    for t in (0..horizon).rev() {
        let p = dp.problem.period(t);
        let alpha = dp.problem.alpha;
        let start = lows[t];
        let h: Vec<f64> = (start..=hi)
            .map(|y| {
                p.unit_cost * dp.grid.coord(y)
                    + dp.expected_period_cost(t, y)
                    + alpha * dp.expected_next(t, y, &next)
            })
            .collect();

        let min = h.iter().copied().fold(f64::INFINITY, f64::min);
        let tie = 1e-12 * min.abs();
        let arg = h.iter().position(|&v| v <= min + tie).unwrap();
        let big_s = start + arg as GridIndex;
        if big_s == start || big_s == hi {
            return Err(Error::WindowTooSmall { period: t });
        }
        let threshold = h[arg] + p.setup;
        let small_s = (0..arg)
            .rev()
            .find(|&i| h[i] > threshold)
            .map_or(start, |i| start + i as GridIndex + 1);

        let mut suffix_min = h.clone();
        for i in (0..suffix_min.len() - 1).rev() {
            suffix_min[i] = suffix_min[i].min(suffix_min[i + 1]);
        }
        let values = h
            .iter()
            .zip(&suffix_min)
            .enumerate()
            .map(|(i, (&stay, &best))| {
                -p.unit_cost * dp.grid.coord(start + i as GridIndex) + stay.min(p.setup + best)
            })
            .collect();

        reorder_index[t] = small_s;
        order_up_to_index[t] = big_s;
        h_tables[t] = GridTable::new(start, h);
        next = GridTable::new(start, values);
    }

    Ok(ExactSolution {
        grid: dp.grid,
        h: h_tables,
        v0: next,
        reorder_index,
        order_up_to_index,
    })
}

/// Exact expected discounted cost of running `policy` from the grid point `x0`.
pub fn evaluate_policy_exact(
    dp: &DiscreteProblem,
    policy: &ApproximatePolicy,
    x0: f64,
) -> Result<f64> {
    let grid = &dp.grid;
    let off_grid = |v: f64| Error::InternalConsistency(format!("{v} is not on the grid"));
    if !grid.is_on_grid(x0) {
        return Err(off_grid(x0));
    }
    let mut levels = Vec::with_capacity(policy.horizon());
    for &s in &policy.order_up_to {
        if !grid.is_on_grid(s) {
            return Err(off_grid(s));
        }
        levels.push(grid.floor_index(s));
    }
    let start = grid.floor_index(x0);
    let hi = levels.iter().copied().fold(start, GridIndex::max);
    let lo = levels.iter().copied().fold(start, GridIndex::min);
    let horizon = dp.problem.horizon();
    let lows = dp.lower_states(lo);

    let mut next = dp.terminal_values(lows[horizon], hi);
    for t in (0..horizon).rev() {
        let p = dp.problem.period(t);
        let values = (lows[t]..=hi)
            .map(|x| {
                let ordering = grid.coord(x) < policy.reorder[t];
                let y = if ordering { levels[t] } else { x };
                let order_cost = if ordering && y > x {
                    p.setup + p.unit_cost * grid.coord(y - x)
                } else {
                    0.0
                };
                order_cost
                    + dp.expected_period_cost(t, y)
                    + dp.problem.alpha * dp.expected_next(t, y, &next)
            })
            .collect();
        next = GridTable::new(lows[t], values);
    }
    Ok(next.get(start).expect("start state is in the window"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::PeriodParams;

    fn period(c: f64, h: f64, p: f64, k: f64, atoms: Vec<(f64, f64)>) -> PeriodParams {
        PeriodParams {
            unit_cost: c,
            holding: h,
            penalty: p,
            setup: k,
            demand: DemandModel::discrete(atoms).unwrap(),
        }
    }

    #[test]
    fn rejects_off_grid_atoms() {
        let prob =
            InventoryProblem::new(1.0, vec![period(1.0, 1.0, 3.0, 0.0, vec![(0.5, 1.0)])], 1.0);
        assert!(DiscreteProblem::new(prob.clone(), Grid::new(1.0).unwrap()).is_err());
        assert!(DiscreteProblem::new(prob, Grid::new(0.25).unwrap()).is_ok());
    }

    #[test]
    fn newsvendor_critical_fractile() {
        let atoms = vec![(0.0, 0.1), (1.0, 0.2), (2.0, 0.3), (3.0, 0.25), (4.0, 0.15)];
        let prob = InventoryProblem::new(1.0, vec![period(1.0, 1.0, 4.0, 0.0, atoms.clone())], 0.0);
        let dp = DiscreteProblem::new(prob, Grid::new(1.0).unwrap()).unwrap();
        let sol = exact_dp(&dp).unwrap();
        // Underage 4 − 1 = 3, overage 1 + 1 = 2: fractile 0.6, first reached at 3.
        assert_eq!(sol.order_up_to_index[0], 2);
        let mut acc = 0.0;
        let want = atoms
            .iter()
            .find(|a| {
                acc += a.1;
                acc >= 3.0 / 5.0
            })
            .unwrap()
            .0;
        assert_eq!(sol.order_up_to_index[0] as f64, want);
        // Brute force over order-up-to levels from x0 = 0.
        let best = (0..=6)
            .map(|s| {
                let policy = ApproximatePolicy {
                    reorder: vec![s as f64 + 0.5],
                    order_up_to: vec![s as f64],
                };
                evaluate_policy_exact(&dp, &policy, 0.0).unwrap()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((sol.optimal_cost(0.0).unwrap() - best).abs() < 1e-12);
    }

    #[test]
    fn prohibitive_setup_never_orders() {
        let atoms = vec![(0.0, 0.5), (1.0, 0.5)];
        let prob = InventoryProblem::new(
            1.0,
            vec![
                period(1.0, 1.0, 3.0, 1e6, atoms.clone()),
                period(1.0, 1.0, 3.0, 1e6, atoms),
            ],
            1.0,
        );
        let dp = DiscreteProblem::new(prob, Grid::new(1.0).unwrap()).unwrap();
        let sol = exact_dp_in_window(&dp, -8, 8).unwrap();
        assert_eq!(sol.reorder_index[0], -8);
        assert_eq!(sol.reorder_index[1], -9);
    }

    #[test]
    fn two_period_matches_policy_enumeration() {
        let atoms = vec![(0.0, 0.5), (1.0, 0.5)];
        let prob = InventoryProblem::new(
            1.0,
            vec![
                period(1.0, 1.0, 3.0, 2.0, atoms.clone()),
                period(1.0, 1.0, 3.0, 2.0, atoms),
            ],
            1.0,
        );
        let dp = DiscreteProblem::new(prob, Grid::new(1.0).unwrap()).unwrap();
        let sol = exact_dp(&dp).unwrap();
        let pairs: Vec<(i64, i64)> = (-10..=10)
            .flat_map(|s| (s..=10).map(move |big| (s, big)))
            .collect();
        for x0 in [-2.0, 0.0, 2.0] {
            let mut best = f64::INFINITY;
            for &(s0, b0) in &pairs {
                for &(s1, b1) in &pairs {
                    let policy = ApproximatePolicy {
                        reorder: vec![s0 as f64, s1 as f64],
                        order_up_to: vec![b0 as f64, b1 as f64],
                    };
                    best = best.min(evaluate_policy_exact(&dp, &policy, x0).unwrap());
                }
            }
            let optimal = sol.optimal_cost(x0).unwrap();
            assert!(
                (optimal - best).abs() < 1e-12,
                "x0={x0}: {optimal} vs {best}"
            );
            let own = evaluate_policy_exact(&dp, &sol.policy(), x0).unwrap();
            assert!((own - optimal).abs() < 1e-12);
        }
    }
}
