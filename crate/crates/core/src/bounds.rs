//! Computable upper bounds on the optimality gap of an approximate policy.
//!
//! Two error terms are bounded separately: `ω̄_0`, bounding `V_0 − V*_0`
//! (cost-to-go of the grid recursion versus the exact one), and `ε̄_0`,
//! bounding the gap between `V_0 − c_0 x` and the true cost of running the
//! policy. Both are built from the one-step estimate tables `ψ_t(θ, ·)` and
//! `ψ̄_t(θ, ·)`, tabulated on the grid.

use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::solver::{GridTable, Solution};

/// Tables behind `ω̄_0(z)` and `ε̄_0(z)` for every grid point `z ≤ z_top`.
#[derive(Debug, Clone)]
pub struct BoundTables {
    /// `ψ_t(θ, ·)` for `t ≤ T−2`.
    pub psi: Vec<GridTable>,
    /// `ψ̄_t(θ, ·)` for `t ≤ T−2`.
    pub psi_bar: Vec<GridTable>,
    /// `ω_t` over `[S^U_t, U_t]` for `t ≤ T−2`.
    pub omega: Vec<GridTable>,
    /// `η_t = ψ̄_t(θ, S^U_t) + ω_t(S^U_t)`, with `η_{T−1} = 0`.
    pub eta: Vec<f64>,
    top: GridIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleBounds {
    /// `U^ω_0(z_k)`.
    pub omega: f64,
    /// `Ū^ω_0(θ)`, independent of the state.
    pub omega_uniform: f64,
    /// `U^ε_0(z_k)`.
    pub eps: f64,
    /// `Ū^ε_0(θ)`.
    pub eps_uniform: f64,
}

/// Certified enclosure of the optimal expected cost at one initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub x: f64,
    /// Smallest grid point `z_k ≥ x`.
    pub grid_point: f64,
    pub omega_bar: f64,
    pub eps_bar: f64,
    /// `V_0(x)`.
    pub v0: f64,
    /// `V_0(x) − c_0 x`.
    pub value_estimate: f64,
    pub value_lower: f64,
    pub value_upper: f64,
    pub simple: SimpleBounds,
}

impl Certificate {
    /// Upper bound on the relative gap, `(ω̄_0 + ε̄_0) / value_lower`.
    pub fn relative_error(&self) -> Result<f64> {
        if self.value_lower > 0.0 {
            Ok((self.omega_bar + self.eps_bar) / self.value_lower)
        } else {
            Err(Error::DegenerateDenominator(self.value_lower))
        }
    }

    pub fn total_bound(&self) -> f64 {
        self.omega_bar + self.eps_bar
    }
}

impl BoundTables {
    /// Builds every table needed for grid points up to index `top`.
    pub fn new(sol: &Solution, top: GridIndex) -> Result<Self> {
        let horizon = sol.horizon();
        if horizon < 2 {
            return Ok(Self {
                psi: vec![],
                psi_bar: vec![],
                omega: vec![],
                eta: vec![0.0; horizon],
                top,
            });
        }
        let last = horizon - 1;
        let theta = sol.grid.theta();
        let alpha = sol.problem.alpha;
        let gamma: Vec<f64> = (0..horizon).map(|t| sol.problem.lipschitz(t)).collect();
        let cap = &sol.cutoffs.order_cap;

        // U_t covers every argument reached from z_top by the `+θ` ladders.
        let mut upper = vec![0; last];
        for t in 0..last {
            upper[t] = if t == 0 {
                top.max(cap[0])
            } else {
                (upper[t - 1] + 1).max(cap[t])
            };
        }

        let mut psi = vec![GridTable::default(); last];
        let mut psi_bar = vec![GridTable::default(); last];
        for t in (0..last).rev() {
            let g = gamma[t] * theta;
            let lattice = sol.lattice(t);
            let psi_start = (sol.reorder_index[t] + 1).min(cap[t]);
            let bar_start = sol.reorder_index[t];
            if t + 1 == last {
                // ψ_{T−1} = ψ̄_{T−1} = γ_{T−1} θ, so both collapse to a CDF.
                let next_g = gamma[last] * theta;
                let value = |j: GridIndex| {
                    let k = sol.offset_from_reorder(last, sol.grid.coord(j));
                    if k < -1 {
                        g
                    } else {
                        g + alpha * next_g * lattice.cum(k + 1)
                    }
                };
                psi[t] = tabulate(psi_start, upper[t], value);
                psi_bar[t] = tabulate(bar_start, upper[t], value);
            } else {
                let next_reorder = sol.reorder_index[t + 1];
                let recurse = |next: &GridTable, j: GridIndex, m_max: GridIndex| -> Result<f64> {
                    if m_max < -1 {
                        return Ok(g);
                    }
                    check_range(next, j - m_max, j + 1, t + 1, "one-step estimate")?;
                    let sum: f64 = (-1..=m_max)
                        .map(|m| next.values[(j - m - next.start) as usize] * lattice.mass(m))
                        .sum();
                    Ok(g + alpha * sum)
                };
                psi[t] = try_tabulate(psi_start, upper[t], |j| {
                    recurse(&psi[t + 1], j, j - next_reorder - 1)
                })?;
                psi_bar[t] = try_tabulate(bar_start, upper[t], |j| {
                    recurse(&psi_bar[t + 1], j, j - next_reorder)
                })?;
            }
        }

        let mut omega = vec![GridTable::default(); last];
        let mut eta = vec![0.0; horizon];
        for t in (0..last).rev() {
            let g = gamma[t] * theta;
            let lattice = sol.lattice(t);
            let psi_t = &psi[t];
            let table = if t + 1 == last {
                try_tabulate(cap[t], upper[t], |j| Ok(psi_t.at_checked(j, "psi")? - g))?
            } else {
                let next = &omega[t + 1];
                let next_eta = eta[t + 1];
                let next_cap = cap[t + 1];
                try_tabulate(cap[t], upper[t], |j| {
                    let base = psi_t.at_checked(j, "psi")? - g;
                    let n = j - next_cap;
                    if n - 1 < -1 {
                        return Ok(base + alpha * next_eta);
                    }
                    check_range(next, j - (n - 1), j + 1, t + 1, "omega")?;
                    let sum: f64 = (-1..n)
                        .map(|m| {
                            next.values[(j - m - next.start) as usize].max(next_eta)
                                * lattice.mass(m)
                        })
                        .sum();
                    Ok(base + alpha * sum + alpha * next_eta * lattice.tail(n - 1))
                })?
            };
            eta[t] =
                psi_bar[t].at_checked(cap[t], "psi_bar")? + table.at_checked(cap[t], "omega")?;
            omega[t] = table;
        }

        Ok(Self {
            psi,
            psi_bar,
            omega,
            eta,
            top,
        })
    }

    /// `ω̄_0(z_k)`.
    pub fn omega_bar_0(&self, sol: &Solution, k: GridIndex) -> Result<f64> {
        if sol.horizon() < 2 {
            return Ok(0.0);
        }
        self.ensure_covered(k)?;
        let eta = self.eta[0];
        if k <= sol.cutoffs.order_cap[0] {
            Ok(eta)
        } else {
            Ok(eta.max(self.omega[0].at_checked(k, "omega")?))
        }
    }

    /// `ε̄_0(z_k)`.
    pub fn eps_bar_0(&self, sol: &Solution, k: GridIndex) -> Result<f64> {
        let horizon = sol.horizon();
        if horizon < 2 {
            return Ok(0.0);
        }
        self.ensure_covered(k)?;
        let last = horizon - 1;
        let theta = sol.grid.theta();
        let alpha = sol.problem.alpha;
        let mut total = alpha.powi(last as i32) * sol.problem.lipschitz(last) * theta;
        let mut ladder = k;
        for i in 0..last.saturating_sub(1) {
            let at = ladder.max(sol.order_up_to_index[i]);
            let excess =
                self.psi_bar[i].at_checked(at, "psi_bar")? - sol.problem.lipschitz(i) * theta;
            total += 2.0 * alpha.powi(i as i32) * excess;
            ladder = at + 1;
        }
        Ok(total)
    }

    fn ensure_covered(&self, k: GridIndex) -> Result<()> {
        if k > self.top {
            Err(Error::InternalConsistency(format!(
                "bound tables built up to index {} but queried at {k}",
                self.top
            )))
        } else {
            Ok(())
        }
    }
}

/// `U^ω_0(z_k)`, `Ū^ω_0(θ)`, `U^ε_0(z_k)` and `Ū^ε_0(θ)`.
pub fn simple_bounds(sol: &Solution, k: GridIndex) -> SimpleBounds {
    let horizon = sol.horizon();
    if horizon < 2 {
        return SimpleBounds {
            omega: 0.0,
            omega_uniform: 0.0,
            eps: 0.0,
            eps_uniform: 0.0,
        };
    }
    let last = horizon - 1;
    let theta = sol.grid.theta();
    let grid = &sol.grid;
    let alpha = sol.problem.alpha;
    let gamma = |t: usize| sol.problem.lipschitz(t);
    let cdf = |t: usize, x: f64| sol.problem.period(t).demand.cdf(x);
    let reorder = &sol.policy.reorder;

    // Σ_n α^{n+i} γ_{i+n} Π_{m<n} F_{i+m}(z + (m+1)θ − s_{i+m+1}), without the θ factor.
    let chain = |i: usize, z: f64| -> f64 {
        let mut prod = 1.0;
        let mut sum = 0.0;
        for n in 1..=(last - i) {
            let m = n - 1;
            prod *= cdf(i + m, z + (m + 1) as f64 * theta - reorder[i + m + 1]);
            sum += alpha.powi((n + i) as i32) * gamma(i + n) * prod;
        }
        sum
    };
    let plain = |i: usize| -> f64 {
        (1..=(last - i))
            .map(|n| alpha.powi((n + i) as i32) * gamma(i + n))
            .sum()
    };

    let base: f64 = (0..last).map(|i| alpha.powi(i as i32) * gamma(i)).sum();
    let mut omega_sum = base;
    let mut omega_uniform_sum = base;
    let mut mu = k;
    for i in 0..last {
        let cap = sol.cutoffs.order_cap[i];
        omega_sum += chain(i, grid.coord(cap)) + chain(i, grid.coord(mu.max(cap)));
        omega_uniform_sum += 2.0 * plain(i);
        mu = mu.max(cap) + 1;
    }

    let terminal = alpha.powi(last as i32) * gamma(last);
    let mut eps_sum = terminal;
    let mut eps_uniform_sum = terminal;
    let mut lambda = k;
    for i in 0..last.saturating_sub(1) {
        let at = lambda.max(sol.order_up_to_index[i]);
        eps_sum += 2.0 * chain(i, grid.coord(at));
        eps_uniform_sum += 2.0 * plain(i);
        lambda = at + 1;
    }

    SimpleBounds {
        omega: theta * omega_sum,
        omega_uniform: theta * omega_uniform_sum,
        eps: theta * eps_sum,
        eps_uniform: theta * eps_uniform_sum,
    }
}

/// Certified value interval and gap bounds at initial inventory `x`.
pub fn certify(sol: &Solution, x: f64) -> Result<Certificate> {
    if !x.is_finite() {
        return Err(Error::InternalConsistency(format!(
            "initial inventory {x} is not finite"
        )));
    }
    let k = sol.grid.ceil_index(x);
    let tables = BoundTables::new(sol, k)?;
    certify_with(sol, &tables, x)
}

/// As [`certify`], reusing tables built for a grid point at or above `x`.
pub fn certify_with(sol: &Solution, tables: &BoundTables, x: f64) -> Result<Certificate> {
    let k = sol.grid.ceil_index(x);
    let omega_bar = tables.omega_bar_0(sol, k)?;
    let eps_bar = tables.eps_bar_0(sol, k)?;
    let v0 = sol.evaluate_v0(x);
    let value_estimate = v0 - sol.problem.period(0).unit_cost * x;
    Ok(Certificate {
        x,
        grid_point: sol.grid.coord(k),
        omega_bar,
        eps_bar,
        v0,
        value_estimate,
        value_lower: value_estimate - omega_bar,
        value_upper: value_estimate + eps_bar,
        simple: simple_bounds(sol, k),
    })
}

fn tabulate(start: GridIndex, end: GridIndex, f: impl Fn(GridIndex) -> f64) -> GridTable {
    GridTable::new(start, (start..=end).map(f).collect())
}

fn try_tabulate(
    start: GridIndex,
    end: GridIndex,
    f: impl Fn(GridIndex) -> Result<f64> + Sync + Send,
) -> Result<GridTable> {
    use rayon::prelude::*;
    let values = (start..=end)
        .into_par_iter()
        .map(f)
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridTable::new(start, values))
}

fn check_range(
    table: &GridTable,
    lo: GridIndex,
    hi: GridIndex,
    period: usize,
    what: &str,
) -> Result<()> {
    if table.contains(lo) && table.contains(hi) {
        Ok(())
    } else {
        Err(Error::InternalConsistency(format!(
            "{what} table for period {period} covers [{}, {}], needed [{lo}, {hi}]",
            table.start,
            table.end()
        )))
    }
}
