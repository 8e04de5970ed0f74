//! Approximate `(s_t, S_t)` policy by backward induction on the grid.
//!
//! Expectations over demand are replaced by sums over the grid masses
//! `f_t(n)`, which lets every `H_t` table be filled exactly over the bounded
//! window `[Ī_t, S̄_t]`:
//!
//! ```text
//! H_t(x) = C_t(x) + α R_{t+1}                                  if x − s_{t+1} < −θ
//! H_t(x) = C_t(x) + α R_{t+1} (1 − F_t(z_{m+1}))
//!                 + α Σ_{n=−1}^{m} H_{t+1}(x − z_n) f_t(n)      otherwise
//! ```
//!
//! where `z_m ≤ x − s_{t+1} < z_{m+1}` and `R_t = H_t(S_t) + K_t` is the
//! value of reordering.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridIndex};
use crate::problem::InventoryProblem;

/// Relative tolerance under which two `H_t` values count as tied when
/// picking `S_t`.
pub const ARGMIN_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Maximum number of grid steps any cutoff scan may take.
    pub max_scan: i64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_scan: 1 << 26 }
    }
}

/// Dense values over a contiguous range of grid indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GridTable {
    pub start: GridIndex,
    pub values: Vec<f64>,
}

impl GridTable {
    pub fn new(start: GridIndex, values: Vec<f64>) -> Self {
        Self { start, values }
    }

    /// Last index covered (inclusive).
    pub fn end(&self) -> GridIndex {
        self.start + self.values.len() as GridIndex - 1
    }

    pub fn contains(&self, idx: GridIndex) -> bool {
        idx >= self.start && idx <= self.end()
    }

    pub fn get(&self, idx: GridIndex) -> Option<f64> {
        if self.contains(idx) {
            Some(self.values[(idx - self.start) as usize])
        } else {
            None
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (GridIndex, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.start + i as GridIndex, v))
    }

    pub(crate) fn at_checked(&self, idx: GridIndex, what: &str) -> Result<f64> {
        self.get(idx).ok_or_else(|| {
            Error::InternalConsistency(format!(
                "{what}: index {idx} outside table [{}, {}]",
                self.start,
                self.end()
            ))
        })
    }
}

/// Grid masses `f_t(n) = P(z_n ≤ D_t < z_{n+1})` for one period.
#[derive(Debug, Clone)]
pub struct DemandLattice {
    grid: Grid,
    demand: crate::demand::DemandModel,
    /// `cum[n] = P(D < z_n)` for `n = 0..cum.len()`.
    cum: Vec<f64>,
}

impl DemandLattice {
    pub fn new(grid: Grid, demand: &crate::demand::DemandModel, len: usize) -> Self {
        let mut cum = Vec::with_capacity(len + 1);
        for n in 0..=len {
            let c = demand.cdf_left(grid.coord(n as GridIndex));
            cum.push(c);
            if c >= 1.0 {
                break;
            }
        }
        Self {
            grid,
            demand: demand.clone(),
            cum,
        }
    }

    /// `P(D < z_n)`.
    #[inline]
    pub fn cum(&self, n: GridIndex) -> f64 {
        if n <= 0 {
            0.0
        } else if (n as usize) < self.cum.len() {
            self.cum[n as usize]
        } else if *self.cum.last().unwrap() >= 1.0 {
            1.0
        } else {
            self.demand.cdf_left(self.grid.coord(n))
        }
    }

    /// Mass charged to demand `z_n`.
    #[inline]
    pub fn mass(&self, n: GridIndex) -> f64 {
        self.cum(n + 1) - self.cum(n)
    }

    /// Mass beyond `z_m`: `Σ_{n > m} f(n)`.
    #[inline]
    pub fn tail(&self, m: GridIndex) -> f64 {
        1.0 - self.cum(m + 1)
    }
}

/// Per-period cutoffs bounding where `H_t` must be tabulated.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoffs {
    /// Leftmost minimizer `C^m_t` of `C_t` (all periods).
    pub cost_minimizer: Vec<f64>,
    /// `S^U_t`: grid cap on order-up-to levels (all periods).
    pub order_cap: Vec<GridIndex>,
    /// `S̄_t`: top of the `H_t` table (`t ≤ T−2`).
    pub window_top: Vec<GridIndex>,
    /// `I_t`: bottom of the argmin search (`t ≤ T−2`).
    pub argmin_floor: Vec<GridIndex>,
    /// `Ī_t`: bottom of the `H_t` table (`t ≤ T−2`).
    pub window_bottom: Vec<GridIndex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximatePolicy {
    /// Reorder points `s_t`; on-grid except possibly the last.
    pub reorder: Vec<f64>,
    /// Order-up-to levels `S_t`; on-grid except possibly the last.
    pub order_up_to: Vec<f64>,
}

impl ApproximatePolicy {
    pub fn horizon(&self) -> usize {
        self.reorder.len()
    }

    /// Inventory level after the ordering decision in period `t`.
    #[inline]
    pub fn post_order_level(&self, t: usize, x: f64) -> f64 {
        if x < self.reorder[t] {
            self.order_up_to[t]
        } else {
            x
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverTables {
    /// `H_t` over `[Ī_t, S̄_t]` for `t ≤ T−2`. Entry `T−1` caches `C_{T−1}`
    /// on the grid points the sweep reads.
    pub h: Vec<GridTable>,
    /// `H_t(S_t)` for every period.
    pub h_at_order_up_to: Vec<f64>,
}

/// Everything produced by the backward sweep.
#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: InventoryProblem,
    pub grid: Grid,
    pub cutoffs: Cutoffs,
    pub policy: ApproximatePolicy,
    pub tables: SolverTables,
    /// `s_t` as a grid index for `t ≤ T−2`.
    pub reorder_index: Vec<GridIndex>,
    /// `S_t` as a grid index for `t ≤ T−2`.
    pub order_up_to_index: Vec<GridIndex>,
    lattices: Vec<DemandLattice>,
}

/// Leftmost minimizer of the convex `C_t`: the smallest `y` whose right
/// derivative is non-negative, found by doubling then bisection.
pub fn minimize_cost(prob: &InventoryProblem, t: usize) -> Result<f64> {
    let slope = |y: f64| prob.cost_slope(t, y);
    if slope(0.0) >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = prob.period(t).demand.mean().max(1.0);
    let mut doublings = 0;
    while slope(hi) < 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 || !hi.is_finite() {
            return Err(Error::BracketFailure {
                period: t,
                what: "minimizer of C_t",
            });
        }
    }
    let mut lo = 0.0;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if slope(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// `Ȳ ≤ C^m` with `C_t(Ȳ) = C_t(C^m) + K_t`.
pub fn terminal_reorder_point(prob: &InventoryProblem, t: usize, minimizer: f64) -> Result<f64> {
    let setup = prob.period(t).setup;
    if setup == 0.0 {
        return Ok(minimizer);
    }
    let target = prob.transformed_cost(t, minimizer) + setup;
    let c = |y: f64| prob.transformed_cost(t, y);
    let mut step = prob.period(t).demand.mean().max(minimizer.abs()).max(1.0);
    let mut lo = minimizer - step;
    let mut doublings = 0;
    while c(lo) < target {
        step *= 2.0;
        lo = minimizer - step;
        doublings += 1;
        if doublings > 60 || !lo.is_finite() {
            return Err(Error::BracketFailure {
                period: t,
                what: "terminal reorder point",
            });
        }
    }
    let mut hi = minimizer;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(0.5 * (lo + hi));
        }
        if c(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `S^U_t`: first grid point at or above `C^m_t` where `C_t` exceeds
/// `C_t(z_{n₀}) + K_t`, with `z_{n₀} < C^m_t ≤ z_{n₀+1}`.
pub fn upper_order_level(
    prob: &InventoryProblem,
    grid: &Grid,
    t: usize,
    minimizer: f64,
    opts: &SolverOptions,
) -> Result<GridIndex> {
    let first = grid.ceil_index(minimizer);
    let threshold = prob.transformed_cost(t, grid.coord(first - 1)) + prob.period(t).setup;
    for m in first..first + opts.max_scan {
        if prob.transformed_cost(t, grid.coord(m)) > threshold {
            return Ok(m);
        }
    }
    Err(Error::ScanOverflow {
        period: t,
        what: "S^U",
        span: opts.max_scan,
    })
}

/// `(I_t, Ī_t)` given `Ī_{t+1}` as a coordinate.
pub fn lower_cutoffs(
    prob: &InventoryProblem,
    grid: &Grid,
    t: usize,
    minimizer: f64,
    next_window_bottom: f64,
    opts: &SolverOptions,
) -> Result<(GridIndex, GridIndex)> {
    let bound = (next_window_bottom - grid.theta()).min(minimizer);
    let floor = grid.ceil_index(bound) - 1;
    let threshold = prob.transformed_cost(t, grid.coord(floor)) + prob.period(t).setup;
    for m in (floor - opts.max_scan..floor).rev() {
        if prob.transformed_cost(t, grid.coord(m)) > threshold {
            return Ok((floor, m + 1));
        }
    }
    Err(Error::ScanOverflow {
        period: t,
        what: "lower cutoff",
        span: opts.max_scan,
    })
}

/// Computes every cutoff sequence. Returns the cutoffs and `s_{T−1}`.
pub fn compute_cutoffs(
    prob: &InventoryProblem,
    grid: &Grid,
    opts: &SolverOptions,
) -> Result<(Cutoffs, f64)> {
    let horizon = prob.horizon();
    let mut cost_minimizer = Vec::with_capacity(horizon);
    let mut order_cap = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let cm = grid.snap(minimize_cost(prob, t)?);
        order_cap.push(upper_order_level(prob, grid, t, cm, opts)?);
        cost_minimizer.push(cm);
    }
    let last = horizon - 1;
    let last_reorder = terminal_reorder_point(prob, last, cost_minimizer[last])?;

    let tabulated = horizon.saturating_sub(1);
    let mut window_top = Vec::with_capacity(tabulated);
    for t in 0..tabulated {
        let top = if t == 0 {
            order_cap[0]
        } else {
            order_cap[t].max(window_top[t - 1] + 1)
        };
        window_top.push(top);
    }

    let mut argmin_floor = vec![0; tabulated];
    let mut window_bottom = vec![0; tabulated];
    let mut next_bottom = last_reorder;
    for t in (0..tabulated).rev() {
        let (i, ibar) = lower_cutoffs(prob, grid, t, cost_minimizer[t], next_bottom, opts)?;
        argmin_floor[t] = i;
        window_bottom[t] = ibar;
        next_bottom = grid.coord(ibar);
    }

    Ok((
        Cutoffs {
            cost_minimizer,
            order_cap,
            window_top,
            argmin_floor,
            window_bottom,
        },
        last_reorder,
    ))
}

/// Runs the full backward sweep.
pub fn solve(prob: &InventoryProblem, grid: Grid) -> Result<Solution> {
    solve_with(prob, grid, &SolverOptions::default())
}

pub fn solve_with(prob: &InventoryProblem, grid: Grid, opts: &SolverOptions) -> Result<Solution> {
    prob.ensure_valid()?;
    let horizon = prob.horizon();
    let last = horizon - 1;
    let (cutoffs, last_reorder) = compute_cutoffs(prob, &grid, opts)?;

    let mut reorder = vec![0.0; horizon];
    let mut order_up_to = vec![0.0; horizon];
    let mut h_at = vec![0.0; horizon];
    reorder[last] = last_reorder;
    order_up_to[last] = cutoffs.cost_minimizer[last];
    h_at[last] = prob.transformed_cost(last, order_up_to[last]);

    let lattices: Vec<DemandLattice> = (0..horizon)
        .map(|t| {
            let span = if t + 1 < horizon && t < cutoffs.window_top.len() {
                let lowest_next = if t + 1 == last {
                    last_reorder
                } else {
                    grid.coord(cutoffs.window_bottom[t + 1])
                };
                ((grid.coord(cutoffs.window_top[t]) - lowest_next) / grid.theta()).max(0.0) as usize
                    + 4
            } else {
                16
            };
            DemandLattice::new(grid, &prob.period(t).demand, span)
        })
        .collect();

    let mut tables: Vec<GridTable> = vec![GridTable::default(); horizon];
    let mut reorder_index = vec![0; last];
    let mut order_up_to_index = vec![0; last];

    if horizon >= 2 {
        // C_{T−1} over every grid point the T−2 sweep can read.
        let lo = grid.ceil_index(last_reorder);
        let hi = cutoffs.window_top[last - 1] + 1;
        let values = (lo..=hi)
            .into_par_iter()
            .map(|m| prob.transformed_cost(last, grid.coord(m)))
            .collect();
        tables[last] = GridTable::new(lo, values);
    }

    for t in (0..last).rev() {
        let ctx = SweepStep {
            prob,
            grid: &grid,
            t,
            next_reorder: reorder[t + 1],
            next_reorder_value: h_at[t + 1] + prob.period(t + 1).setup,
            lattice: &lattices[t],
        };
        let next = &tables[t + 1];
        let bottom = cutoffs.window_bottom[t];
        let top = cutoffs.window_top[t];
        let values: Vec<f64> = (bottom..=top)
            .into_par_iter()
            .map(|j| ctx.h_from_table(j, next))
            .collect::<Result<_>>()?;
        let table = GridTable::new(bottom, values);

        // S_t: largest grid argmin over [I_t, S^U_t].
        let (floor, cap) = (cutoffs.argmin_floor[t], cutoffs.order_cap[t]);
        let window_min = (floor..=cap)
            .map(|k| table.at_checked(k, "argmin window"))
            .try_fold(f64::INFINITY, |acc, v| v.map(|v| acc.min(v)))?;
        let tie = ARGMIN_TIE * window_min.abs();
        let big_s = (floor..=cap)
            .rev()
            .find(|&k| table.get(k).unwrap() <= window_min + tie)
            .expect("window minimum is attained");
        let h_s = table.get(big_s).unwrap();
        let setup = prob.period(t).setup;
        let small_s = if setup == 0.0 {
            big_s
        } else {
            (bottom..=big_s)
                .find(|&k| table.get(k).unwrap() <= h_s + setup)
                .expect("S_t itself qualifies")
        };

        reorder_index[t] = small_s;
        order_up_to_index[t] = big_s;
        reorder[t] = grid.coord(small_s);
        order_up_to[t] = grid.coord(big_s);
        h_at[t] = h_s;
        tables[t] = table;
    }

    Ok(Solution {
        problem: prob.clone(),
        grid,
        cutoffs,
        policy: ApproximatePolicy {
            reorder,
            order_up_to,
        },
        tables: SolverTables {
            h: tables,
            h_at_order_up_to: h_at,
        },
        reorder_index,
        order_up_to_index,
        lattices,
    })
}

/// One period of the recursion with `H_{t+1}` frozen.
struct SweepStep<'a> {
    prob: &'a InventoryProblem,
    grid: &'a Grid,
    t: usize,
    next_reorder: f64,
    next_reorder_value: f64,
    lattice: &'a DemandLattice,
}

impl SweepStep<'_> {
    /// Number of the top demand index for which `x − z_n ≥ s_{t+1}`.
    #[inline]
    fn top_demand_index(&self, x: f64) -> GridIndex {
        self.grid.floor_index(x - self.next_reorder)
    }

    fn h_from_table(&self, j: GridIndex, next: &GridTable) -> Result<f64> {
        let x = self.grid.coord(j);
        let alpha = self.prob.alpha;
        let c = self.prob.transformed_cost(self.t, x);
        let m = self.top_demand_index(x);
        if m < -1 {
            return Ok(c + alpha * self.next_reorder_value);
        }
        if !next.contains(j - m) || !next.contains(j + 1) {
            return Err(Error::InternalConsistency(format!(
                "period {}: H_{} lookup range [{}, {}] outside table [{}, {}]",
                self.t,
                self.t + 1,
                j - m,
                j + 1,
                next.start,
                next.end()
            )));
        }
        let sum: f64 = (-1..=m)
            .map(|n| next.values[(j - n - next.start) as usize] * self.lattice.mass(n))
            .sum();
        Ok(c + alpha * self.next_reorder_value * self.lattice.tail(m) + alpha * sum)
    }
}

impl Solution {
    pub fn horizon(&self) -> usize {
        self.problem.horizon()
    }

    pub fn lattice(&self, t: usize) -> &DemandLattice {
        &self.lattices[t]
    }

    /// Reordering value `H_t(S_t) + K_t`.
    pub fn reorder_value(&self, t: usize) -> f64 {
        self.tables.h_at_order_up_to[t] + self.problem.period(t).setup
    }

    /// `floor((x − s_t)/θ)` with the grid's snap tolerance.
    pub fn offset_from_reorder(&self, t: usize, x: f64) -> GridIndex {
        if t < self.reorder_index.len() && self.grid.is_on_grid(x) {
            self.grid.floor_index(x) - self.reorder_index[t]
        } else {
            self.grid.floor_index(x - self.policy.reorder[t])
        }
    }

    /// `H_t` at a stored grid point.
    pub fn h_table(&self, t: usize, j: GridIndex) -> Option<f64> {
        if t + 1 == self.horizon() {
            Some(self.problem.transformed_cost(t, self.grid.coord(j)))
        } else {
            self.tables.h[t].get(j)
        }
    }

    /// `H_t(x)` for any real `x`: stored value when available, otherwise
    /// the recursion is re-run over the lattice `x + ℤθ`.
    pub fn h_value(&self, t: usize, x: f64) -> f64 {
        let last = self.horizon() - 1;
        if t == last {
            return self.problem.transformed_cost(t, x);
        }
        if self.grid.is_on_grid(x) {
            if let Some(v) = self.tables.h[t].get(self.grid.floor_index(x)) {
                return v;
            }
        }
        self.h_on_shifted_lattice(t, x)
    }

    /// `V_t(x)`: reorder value left of `s_t`, `H_t(x)` otherwise.
    pub fn v_value(&self, t: usize, x: f64) -> f64 {
        if x < self.policy.reorder[t] {
            self.reorder_value(t)
        } else {
            self.h_value(t, x)
        }
    }

    /// Tabulates `H_u` on `x + kθ` for the offsets each deeper period needs
    /// and returns `H_t(x)`.
    fn h_on_shifted_lattice(&self, t: usize, x: f64) -> f64 {
        let last = self.horizon() - 1;
        let theta = self.grid.theta();
        let point = |k: GridIndex| x + k as f64 * theta;
        let top_index =
            |u: usize, k: GridIndex| self.grid.floor_index(point(k) - self.policy.reorder[u + 1]);

        // Offset ranges per period, following the chain of periods whose
        // lookups reach past the next reorder point.
        let mut ranges: Vec<Option<(GridIndex, GridIndex)>> = vec![None; last + 1];
        ranges[t] = Some((0, 0));
        for u in t..last {
            let Some((lo, hi)) = ranges[u] else { break };
            let reach = (lo..=hi)
                .filter(|&k| top_index(u, k) >= -1)
                .map(|k| k - top_index(u, k))
                .min();
            match reach {
                Some(next_lo) => ranges[u + 1] = Some((next_lo, hi + 1)),
                None => break,
            }
        }

        let mut below: Option<(GridIndex, Vec<f64>)> = None;
        for u in (t..=last).rev() {
            let Some((lo, hi)) = ranges[u] else { continue };
            let values: Vec<f64> = if u == last {
                (lo..=hi)
                    .map(|k| self.problem.transformed_cost(u, point(k)))
                    .collect()
            } else {
                let alpha = self.problem.alpha;
                let reorder_next = self.reorder_value(u + 1);
                let lattice = &self.lattices[u];
                (lo..=hi)
                    .into_par_iter()
                    .map(|k| {
                        let c = self.problem.transformed_cost(u, point(k));
                        let m = top_index(u, k);
                        if m < -1 {
                            return c + alpha * reorder_next;
                        }
                        let (start, next) = below.as_ref().expect("deeper period tabulated");
                        let sum: f64 = (-1..=m)
                            .map(|n| next[(k - n - start) as usize] * lattice.mass(n))
                            .sum();
                        c + alpha * reorder_next * lattice.tail(m) + alpha * sum
                    })
                    .collect()
            };
            below = Some((lo, values));
        }
        below.expect("period t tabulated").1[0]
    }

    /// `V_0(x)`, the approximate value used by the certificate.
    pub fn evaluate_v0(&self, x: f64) -> f64 {
        self.v_value(0, x)
    }
}
