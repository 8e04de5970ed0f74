#![allow(dead_code)]

use invcert::{BoundTables, Solution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn tol(values: &[f64]) -> f64 {
    1e-9 * values.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
}

fn fail(what: &str, t: usize, detail: String) -> Result<(), String> {
    Err(format!("{what} violated in period {t}: {detail}"))
}

/// Every structural property of the grid value functions and bound tables
/// that the error analysis relies on. `triples` random triples per period are
/// drawn for the sub-K-convexity check (exhaustive for small tables).
pub fn check_all(sol: &Solution, rng: &mut ChaCha8Rng, triples: usize) -> Result<(), String> {
    check_cutoffs(sol)?;
    check_sub_k_convexity(sol, rng, triples)?;
    check_one_step_estimates(sol)?;
    check_bound_monotonicity(sol)
}

/// Window minimum, the region left of the argmin floor, and the two reorder
/// thresholds.
pub fn check_cutoffs(sol: &Solution) -> Result<(), String> {
    let grid = sol.grid;
    let horizon = sol.horizon();
    for t in 0..horizon {
        let k = sol.problem.period(t).setup;
        let h_s = sol.tables.h_at_order_up_to[t];
        let before_s = sol.h_value(t, sol.policy.reorder[t] - grid.theta());
        if before_s < h_s + k - tol(&[h_s, before_s]) {
            return fail(
                "reorder threshold",
                t,
                format!("H(s-θ) = {before_s} < H(S)+K = {}", h_s + k),
            );
        }
        if t + 1 == horizon {
            continue;
        }
        let table = &sol.tables.h[t];
        for (j, v) in table.iter() {
            if v < h_s - tol(&[v, h_s]) {
                return fail(
                    "window minimum",
                    t,
                    format!("H(z_{j}) = {v} < H(S) = {h_s}"),
                );
            }
        }
        let floor = sol.cutoffs.argmin_floor[t];
        let h_floor = sol.h_value(t, grid.coord(floor));
        for (j, v) in table.iter().filter(|&(j, _)| j <= floor) {
            if v < h_floor - tol(&[v, h_floor]) {
                return fail(
                    "left of argmin floor",
                    t,
                    format!("H(z_{j}) = {v} < H(I) = {h_floor}"),
                );
            }
        }
        let below_x = grid.coord(sol.cutoffs.window_bottom[t] - 1);
        let (c_below, c_floor) = (
            sol.problem.transformed_cost(t, below_x),
            sol.problem.transformed_cost(t, grid.coord(floor)),
        );
        if c_below <= c_floor + k {
            return fail(
                "window bottom",
                t,
                format!("C(Ī-θ) = {c_below} <= C(I)+K = {}", c_floor + k),
            );
        }
        let below = sol.h_value(t, below_x);
        if below < h_floor + k - tol(&[below, h_floor]) {
            return fail(
                "window bottom",
                t,
                format!("H(Ī-θ) = {below} < H(I)+K = {}", h_floor + k),
            );
        }
    }
    Ok(())
}

/// `g(y) <= τ g(x) + (1-τ)(g(z) + K)` for grid points `x <= y <= z`.
pub fn check_sub_k_convexity(
    sol: &Solution,
    rng: &mut ChaCha8Rng,
    triples: usize,
) -> Result<(), String> {
    for t in 0..sol.horizon().saturating_sub(1) {
        let k = sol.problem.period(t).setup;
        let table = &sol.tables.h[t];
        let n = table.values.len();
        let check = |a: usize, b: usize, c: usize| -> Result<(), String> {
            if a == c {
                return Ok(());
            }
            let (gx, gy, gz) = (table.values[a], table.values[b], table.values[c]);
            let tau = (c - b) as f64 / (c - a) as f64;
            let rhs = tau * gx + (1.0 - tau) * (gz + k);
            if gy > rhs + tol(&[gx, gy, gz]) {
                let s = table.start;
                return fail(
                    "sub-K-convexity",
                    t,
                    format!(
                        "indices {}, {}, {}: {gy} > {rhs}",
                        s + a as i64,
                        s + b as i64,
                        s + c as i64
                    ),
                );
            }
            Ok(())
        };
        if n * n * n / 6 <= triples {
            for a in 0..n {
                for c in a..n {
                    for b in a..=c {
                        check(a, b, c)?;
                    }
                }
            }
        } else {
            for _ in 0..triples {
                let mut idx = [
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                    rng.random_range(0..n),
                ];
                idx.sort_unstable();
                check(idx[0], idx[1], idx[2])?;
            }
        }
    }
    Ok(())
}

/// One-step increase and decrease of `H_t` bounded by the `ψ`/`ψ̄` tables.
pub fn check_one_step_estimates(sol: &Solution) -> Result<(), String> {
    if sol.horizon() < 2 {
        return Ok(());
    }
    let top = sol.cutoffs.window_top[0];
    let tables = BoundTables::new(sol, top).map_err(|e| e.to_string())?;
    for t in 0..sol.horizon() - 1 {
        let h = |j: i64| sol.h_value(t, sol.grid.coord(j));
        for (j, psi) in tables.psi[t].iter() {
            let (hi, lo) = (h(j), h(j - 1));
            if hi - lo > psi + tol(&[hi, lo]) {
                return fail(
                    "upward one-step estimate",
                    t,
                    format!("z_{j}: {} > {psi}", hi - lo),
                );
            }
        }
        for (j, psi_bar) in tables.psi_bar[t].iter() {
            let (hi, lo) = (h(j), h(j - 1));
            if lo - hi > psi_bar + tol(&[hi, lo]) {
                return fail(
                    "downward one-step estimate",
                    t,
                    format!("z_{j}: {} > {psi_bar}", lo - hi),
                );
            }
        }
    }
    Ok(())
}

/// `ω_t`, `ω̄_0` and `ε̄_0` are non-decreasing in their argument.
pub fn check_bound_monotonicity(sol: &Solution) -> Result<(), String> {
    if sol.horizon() < 2 {
        return Ok(());
    }
    let top = sol.cutoffs.window_top[0] + 20;
    let tables = BoundTables::new(sol, top).map_err(|e| e.to_string())?;
    for (t, omega) in tables.omega.iter().enumerate() {
        for w in omega.values.windows(2) {
            if w[1] < w[0] - tol(w) {
                return fail("omega monotonicity", t, format!("{} then {}", w[0], w[1]));
            }
        }
    }
    let bottom = sol.reorder_index[0] - 20;
    let mut prev: Option<(f64, f64)> = None;
    for k in bottom..=top {
        let ob = tables.omega_bar_0(sol, k).map_err(|e| e.to_string())?;
        let eb = tables.eps_bar_0(sol, k).map_err(|e| e.to_string())?;
        if let Some((po, pe)) = prev {
            if ob < po - tol(&[po, ob]) || eb < pe - tol(&[pe, eb]) {
                return fail(
                    "certificate monotonicity",
                    0,
                    format!("at z_{k}: ({po}, {pe}) then ({ob}, {eb})"),
                );
            }
        }
        prev = Some((ob, eb));
    }
    Ok(())
}
