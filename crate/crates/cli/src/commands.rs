//! One function per CLI verb. Each returns the rendered report plus an
//! optional failure that sets the exit code after the report is written.

use std::time::Instant;

use invcert::oracle::{
    evaluate_policy_exact, exact_dp, fine_grid_reference, simulate_policy, DiscreteProblem,
};
use invcert::{certify, solve, Certificate, DemandModel, Grid, Solution};
use serde_json::json;

use crate::config::RunConfig;
use crate::report::{num, Report};
use crate::CliError;

/// Relative tolerance for "policies agree" against exact DP.
pub const EXACT_AGREEMENT_TOL: f64 = 1e-9;
/// Multiplier on the Monte-Carlo CI half-width in the gap check.
pub const CI_MULTIPLIER: f64 = 3.0;

pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Self {
            text: report.finish(),
            failure: None,
        }
    }
}

fn require_theta(cfg: &RunConfig) -> Result<f64, CliError> {
    cfg.theta.ok_or_else(|| {
        CliError::Usage("grid step missing: set 'theta' in the config or pass --theta".into())
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn relative_error_field(cert: &Certificate) -> (serde_json::Value, String) {
    match cert.relative_error() {
        Ok(r) => (json!(r), format!("{:.4} %", 100.0 * r)),
        Err(_) => (
            serde_json::Value::Null,
            format!(
                "unavailable (value lower bound {} is not positive)",
                num(cert.value_lower)
            ),
        ),
    }
}

fn policy_section(report: &mut Report, sol: &Solution) {
    report.line(format!(
        "{:>4} {:>14} {:>14} {:>14} {:>14}",
        "t", "s_t", "S_t", "C_min_t", "S_cap_t"
    ));
    let grid = &sol.grid;
    for t in 0..sol.horizon() {
        let (s, big_s) = (sol.policy.reorder[t], sol.policy.order_up_to[t]);
        let cm = sol.cutoffs.cost_minimizer[t];
        let cap = grid.coord(sol.cutoffs.order_cap[t]);
        report.line(format!(
            "{t:>4} {:>14} {:>14} {:>14} {:>14}",
            num(s),
            num(big_s),
            num(cm),
            num(cap)
        ));
        report.record(
            "policy",
            json!({ "period": t, "reorder": s, "order_up_to": big_s, "cost_minimizer": cm, "order_cap": cap }),
        );
    }
}

fn certificate_section(report: &mut Report, cert: &Certificate) {
    let (rel, rel_text) = relative_error_field(cert);
    let s = cert.simple;
    report.line(format!("grid point z_k        {}", num(cert.grid_point)));
    report.line(format!("omega_bar_0(z_k)      {}", num(cert.omega_bar)));
    report.line(format!("eps_bar_0(z_k)        {}", num(cert.eps_bar)));
    report.line(format!("V_0(x0)               {}", num(cert.v0)));
    report.line(format!(
        "V_0(x0) - c_0 x0      {}",
        num(cert.value_estimate)
    ));
    report.line(format!(
        "value interval        [{}, {}]",
        num(cert.value_lower),
        num(cert.value_upper)
    ));
    report.line(format!("relative error bound  {rel_text}"));
    report.line(format!(
        "simple bounds         U_omega {}  U_omega_bar {}  U_eps {}  U_eps_bar {}",
        num(s.omega),
        num(s.omega_uniform),
        num(s.eps),
        num(s.eps_uniform)
    ));
    report.record(
        "certificate",
        json!({
            "x0": cert.x,
            "grid_point": cert.grid_point,
            "omega_bar": cert.omega_bar,
            "eps_bar": cert.eps_bar,
            "v0": cert.v0,
            "value_estimate": cert.value_estimate,
            "value_lower": cert.value_lower,
            "value_upper": cert.value_upper,
            "relative_error": rel,
            "u_omega": s.omega,
            "u_omega_bar": s.omega_uniform,
            "u_eps": s.eps,
            "u_eps_bar": s.eps_uniform,
        }),
    );
}

fn timing(report: &mut Report, name: &str, seconds: f64) {
    report.line(format!("time {name:<16} {seconds:.3} s"));
    report.record("timing", json!({ "stage": name, "seconds": seconds }));
}

fn solve_timed(cfg: &RunConfig) -> Result<(Solution, f64), CliError> {
    let theta = require_theta(cfg)?;
    let (sol, secs) = timed(|| solve(&cfg.problem, Grid::new(theta)?));
    Ok((sol?, secs))
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sol, secs) = solve_timed(cfg)?;
    let mut report = Report::new("solve", cfg, cfg.theta);
    policy_section(&mut report, &sol);
    timing(&mut report, "solve", secs);
    Ok(Outcome::ok(report))
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sol, solve_secs) = solve_timed(cfg)?;
    let (cert, bound_secs) = timed(|| certify(&sol, cfg.x0));
    let cert = cert?;
    let mut report = Report::new("certify", cfg, cfg.theta);
    policy_section(&mut report, &sol);
    certificate_section(&mut report, &cert);
    timing(&mut report, "solve", solve_secs);
    timing(&mut report, "bounds", bound_secs);
    Ok(Outcome::ok(report))
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (sol, solve_secs) = solve_timed(cfg)?;
    let (sim, sim_secs) =
        timed(|| simulate_policy(&cfg.problem, &sol.policy, cfg.x0, cfg.reps, cfg.seed));
    let mut report = Report::new("simulate", cfg, cfg.theta);
    policy_section(&mut report, &sol);
    report.line(format!(
        "simulated cost        {} +/- {} (95% CI, {} reps, seed {})",
        num(sim.mean_cost),
        num(sim.ci_half_width),
        sim.n_reps,
        sim.seed
    ));
    report.record(
        "simulation",
        json!({ "mean_cost": sim.mean_cost, "ci_half_width": sim.ci_half_width, "reps": sim.n_reps, "seed": sim.seed }),
    );
    timing(&mut report, "solve", solve_secs);
    timing(&mut report, "simulate", sim_secs);
    Ok(Outcome::ok(report))
}

/// The problem as a [`DiscreteProblem`] when every demand is discrete with
/// atoms on the grid.
fn as_discrete(cfg: &RunConfig, grid: Grid) -> Option<DiscreteProblem> {
    let all_discrete = cfg
        .problem
        .periods
        .iter()
        .all(|p| matches!(p.demand, DemandModel::Discrete { .. }));
    if !all_discrete {
        return None;
    }
    DiscreteProblem::new(cfg.problem.clone(), grid).ok()
}

pub fn cmd_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let theta = require_theta(cfg)?;
    let theta_ref = cfg.theta_ref.unwrap_or(theta / 10.0);
    let (sol, _) = solve_timed(cfg)?;
    let cert = certify(&sol, cfg.x0)?;
    let sim = simulate_policy(&cfg.problem, &sol.policy, cfg.x0, cfg.reps, cfg.seed);
    let reference = fine_grid_reference(&cfg.problem, theta_ref, cfg.x0)?;

    let mut report = Report::new("check", cfg, Some(theta));
    policy_section(&mut report, &sol);
    certificate_section(&mut report, &cert);
    report.line(format!(
        "simulated cost        {} +/- {} (95% CI, {} reps, seed {})",
        num(sim.mean_cost),
        num(sim.ci_half_width),
        sim.n_reps,
        sim.seed
    ));
    report.line(format!(
        "reference (theta {theta_ref})  [{}, {}]",
        num(reference.lower()),
        num(reference.upper())
    ));

    let mut failures = Vec::new();
    let gap = (sim.mean_cost - reference.estimate).abs();
    let allowance = cert.total_bound() + reference.half_width + CI_MULTIPLIER * sim.ci_half_width;
    let gap_ok = gap <= allowance;
    report.line(format!(
        "gap check             |simulated - reference| = {} <= {} : {}",
        num(gap),
        num(allowance),
        if gap_ok {
            "bound holds"
        } else {
            "bound violated"
        }
    ));
    if !gap_ok {
        failures.push("simulated gap exceeds the certified bound".to_string());
    }
    let overlap = cert.value_lower <= reference.upper() && reference.lower() <= cert.value_upper;
    report.line(format!(
        "interval check        certificate and reference intervals {}",
        if overlap { "overlap" } else { "are disjoint" }
    ));
    if !overlap {
        failures.push("certificate and reference intervals are disjoint".to_string());
    }

    let mut exact_fields = serde_json::Value::Null;
    if let Some(dp) = as_discrete(cfg, sol.grid) {
        let exact = exact_dp(&dp)?;
        match exact.optimal_cost(cfg.x0) {
            Some(optimal) => {
                let achieved = evaluate_policy_exact(&dp, &sol.policy, cfg.x0)?;
                let agree =
                    (achieved - optimal).abs() <= EXACT_AGREEMENT_TOL * optimal.abs().max(1.0);
                report.line(format!(
                    "exact DP              policy cost {} vs optimal {} : {}",
                    num(achieved),
                    num(optimal),
                    if agree {
                        "policies agree"
                    } else {
                        "policies disagree"
                    }
                ));
                if !agree {
                    failures
                        .push("solver policy is not optimal for the discrete problem".to_string());
                }
                exact_fields =
                    json!({ "policy_cost": achieved, "optimal_cost": optimal, "agree": agree });
            }
            None => report
                .line("exact DP              skipped (x0 is off-grid or outside the exact window)"),
        }
    }

    report.record(
        "check",
        json!({
            "theta_ref": theta_ref,
            "simulated_mean": sim.mean_cost,
            "ci_half_width": sim.ci_half_width,
            "reps": sim.n_reps,
            "seed": sim.seed,
            "reference_lower": reference.lower(),
            "reference_upper": reference.upper(),
            "gap": gap,
            "allowance": allowance,
            "gap_ok": gap_ok,
            "intervals_overlap": overlap,
            "exact": exact_fields,
        }),
    );
    let text = report.finish();
    let failure = if failures.is_empty() {
        None
    } else {
        Some(CliError::CheckFailed(failures.join("; ")))
    };
    Ok(Outcome { text, failure })
}

pub fn cmd_converge(cfg: &RunConfig, thetas: &[f64]) -> Result<Outcome, CliError> {
    let thetas: Vec<f64> = if thetas.is_empty() {
        let theta = require_theta(cfg)?;
        (0..4).map(|i| theta / f64::from(1u32 << i)).collect()
    } else {
        thetas.to_vec()
    };
    if let Some(bad) = thetas.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(CliError::Invalid(format!(
            "grid step {bad} must be finite and positive"
        )));
    }
    let mut report = Report::new("converge", cfg, None);
    report.line(format!(
        "{:>10} {:>12} {:>12} {:>14} {:>10} {:>14} {:>9}",
        "theta", "omega_bar", "eps_bar", "V0 - c0 x0", "rel %", "U_bar total", "seconds"
    ));
    for &theta in &thetas {
        let (cert, secs) = timed(|| -> Result<Certificate, CliError> {
            let sol = solve(&cfg.problem, Grid::new(theta)?)?;
            Ok(certify(&sol, cfg.x0)?)
        });
        let cert = cert?;
        let (rel, _) = relative_error_field(&cert);
        let rel_text = cert
            .relative_error()
            .map_or("n/a".to_string(), |r| format!("{:.3}", 100.0 * r));
        let uniform = cert.simple.omega_uniform + cert.simple.eps_uniform;
        report.line(format!(
            "{theta:>10} {:>12} {:>12} {:>14} {rel_text:>10} {:>14} {secs:>9.3}",
            num(cert.omega_bar),
            num(cert.eps_bar),
            num(cert.value_estimate),
            num(uniform)
        ));
        report.record(
            "convergence",
            json!({
                "theta": theta,
                "omega_bar": cert.omega_bar,
                "eps_bar": cert.eps_bar,
                "value_estimate": cert.value_estimate,
                "relative_error": rel,
                "uniform_bound": uniform,
                "seconds": secs,
            }),
        );
    }
    Ok(Outcome::ok(report))
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut report = Report::new("validate", cfg, cfg.theta);
    let validation = cfg.problem.validate();
    let violations: Vec<String> = validation
        .violations
        .iter()
        .map(|v| v.to_string())
        .collect();
    if violations.is_empty() {
        report.line(format!("valid: {} periods", cfg.problem.horizon()));
    }
    for v in &violations {
        report.line(format!("violation: {v}"));
    }
    report.record(
        "validation",
        json!({ "valid": violations.is_empty(), "violations": violations }),
    );
    let failure =
        (!validation.is_ok()).then(|| CliError::Invalid(format!("invalid problem: {validation}")));
    Ok(Outcome {
        text: report.finish(),
        failure,
    })
}
