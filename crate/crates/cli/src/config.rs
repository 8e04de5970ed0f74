//! Plain-text run configuration.
//!
//! ```text
//! invcert-config 1
//! # globals
//! alpha = 1
//! salvage = 1
//! theta = 0.3
//!
//! [periods]
//! # c  h  p  K  demand
//! 1  1  9  1  uniform 0.125
//! 1  1  4  1  uniform 0.3333333333333333
//! 1  1  3  1  uniform 1
//! ```
//!
//! Demand kinds: `tnormal MU SIGMA`, `uniform UPPER`, `gamma SHAPE RATE`,
//! `empirical x:F x:F ...` (piecewise-linear CDF), `discrete v:p v:p ...`.

use std::fmt::Write as _;

use invcert::{DemandModel, InventoryProblem, PeriodParams};
use thiserror::Error;

pub const HEADER: &str = "invcert-config 1";

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Records,
}

impl Format {
    fn as_str(self) -> &'static str {
        match self {
            Format::Table => "table",
            Format::Records => "records",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: InventoryProblem,
    pub theta: Option<f64>,
    pub x0: f64,
    pub seed: u64,
    pub reps: u64,
    pub theta_ref: Option<f64>,
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_REPS: u64 = 100_000;

impl RunConfig {
    pub fn new(problem: InventoryProblem) -> Self {
        Self {
            problem,
            theta: None,
            x0: 0.0,
            seed: DEFAULT_SEED,
            reps: DEFAULT_REPS,
            theta_ref: None,
            format: Format::Table,
        }
    }

    /// Checks the run controls (the problem itself is validated separately).
    pub fn check(&self) -> Result<(), String> {
        if let Some(theta) = self.theta {
            if !(theta.is_finite() && theta > 0.0) {
                return Err(format!("theta = {theta} must be finite and positive"));
            }
            if let Some(r) = self.theta_ref {
                if !(r > 0.0 && r < theta) {
                    return Err(format!("theta_ref = {r} must lie in (0, theta = {theta})"));
                }
            }
        }
        if self.reps == 0 {
            return Err("reps must be at least 1".into());
        }
        if !self.x0.is_finite() {
            return Err(format!("x0 = {} is not finite", self.x0));
        }
        Ok(())
    }
}

fn parse_f64(line: usize, field: &str, s: &str) -> Result<f64, ConfigError> {
    s.parse::<f64>()
        .map_err(|_| err(line, format!("{field}: cannot parse '{s}' as a number")))
}

fn parse_pairs(line: usize, field: &str, items: &[&str]) -> Result<Vec<(f64, f64)>, ConfigError> {
    if items.is_empty() {
        return Err(err(
            line,
            format!("{field}: expected at least one value:probability pair"),
        ));
    }
    items
        .iter()
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| err(line, format!("{field}: expected 'a:b', found '{item}'")))?;
            Ok((parse_f64(line, field, a)?, parse_f64(line, field, b)?))
        })
        .collect()
}

fn parse_demand(line: usize, words: &[&str]) -> Result<DemandModel, ConfigError> {
    let (kind, args) = words
        .split_first()
        .ok_or_else(|| err(line, "missing demand specification"))?;
    let want = |n: usize| -> Result<(), ConfigError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(err(
                line,
                format!(
                    "demand '{kind}' takes {n} parameter(s), found {}",
                    args.len()
                ),
            ))
        }
    };
    let model = match *kind {
        "tnormal" => {
            want(2)?;
            DemandModel::truncated_normal(
                parse_f64(line, "mu", args[0])?,
                parse_f64(line, "sigma", args[1])?,
            )
        }
        "uniform" => {
            want(1)?;
            DemandModel::uniform(parse_f64(line, "upper", args[0])?)
        }
        "gamma" => {
            want(2)?;
            DemandModel::gamma(
                parse_f64(line, "shape", args[0])?,
                parse_f64(line, "rate", args[1])?,
            )
        }
        "empirical" => DemandModel::empirical(parse_pairs(line, "empirical", args)?),
        "discrete" => DemandModel::discrete(parse_pairs(line, "discrete", args)?),
        other => return Err(err(line, format!("unknown demand kind '{other}'"))),
    };
    model.map_err(|e| err(line, e.to_string()))
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.by_ref().find(|(_, l)| !is_blank(l));
    match header {
        Some((_, l)) if l.trim() == HEADER => {}
        Some((n, l)) => {
            return Err(err(
                n,
                format!("expected header '{HEADER}', found '{}'", l.trim()),
            ))
        }
        None => return Err(err(1, "empty configuration")),
    }

    let mut horizon: Option<(usize, usize)> = None;
    let mut alpha = None;
    let mut salvage = None;
    let mut cfg = RunConfig::new(InventoryProblem::new(1.0, vec![], 0.0));
    let mut in_periods = false;
    let mut periods = Vec::new();

    for (n, raw) in lines {
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        if l == "[periods]" {
            in_periods = true;
            continue;
        }
        if in_periods {
            let words: Vec<&str> = l.split_whitespace().collect();
            if words.len() < 5 {
                return Err(err(n, "period row needs: c h p K demand-kind [params]"));
            }
            periods.push(PeriodParams {
                unit_cost: parse_f64(n, "c", words[0])?,
                holding: parse_f64(n, "h", words[1])?,
                penalty: parse_f64(n, "p", words[2])?,
                setup: parse_f64(n, "K", words[3])?,
                demand: parse_demand(n, &words[4..])?,
            });
            continue;
        }
        let (key, value) = l
            .split_once('=')
            .ok_or_else(|| err(n, format!("expected 'key = value', found '{l}'")))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "horizon" | "T" => {
                let h = value
                    .parse::<usize>()
                    .map_err(|_| err(n, format!("{key}: '{value}' is not a count")))?;
                horizon = Some((h, n));
            }
            "alpha" => alpha = Some(parse_f64(n, key, value)?),
            "salvage" => salvage = Some(parse_f64(n, key, value)?),
            "theta" => cfg.theta = Some(parse_f64(n, key, value)?),
            "theta_ref" => cfg.theta_ref = Some(parse_f64(n, key, value)?),
            "x0" => cfg.x0 = parse_f64(n, key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| err(n, format!("seed: '{value}' is not an integer")))?
            }
            "reps" => {
                cfg.reps = value
                    .parse()
                    .map_err(|_| err(n, format!("reps: '{value}' is not an integer")))?
            }
            "format" => {
                cfg.format = match value {
                    "table" => Format::Table,
                    "records" => Format::Records,
                    _ => {
                        return Err(err(
                            n,
                            format!("format: expected 'table' or 'records', found '{value}'"),
                        ))
                    }
                }
            }
            _ => return Err(err(n, format!("unknown key '{key}'"))),
        }
    }

    let last_line = text.lines().count().max(1);
    cfg.problem.alpha = alpha.ok_or_else(|| err(last_line, "missing 'alpha'"))?;
    cfg.problem.salvage = salvage.ok_or_else(|| err(last_line, "missing 'salvage'"))?;
    if periods.is_empty() {
        return Err(err(last_line, "no [periods] rows"));
    }
    if let Some((h, line)) = horizon {
        if h != periods.len() {
            return Err(err(
                line,
                format!("horizon = {h} but {} period rows were given", periods.len()),
            ));
        }
    }
    cfg.problem.periods = periods;
    Ok(cfg)
}

fn is_blank(l: &str) -> bool {
    let t = l.trim();
    t.is_empty() || t.starts_with('#')
}

fn demand_spec(d: &DemandModel) -> String {
    let pairs = |v: &[(f64, f64)]| {
        v.iter()
            .map(|(a, b)| format!("{a}:{b}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    match d {
        DemandModel::TruncatedNormal { mu, sigma } => format!("tnormal {mu} {sigma}"),
        DemandModel::Uniform { upper } => format!("uniform {upper}"),
        DemandModel::Gamma { shape, rate } => format!("gamma {shape} {rate}"),
        DemandModel::Empirical { knots } => format!("empirical {}", pairs(knots)),
        DemandModel::Discrete { atoms } => format!("discrete {}", pairs(atoms)),
    }
}

/// Serializes a configuration; [`parse`] reads it back unchanged.
pub fn write(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let p = &cfg.problem;
    writeln!(out, "{HEADER}").unwrap();
    writeln!(out, "horizon = {}", p.horizon()).unwrap();
    writeln!(out, "alpha = {}", p.alpha).unwrap();
    writeln!(out, "salvage = {}", p.salvage).unwrap();
    if let Some(theta) = cfg.theta {
        writeln!(out, "theta = {theta}").unwrap();
    }
    if let Some(r) = cfg.theta_ref {
        writeln!(out, "theta_ref = {r}").unwrap();
    }
    writeln!(out, "x0 = {}", cfg.x0).unwrap();
    writeln!(out, "seed = {}", cfg.seed).unwrap();
    writeln!(out, "reps = {}", cfg.reps).unwrap();
    writeln!(out, "format = {}", cfg.format.as_str()).unwrap();
    writeln!(out, "\n[periods]\n# c h p K demand").unwrap();
    for q in &p.periods {
        writeln!(
            out,
            "{} {} {} {} {}",
            q.unit_cost,
            q.holding,
            q.penalty,
            q.setup,
            demand_spec(&q.demand)
        )
        .unwrap();
    }
    out
}

/// Configurations shipped with the binary.
pub const BUNDLED: [(&str, &str); 4] = [
    ("three-period", include_str!("../configs/three_period.cfg")),
    (
        "truncated-normal",
        include_str!("../configs/truncated_normal.cfg"),
    ),
    ("uniform", include_str!("../configs/uniform.cfg")),
    ("gamma", include_str!("../configs/gamma.cfg")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use invcert::catalog;
    use proptest::prelude::*;

    #[test]
    fn bundled_configs_match_catalog() {
        let cases: [(&str, InventoryProblem); 4] = [
            ("three-period", catalog::three_period_uniform()),
            ("truncated-normal", catalog::truncated_normal(30)),
            ("uniform", catalog::uniform(30)),
            ("gamma", catalog::gamma(30)),
        ];
        for (name, want) in cases {
            let cfg = parse(bundled(name).unwrap()).unwrap();
            assert_eq!(cfg.problem, want, "{name}");
        }
    }

    #[test]
    fn reports_line_numbers() {
        let text = format!("{HEADER}\nalpha = 1\nsalvage = 1\n[periods]\n1 1 3 0 poisson 2\n");
        assert_eq!(parse(&text).unwrap_err().line, 5);
        let text = format!("{HEADER}\nalpha = one\n");
        let e = parse(&text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.to_string().contains("alpha"));
        assert_eq!(parse("invcert-config 9\n").unwrap_err().line, 1);
        let text = format!(
            "{HEADER}\nhorizon = 2\nalpha = 1\nsalvage = 1\n[periods]\n1 1 3 0 uniform 2\n"
        );
        assert_eq!(parse(&text).unwrap_err().line, 2);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("\n# leading comment\n{HEADER}\nalpha = 0.9 # trailing\nsalvage = 0\n\n[periods]\n2 1 5 3 discrete 0:0.5 2:0.5\n");
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.problem.alpha, 0.9);
        assert_eq!(cfg.problem.horizon(), 1);
    }

    fn demand_strategy() -> impl Strategy<Value = DemandModel> {
        prop_oneof![
            (0.1f64..200.0, 0.01f64..80.0)
                .prop_map(|(m, s)| DemandModel::truncated_normal(m, s).unwrap()),
            (1e-3f64..500.0).prop_map(|b| DemandModel::uniform(b).unwrap()),
            (0.2f64..50.0, 0.01f64..5.0).prop_map(|(a, r)| DemandModel::gamma(a, r).unwrap()),
            prop::collection::vec((0.0f64..10.0, 0.01f64..1.0), 1..5).prop_map(|v| {
                let total: f64 = v.iter().map(|a| a.1).sum();
                DemandModel::discrete(v.into_iter().map(|(x, p)| (x, p / total)).collect()).unwrap()
            }),
            (0.0f64..0.5, 0.1f64..20.0, 0.1f64..20.0).prop_map(|(f0, a, b)| {
                DemandModel::empirical(vec![(0.0, f0), (a, 0.5 + f0 / 2.0), (a + b, 1.0)]).unwrap()
            }),
        ]
    }

    prop_compose! {
        fn config_strategy()(
            alpha in 0.5f64..=1.0,
            salvage in -5.0f64..10.0,
            rows in prop::collection::vec((0.0f64..20.0, 0.0f64..5.0, 0.0f64..50.0, 0.0f64..100.0, demand_strategy()), 1..6),
            theta in prop::option::of(1e-4f64..5.0),
            theta_ref in prop::option::of(1e-5f64..1e-4),
            x0 in -100.0f64..100.0,
            seed in any::<u64>(),
            reps in 1u64..10_000_000,
            records in any::<bool>(),
        ) -> RunConfig {
            let periods = rows
                .into_iter()
                .map(|(c, h, p, k, demand)| PeriodParams { unit_cost: c, holding: h, penalty: p, setup: k, demand })
                .collect();
            RunConfig {
                problem: InventoryProblem::new(alpha, periods, salvage),
                theta,
                x0,
                seed,
                reps,
                theta_ref,
                format: if records { Format::Records } else { Format::Table },
            }
        }
    }

    proptest! {
        #[test]
        fn round_trip(cfg in config_strategy()) {
            let text = write(&cfg);
            prop_assert_eq!(parse(&text).unwrap(), cfg);
        }
    }
}
