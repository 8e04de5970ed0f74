//! Report assembly for the two output formats: aligned text tables, or one
//! JSON object per line with a `record` field naming its kind.

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub struct Report {
    format: Format,
    text: String,
}

impl Report {
    /// Starts a report with the run header (version, step, tolerances).
    pub fn new(command: &str, cfg: &RunConfig, theta: Option<f64>) -> Self {
        let mut r = Self {
            format: cfg.format,
            text: String::new(),
        };
        let version = env!("CARGO_PKG_VERSION");
        let horizon = cfg.problem.horizon();
        match r.format {
            Format::Table => {
                let theta = theta.map_or("-".to_string(), |t| t.to_string());
                r.text.push_str(&format!(
                    "invcert {version} | {command} | T = {horizon} | theta = {theta} | x0 = {} | snap = {:e} | argmin tie = {:e}\n",
                    cfg.x0,
                    invcert::grid::SNAP,
                    invcert::solver::ARGMIN_TIE,
                ));
            }
            Format::Records => r.record(
                "run",
                json!({
                    "command": command,
                    "version": version,
                    "horizon": horizon,
                    "theta": theta,
                    "x0": cfg.x0,
                    "snap": invcert::grid::SNAP,
                    "argmin_tie": invcert::solver::ARGMIN_TIE,
                }),
            ),
        }
        r
    }

    pub fn is_table(&self) -> bool {
        self.format == Format::Table
    }

    /// Appends a text line (table format only).
    pub fn line(&mut self, s: impl AsRef<str>) {
        if self.is_table() {
            self.text.push_str(s.as_ref());
            self.text.push('\n');
        }
    }

    /// Appends a record of the given kind (records format only).
    pub fn record(&mut self, kind: &str, fields: Value) {
        if self.is_table() {
            return;
        }
        let mut obj = Map::new();
        obj.insert("record".into(), Value::String(kind.into()));
        if let Value::Object(m) = fields {
            obj.extend(m);
        }
        self.text.push_str(&Value::Object(obj).to_string());
        self.text.push('\n');
    }

    pub fn finish(self) -> String {
        self.text
    }
}

/// Fixed-width number for text tables.
pub fn num(v: f64) -> String {
    format!("{v:.4}")
}
