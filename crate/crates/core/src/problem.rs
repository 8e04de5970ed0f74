//! Problem data: per-period costs, demand models, and the transformed
//! single-period cost `C_t(y) = (c_t − α c_{t+1}) y + G_t(y) + α c_{t+1} E[D_t]`.

use std::fmt;

use crate::demand::DemandModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodParams {
    /// Unit ordering cost `c_t`.
    pub unit_cost: f64,
    /// Unit holding cost `h_t`.
    pub holding: f64,
    /// Unit backlog penalty `p_t`.
    pub penalty: f64,
    /// Fixed setup cost `K_t`.
    pub setup: f64,
    pub demand: DemandModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InventoryProblem {
    pub alpha: f64,
    pub periods: Vec<PeriodParams>,
    /// Per-unit terminal credit `c_T`.
    pub salvage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyHorizon,
    Discount(f64),
    NegativeCost {
        period: usize,
        name: &'static str,
        value: f64,
    },
    NonFinite {
        period: usize,
        name: &'static str,
    },
    Demand {
        period: usize,
        message: String,
    },
    /// `K_t < α·K_{t+1}`.
    SetupCostOrder {
        period: usize,
        setup: f64,
        discounted_next: f64,
    },
    /// `C_t` does not grow as `y → +∞`.
    NotCoerciveAbove {
        period: usize,
        slope: f64,
    },
    /// `C_t` does not grow as `y → −∞`.
    NotCoerciveBelow {
        period: usize,
        slope: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyHorizon => write!(f, "horizon must contain at least one period"),
            Violation::Discount(a) => write!(f, "discount factor alpha = {a} must lie in (0, 1]"),
            Violation::NegativeCost { period, name, value } => {
                write!(f, "period {period}: {name} = {value} must be non-negative")
            }
            Violation::NonFinite { period, name } => write!(f, "period {period}: {name} is not finite"),
            Violation::Demand { period, message } => write!(f, "period {period}: {message}"),
            Violation::SetupCostOrder { period, setup, discounted_next } => write!(
                f,
                "setup cost ordering K_t >= alpha*K_(t+1) violated: K_{period} = {setup} < alpha*K_{} = {discounted_next}",
                period + 1
            ),
            Violation::NotCoerciveAbove { period, slope } => write!(
                f,
                "period {period}: C_t is not coercive above ((c_t - alpha*c_(t+1)) + h_t = {slope} must be > 0)"
            ),
            Violation::NotCoerciveBelow { period, slope } => write!(
                f,
                "period {period}: C_t is not coercive below (p_t - (c_t - alpha*c_(t+1)) = {slope} must be > 0)"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

impl InventoryProblem {
    pub fn new(alpha: f64, periods: Vec<PeriodParams>, salvage: f64) -> Self {
        Self {
            alpha,
            periods,
            salvage,
        }
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.periods.len()
    }

    #[inline]
    pub fn period(&self, t: usize) -> &PeriodParams {
        &self.periods[t]
    }

    /// `c_{t+1}`, with `c_T` the salvage value.
    pub fn next_unit_cost(&self, t: usize) -> f64 {
        if t + 1 < self.horizon() {
            self.periods[t + 1].unit_cost
        } else {
            self.salvage
        }
    }

    /// Linear coefficient `c_t − α c_{t+1}` of `C_t`.
    pub fn linear_coef(&self, t: usize) -> f64 {
        self.periods[t].unit_cost - self.alpha * self.next_unit_cost(t)
    }

    /// Transformed one-period cost `C_t(y)`.
    pub fn transformed_cost(&self, t: usize, y: f64) -> f64 {
        let p = &self.periods[t];
        let (e_plus, e_minus) = p.demand.loss_functions(y);
        self.linear_coef(t) * y
            + p.holding * e_plus
            + p.penalty * e_minus
            + self.alpha * self.next_unit_cost(t) * p.demand.mean()
    }

    /// Right derivative of `C_t` at `y`.
    pub fn cost_slope(&self, t: usize, y: f64) -> f64 {
        let p = &self.periods[t];
        let f = p.demand.cdf(y);
        self.linear_coef(t) + p.holding * f - p.penalty * (1.0 - f)
    }

    /// Lipschitz constant `γ_t = sup |C_t'|` for linear holding/penalty costs.
    pub fn lipschitz(&self, t: usize) -> f64 {
        let a = self.linear_coef(t);
        let p = &self.periods[t];
        (a + p.holding).abs().max((a - p.penalty).abs())
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        if self.periods.is_empty() {
            v.push(Violation::EmptyHorizon);
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            v.push(Violation::Discount(self.alpha));
        }
        if !self.salvage.is_finite() {
            v.push(Violation::NonFinite {
                period: self.horizon(),
                name: "salvage",
            });
        }
        for (t, p) in self.periods.iter().enumerate() {
            for (name, value) in [
                ("c", p.unit_cost),
                ("h", p.holding),
                ("p", p.penalty),
                ("K", p.setup),
            ] {
                if !value.is_finite() {
                    v.push(Violation::NonFinite { period: t, name });
                } else if name != "c" && value < 0.0 {
                    v.push(Violation::NegativeCost {
                        period: t,
                        name,
                        value,
                    });
                }
            }
            if let Err(Error::InvalidDemand(message)) = p.demand.check() {
                v.push(Violation::Demand { period: t, message });
            }
            if t + 1 < self.horizon() {
                let discounted_next = self.alpha * self.periods[t + 1].setup;
                if p.setup < discounted_next {
                    v.push(Violation::SetupCostOrder {
                        period: t,
                        setup: p.setup,
                        discounted_next,
                    });
                }
            }
            let a = self.linear_coef(t);
            if !(a + p.holding > 0.0) {
                v.push(Violation::NotCoerciveAbove {
                    period: t,
                    slope: a + p.holding,
                });
            }
            if !(p.penalty - a > 0.0) {
                v.push(Violation::NotCoerciveBelow {
                    period: t,
                    slope: p.penalty - a,
                });
            }
        }
        ValidationReport { violations: v }
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            Err(Error::Validation(report))
        }
    }
}
