use crate::bounds::{certify, Certificate};
use crate::error::Result;
use crate::grid::Grid;
use crate::problem::InventoryProblem;
use crate::solver::solve;

/// Certified enclosure `[estimate − half_width, estimate + half_width]` of the
/// optimal cost, obtained from a solve on a fine grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceValue {
    pub estimate: f64,
    pub half_width: f64,
    pub theta: f64,
    pub certificate: Certificate,
}

impl ReferenceValue {
    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower() <= v && v <= self.upper()
    }
}

pub fn fine_grid_reference(
    prob: &InventoryProblem,
    theta_ref: f64,
    x: f64,
) -> Result<ReferenceValue> {
    let sol = solve(prob, Grid::new(theta_ref)?)?;
    let cert = certify(&sol, x)?;
    Ok(ReferenceValue {
        estimate: 0.5 * (cert.value_lower + cert.value_upper),
        half_width: 0.5 * (cert.value_upper - cert.value_lower),
        theta: theta_ref,
        certificate: cert,
    })
}
