//! Integer-indexed uniform lattice `{ m·θ : m ∈ ℤ }`.
//!
//! Everything period-level is addressed by [`GridIndex`]; coordinates are
//! produced from the index on demand and never accumulated.

use crate::error::{Error, Result};

pub type GridIndex = i64;

/// Relative tolerance (in units of θ) for classifying a real as on-grid.
pub const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    theta: f64,
}

impl Grid {
    pub fn new(theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidStep(theta));
        }
        Ok(Self { theta })
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn coord(&self, m: GridIndex) -> f64 {
        m as f64 * self.theta
    }

    /// Largest `m` with `m·θ ≤ x`, treating points within `SNAP·θ` above a
    /// grid point as lying on it.
    #[inline]
    pub fn floor_index(&self, x: f64) -> GridIndex {
        (x / self.theta + SNAP).floor() as GridIndex
    }

    /// Smallest `m` with `m·θ ≥ x`, with the same snap tolerance.
    #[inline]
    pub fn ceil_index(&self, x: f64) -> GridIndex {
        (x / self.theta - SNAP).ceil() as GridIndex
    }

    pub fn is_on_grid(&self, x: f64) -> bool {
        self.floor_index(x) == self.ceil_index(x)
    }

    /// Snaps `x` to the grid when it is within tolerance of a grid point.
    pub fn snap(&self, x: f64) -> f64 {
        if self.is_on_grid(x) {
            self.coord(self.floor_index(x))
        } else {
            x
        }
    }
}
