//! Uniform 1-D finite-volume grid.

use crate::error::{Error, Result};

/// Uniform cell-centered grid on `[x_min, x_max]` with `n_cells` cells.
///
/// Cell centers are `x_i = x_min + (i + 1/2) dx`, `dx = (x_max - x_min) / n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::Validation("grid bounds must be finite".into()));
        }
        if x_min >= x_max {
            return Err(Error::Validation(format!(
                "grid requires x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells < 4 {
            return Err(Error::Validation(format!(
                "grid requires at least 4 cells, got {n_cells}"
            )));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_cells,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    /// Center of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    /// Left edge of cell `i`; `edge(n_cells)` is the right domain boundary.
    pub fn edge(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min && x <= self.x_max
    }

    /// Grid with the same extent and `n_cells * 2^levels` cells.
    pub fn refined(&self, levels: u32) -> Grid1D {
        Grid1D {
            x_min: self.x_min,
            x_max: self.x_max,
            n_cells: self.n_cells << levels,
        }
    }
}
