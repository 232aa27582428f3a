//! Rectangular query region with a grid resolution.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Axis-aligned rectangle `[x_min, x_max] × [y_min, y_max]` sampled on an
/// `nx × ny` grid. Grid-node functions sample the closed rectangle
/// inclusively; cell functions treat `nx × ny` as cell counts and sample
/// cell centers (midpoint rule).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x_min < x_max) || !(y_min < y_max) {
            return Err(Error::Domain(format!(
                "degenerate region [{x_min},{x_max}]x[{y_min},{y_max}]"
            )));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::Domain(format!("grid resolution {nx}x{ny} below 2x2")));
        }
        Ok(Region {
            x_min,
            x_max,
            y_min,
            y_max,
            nx,
            ny,
        })
    }

    /// Square region `[lo, hi]²` at resolution `n × n`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Region::new(lo, hi, lo, hi, n, n)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// Node spacing along x for the inclusive node grid.
    pub fn dx_node(&self) -> f64 {
        self.width() / (self.nx - 1) as f64
    }

    pub fn dy_node(&self) -> f64 {
        self.height() / (self.ny - 1) as f64
    }

    /// Grid node, endpoints inclusive.
    pub fn node(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.x_min + ix as f64 * self.dx_node(),
            self.y_min + iy as f64 * self.dy_node(),
        )
    }

    /// Cell width when `nx` counts cells.
    pub fn dx_cell(&self) -> f64 {
        self.width() / self.nx as f64
    }

    pub fn dy_cell(&self) -> f64 {
        self.height() / self.ny as f64
    }

    /// Center of cell `(ix, iy)` when `nx × ny` counts cells.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        Complex64::new(
            self.x_min + (ix as f64 + 0.5) * self.dx_cell(),
            self.y_min + (iy as f64 + 0.5) * self.dy_cell(),
        )
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }
}
