use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular `rows x cols` lattice over `[x0, x1] x [y0, y1]`. Point
/// `p = r * cols + c` sits at `(x0 + c hx, y0 + r hy)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub rows: usize,
    pub cols: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Grid2D {
    pub fn new(rows: usize, cols: usize, x: (f64, f64), y: (f64, f64)) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::Validation(format!("2D grid needs at least 2x2 points, got {rows}x{cols}")));
        }
        let ok = |a: f64, b: f64| a.is_finite() && b.is_finite() && a < b;
        if !ok(x.0, x.1) || !ok(y.0, y.1) {
            return Err(Error::Validation("2D grid bounds must be finite and increasing".into()));
        }
        Ok(Self { rows, cols, x0: x.0, x1: x.1, y0: y.0, y1: y.1 })
    }

    /// Unit-spaced pixel lattice `[0, cols - 1] x [0, rows - 1]`.
    pub fn pixels(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, (0.0, cols.saturating_sub(1) as f64), (0.0, rows.saturating_sub(1) as f64))
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.cols - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y1 - self.y0) / (self.rows - 1) as f64
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn point(&self, p: usize) -> [f64; 2] {
        let (r, c) = (p / self.cols, p % self.cols);
        [self.x0 + c as f64 * self.hx(), self.y0 + r as f64 * self.hy()]
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|p| self.point(p)).collect()
    }
}

pub fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Discrete probability measure with one weight per lattice point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure2D {
    grid: Grid2D,
    weights: Vec<f64>,
}

impl Measure2D {
    pub fn new(grid: Grid2D, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::Validation(format!("{} weights for a grid of {} points", weights.len(), grid.len())));
        }
        if let Some(p) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(format!("weight {p} is negative or not finite")));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!("weights sum to {s}, expected 1")));
        }
        Ok(Self { grid, weights })
    }

    /// Normalizes nonnegative values; returns the measure and the raw total.
    pub fn normalized(grid: Grid2D, values: Vec<f64>) -> Result<(Self, f64)> {
        if let Some(p) = values.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(format!("value {p} is negative or not finite")));
        }
        let s: f64 = values.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Validation("measure has zero total mass".into()));
        }
        Self::new(grid, values.iter().map(|v| v / s).collect()).map(|m| (m, s))
    }

    /// Weights `f(x, y)` on the grid, normalized.
    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|p| f(p[0], p[1]).max(0.0)).collect();
        Self::normalized(grid, values).map(|m| m.0)
    }

    pub fn dirac(grid: Grid2D, p: usize) -> Result<Self> {
        let mut w = vec![0.0; grid.len()];
        *w.get_mut(p).ok_or_else(|| Error::Validation(format!("point {p} outside the grid")))? = 1.0;
        Self::new(grid, w)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Indices of the points with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len()).filter(|&p| self.weights[p] > 0.0).collect()
    }

    pub fn mean(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for (p, w) in self.weights.iter().enumerate() {
            let x = self.grid.point(p);
            m[0] += w * x[0];
            m[1] += w * x[1];
        }
        m
    }

    pub fn total_variation(&self, other: &Measure2D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Validation("measures live on different grids".into()));
        }
        Ok(0.5 * self.weights.iter().zip(&other.weights).map(|(a, b)| (a - b).abs()).sum::<f64>())
    }

    /// Zeroes weights below `rel * max` and renormalizes.
    pub fn trimmed(&self, rel: f64) -> Result<Self> {
        let m = self.weights.iter().fold(0.0f64, |a, b| a.max(*b));
        let w = self.weights.iter().map(|&x| if x < rel * m { 0.0 } else { x }).collect();
        Self::normalized(self.grid.clone(), w).map(|r| r.0)
    }
}

/// Finitely many weighted points in the plane, e.g. a pushforward of a
/// lattice measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atoms {
    pub positions: Vec<[f64; 2]>,
    pub masses: Vec<f64>,
}

impl Atoms {
    pub fn of(m: &Measure2D) -> Self {
        let support = m.support();
        Self {
            positions: support.iter().map(|&p| m.grid().point(p)).collect(),
            masses: support.iter().map(|&p| m.weights()[p]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}
