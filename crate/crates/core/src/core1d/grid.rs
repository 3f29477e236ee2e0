use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ascending sample points on a bounded interval `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    points: Vec<f64>,
    a: f64,
    b: f64,
}

impl Grid1D {
    pub fn new(points: Vec<f64>, a: f64, b: f64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(format!(
                "grid needs at least 2 points, got {}",
                points.len()
            )));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Validation(format!("invalid bounds [{a}, {b}]")));
        }
        for (j, w) in points.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::Validation(format!(
                    "grid points must be strictly increasing (index {} -> {}: {} -> {})",
                    j,
                    j + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        let tol = 1e-12 * (b - a);
        if points[0] < a - tol || points[points.len() - 1] > b + tol {
            return Err(Error::Validation(format!(
                "grid points [{}, {}] fall outside bounds [{a}, {b}]",
                points[0],
                points[points.len() - 1]
            )));
        }
        Ok(Self { points, a, b })
    }

    /// Grid whose bounds are its first and last point.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation("grid needs at least 2 points".into()));
        }
        let (a, b) = (points[0], points[points.len() - 1]);
        Self::new(points, a, b)
    }

    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("grid needs at least 2 points, got {n}")));
        }
        if !(a < b) {
            return Err(Error::Parameter(format!("invalid bounds [{a}, {b}]")));
        }
        let h = (b - a) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|j| a + j as f64 * h).collect();
        points[n - 1] = b;
        Self::new(points, a, b)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn spacing(&self, j: usize) -> f64 {
        self.points[j + 1] - self.points[j]
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_spacing(&self) -> f64 {
        (self.last() - self.first()) / (self.len() - 1) as f64
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.mean_spacing();
        self.points
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h)
    }

    /// Trapezoid quadrature weights: `sum_j q_j g(x_j)` approximates the
    /// integral of `g` over `[x_1, x_N]`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let n = self.len();
        let mut q = vec![0.0; n];
        for j in 0..n - 1 {
            let h = self.spacing(j) * 0.5;
            q[j] += h;
            q[j + 1] += h;
        }
        q
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.points
            .windows(2)
            .zip(values.windows(2))
            .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
            .sum()
    }

    /// Index `j` of the cell `[x_j, x_{j+1}]` containing `x`, clamped to
    /// the first or last cell outside the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.len();
        let k = self.points.partition_point(|&p| p <= x);
        k.saturating_sub(1).min(n - 2)
    }

    /// Piecewise-linear interpolation of grid values at `x` (zero outside
    /// `[x_1, x_N]`).
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        if x < self.first() || x > self.last() {
            return 0.0;
        }
        let j = self.cell_of(x);
        let s = (x - self.points[j]) / self.spacing(j);
        values[j] + s * (values[j + 1] - values[j])
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        self == other
    }
}
