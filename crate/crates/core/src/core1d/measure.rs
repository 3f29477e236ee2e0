use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use crate::error::{Error, Result};

/// Tolerance on the trapezoidal mass of a valid measure.
pub const MASS_TOL: f64 = 1e-9;

/// Anything with a generalized (left-continuous) quantile function.
pub trait QuantileFn {
    /// `inf { x : F(x) >= alpha }` for `alpha` in `(0, 1]`; the left end of
    /// the support for `alpha = 0`.
    fn quantile_at(&self, alpha: f64) -> f64;

    /// Quantiles on the uniform grid `alpha_k = k / (q - 1)`.
    fn quantile_samples(&self, q: usize) -> Vec<f64> {
        (0..q)
            .map(|k| self.quantile_at(k as f64 / (q - 1) as f64))
            .collect()
    }
}

/// Probability density sampled on a grid, linear between grid points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct DiscreteMeasure1D {
    grid: Grid1D,
    density: Vec<f64>,
    cdf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMeasure {
    grid: Grid1D,
    density: Vec<f64>,
}

impl TryFrom<RawMeasure> for DiscreteMeasure1D {
    type Error = Error;
    fn try_from(r: RawMeasure) -> Result<Self> {
        Self::new(r.grid, r.density)
    }
}

impl From<DiscreteMeasure1D> for RawMeasure {
    fn from(m: DiscreteMeasure1D) -> Self {
        RawMeasure {
            grid: m.grid,
            density: m.density,
        }
    }
}

/// Generalized inverse of the piecewise-quadratic cdf on `[x0, x0 + h]`
/// with density going linearly from `f0` to `f1`: returns `s` with
/// `f0 s + (f1 - f0) s^2 / (2h) = r`.
pub(crate) fn solve_linear_density(f0: f64, f1: f64, h: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let slope = (f1 - f0) / h;
    let disc = (f0 * f0 + 2.0 * slope * r).max(0.0);
    let den = f0 + disc.sqrt();
    if den <= 0.0 {
        return h;
    }
    (2.0 * r / den).clamp(0.0, h)
}

impl DiscreteMeasure1D {
    /// Builds a measure, rejecting negative or non-normalized densities.
    pub fn new(grid: Grid1D, density: Vec<f64>) -> Result<Self> {
        Self::check_values(&grid, &density)?;
        let mass = grid.integrate(&density);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!(
                "measure is not normalized: trapezoidal mass {mass}"
            )));
        }
        Ok(Self::build(grid, density))
    }

    /// Rescales nonnegative values to unit mass. Returns the measure and the
    /// original mass.
    pub fn normalized(grid: Grid1D, values: Vec<f64>) -> Result<(Self, f64)> {
        Self::check_values(&grid, &values)?;
        let mass = grid.integrate(&values);
        if !(mass > 0.0) {
            return Err(Error::Validation("measure has zero mass".into()));
        }
        let density = values.into_iter().map(|v| v / mass).collect();
        Ok((Self::build(grid, density), mass))
    }

    /// Density proportional to `f(x_j)`.
    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().iter().map(|&x| f(x).max(0.0)).collect();
        Ok(Self::normalized(grid, values)?.0)
    }

    fn check_values(grid: &Grid1D, values: &[f64]) -> Result<()> {
        if values.len() != grid.len() {
            return Err(Error::Validation(format!(
                "density has {} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "density value at index {j} is negative or not finite ({})",
                values[j]
            )));
        }
        Ok(())
    }

    fn build(grid: Grid1D, density: Vec<f64>) -> Self {
        let n = grid.len();
        let mut cdf = vec![0.0; n];
        for j in 1..n {
            cdf[j] = cdf[j - 1] + 0.5 * grid.spacing(j - 1) * (density[j - 1] + density[j]);
        }
        let total = cdf[n - 1];
        for c in cdf.iter_mut() {
            *c = (*c / total).min(1.0);
        }
        cdf[n - 1] = 1.0;
        Self { grid, density, cdf }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// Cumulative mass at each grid point.
    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    /// Mass of each trapezoid cell `[x_j, x_{j+1}]`.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.cdf.windows(2).map(|c| c[1] - c[0]).collect()
    }

    /// Per-point masses `f_j q_j` with trapezoid weights `q_j`.
    pub fn point_masses(&self) -> Vec<f64> {
        self.grid
            .trapezoid_weights()
            .iter()
            .zip(&self.density)
            .map(|(q, f)| q * f)
            .collect()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g.first() {
            return 0.0;
        }
        if x >= g.last() {
            return 1.0;
        }
        let j = g.cell_of(x);
        let h = g.spacing(j);
        let s = x - g.points()[j];
        let (f0, f1) = (self.density[j], self.density[j + 1]);
        let scale = self.cdf[j + 1] - self.cdf[j];
        let raw_cell = 0.5 * h * (f0 + f1);
        if raw_cell <= 0.0 {
            return self.cdf[j];
        }
        let part = f0 * s + (f1 - f0) * s * s / (2.0 * h);
        (self.cdf[j] + scale * part / raw_cell).min(1.0)
    }

    /// Left end of the support.
    pub fn support_min(&self) -> f64 {
        let f = &self.density;
        let x = self.grid.points();
        match f.iter().position(|&v| v > 0.0) {
            Some(0) | None => x[0],
            Some(j) => x[j - 1],
        }
    }

    /// Right end of the support.
    pub fn support_max(&self) -> f64 {
        let f = &self.density;
        let x = self.grid.points();
        let n = f.len();
        match f.iter().rposition(|&v| v > 0.0) {
            Some(j) if j == n - 1 => x[n - 1],
            None => x[n - 1],
            Some(j) => x[j + 1],
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(|x| x)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.moment(|x| (x - m) * (x - m))
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    fn moment(&self, g: impl Fn(f64) -> f64) -> f64 {
        let v: Vec<f64> = self
            .grid
            .points()
            .iter()
            .zip(&self.density)
            .map(|(&x, &f)| g(x) * f)
            .collect();
        self.grid.integrate(&v) / self.grid.integrate(&self.density)
    }

    /// Cdf on the grid together with quantiles on `q` uniform levels.
    pub fn quantile(&self, q: usize) -> Result<CdfQuantilePair> {
        if q < 2 {
            return Err(Error::Parameter(format!("need Q >= 2 quantile levels, got {q}")));
        }
        let mass = self.grid.integrate(&self.density);
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::Validation(format!(
                "measure is not normalized: trapezoidal mass {mass}"
            )));
        }
        Ok(CdfQuantilePair {
            cdf: self.cdf.clone(),
            quantile: self.quantile_samples(q),
        })
    }

    /// Total-variation distance `0.5 * int |f - g|` to another density on
    /// the same grid.
    pub fn total_variation(&self, other: &DiscreteMeasure1D) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Validation("total variation needs a shared grid".into()));
        }
        let d: Vec<f64> = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(0.5 * self.grid.integrate(&d))
    }
}

impl QuantileFn for DiscreteMeasure1D {
    fn quantile_at(&self, alpha: f64) -> f64 {
        if !(alpha > 0.0) {
            return self.support_min();
        }
        let alpha = alpha.min(1.0);
        let x = self.grid.points();
        let k = self.cdf.partition_point(|&c| c < alpha);
        if k == 0 {
            return x[0];
        }
        let k = k.min(x.len() - 1);
        let j = k - 1;
        let h = self.grid.spacing(j);
        let (f0, f1) = (self.density[j], self.density[j + 1]);
        let raw_cell = 0.5 * h * (f0 + f1);
        let cell = self.cdf[k] - self.cdf[j];
        if raw_cell <= 0.0 || cell <= 0.0 {
            return x[k];
        }
        let r = (alpha - self.cdf[j]) * raw_cell / cell;
        x[j] + solve_linear_density(f0, f1, h, r)
    }

    fn quantile_samples(&self, q: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(q);
        out.push(self.support_min());
        let x = self.grid.points();
        let n = x.len();
        let mut k = 1usize;
        for i in 1..q {
            let alpha = (i as f64 / (q - 1) as f64).min(1.0);
            while k < n - 1 && self.cdf[k] < alpha {
                k += 1;
            }
            let j = k - 1;
            let h = self.grid.spacing(j);
            let (f0, f1) = (self.density[j], self.density[j + 1]);
            let raw_cell = 0.5 * h * (f0 + f1);
            let cell = self.cdf[k] - self.cdf[j];
            let v = if self.cdf[j] >= alpha {
                x[j]
            } else if raw_cell <= 0.0 || cell <= 0.0 {
                x[k]
            } else {
                let r = (alpha - self.cdf[j]) * raw_cell / cell;
                x[j] + solve_linear_density(f0, f1, h, r)
            };
            out.push(v);
        }
        out
    }
}

/// Cdf at the grid points and quantiles on a uniform level grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfQuantilePair {
    pub cdf: Vec<f64>,
    pub quantile: Vec<f64>,
}

impl CdfQuantilePair {
    pub fn levels(&self) -> Vec<f64> {
        let q = self.quantile.len();
        (0..q).map(|k| k as f64 / (q - 1) as f64).collect()
    }
}
