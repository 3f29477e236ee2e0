use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Grid1D;
use super::measure::{DiscreteMeasure1D, QuantileFn};
use super::pushforward::{pushforward, pushforward_density, Pushforward};
use super::wasserstein::barycenter;
use crate::error::{Error, Result};

/// Weighted inner product `<u, v> = sum_j p_j u_j v_j` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentSpace {
    grid: Grid1D,
    weights: Vec<f64>,
}

impl TangentSpace {
    /// Weights are the barycenter's point masses `f(x_j) q_j` (trapezoid
    /// weights `q_j`), so norms approximate `L^2` norms under the measure.
    pub fn from_barycenter(bar: &DiscreteMeasure1D) -> Self {
        Self {
            grid: bar.grid().clone(),
            weights: bar.point_masses(),
        }
    }

    pub fn from_weights(grid: Grid1D, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} weights for a grid of {} points",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        Ok(Self { grid, weights })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().cloned().fold(0.0, f64::max)
    }

    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(p, (a, b))| p * a * b)
            .sum()
    }

    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        self.dot(v, v)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.norm_sq(v).sqrt()
    }

    pub fn dist_sq(&self, u: &[f64], v: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(u.iter().zip(v))
            .map(|(p, (a, b))| p * (a - b) * (a - b))
            .sum()
    }

    pub fn vector(self: &Arc<Self>, values: Vec<f64>) -> Result<TangentVector> {
        TangentVector::new(self.clone(), values)
    }
}

/// Element of the tangent space at a reference measure.
#[derive(Clone, Debug)]
pub struct TangentVector {
    space: Arc<TangentSpace>,
    values: Vec<f64>,
}

impl TangentVector {
    pub fn new(space: Arc<TangentSpace>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.len() {
            return Err(Error::Validation(format!(
                "{} values for a tangent space of dimension {}",
                values.len(),
                space.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("tangent vector has non-finite entries".into()));
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: Arc<TangentSpace>) -> Self {
        let n = space.len();
        Self { space, values: vec![0.0; n] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn space(&self) -> &Arc<TangentSpace> {
        &self.space
    }

    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        if !Arc::ptr_eq(&self.space, &other.space) && *self.space != *other.space {
            return Err(Error::Validation(
                "inner product of vectors from different tangent spaces".into(),
            ));
        }
        Ok(self.space.dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        self.space.norm(&self.values)
    }
}

/// `log(nu)_j = F_nu^-(F_bar(x_j)) - x_j`.
pub fn log_map(bar: &DiscreteMeasure1D, nu: &DiscreteMeasure1D) -> Vec<f64> {
    bar.grid()
        .points()
        .iter()
        .zip(bar.cdf_values())
        .map(|(&x, &c)| nu.quantile_at(c) - x)
        .collect()
}

/// `exp(v) = (id + v) # bar` as a density on an extended output grid.
pub fn exp_map(bar: &DiscreteMeasure1D, v: &[f64]) -> Result<DiscreteMeasure1D> {
    pushforward_density(bar, &displaced(bar.grid(), v))
}

/// `exp(v)` with exact cdf and quantile under the piecewise-linear model.
pub fn exp_measure(bar: &DiscreteMeasure1D, v: &[f64]) -> Result<Pushforward> {
    pushforward(bar, &displaced(bar.grid(), v))
}

pub fn displaced(grid: &Grid1D, v: &[f64]) -> Vec<f64> {
    grid.points().iter().zip(v).map(|(x, d)| x + d).collect()
}

/// True when `id + v` is nondecreasing with values in `[a, b]`, up to `tol`.
pub fn in_feasible_set(grid: &Grid1D, v: &[f64], tol: f64) -> bool {
    feasibility_violation(grid, v) <= tol
}

/// Largest violation of monotonicity or of the range condition of `id + v`.
pub fn feasibility_violation(grid: &Grid1D, v: &[f64]) -> f64 {
    let t = displaced(grid, v);
    let mut worst: f64 = 0.0;
    for w in t.windows(2) {
        worst = worst.max(w[0] - w[1]);
    }
    for &y in &t {
        worst = worst.max(grid.a() - y).max(y - grid.b());
    }
    worst
}

/// Dataset mapped to the tangent space at its barycenter.
#[derive(Clone, Debug)]
pub struct LoggedDataset {
    pub barycenter: DiscreteMeasure1D,
    pub space: Arc<TangentSpace>,
    pub logs: Vec<Vec<f64>>,
    pub data: Vec<DiscreteMeasure1D>,
}

impl LoggedDataset {
    /// Computes the barycenter on `grid` with `q` quantile levels and the
    /// log maps of every datum.
    pub fn new(data: Vec<DiscreteMeasure1D>, grid: &Grid1D, q: usize) -> Result<Self> {
        let bar = barycenter(&data, grid, q)?;
        Self::with_barycenter(data, bar)
    }

    pub fn with_barycenter(data: Vec<DiscreteMeasure1D>, bar: DiscreteMeasure1D) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Parameter("empty dataset".into()));
        }
        let logs = data.par_iter().map(|nu| log_map(&bar, nu)).collect();
        let space = Arc::new(TangentSpace::from_barycenter(&bar));
        Ok(Self {
            barycenter: bar,
            space,
            logs,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.logs.len()
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn grid(&self) -> &Grid1D {
        self.barycenter.grid()
    }

    /// `max_{i,j} |w_i^j|`.
    pub fn max_abs_log(&self) -> f64 {
        self.logs
            .iter()
            .flat_map(|w| w.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Norm of the mean log map.
    pub fn centering_residual(&self) -> f64 {
        let n = self.n() as f64;
        let mut mean = vec![0.0; self.dim()];
        for w in &self.logs {
            for (m, v) in mean.iter_mut().zip(w) {
                *m += v / n;
            }
        }
        self.space.norm(&mean)
    }

    /// Average squared tangent norm of the data.
    pub fn total_variance(&self) -> f64 {
        self.logs.iter().map(|w| self.space.norm_sq(w)).sum::<f64>() / self.n() as f64
    }
}
