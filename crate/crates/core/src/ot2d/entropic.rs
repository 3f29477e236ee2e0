use rayon::prelude::*;
use serde::Serialize;

use super::measure::{Grid2D, Measure2D};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct EntropicBarycenter {
    pub measure: Measure2D,
    pub iterations: usize,
    /// Largest L1 gap between a plan's second marginal and the barycenter.
    pub residual: f64,
    pub converged: bool,
}

fn lse(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `out[p] = log sum_q exp(-|x_p - x_q|^2 / eps + g[q])`, separably over
/// columns then rows.
fn log_kernel_apply(grid: &Grid2D, eps: f64, g: &[f64], out: &mut [f64]) {
    let (rows, cols) = (grid.rows, grid.cols);
    let (hx, hy) = (grid.hx(), grid.hy());
    let mut tmp = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            tmp[r * cols + c] = lse((0..cols).map(|c2| {
                let d = (c as f64 - c2 as f64) * hx;
                g[r * cols + c2] - d * d / eps
            }));
        }
    }
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = lse((0..rows).map(|r2| {
                let d = (r as f64 - r2 as f64) * hy;
                tmp[r2 * cols + c] - d * d / eps
            }));
        }
    }
}

/// Entropic Wasserstein barycenter with uniform weights by iterative
/// Bregman projections, run on log-scalings.
pub fn barycenter2d_entropic(data: &[Measure2D], eps: f64, iters: usize, tol: f64) -> Result<EntropicBarycenter> {
    if data.is_empty() {
        return Err(Error::Validation("empty dataset".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {eps}")));
    }
    if iters == 0 {
        return Err(Error::Parameter("at least one iteration required".into()));
    }
    let grid = data[0].grid().clone();
    if data.iter().any(|m| *m.grid() != grid) {
        return Err(Error::Validation("measures live on different grids".into()));
    }
    let p = grid.len();
    let n = data.len();
    let lam = 1.0 / n as f64;
    let loga: Vec<Vec<f64>> = data.iter().map(|m| m.weights().iter().map(|w| w.ln()).collect()).collect();
    let mut lv = vec![vec![0.0; p]; n];
    let mut lktu = vec![vec![0.0; p]; n];
    let mut logb = vec![0.0; p];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < iters {
        iterations += 1;
        lktu.par_iter_mut().zip(lv.par_iter()).zip(loga.par_iter()).for_each(|((kt, v), la)| {
            let mut kv = vec![0.0; p];
            log_kernel_apply(&grid, eps, v, &mut kv);
            let lu: Vec<f64> = la.iter().zip(&kv).map(|(a, k)| if *a == f64::NEG_INFINITY { *a } else { a - k }).collect();
            log_kernel_apply(&grid, eps, &lu, kt);
        });
        for q in 0..p {
            logb[q] = lktu.iter().map(|k| lam * k[q]).sum();
        }
        let shift = lse(logb.iter().copied());
        if !shift.is_finite() || logb.iter().any(|x| x.is_nan()) {
            return Err(Error::Underflow { epsilon: eps });
        }
        let bsum = shift.exp();
        residual = lv
            .iter()
            .zip(&lktu)
            .map(|(v, k)| v.iter().zip(k).zip(&logb).map(|((a, b), c)| ((a + b).exp() - c.exp()).abs()).sum::<f64>() / bsum)
            .fold(0.0, f64::max);
        for (v, k) in lv.iter_mut().zip(&lktu) {
            for q in 0..p {
                v[q] = logb[q] - k[q];
            }
        }
        if residual <= tol {
            break;
        }
    }
    let shift = lse(logb.iter().copied());
    let weights: Vec<f64> = logb.iter().map(|x| (x - shift).exp()).collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Underflow { epsilon: eps });
    }
    let (measure, _) = Measure2D::normalized(grid, weights)?;
    Ok(EntropicBarycenter {
        measure,
        iterations,
        residual,
        converged: residual <= tol,
    })
}
