use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::fit::GeodesicComponent;
use crate::core1d::{exp_measure, wasserstein_sq_between, LoggedDataset, TangentSpace};
use crate::error::{Error, Result};
use crate::qp::solve_qp;

/// Coefficients `beta` of the projection of `w` onto
/// `{sum_l beta_l v_l : beta_l in t0_l + [-1, 1], sum_l beta_l v_l in V}`.
pub fn project_onto_components(space: &TangentSpace, components: &[&GeodesicComponent], w: &[f64]) -> Result<Vec<f64>> {
    let k = components.len();
    let n = space.len();
    let x = space.grid().points();
    let (a, b) = (space.grid().a(), space.grid().b());
    let vs: Vec<&[f64]> = components.iter().map(|c| c.direction.as_slice()).collect();
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut g = DVector::<f64>::zeros(k);
    for l in 0..k {
        g[l] = -space.dot(vs[l], w);
        for m in 0..k {
            h[(l, m)] = space.dot(vs[l], vs[m]);
        }
    }
    let scale = (0..k).map(|l| h[(l, l)]).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Ok(vec![0.0; k]);
    }
    for l in 0..k {
        h[(l, l)] += 1e-13 * scale;
    }
    let rows = 2 * n + (n - 1) + 2 * k;
    let mut am = DMatrix::<f64>::zeros(rows, k);
    let mut bm = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for j in 0..n {
        for l in 0..k {
            am[(r, l)] = vs[l][j];
            am[(r + 1, l)] = -vs[l][j];
        }
        bm[r] = b - x[j];
        bm[r + 1] = x[j] - a;
        r += 2;
    }
    for j in 0..n - 1 {
        for l in 0..k {
            am[(r, l)] = vs[l][j] - vs[l][j + 1];
        }
        bm[r] = x[j + 1] - x[j];
        r += 1;
    }
    for (l, c) in components.iter().enumerate() {
        am[(r, l)] = 1.0;
        bm[r] = c.t0 + 1.0;
        am[(r + 1, l)] = -1.0;
        bm[r + 1] = 1.0 - c.t0;
        r += 2;
    }
    // endpoints rounding may leave beta = 0 marginally infeasible
    for i in 0..rows {
        bm[i] = bm[i].max(0.0);
    }
    let beta = solve_qp(&h, &g, &am, &bm, DVector::zeros(k))?;
    Ok(beta.iter().copied().collect())
}

/// `(1/n) sum_i d_W^2(nu_i, exp(Pi w_i))` with `Pi` the projection onto
/// the span of the components intersected with `V` (and each coefficient
/// kept in its geodesic range).
pub fn gpca_reconstruction_error(components: &[&GeodesicComponent], data: &LoggedDataset, q: usize) -> Result<f64> {
    let per = gpca_reconstruction_errors(components, data, q)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

pub fn gpca_reconstruction_errors(components: &[&GeodesicComponent], data: &LoggedDataset, q: usize) -> Result<Vec<f64>> {
    let dim = data.dim();
    if components.iter().any(|c| c.direction.len() != dim) {
        return Err(Error::Validation("component dimension does not match the dataset".into()));
    }
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let mut v = vec![0.0; dim];
            if !components.is_empty() {
                let beta = project_onto_components(&data.space, components, &data.logs[i])?;
                for (c, bl) in components.iter().zip(&beta) {
                    for (x, d) in v.iter_mut().zip(&c.direction) {
                        *x += bl * d;
                    }
                }
            }
            if v.iter().all(|x| *x == 0.0) {
                return wasserstein_sq_between(&data.barycenter, &data.data[i], q);
            }
            let rec = exp_measure(&data.barycenter, &v)?;
            wasserstein_sq_between(&rec, &data.data[i], q)
        })
        .collect()
}
