//! PCA of log-mapped data in the weighted tangent space.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::core1d::{
    exp_map, exp_measure, feasibility_violation, wasserstein_sq_between, DiscreteMeasure1D,
    LoggedDataset, TangentSpace,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LogPcaModel {
    pub barycenter: DiscreteMeasure1D,
    #[serde(skip)]
    pub space: Arc<TangentSpace>,
    /// Orthonormal directions, largest eigenvalue first.
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// `scores[i][k] = <w_i, u_k>`.
    pub scores: Vec<Vec<f64>>,
    /// Average squared norm of the log maps.
    pub total_variance: f64,
}

/// Log-PCA of a dataset, with the barycenter computed on the first
/// measure's grid.
pub fn fit_log_pca(dataset: &[DiscreteMeasure1D], k: usize, q: usize) -> Result<LogPcaModel> {
    if dataset.is_empty() {
        return Err(Error::Parameter("empty dataset".into()));
    }
    let grid = dataset[0].grid().clone();
    let logged = LoggedDataset::new(dataset.to_vec(), &grid, q)?;
    fit_log_pca_logged(&logged, k)
}

pub fn fit_log_pca_logged(data: &LoggedDataset, k: usize) -> Result<LogPcaModel> {
    let n = data.n();
    let dim = data.dim();
    if n < 2 {
        return Err(Error::Parameter(format!("log-PCA needs at least 2 measures, got {n}")));
    }
    let kmax = (n - 1).min(dim);
    if k == 0 || k > kmax {
        return Err(Error::Parameter(format!(
            "K = {k} components requested, must be in 1..={kmax}"
        )));
    }
    let space = &data.space;
    let logs = &data.logs;
    let nf = n as f64;
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let g = space.dot(&logs[i], &logs[l]) / nf;
            gram[(i, l)] = g;
            gram[(l, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(0.0);
    let tiny = 1e-12 * lmax.max(f64::MIN_POSITIVE);

    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &c in order.iter().take(k) {
        let lambda = eig.eigenvalues[c].max(0.0);
        if lambda <= tiny {
            break;
        }
        let coef = eig.eigenvectors.column(c);
        let scale = 1.0 / (nf * lambda).sqrt();
        let mut u = vec![0.0; dim];
        for i in 0..n {
            let ci = coef[i] * scale;
            for (uj, wj) in u.iter_mut().zip(&logs[i]) {
                *uj += ci * wj;
            }
        }
        orthonormalize_against(space, &directions, &mut u);
        directions.push(u);
        eigenvalues.push(lambda);
    }
    complete_basis(space, data.grid().points(), &mut directions, k);
    eigenvalues.resize(k, 0.0);

    let mut scores: Vec<Vec<f64>> = logs
        .iter()
        .map(|w| directions.iter().map(|u| space.dot(w, u)).collect())
        .collect();
    for (kk, u) in directions.iter_mut().enumerate() {
        let pivot = (0..n)
            .max_by(|&a, &b| scores[a][kk].abs().total_cmp(&scores[b][kk].abs()))
            .unwrap();
        let flip = if scores[pivot][kk].abs() > 0.0 {
            scores[pivot][kk] < 0.0
        } else {
            first_significant(space, u) < 0.0
        };
        if flip {
            u.iter_mut().for_each(|v| *v = -*v);
            scores.iter_mut().for_each(|s| s[kk] = -s[kk]);
        }
    }
    Ok(LogPcaModel {
        barycenter: data.barycenter.clone(),
        space: space.clone(),
        directions,
        eigenvalues,
        scores,
        total_variance: data.total_variance(),
    })
}

/// Leading principal direction (unit norm) of a family of tangent vectors,
/// or `None` when they all vanish.
pub(crate) fn leading_direction(space: &TangentSpace, logs: &[Vec<f64>]) -> Option<Vec<f64>> {
    let n = logs.len();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for l in i..n {
            let g = space.dot(&logs[i], &logs[l]);
            gram[(i, l)] = g;
            gram[(l, i)] = g;
        }
    }
    let eig = SymmetricEigen::new(gram);
    let c = (0..n).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))?;
    if !(eig.eigenvalues[c] > 0.0) {
        return None;
    }
    let mut u = vec![0.0; space.len()];
    for i in 0..n {
        let ci = eig.eigenvectors[(i, c)];
        for (uj, wj) in u.iter_mut().zip(&logs[i]) {
            *uj += ci * wj;
        }
    }
    let nrm = space.norm(&u);
    if !(nrm > 0.0) {
        return None;
    }
    u.iter_mut().for_each(|x| *x /= nrm);
    Some(u)
}

fn first_significant(space: &TangentSpace, u: &[f64]) -> f64 {
    let w = space.weights();
    u.iter()
        .zip(w)
        .map(|(v, p)| v * p.sqrt())
        .find(|v| v.abs() > 1e-12)
        .unwrap_or(1.0)
}

/// Weighted Gram-Schmidt of `u` against an orthonormal family, then
/// normalization. Two passes for numerical orthogonality.
pub(crate) fn orthonormalize_against(space: &TangentSpace, basis: &[Vec<f64>], u: &mut [f64]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = space.dot(u, b);
            for (x, y) in u.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let nrm = space.norm(u);
    if nrm > 0.0 {
        u.iter_mut().for_each(|x| *x /= nrm);
    }
    nrm
}

/// Extends an orthonormal family to `k` vectors with orthonormalized
/// monomials; used when the data span fewer than `k` directions.
fn complete_basis(space: &TangentSpace, x: &[f64], basis: &mut Vec<Vec<f64>>, k: usize) {
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut degree = 0;
    while basis.len() < k && degree < 4 * x.len() {
        let mut u: Vec<f64> = x.iter().map(|&t| ((t - mid) / half).powi(degree as i32)).collect();
        let raw = space.norm(&u);
        degree += 1;
        if raw == 0.0 {
            continue;
        }
        let kept = orthonormalize_against(space, basis, &mut u);
        if kept > 1e-8 * raw {
            basis.push(u);
        }
    }
    // weights vanish on part of the grid: fall back to unit vectors there
    let mut j = 0;
    while basis.len() < k && j < x.len() {
        let mut u = vec![0.0; x.len()];
        u[j] = 1.0;
        j += 1;
        if space.weights()[j - 1] == 0.0 {
            continue;
        }
        let raw = space.norm(&u);
        let kept = orthonormalize_against(space, basis, &mut u);
        if kept > 1e-8 * raw {
            basis.push(u);
        }
    }
    while basis.len() < k {
        basis.push(vec![0.0; x.len()]);
    }
}

impl LogPcaModel {
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    pub fn n(&self) -> usize {
        self.scores.len()
    }

    /// `Pi w_i = sum_{k < kk} s_ik u_k`.
    pub fn projection(&self, i: usize, kk: usize) -> Result<Vec<f64>> {
        if i >= self.n() {
            return Err(Error::Parameter(format!(
                "datum index {i} out of range (n = {})",
                self.n()
            )));
        }
        if kk > self.k() {
            return Err(Error::Parameter(format!(
                "K' = {kk} exceeds fitted K = {}",
                self.k()
            )));
        }
        let mut v = vec![0.0; self.space.len()];
        for k in 0..kk {
            let s = self.scores[i][k];
            for (x, u) in v.iter_mut().zip(&self.directions[k]) {
                *x += s * u;
            }
        }
        Ok(v)
    }

    /// `exp(Pi w_i)` on the extended output grid.
    pub fn reconstruct(&self, i: usize, kk: usize) -> Result<DiscreteMeasure1D> {
        exp_map(&self.barycenter, &self.projection(i, kk)?)
    }

    /// Eq.-style linear residual `(1/n) sum ||w_i - Pi w_i||^2`.
    pub fn linear_residual(&self, data: &LoggedDataset, kk: usize) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..data.n() {
            s += self.space.dist_sq(&data.logs[i], &self.projection(i, kk)?);
        }
        Ok(s / data.n() as f64)
    }

    /// Largest violation of `Pi w_i in V` over the dataset.
    pub fn projection_violation(&self, kk: usize) -> Result<f64> {
        let g = self.barycenter.grid();
        let mut worst: f64 = 0.0;
        for i in 0..self.n() {
            worst = worst.max(feasibility_violation(g, &self.projection(i, kk)?));
        }
        Ok(worst)
    }

    /// Per-datum number of decreasing steps of `id + Pi w_i`.
    pub fn fold_counts(&self, kk: usize) -> Result<Vec<usize>> {
        let x = self.barycenter.grid().points();
        (0..self.n())
            .map(|i| {
                let v = self.projection(i, kk)?;
                Ok((0..x.len() - 1)
                    .filter(|&j| x[j + 1] + v[j + 1] < x[j] + v[j])
                    .count())
            })
            .collect()
    }
}

/// `(1/n) sum_i d_W^2(nu_i, exp(Pi w_i))` with the exact pushforward.
pub fn logpca_reconstruction_error(model: &LogPcaModel, data: &LoggedDataset, kk: usize, q: usize) -> Result<f64> {
    let per = logpca_reconstruction_errors(model, data, kk, q)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

pub fn logpca_reconstruction_errors(model: &LogPcaModel, data: &LoggedDataset, kk: usize, q: usize) -> Result<Vec<f64>> {
    (0..data.n())
        .into_par_iter()
        .map(|i| {
            let v = model.projection(i, kk)?;
            if v.iter().all(|x| *x == 0.0) {
                return wasserstein_sq_between(&model.barycenter, &data.data[i], q);
            }
            let rec = exp_measure(&model.barycenter, &v)?;
            wasserstein_sq_between(&rec, &data.data[i], q)
        })
        .collect()
}
