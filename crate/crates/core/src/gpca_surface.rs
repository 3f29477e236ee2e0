//! Geodesic-surface GPCA: all directions at once, each datum described by
//! nonnegative weights on the `2K` endpoint vectors `(t0_k +- 1) v_k`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::core1d::{exp_measure, feasibility_violation, wasserstein_sq_between, LoggedDataset, TangentSpace};
use crate::error::{Error, Result};
use crate::gpca_iter::{FbConfig, FeasibleSets, ProxOptions, ProxSolver};
use crate::qp::solve_qp;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceModel {
    pub directions: Vec<Vec<f64>>,
    pub t0: Vec<f64>,
    /// `alpha[i] = (a+_1, a-_1, ..., a+_K, a-_K)`.
    pub alpha: Vec<Vec<f64>>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub backtracks: usize,
    pub inner_failures: usize,
    /// Smallest singular value of the Gram matrix of the directions.
    pub min_singular: f64,
}

impl SurfaceModel {
    pub fn k(&self) -> usize {
        self.directions.len()
    }

    /// Coefficient `a+_k (t0_k + 1) + a-_k (t0_k - 1)` of `v_k` for `alpha`.
    pub fn coefficients(&self, alpha: &[f64]) -> Vec<f64> {
        coefficients(&self.t0, alpha)
    }

    /// Tangent vector `sum_k c_k v_k` of the surface point with weights `alpha`.
    pub fn point(&self, alpha: &[f64]) -> Vec<f64> {
        combine(&self.directions, &self.coefficients(alpha))
    }

    pub fn independent(&self) -> bool {
        self.min_singular > 1e-8
    }

    /// Largest violation of `(t0_k +- 1) v_k in V`.
    pub fn endpoint_violation(&self, space: &TangentSpace) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, t0) in self.directions.iter().zip(&self.t0) {
            for s in [t0 - 1.0, t0 + 1.0] {
                let w: Vec<f64> = v.iter().map(|x| s * x).collect();
                worst = worst.max(feasibility_violation(space.grid(), &w));
            }
        }
        worst
    }

    /// Largest simplex violation over the data weights.
    pub fn simplex_violation(&self) -> f64 {
        self.alpha
            .iter()
            .map(|a| {
                let neg = a.iter().fold(0.0f64, |m, x| m.max(-x));
                neg.max(a.iter().sum::<f64>() - 1.0)
            })
            .fold(0.0, f64::max)
    }
}

fn coefficients(t0: &[f64], alpha: &[f64]) -> Vec<f64> {
    t0.iter()
        .enumerate()
        .map(|(k, t)| alpha[2 * k] * (t + 1.0) + alpha[2 * k + 1] * (t - 1.0))
        .collect()
}

fn combine(dirs: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dirs.first().map_or(0, |d| d.len())];
    for (d, ck) in dirs.iter().zip(c) {
        for (o, x) in out.iter_mut().zip(d) {
            *o += ck * x;
        }
    }
    out
}

/// `F'(v, alpha) = sum_i ||w_i - sum_k c_ik v_k||^2`.
pub fn surface_objective(space: &TangentSpace, logs: &[Vec<f64>], dirs: &[Vec<f64>], t0: &[f64], alpha: &[Vec<f64>]) -> f64 {
    logs.iter()
        .zip(alpha)
        .map(|(w, a)| {
            let p = combine(dirs, &coefficients(t0, a));
            space.dist_sq(w, &p)
        })
        .sum()
}

/// Euclidean gradients of [`surface_objective`] with respect to every
/// `v_k` and every `alpha_i`.
pub fn surface_grad(
    space: &TangentSpace,
    logs: &[Vec<f64>],
    dirs: &[Vec<f64>],
    t0: &[f64],
    alpha: &[Vec<f64>],
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let p = space.weights();
    let k = dirs.len();
    let dim = space.len();
    let mut gv = vec![vec![0.0; dim]; k];
    let mut ga = Vec::with_capacity(logs.len());
    for (w, a) in logs.iter().zip(alpha) {
        let c = coefficients(t0, a);
        let fit = combine(dirs, &c);
        let r: Vec<f64> = w.iter().zip(&fit).map(|(x, y)| x - y).collect();
        let mut g = vec![0.0; 2 * k];
        for l in 0..k {
            let ip = space.dot(&r, &dirs[l]);
            g[2 * l] = -2.0 * (t0[l] + 1.0) * ip;
            g[2 * l + 1] = -2.0 * (t0[l] - 1.0) * ip;
            for j in 0..dim {
                gv[l][j] -= 2.0 * c[l] * p[j] * r[j];
            }
        }
        ga.push(g);
    }
    (gv, ga)
}

/// Row-sum bound on the Hessian of [`surface_objective`] over the
/// feasible region (`|v_kj| <= width`, weights in the simplex):
/// `max(R_v, R_a)` with `s = 1 + max|t0_k|`, `rho = w_inf + s width`,
/// `R_v = 2 f_inf n (s^2 + 2 K s^2 width + 2 s rho)` and
/// `R_a = 2 W s (2 K s width^2 + s width + rho)`, `W = sum_j p_j`.
pub fn surface_lipschitz_bound(n: usize, k: usize, t0: &[f64], f_inf: f64, total_weight: f64, w_inf: f64, width: f64) -> f64 {
    let s = 1.0 + t0.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let rho = w_inf + s * width;
    let (n, k) = (n as f64, k as f64);
    let rv = 2.0 * f_inf * n * (s * s + 2.0 * k * s * s * width + 2.0 * s * rho);
    let ra = 2.0 * total_weight * s * (2.0 * k * s * width * width + s * width + rho);
    rv.max(ra)
}

/// Euclidean projection onto `{a >= 0, sum a <= 1}`.
pub fn project_simplex(a: &[f64]) -> Vec<f64> {
    let pos: Vec<f64> = a.iter().map(|x| x.max(0.0)).collect();
    if pos.iter().sum::<f64>() <= 1.0 {
        return pos;
    }
    let mut u = a.to_vec();
    u.sort_by(|x, y| y.total_cmp(x));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    a.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Best simplex weights of one datum for fixed directions.
pub fn best_weights(space: &TangentSpace, dirs: &[Vec<f64>], t0: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let k = dirs.len();
    let m = 2 * k;
    let scale_of = |l: usize| if l % 2 == 0 { t0[l / 2] + 1.0 } else { t0[l / 2] - 1.0 };
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut g = DVector::<f64>::zeros(m);
    for a in 0..m {
        g[a] = -scale_of(a) * space.dot(w, &dirs[a / 2]);
        for b in 0..m {
            h[(a, b)] = scale_of(a) * scale_of(b) * space.dot(&dirs[a / 2], &dirs[b / 2]);
        }
    }
    let diag = (0..m).map(|a| h[(a, a)]).fold(0.0, f64::max);
    if !(diag > 0.0) {
        return Ok(vec![0.0; m]);
    }
    for a in 0..m {
        h[(a, a)] += 1e-12 * diag;
    }
    let mut am = DMatrix::<f64>::zeros(m + 1, m);
    let mut bm = DVector::<f64>::zeros(m + 1);
    for a in 0..m {
        am[(a, a)] = -1.0;
        am[(m, a)] = 1.0;
    }
    bm[m] = 1.0;
    let x = solve_qp(&h, &g, &am, &bm, DVector::zeros(m))?;
    Ok(project_simplex(x.as_slice()))
}

/// Forward-backward fit of the geodesic surface with fixed midpoints,
/// started from `init` directions (each made feasible for its midpoint).
pub fn fit_surface(data: &LoggedDataset, init: &[Vec<f64>], t0: &[f64], config: &FbConfig) -> Result<SurfaceModel> {
    config.validate()?;
    let k = init.len();
    if k == 0 || t0.len() != k {
        return Err(Error::Parameter("need one midpoint per direction and K >= 1".into()));
    }
    if let Some(t) = t0.iter().find(|t| !(t.abs() < 1.0)) {
        return Err(Error::Parameter(format!("t0 = {t} must lie in (-1, 1)")));
    }
    let space = &*data.space;
    let logs = &data.logs;
    let n = data.n();
    let dim = data.dim();
    if init.iter().any(|v| v.len() != dim) {
        return Err(Error::Validation("initial direction has wrong length".into()));
    }
    let sets: Vec<FeasibleSets> = t0.iter().map(|&t| FeasibleSets::new(space, t, &[])).collect::<Result<_>>()?;
    let opts = ProxOptions {
        eta: config.inner_eta,
        max_iter: config.max_inner,
        ..ProxOptions::default()
    };
    let mut solvers: Vec<ProxSolver> = (0..k).map(|_| ProxSolver::new(dim)).collect();
    let mut inner_failures = 0;
    let prox_all = |ys: &[Vec<f64>], solvers: &mut [ProxSolver], failures: &mut usize| -> Vec<Vec<f64>> {
        ys.iter()
            .zip(solvers.iter_mut())
            .zip(&sets)
            .map(|((y, s), set)| {
                let mut v = match s.solve(y, set, &opts) {
                    Ok(v) => v,
                    Err(Error::ProxNonConvergence { last, .. }) => {
                        *failures += 1;
                        last
                    }
                    Err(_) => {
                        *failures += 1;
                        y.clone()
                    }
                };
                set.restore(&mut v);
                v
            })
            .collect()
    };
    let mut dirs = prox_all(init, &mut solvers, &mut inner_failures);
    solvers.iter_mut().for_each(|s| s.reset());
    let mut alpha: Vec<Vec<f64>> = logs
        .par_iter()
        .map(|w| best_weights(space, &dirs, t0, w))
        .collect::<Result<_>>()?;

    let w_inf = data.max_abs_log();
    let m = surface_lipschitz_bound(n, k, t0, space.max_weight(), space.weights().iter().sum(), w_inf, space.grid().width());
    // the bound is safe but loose: the step grows while the quadratic
    // upper model still holds and never drops below the safe one
    let tau_safe = config.step_factor / m;
    let mut tau = tau_safe;
    let mut f = surface_objective(space, logs, &dirs, t0, &alpha);
    let mut trace = vec![f];
    let mut backtracks = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_outer {
        iterations += 1;
        let (gv, ga) = surface_grad(space, logs, &dirs, t0, &alpha);
        let mut trial = (2.0 * tau).min(1e6 * tau_safe);
        let (mut d_new, mut a_new, mut f_new) = loop {
            let ys: Vec<Vec<f64>> = dirs
                .iter()
                .zip(&gv)
                .map(|(v, g)| v.iter().zip(g).map(|(x, d)| x - trial * d).collect())
                .collect();
            let d_new = prox_all(&ys, &mut solvers, &mut inner_failures);
            let a_new: Vec<Vec<f64>> = alpha
                .iter()
                .zip(&ga)
                .map(|(a, g)| project_simplex(&a.iter().zip(g).map(|(x, d)| x - trial * d).collect::<Vec<_>>()))
                .collect();
            let f_new = surface_objective(space, logs, &d_new, t0, &a_new);
            if trial <= tau_safe {
                break (d_new, a_new, f_new);
            }
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((dn, d), g) in d_new.iter().zip(&dirs).zip(&gv) {
                for ((x, y), gg) in dn.iter().zip(d).zip(g) {
                    lin += gg * (x - y);
                    sq += (x - y).powi(2);
                }
            }
            for ((an, a), g) in a_new.iter().zip(&alpha).zip(&ga) {
                for ((x, y), gg) in an.iter().zip(a).zip(g) {
                    lin += gg * (x - y);
                    sq += (x - y).powi(2);
                }
            }
            if f_new <= f + lin + 0.5 * sq / trial + 1e-12 * f.abs() {
                break (d_new, a_new, f_new);
            }
            trial = (0.5 * trial).max(tau_safe);
        };
        tau = trial;
        let mut lam = 1.0;
        while f_new > f && lam > 1e-12 {
            lam *= 0.5;
            backtracks += 1;
            for (dn, d) in d_new.iter_mut().zip(&dirs) {
                for (x, y) in dn.iter_mut().zip(d) {
                    *x = y + lam * (*x - y);
                }
            }
            for (an, a) in a_new.iter_mut().zip(&alpha) {
                for (x, y) in an.iter_mut().zip(a) {
                    *x = y + lam * (*x - y);
                }
            }
            f_new = surface_objective(space, logs, &d_new, t0, &a_new);
        }
        if f_new > f {
            converged = true;
            break;
        }
        let change = |new: &[Vec<f64>], old: &[Vec<f64>], floor: f64| {
            let d: f64 = new.iter().zip(old).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2))).sum();
            let s: f64 = new.iter().flat_map(|a| a.iter().map(|x| x * x)).sum();
            d.sqrt() / s.sqrt().max(floor)
        };
        let rel = change(&d_new, &dirs, 1e-300).max(change(&a_new, &alpha, 1.0));
        dirs = d_new;
        alpha = a_new;
        f = f_new;
        trace.push(f);
        if rel <= config.eta {
            converged = true;
            break;
        }
    }
    let polished: Vec<Vec<f64>> = logs
        .par_iter()
        .map(|w| best_weights(space, &dirs, t0, w))
        .collect::<Result<_>>()?;
    let fp = surface_objective(space, logs, &dirs, t0, &polished);
    if fp <= f {
        alpha = polished;
        f = fp;
        trace.push(f);
    }
    let mut gram = DMatrix::<f64>::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            gram[(a, b)] = space.dot(&dirs[a], &dirs[b]);
        }
    }
    let min_singular = gram.singular_values().iter().fold(f64::INFINITY, |m, s| m.min(*s));
    Ok(SurfaceModel {
        directions: dirs,
        t0: t0.to_vec(),
        alpha,
        objective: f,
        converged,
        iterations,
        trace,
        backtracks,
        inner_failures,
        min_singular,
    })
}

/// Joint grid search over midpoints for `K <= 2`; returns the model with
/// the smallest objective among converged fits.
pub fn search_surface_t0(data: &LoggedDataset, init: &[Vec<f64>], grid: &[f64], config: &FbConfig) -> Result<SurfaceModel> {
    let k = init.len();
    if k == 0 || k > 2 {
        return Err(Error::Parameter(format!("joint midpoint search supports K = 1 or 2, got {k}")));
    }
    let combos: Vec<Vec<f64>> = if k == 1 {
        grid.iter().map(|&t| vec![t]).collect()
    } else {
        grid.iter().flat_map(|&a| grid.iter().map(move |&b| vec![a, b])).collect()
    };
    let fits: Vec<SurfaceModel> = combos
        .par_iter()
        .map(|t0| fit_surface(data, init, t0, config))
        .collect::<Result<_>>()?;
    let tried = fits.len();
    fits.into_iter()
        .filter(|m| m.converged)
        .fold(None, |best: Option<SurfaceModel>, m| match best {
            Some(b) if b.objective <= m.objective => Some(b),
            _ => Some(m),
        })
        .ok_or(Error::NoConvergedCandidate { tried })
}

/// `(1/n) sum_i d_W^2(nu_i, exp(sum_k c_ik v_k))` at the fitted weights.
pub fn surface_reconstruction_error(model: &SurfaceModel, data: &LoggedDataset, q: usize) -> Result<f64> {
    let per: Vec<f64> = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let v = model.point(&model.alpha[i]);
            if v.iter().all(|x| *x == 0.0) {
                return wasserstein_sq_between(&data.barycenter, &data.data[i], q);
            }
            wasserstein_sq_between(&exp_measure(&data.barycenter, &v)?, &data.data[i], q)
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}
