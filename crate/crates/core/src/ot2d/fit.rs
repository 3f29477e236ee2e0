use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::measure::{Atoms, Grid2D, Measure2D};
use super::sets::FeasibleSets2D;
use super::simplex::{ot_atoms_exact, Basis, TransportPlan};
use crate::error::{Error, Result};
use crate::gpca_iter::{lipschitz_bound, ProxOptions, ProxSolver};

/// Barycenter, data and their supports. Velocity fields are stored as
/// `[v_x; v_y]` over all `P` lattice points.
#[derive(Clone, Debug)]
pub struct Problem2D {
    pub barycenter: Measure2D,
    pub data: Vec<Measure2D>,
    support: Vec<usize>,
    targets: Vec<Atoms>,
}

/// Objective value with the optimal plans from the geodesic points to
/// the data (plan rows index the barycenter support).
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub per_datum: Vec<f64>,
    pub plans: Vec<TransportPlan>,
    pub bases: Vec<Basis>,
}

impl Problem2D {
    pub fn new(barycenter: Measure2D, data: Vec<Measure2D>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Validation("empty dataset".into()));
        }
        if data.iter().any(|m| m.grid() != barycenter.grid()) {
            return Err(Error::Validation("data and barycenter live on different grids".into()));
        }
        let support = barycenter.support();
        let targets = data.iter().map(Atoms::of).collect();
        Ok(Self { barycenter, data, support, targets })
    }

    pub fn grid(&self) -> &Grid2D {
        self.barycenter.grid()
    }

    pub fn n(&self) -> usize {
        self.data.len()
    }

    /// Length of a velocity field.
    pub fn dim(&self) -> usize {
        2 * self.grid().len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Weighted inner product of two fields.
    pub fn dot(&self, u: &[f64], v: &[f64]) -> f64 {
        let p = self.grid().len();
        let w = self.barycenter.weights();
        self.support.iter().map(|&k| w[k] * (u[k] * v[k] + u[p + k] * v[p + k])).sum()
    }

    pub fn norm_sq(&self, v: &[f64]) -> f64 {
        self.dot(v, v)
    }

    /// Atoms of `(id + s v) # barycenter`.
    pub fn geodesic_atoms(&self, v: &[f64], s: f64) -> Atoms {
        let g = self.grid();
        let p = g.len();
        let w = self.barycenter.weights();
        Atoms {
            positions: self
                .support
                .iter()
                .map(|&k| {
                    let x = g.point(k);
                    [x[0] + s * v[k], x[1] + s * v[p + k]]
                })
                .collect(),
            masses: self.support.iter().map(|&k| w[k]).collect(),
        }
    }

    /// `F(v, t) = sum_i d_W^2(nu_i, (id + (t0 + t_i) v) # barycenter)` with
    /// exact plans, warm-started from `warm` when given.
    pub fn evaluate(&self, v: &[f64], t: &[f64], t0: f64, warm: Option<&[Basis]>) -> Result<Evaluation> {
        if v.len() != self.dim() || t.len() != self.n() {
            return Err(Error::Validation("field or times have wrong length".into()));
        }
        let outs = (0..self.n())
            .into_par_iter()
            .map(|i| {
                let src = self.geodesic_atoms(v, t0 + t[i]);
                ot_atoms_exact(&src, &self.targets[i], warm.map(|w| &w[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        let per_datum: Vec<f64> = outs.iter().map(|o| o.cost).collect();
        let (plans, bases) = outs.into_iter().map(|o| (o.plan, o.basis)).unzip();
        Ok(Evaluation {
            value: per_datum.iter().sum(),
            per_datum,
            plans,
            bases,
        })
    }

    /// Per-support-point barycentric target `sum_q P_pq y_q` of a plan.
    fn plan_targets(&self, i: usize, plan: &TransportPlan) -> Vec<[f64; 2]> {
        let mut by = vec![[0.0; 2]; self.support.len()];
        for &(k, l, m) in &plan.entries {
            let y = self.targets[i].positions[l];
            by[k][0] += m * y[0];
            by[k][1] += m * y[1];
        }
        by
    }

    /// Log maps by barycentric projection of exact plans from the
    /// barycenter (zero off its support).
    pub fn barycentric_logs(&self) -> Result<Vec<Vec<f64>>> {
        let zero = vec![0.0; self.dim()];
        let ev = self.evaluate(&zero, &vec![0.0; self.n()], 0.0, None)?;
        let g = self.grid();
        let p = g.len();
        let w = self.barycenter.weights();
        Ok((0..self.n())
            .map(|i| {
                let by = self.plan_targets(i, &ev.plans[i]);
                let mut out = vec![0.0; 2 * p];
                for (s, &k) in self.support.iter().enumerate() {
                    let x = g.point(k);
                    out[k] = by[s][0] / w[k] - x[0];
                    out[p + k] = by[s][1] / w[k] - x[1];
                }
                out
            })
            .collect())
    }
}

/// Euclidean gradients of `F` at `(v, t)` for plans computed there.
/// Points off the barycenter support carry no mass and get zero.
pub fn grad_f_2d(problem: &Problem2D, v: &[f64], t: &[f64], t0: f64, plans: &[TransportPlan]) -> (Vec<f64>, Vec<f64>) {
    let g = problem.grid();
    let p = g.len();
    let w = problem.barycenter.weights();
    let mut gv = vec![0.0; 2 * p];
    let mut gt = vec![0.0; problem.n()];
    for i in 0..problem.n() {
        let s = t0 + t[i];
        let by = problem.plan_targets(i, &plans[i]);
        let mut acc = 0.0;
        for (k, &q) in problem.support.iter().enumerate() {
            let x = g.point(q);
            let rx = w[q] * (x[0] + s * v[q]) - by[k][0];
            let ry = w[q] * (x[1] + s * v[p + q]) - by[k][1];
            gv[q] += 2.0 * s * rx;
            gv[p + q] += 2.0 * s * ry;
            acc += v[q] * rx + v[p + q] * ry;
        }
        gt[i] = 2.0 * acc;
    }
    (gv, gt)
}

#[derive(Clone, Debug, Serialize)]
pub struct Fb2dConfig {
    pub eta: f64,
    pub max_outer: usize,
    pub inner: ProxOptionsSer,
    pub step_factor: f64,
}

/// Serializable mirror of [`ProxOptions`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProxOptionsSer {
    pub eta: f64,
    pub max_iter: usize,
    pub feas_tol: f64,
}

impl From<ProxOptionsSer> for ProxOptions {
    fn from(o: ProxOptionsSer) -> Self {
        ProxOptions {
            eta: o.eta,
            max_iter: o.max_iter,
            feas_tol: o.feas_tol,
        }
    }
}

impl Default for Fb2dConfig {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            max_outer: 200,
            inner: ProxOptionsSer {
                eta: 1e-9,
                max_iter: 20_000,
                feas_tol: 1e-7,
            },
            step_factor: 0.9,
        }
    }
}

impl Fb2dConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.inner.eta > 0.0) || !(self.inner.feas_tol > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::Parameter("step factor must lie in (0, 1)".into()));
        }
        if self.max_outer == 0 || self.inner.max_iter == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GeodesicComponent2D {
    pub direction: Vec<f64>,
    pub t0: f64,
    pub times: Vec<f64>,
    /// `F / n` at the returned point.
    pub h: f64,
    pub converged: bool,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub backtracks: usize,
    pub inner_failures: usize,
    pub evaluations: usize,
}

/// Leading direction of the barycentric logs after removing `priors`,
/// unit in the weighted norm, with the scores of the logs on it.
pub fn leading_field(problem: &Problem2D, logs: &[Vec<f64>], priors: &[Vec<f64>]) -> Option<(Vec<f64>, f64, Vec<f64>)> {
    let n = logs.len();
    let deflated: Vec<Vec<f64>> = logs
        .iter()
        .map(|w| {
            let mut r = w.clone();
            for u in priors {
                let c = problem.dot(&r, u) / problem.norm_sq(u).max(1e-300);
                r.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            r
        })
        .collect();
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            let d = problem.dot(&deflated[i], &deflated[k]);
            gram[(i, k)] = d;
            gram[(k, i)] = d;
        }
    }
    let eig = gram.symmetric_eigen();
    let (top, &lam) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(lam > 0.0) {
        return None;
    }
    let a = eig.eigenvectors.column(top);
    let mut u = vec![0.0; problem.dim()];
    for (i, w) in deflated.iter().enumerate() {
        u.iter_mut().zip(w).for_each(|(x, y)| *x += a[i] * y);
    }
    let nu = problem.norm_sq(&u).sqrt();
    u.iter_mut().for_each(|x| *x /= nu);
    let scores = logs.iter().map(|w| problem.dot(w, &u)).collect();
    Some((u, lam / n as f64, scores))
}

fn zero_component(problem: &Problem2D, t0: f64) -> Result<GeodesicComponent2D> {
    let v = vec![0.0; problem.dim()];
    let t = vec![0.0; problem.n()];
    let f = problem.evaluate(&v, &t, t0, None)?.value;
    Ok(GeodesicComponent2D {
        direction: v,
        t0,
        times: t,
        h: f / problem.n() as f64,
        converged: true,
        iterations: 0,
        trace: vec![f],
        backtracks: 0,
        inner_failures: 0,
        evaluations: 1,
    })
}

/// Forward-backward fit of one principal geodesic in 2D; `priors` are
/// the previously found fields.
pub fn fit_component_2d(problem: &Problem2D, priors: &[Vec<f64>], t0: f64, config: &Fb2dConfig) -> Result<GeodesicComponent2D> {
    config.validate()?;
    let sets = FeasibleSets2D::new(problem.grid(), problem.barycenter.weights(), t0, priors)?;
    let opts: ProxOptions = config.inner.into();
    let logs = problem.barycentric_logs()?;
    let Some((u, _, scores)) = leading_field(problem, &logs, priors) else {
        return zero_component(problem, t0);
    };
    let smax = scores.iter().fold(0.0f64, |m, s| m.max(*s));
    let smin = scores.iter().fold(0.0f64, |m, s| m.min(*s));
    let c = (smax / (t0 + 1.0)).max(smin / (t0 - 1.0));
    let mut solver = ProxSolver::new(problem.dim());
    let mut failures = 0;
    let prox = |y: &[f64], solver: &mut ProxSolver, failures: &mut usize| {
        let mut v = match solver.solve(y, &sets, &opts) {
            Ok(v) => v,
            Err(Error::ProxNonConvergence { last, .. }) => {
                *failures += 1;
                last
            }
            Err(_) => {
                *failures += 1;
                y.to_vec()
            }
        };
        sets.restore(&mut v);
        v
    };
    let y: Vec<f64> = u.iter().map(|x| c * x).collect();
    let mut v = prox(&y, &mut solver, &mut failures);
    solver.reset();
    if problem.norm_sq(&v) == 0.0 {
        return zero_component(problem, t0);
    }
    let nv = problem.norm_sq(&v);
    let mut t: Vec<f64> = logs.iter().map(|w| (problem.dot(w, &v) / nv - t0).clamp(-1.0, 1.0)).collect();

    let (gx, gy) = (problem.grid().x1 - problem.grid().x0, problem.grid().y1 - problem.grid().y0);
    let width = gx.max(gy);
    let f_inf = problem.barycenter.weights().iter().fold(0.0f64, |m, x| m.max(*x));
    let m = lipschitz_bound(problem.n(), problem.dim(), t0, f_inf, (gx * gx + gy * gy).sqrt(), width);
    let tau_safe = config.step_factor / m;
    let mut tau = tau_safe;

    let mut ev = problem.evaluate(&v, &t, t0, None)?;
    let mut evaluations = 1;
    let mut trace = vec![ev.value];
    let mut backtracks = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_outer {
        iterations += 1;
        let (gv, gt) = grad_f_2d(problem, &v, &t, t0, &ev.plans);
        let mut trial = (2.0 * tau).min(1e6 * tau_safe);
        let (mut v_new, mut t_new, mut ev_new) = loop {
            let y: Vec<f64> = v.iter().zip(&gv).map(|(a, g)| a - trial * g).collect();
            let v_new = prox(&y, &mut solver, &mut failures);
            let t_new: Vec<f64> = t.iter().zip(&gt).map(|(a, g)| (a - trial * g).clamp(-1.0, 1.0)).collect();
            let ev_new = problem.evaluate(&v_new, &t_new, t0, Some(&ev.bases))?;
            evaluations += 1;
            if trial <= tau_safe {
                break (v_new, t_new, ev_new);
            }
            let lin: f64 = v_new.iter().zip(&v).zip(&gv).map(|((a, b), g)| g * (a - b)).sum::<f64>()
                + t_new.iter().zip(&t).zip(&gt).map(|((a, b), g)| g * (a - b)).sum::<f64>();
            let sq: f64 = v_new.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                + t_new.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
            if ev_new.value <= ev.value + lin + 0.5 * sq / trial + 1e-12 * ev.value.abs() {
                break (v_new, t_new, ev_new);
            }
            trial = (0.5 * trial).max(tau_safe);
        };
        tau = trial;
        let mut lam = 1.0;
        while ev_new.value > ev.value && lam > 1e-6 {
            lam *= 0.5;
            backtracks += 1;
            v_new.iter_mut().zip(&v).for_each(|(a, b)| *a = b + 0.5 * (*a - b));
            t_new.iter_mut().zip(&t).for_each(|(a, b)| *a = b + 0.5 * (*a - b));
            ev_new = problem.evaluate(&v_new, &t_new, t0, Some(&ev.bases))?;
            evaluations += 1;
        }
        if ev_new.value > ev.value {
            converged = true;
            break;
        }
        let dv: f64 = v_new.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dt: f64 = t_new.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let rel = (dv / v_new.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300)).max(dt / (t_new.len() as f64).sqrt());
        v = v_new;
        t = t_new;
        ev = ev_new;
        trace.push(ev.value);
        if rel <= config.eta {
            converged = true;
            break;
        }
    }
    Ok(GeodesicComponent2D {
        h: ev.value / problem.n() as f64,
        direction: v,
        t0,
        times: t,
        converged,
        iterations,
        trace,
        backtracks,
        inner_failures: failures,
        evaluations,
    })
}

/// Log-PCA analog: leading direction of the barycentric logs.
#[derive(Clone, Debug, Serialize)]
pub struct LogPca2D {
    pub direction: Vec<f64>,
    pub eigenvalue: f64,
    pub scores: Vec<f64>,
}

pub fn fit_log_pca_2d(problem: &Problem2D) -> Result<LogPca2D> {
    let logs = problem.barycentric_logs()?;
    let (direction, eigenvalue, scores) = leading_field(problem, &logs, &[])
        .ok_or_else(|| Error::Validation("all log maps vanish; no principal direction".into()))?;
    Ok(LogPca2D { direction, eigenvalue, scores })
}

/// `(1/n) sum_i min_t d_W^2(nu_i, (id + (t0 + t) scale v) # barycenter)`
/// over `samples` equispaced `t` in `[-1, 1]`, with exact distances.
pub fn reconstruction_error_2d(problem: &Problem2D, v: &[f64], scale: f64, t0: f64, samples: usize) -> Result<f64> {
    if samples < 3 {
        return Err(Error::Parameter(format!("need at least 3 samples, got {samples}")));
    }
    if v.len() != problem.dim() {
        return Err(Error::Validation("field has wrong length".into()));
    }
    let ts: Vec<f64> = (0..samples).map(|k| -1.0 + 2.0 * k as f64 / (samples - 1) as f64).collect();
    let curve: Vec<Atoms> = ts.iter().map(|t| problem.geodesic_atoms(v, scale * (t0 + t))).collect();
    let per = (0..problem.n())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            let mut basis: Option<Basis> = None;
            for src in &curve {
                let out = ot_atoms_exact(src, &problem.targets[i], basis.as_ref())?;
                best = best.min(out.cost);
                basis = Some(out.basis);
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}
