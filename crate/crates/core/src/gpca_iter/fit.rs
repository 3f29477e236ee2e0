use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{grad_f, lipschitz_for, objective_f, project_time};
use super::prox::{ProxOptions, ProxSolver};
use super::sets::FeasibleSets;
use crate::core1d::{exp_measure, feasibility_violation, LoggedDataset, Pushforward, TangentSpace};
use crate::error::{Error, Result};
use crate::logpca::{leading_direction, orthonormalize_against};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FbConfig {
    /// Relative change of `(v, t)` that stops the outer loop.
    pub eta: f64,
    /// Relative change that stops the inner primal-dual loop.
    pub inner_eta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub t0_grid: Vec<f64>,
    /// `tau = step_factor / M`.
    pub step_factor: f64,
    /// When no candidate of the grid converges, fail instead of keeping
    /// the smallest `H` (flagged as not converged).
    pub require_converged: bool,
    /// Let the step grow above `step_factor / M` while the quadratic
    /// upper model of `F` holds.
    pub adaptive: bool,
}

impl Default for FbConfig {
    fn default() -> Self {
        Self {
            eta: 1e-8,
            inner_eta: 1e-10,
            max_outer: 5_000,
            max_inner: 20_000,
            t0_grid: default_t0_grid(21),
            step_factor: 0.9,
            require_converged: true,
            adaptive: false,
        }
    }
}

/// `m` evenly spaced midpoints on `[-0.95, 0.95]`.
pub fn default_t0_grid(m: usize) -> Vec<f64> {
    if m == 1 {
        return vec![0.0];
    }
    (0..m).map(|i| -0.95 + 1.9 * i as f64 / (m - 1) as f64).collect()
}

impl FbConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.inner_eta > 0.0) {
            return Err(Error::Parameter("eta must be positive".into()));
        }
        if !(self.step_factor > 0.0 && self.step_factor < 1.0) {
            return Err(Error::Parameter(format!(
                "step factor {} must lie in (0, 1)",
                self.step_factor
            )));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Parameter("iteration caps must be positive".into()));
        }
        if self.t0_grid.is_empty() {
            return Err(Error::Parameter("empty t0 grid".into()));
        }
        if let Some(t) = self.t0_grid.iter().find(|t| !(t.abs() < 0.999)) {
            return Err(Error::Parameter(format!("t0 = {t} outside (-0.999, 0.999)")));
        }
        Ok(())
    }

    fn inner(&self) -> ProxOptions {
        ProxOptions {
            eta: self.inner_eta,
            max_iter: self.max_inner,
            ..ProxOptions::default()
        }
    }
}

/// One principal geodesic `t -> (id + (t0 + t) v) # bar` for `t` in `[-1, 1]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeodesicComponent {
    pub direction: Vec<f64>,
    pub t0: f64,
    pub times: Vec<f64>,
    /// `H(t0, v)`: mean squared tangent distance to the geodesic.
    pub h: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Objective `F` after the warm start and after every outer iteration.
    pub trace: Vec<f64>,
    pub backtracks: usize,
    pub inner_failures: usize,
    pub inner_iterations: usize,
    /// Relative change of `(v, t)` at the last outer iteration.
    pub last_change: f64,
}

impl GeodesicComponent {
    /// Unit direction in the weighted norm (zero stays zero).
    pub fn unit_direction(&self, space: &TangentSpace) -> Vec<f64> {
        let n = space.norm(&self.direction);
        if n > 0.0 {
            self.direction.iter().map(|x| x / n).collect()
        } else {
            self.direction.clone()
        }
    }

    /// `(t0 + t) v`.
    pub fn tangent_at(&self, t: f64) -> Vec<f64> {
        self.direction.iter().map(|x| (self.t0 + t) * x).collect()
    }

    /// Curve point `g_t` as an exact pushforward of the barycenter.
    pub fn curve_point(&self, data: &LoggedDataset, t: f64) -> Result<Pushforward> {
        exp_measure(&data.barycenter, &self.tangent_at(t))
    }

    /// Largest violation of `(t0 +- 1) v in V`.
    pub fn endpoint_violation(&self, space: &TangentSpace) -> f64 {
        feasibility_violation(space.grid(), &self.tangent_at(-1.0))
            .max(feasibility_violation(space.grid(), &self.tangent_at(1.0)))
    }

    /// Largest `|<v/|v|, u_l>|` over unit priors.
    pub fn orthogonality_violation(&self, space: &TangentSpace, priors: &[Vec<f64>]) -> f64 {
        let u = self.unit_direction(space);
        priors.iter().map(|p| space.dot(&u, p).abs()).fold(0.0, f64::max)
    }

    /// Largest increase of the objective between consecutive trace entries.
    pub fn max_ascent(&self) -> f64 {
        self.trace.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn zero_component(data: &LoggedDataset, t0: f64) -> GeodesicComponent {
    let space = &data.space;
    let h = data.logs.iter().map(|w| space.norm_sq(w)).sum::<f64>() / data.n() as f64;
    GeodesicComponent {
        direction: vec![0.0; data.dim()],
        t0,
        times: vec![0.0; data.n()],
        h,
        converged: true,
        iterations: 0,
        trace: vec![h * data.n() as f64],
        backtracks: 0,
        inner_failures: 0,
        inner_iterations: 0,
        last_change: 0.0,
    }
}

fn unit_priors(space: &TangentSpace, priors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    for p in priors {
        let mut u = p.clone();
        if orthonormalize_against(space, &out, &mut u) > 0.0 {
            out.push(u);
        }
    }
    out
}

fn times_for(space: &TangentSpace, logs: &[Vec<f64>], v: &[f64], t0: f64) -> Vec<f64> {
    if space.norm_sq(v) > 0.0 {
        logs.iter().map(|w| project_time(space, w, v, t0).unwrap()).collect()
    } else {
        vec![0.0; logs.len()]
    }
}

fn solve_prox(solver: &mut ProxSolver, y: &[f64], sets: &FeasibleSets, opts: &ProxOptions, failures: &mut usize) -> Vec<f64> {
    let out = solver.solve(y, sets, opts);
    solver.total_iterations += solver.last_iterations;
    let mut v = match out {
        Ok(v) => v,
        Err(Error::ProxNonConvergence { last, .. }) => {
            *failures += 1;
            last
        }
        Err(_) => unreachable!(),
    };
    sets.restore(&mut v);
    v
}

/// Warm start: leading log-PCA direction of the data deflated by the
/// priors, scaled so the projected scores fit in `t0 + [-1, 1]`, then
/// made feasible.
fn warm_start(
    space: &TangentSpace,
    logs: &[Vec<f64>],
    priors: &[Vec<f64>],
    init: Option<&[f64]>,
    sets: &FeasibleSets,
    opts: &ProxOptions,
    solver: &mut ProxSolver,
    failures: &mut usize,
) -> Option<Vec<f64>> {
    let t0 = sets.t0;
    let deflated: Vec<Vec<f64>> = logs
        .iter()
        .map(|w| {
            let mut r = w.clone();
            for u in priors {
                let c = space.dot(&r, u);
                r.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
            r
        })
        .collect();
    let u = match init {
        Some(v0) => {
            let mut u = v0.to_vec();
            if orthonormalize_against(space, priors, &mut u) > 0.0 {
                u
            } else {
                return None;
            }
        }
        None => leading_direction(space, &deflated)?,
    };
    let (mut smin, mut smax) = (0.0f64, 0.0f64);
    for w in logs {
        let s = space.dot(w, &u);
        smin = smin.min(s);
        smax = smax.max(s);
    }
    let c = (smax / (t0 + 1.0)).max(smin / (t0 - 1.0));
    if !(c > 0.0) {
        return None;
    }
    let y: Vec<f64> = u.iter().map(|x| c * x).collect();
    let v = solve_prox(solver, &y, sets, opts, failures);
    if space.norm_sq(&v) > 0.0 {
        Some(v)
    } else {
        None
    }
}

/// Forward-backward fit of one geodesic component at a fixed `t0`.
///
/// `priors` are earlier directions; the result is orthogonal to them.
pub fn fit_component(data: &LoggedDataset, priors: &[Vec<f64>], t0: f64, config: &FbConfig) -> Result<GeodesicComponent> {
    fit(data, priors, t0, None, config)
}

/// [`fit_component`] started from the direction `init` instead of the
/// leading log-PCA direction.
pub fn fit_component_from(
    data: &LoggedDataset,
    priors: &[Vec<f64>],
    t0: f64,
    init: &[f64],
    config: &FbConfig,
) -> Result<GeodesicComponent> {
    if init.len() != data.dim() {
        return Err(Error::Validation(format!("initial direction has length {}, expected {}", init.len(), data.dim())));
    }
    fit(data, priors, t0, Some(init), config)
}

fn fit(data: &LoggedDataset, priors: &[Vec<f64>], t0: f64, init: Option<&[f64]>, config: &FbConfig) -> Result<GeodesicComponent> {
    config.validate()?;
    let space = &*data.space;
    let logs = &data.logs;
    let priors = unit_priors(space, priors);
    let sets = FeasibleSets::new(space, t0, &priors)?;
    let opts = config.inner();
    let mut solver = ProxSolver::new(data.dim());
    let mut inner_failures = 0;

    let Some(mut v) = warm_start(space, logs, &priors, init, &sets, &opts, &mut solver, &mut inner_failures) else {
        return Ok(zero_component(data, t0));
    };
    // the dual of the warm-start projection does not fit the restored point
    solver.reset();
    let mut t = times_for(space, logs, &v, t0);
    let m = lipschitz_for(space, logs, t0);
    let tau_safe = config.step_factor / m;
    let mut tau = tau_safe;
    let mut f = objective_f(space, logs, &v, &t, t0);
    let mut trace = vec![f];
    let mut backtracks = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_change = f64::INFINITY;

    while iterations < config.max_outer {
        iterations += 1;
        let (gv, gt) = grad_f(space, logs, &v, &t, t0);
        let mut trial = if config.adaptive { (2.0 * tau).min(1e6 * tau_safe) } else { tau_safe };
        let (mut v_new, mut t_new, mut f_new) = loop {
            let t_new: Vec<f64> = t.iter().zip(&gt).map(|(x, g)| (x - trial * g).clamp(-1.0, 1.0)).collect();
            let y: Vec<f64> = v.iter().zip(&gv).map(|(x, g)| x - trial * g).collect();
            let v_new = solve_prox(&mut solver, &y, &sets, &opts, &mut inner_failures);
            let f_new = objective_f(space, logs, &v_new, &t_new, t0);
            if trial <= tau_safe {
                break (v_new, t_new, f_new);
            }
            let mut lin = 0.0;
            let mut sq = 0.0;
            for ((a, b), g) in v_new.iter().zip(&v).zip(&gv).chain(t_new.iter().zip(&t).zip(&gt)) {
                lin += g * (a - b);
                sq += (a - b).powi(2);
            }
            if f_new <= f + lin + 0.5 * sq / trial + 1e-12 * f.abs() {
                break (v_new, t_new, f_new);
            }
            trial = (0.5 * trial).max(tau_safe);
        };
        tau = trial;
        let mut lam = 1.0;
        while f_new > f && lam > 1e-12 {
            lam *= 0.5;
            backtracks += 1;
            for j in 0..v.len() {
                v_new[j] = v[j] + lam * (v_new[j] - v[j]);
            }
            for i in 0..t.len() {
                t_new[i] = t[i] + lam * (t_new[i] - t[i]);
            }
            f_new = objective_f(space, logs, &v_new, &t_new, t0);
        }
        if f_new > f {
            // no descent along the step: stationary up to round-off
            converged = true;
            last_change = 0.0;
            break;
        }
        let dv: f64 = v_new.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let dt: f64 = t_new.iter().zip(&t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let nv = v_new.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let nt = t_new.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        v = v_new;
        t = t_new;
        f = f_new;
        trace.push(f);
        last_change = (dv / nv).max(dt / nt);
        if last_change <= config.eta {
            converged = true;
            break;
        }
    }

    let t_opt = times_for(space, logs, &v, t0);
    let f_opt = objective_f(space, logs, &v, &t_opt, t0);
    if f_opt <= f {
        t = t_opt;
        f = f_opt;
        trace.push(f);
    }
    Ok(GeodesicComponent {
        direction: v,
        t0,
        times: t,
        h: f / data.n() as f64,
        converged,
        iterations,
        trace,
        backtracks,
        inner_failures,
        inner_iterations: solver.total_iterations,
        last_change,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct T0Point {
    pub t0: f64,
    pub h: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct T0Search {
    pub best: GeodesicComponent,
    pub curve: Vec<T0Point>,
    /// Best `t0` sits on the first or last grid point.
    pub boundary_hit: bool,
}

/// Runs [`fit_component`] for every `t0` of the grid and keeps the
/// smallest `H` among converged runs (see `require_converged`).
pub fn search_t0(data: &LoggedDataset, priors: &[Vec<f64>], config: &FbConfig) -> Result<T0Search> {
    config.validate()?;
    let fits: Vec<GeodesicComponent> = config
        .t0_grid
        .par_iter()
        .map(|&t0| fit_component(data, priors, t0, config))
        .collect::<Result<_>>()?;
    let curve = fits
        .iter()
        .map(|c| T0Point {
            t0: c.t0,
            h: c.h,
            converged: c.converged,
            iterations: c.iterations,
        })
        .collect();
    let mut best: Option<usize> = None;
    for (i, c) in fits.iter().enumerate() {
        if c.converged && best.map_or(true, |b| c.h < fits[b].h) {
            best = Some(i);
        }
    }
    if best.is_none() && !config.require_converged {
        best = (0..fits.len()).min_by(|&a, &b| fits[a].h.total_cmp(&fits[b].h));
    }
    let b = best.ok_or(Error::NoConvergedCandidate { tried: fits.len() })?;
    let boundary_hit = fits.len() > 1 && (b == 0 || b + 1 == fits.len());
    Ok(T0Search {
        best: fits.into_iter().nth(b).unwrap(),
        curve,
        boundary_hit,
    })
}

/// `k` components in sequence, each orthogonal to the earlier ones.
pub fn fit_iterative(data: &LoggedDataset, k: usize, config: &FbConfig) -> Result<Vec<T0Search>> {
    if k == 0 {
        return Err(Error::Parameter("at least one component required".into()));
    }
    let mut priors: Vec<Vec<f64>> = Vec::new();
    let mut out = Vec::with_capacity(k);
    for c in 0..k {
        let s = search_t0(data, &priors, config).map_err(|e| e.in_stage(&format!("component {}", c + 1)))?;
        priors.push(s.best.direction.clone());
        out.push(s);
    }
    Ok(out)
}
