use super::sets::{norm, FeasibleSets};
use crate::error::{Error, Result};

/// Clamp of each coordinate to `[-1, 1]`.
pub fn prox_t(t: &[f64]) -> Vec<f64> {
    t.iter().map(|x| x.clamp(-1.0, 1.0)).collect()
}

/// Prox of `sigma * chi_E^*`: soft threshold with thresholds
/// `sigma / (1 - t0)` above and `sigma / (1 + t0)` below.
pub fn prox_conj_e(z: f64, sigma: f64, t0: f64) -> f64 {
    let hi = sigma / (1.0 - t0);
    let lo = sigma / (1.0 + t0);
    if z > hi {
        z - hi
    } else if z < -lo {
        z + lo
    } else {
        0.0
    }
}

/// Constraint structure of `min 0.5 |v - y|^2 + chi_P(v) + chi_E(K v)`,
/// where `P` has an exact projection and `E` is the interval
/// `[-1 / (1 + t0), 1 / (1 - t0)]` applied to every entry of `K v`.
pub trait ProxSets {
    fn t0(&self) -> f64;
    fn dual_dim(&self) -> usize;
    fn k_op(&self, v: &[f64], out: &mut [f64]);
    fn k_adj(&self, z: &[f64], out: &mut [f64]);
    /// Upper bound on `||K||^2`.
    fn delta_sq(&self) -> f64;
    fn project_primal(&self, y: &[f64], out: &mut [f64]);
    /// Largest violation of the `E` bounds by `K v`.
    fn dual_violation(&self, v: &[f64]) -> f64;
}

impl ProxSets for FeasibleSets {
    fn t0(&self) -> f64 {
        self.t0
    }
    fn dual_dim(&self) -> usize {
        self.dim().saturating_sub(1)
    }
    fn k_op(&self, v: &[f64], out: &mut [f64]) {
        FeasibleSets::k_op(self, v, out)
    }
    fn k_adj(&self, z: &[f64], out: &mut [f64]) {
        FeasibleSets::k_adj(self, z, out)
    }
    fn delta_sq(&self) -> f64 {
        FeasibleSets::delta_sq(self)
    }
    fn project_primal(&self, y: &[f64], out: &mut [f64]) {
        self.project_box_orth(y, out)
    }
    fn dual_violation(&self, v: &[f64]) -> f64 {
        self.slope_violation(v)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProxOptions {
    /// Relative change of `v` at which the iteration stops.
    pub eta: f64,
    pub max_iter: usize,
    /// Allowed violation of the slope bounds on exit.
    pub feas_tol: f64,
}

impl Default for ProxOptions {
    fn default() -> Self {
        Self {
            eta: 1e-10,
            max_iter: 20_000,
            feas_tol: 1e-9,
        }
    }
}

/// Reusable state of the primal-dual solver; the dual variable carries over
/// between calls as a warm start.
#[derive(Clone, Debug)]
pub struct ProxSolver {
    z: Vec<f64>,
    pub last_iterations: usize,
    pub total_iterations: usize,
}

impl ProxSolver {
    pub fn new(dim: usize) -> Self {
        Self {
            z: vec![0.0; dim.saturating_sub(1)],
            last_iterations: 0,
            total_iterations: 0,
        }
    }

    pub fn reset(&mut self) {
        self.z.iter_mut().for_each(|x| *x = 0.0);
    }

    /// `argmin 0.5 |v - y|^2 / tau + chi_P(v) + chi_E(K v)`.
    ///
    /// Primal-dual iteration with `sigma = 1 / delta` and primal step
    /// `theta = tau / (1 + delta tau)`. The minimizer does not depend on
    /// `tau`, so the iteration runs at `tau = 1`.
    pub fn solve<S: ProxSets + ?Sized>(&mut self, y: &[f64], sets: &S, opts: &ProxOptions) -> Result<Vec<f64>> {
        let n = y.len();
        let m = sets.dual_dim();
        if self.z.len() != m {
            self.z = vec![0.0; m];
        }
        let delta = sets.delta_sq().sqrt();
        let tau = 1.0;
        let sigma = 1.0 / delta;
        let theta = tau / (1.0 + delta * tau);

        let mut v = vec![0.0; n];
        sets.project_primal(y, &mut v);
        if sets.dual_violation(&v) <= 0.0 {
            self.last_iterations = 0;
            return Ok(v);
        }
        let mut vbar = v.clone();
        let mut kv = vec![0.0; m];
        let mut ktz = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut v_new = vec![0.0; n];
        let mut rel = f64::INFINITY;
        for it in 1..=opts.max_iter {
            sets.k_op(&vbar, &mut kv);
            for j in 0..m {
                self.z[j] = prox_conj_e(self.z[j] + sigma * kv[j], sigma, sets.t0());
            }
            sets.k_adj(&self.z, &mut ktz);
            for j in 0..n {
                w[j] = v[j] - theta * (ktz[j] + (v[j] - y[j]) / tau);
            }
            sets.project_primal(&w, &mut v_new);
            let mut diff = 0.0;
            for j in 0..n {
                let d = v_new[j] - v[j];
                diff += d * d;
                vbar[j] = 2.0 * v_new[j] - v[j];
            }
            std::mem::swap(&mut v, &mut v_new);
            rel = diff.sqrt() / norm(&v).max(1e-300);
            if rel <= opts.eta && sets.dual_violation(&v) <= opts.feas_tol {
                self.last_iterations = it;
                return Ok(v);
            }
        }
        self.last_iterations = opts.max_iter;
        Err(Error::ProxNonConvergence {
            iterations: opts.max_iter,
            residual: rel,
            last: v,
        })
    }
}

/// One-shot prox of the constraint indicator at `y`.
pub fn prox_v<S: ProxSets + ?Sized>(y: &[f64], sets: &S, opts: &ProxOptions) -> Result<Vec<f64>> {
    ProxSolver::new(y.len()).solve(y, sets, opts)
}
