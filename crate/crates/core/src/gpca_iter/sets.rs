use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::core1d::{Grid1D, TangentSpace};
use crate::error::{Error, Result};

/// Constraint sets for one component at midpoint `t0`: the box `D`, the
/// slope interval `E` applied to forward differences, and orthogonality
/// `S` to previously found directions.
#[derive(Clone, Debug, Serialize)]
pub struct FeasibleSets {
    pub t0: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub slope_lo: f64,
    pub slope_hi: f64,
    /// Euclidean normals `p .* u_l` of the orthogonality constraints.
    #[serde(skip)]
    normals: Vec<Vec<f64>>,
    #[serde(skip)]
    spacings: Vec<f64>,
}

impl FeasibleSets {
    pub fn new(space: &TangentSpace, t0: f64, priors: &[Vec<f64>]) -> Result<Self> {
        Self::with_weights(space.grid(), space.weights(), t0, priors)
    }

    pub fn with_weights(grid: &Grid1D, weights: &[f64], t0: f64, priors: &[Vec<f64>]) -> Result<Self> {
        if !(t0.abs() < 1.0) || !t0.is_finite() {
            return Err(Error::Parameter(format!("t0 = {t0} must lie in (-1, 1)")));
        }
        let (a, b) = (grid.a(), grid.b());
        let lower: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| ((a - x) / (t0 + 1.0)).max((b - x) / (t0 - 1.0)).min(0.0))
            .collect();
        let upper: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| ((a - x) / (t0 - 1.0)).min((b - x) / (t0 + 1.0)).max(0.0))
            .collect();
        let normals = priors
            .iter()
            .map(|u| {
                if u.len() != grid.len() {
                    return Err(Error::Validation("prior direction has wrong length".into()));
                }
                Ok(u.iter().zip(weights).map(|(x, p)| x * p).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            t0,
            lower,
            upper,
            slope_lo: -1.0 / (t0 + 1.0),
            slope_hi: 1.0 / (1.0 - t0),
            normals,
            spacings: grid.spacings(),
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn n_priors(&self) -> usize {
        self.normals.len()
    }

    /// `(Kv)_j = (v_{j+1} - v_j) / D_j` for `j < N - 1`.
    pub fn k_op(&self, v: &[f64], out: &mut [f64]) {
        for j in 0..self.spacings.len() {
            out[j] = (v[j + 1] - v[j]) / self.spacings[j];
        }
    }

    /// Adjoint of [`Self::k_op`].
    pub fn k_adj(&self, z: &[f64], out: &mut [f64]) {
        let m = self.spacings.len();
        out.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..m {
            let c = z[j] / self.spacings[j];
            out[j] -= c;
            out[j + 1] += c;
        }
    }

    /// Bound `delta^2 >= ||K||^2` from row sums.
    pub fn delta_sq(&self) -> f64 {
        delta_sq(&self.spacings)
    }

    pub fn box_violation(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn slope_violation(&self, v: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.spacings.len() {
            let s = (v[j + 1] - v[j]) / self.spacings[j];
            worst = worst.max(self.slope_lo - s).max(s - self.slope_hi);
        }
        worst
    }

    /// Largest `|<v, u_l>|` in the weighted product.
    pub fn orth_violation(&self, v: &[f64]) -> f64 {
        self.normals
            .iter()
            .map(|a| dot(a, v).abs())
            .fold(0.0, f64::max)
    }

    /// Exact Euclidean projection onto `D ∩ S`.
    pub fn project_box_orth(&self, y: &[f64], out: &mut [f64]) {
        project_box_hyperplanes(&self.lower, &self.upper, &self.normals, y, out);
    }

    /// Largest factor `c` in `[0, 1]` with `c v` in `E` (box and
    /// orthogonality are preserved by scaling).
    pub fn slope_shrink_factor(&self, v: &[f64]) -> f64 {
        let mut c: f64 = 1.0;
        for j in 0..self.spacings.len() {
            let s = (v[j + 1] - v[j]) / self.spacings[j];
            if s > self.slope_hi {
                c = c.min(self.slope_hi / s);
            } else if s < self.slope_lo {
                c = c.min(self.slope_lo / s);
            }
        }
        c
    }

    /// Largest factor `c` in `[0, 1]` with `c v` in `D`.
    pub fn box_shrink_factor(&self, v: &[f64]) -> f64 {
        let mut c: f64 = 1.0;
        for j in 0..v.len() {
            if v[j] > self.upper[j] {
                c = c.min(if self.upper[j] > 0.0 { self.upper[j] / v[j] } else { 0.0 });
            } else if v[j] < self.lower[j] {
                c = c.min(if self.lower[j] < 0.0 { self.lower[j] / v[j] } else { 0.0 });
            }
        }
        c
    }

    /// Projects `v` onto `D ∩ S`, then scales it so that it lies in
    /// every set exactly.
    pub fn restore(&self, v: &mut [f64]) {
        let y = v.to_vec();
        self.project_box_orth(&y, v);
        // scaling toward 0 keeps D and S
        let c = self.slope_shrink_factor(v).min(self.box_shrink_factor(v));
        if c < 1.0 {
            let c = c * (1.0 - 1e-15);
            v.iter_mut().for_each(|x| *x *= c);
        }
    }

    pub fn violation(&self, v: &[f64]) -> f64 {
        self.box_violation(v).max(self.slope_violation(v))
    }
}

/// Euclidean projection onto `{lower <= v <= upper, <a_l, v> = 0}`.
///
/// Without normals this is a clamp. Otherwise the dual of
/// `min 0.5 |v - y|^2, lower <= v <= upper, A v = 0` is maximized by a
/// damped semismooth Newton method on the multipliers.
pub(crate) fn project_box_hyperplanes(lower: &[f64], upper: &[f64], normals: &[Vec<f64>], y: &[f64], out: &mut [f64]) {
    let clamp = |w: &[f64], out: &mut [f64]| {
        for j in 0..w.len() {
            out[j] = w[j].clamp(lower[j], upper[j]);
        }
    };
    let k = normals.len();
    if k == 0 {
        clamp(y, out);
        return;
    }
    let n = y.len();
    let mut lam = DVector::<f64>::zeros(k);
    let mut w = vec![0.0; n];
    let eval = |lam: &DVector<f64>, w: &mut Vec<f64>, v: &mut [f64]| -> f64 {
        for j in 0..n {
            let mut s = y[j];
            for l in 0..k {
                s -= normals[l][j] * lam[l];
            }
            w[j] = s;
        }
        clamp(w, v);
        // dual value
        let mut phi = 0.0;
        for j in 0..n {
            phi += 0.5 * (v[j] - y[j]).powi(2);
        }
        for l in 0..k {
            phi += lam[l] * dot(&normals[l], v);
        }
        phi
    };
    let mut phi = eval(&lam, &mut w, out);
    let scale: f64 = normals.iter().map(|a| dot(a, a)).fold(0.0, f64::max).sqrt();
    for _ in 0..100 {
        let g = DVector::from_iterator(k, normals.iter().map(|a| dot(a, out)));
        if g.amax() <= 1e-15 * scale.max(1e-300) * (1.0 + norm(out)) {
            break;
        }
        let mut h = DMatrix::<f64>::zeros(k, k);
        for j in 0..n {
            let free = w[j] > lower[j] && w[j] < upper[j];
            if !free {
                continue;
            }
            for l in 0..k {
                for m in l..k {
                    h[(l, m)] += normals[l][j] * normals[m][j];
                }
            }
        }
        for l in 0..k {
            for m in 0..l {
                h[(l, m)] = h[(m, l)];
            }
            h[(l, l)] += 1e-14 * scale * scale + 1e-300;
        }
        let d = match h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => g.clone(),
        };
        let mut step = 1.0;
        let mut accepted = false;
        let mut trial_v = vec![0.0; n];
        let mut trial_w = vec![0.0; n];
        for _ in 0..60 {
            let trial = &lam + &d * step;
            let p = eval(&trial, &mut trial_w, &mut trial_v);
            if p >= phi - 1e-16 * phi.abs() {
                lam = trial;
                phi = p;
                out.copy_from_slice(&trial_v);
                w.copy_from_slice(&trial_w);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
}

pub fn delta_sq(spacings: &[f64]) -> f64 {
    let m = spacings.len();
    let mut best: f64 = 0.0;
    for j in 0..m {
        let a = 1.0 / (spacings[j] * spacings[j]);
        let b = if j + 1 < m { 1.0 / (spacings[j + 1] * spacings[j + 1]) } else { a };
        best = best.max(a + b);
    }
    2.0 * best
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
