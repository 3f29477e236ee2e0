use super::measure::Grid2D;
use crate::error::{Error, Result};
use crate::gpca_iter::sets::project_box_hyperplanes;
use crate::gpca_iter::ProxSets;

/// Constraint sets for a velocity field stored as `[v_x; v_y]` (length
/// `2P`): the per-coordinate box `D`, the divergence interval `E` at every
/// lattice point, and orthogonality `S` to previous fields.
#[derive(Clone, Debug)]
pub struct FeasibleSets2D {
    pub t0: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub div_lo: f64,
    pub div_hi: f64,
    grid: Grid2D,
    normals: Vec<Vec<f64>>,
}

impl FeasibleSets2D {
    /// `weights` are the barycenter weights defining `S`.
    pub fn new(grid: &Grid2D, weights: &[f64], t0: f64, priors: &[Vec<f64>]) -> Result<Self> {
        if !(t0.abs() < 1.0) || !t0.is_finite() {
            return Err(Error::Parameter(format!("t0 = {t0} must lie in (-1, 1)")));
        }
        let p = grid.len();
        if weights.len() != p {
            return Err(Error::Validation("barycenter weights do not match the grid".into()));
        }
        let bound = |x: f64, a: f64, b: f64| {
            (
                ((a - x) / (t0 + 1.0)).max((b - x) / (t0 - 1.0)).min(0.0),
                ((a - x) / (t0 - 1.0)).min((b - x) / (t0 + 1.0)).max(0.0),
            )
        };
        let mut lower = vec![0.0; 2 * p];
        let mut upper = vec![0.0; 2 * p];
        for (k, pt) in grid.points().iter().enumerate() {
            (lower[k], upper[k]) = bound(pt[0], grid.x0, grid.x1);
            (lower[p + k], upper[p + k]) = bound(pt[1], grid.y0, grid.y1);
        }
        let normals = priors
            .iter()
            .map(|u| {
                if u.len() != 2 * p {
                    return Err(Error::Validation("prior field has wrong length".into()));
                }
                Ok((0..2 * p).map(|k| u[k] * weights[k % p]).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            t0,
            lower,
            upper,
            div_lo: -1.0 / (t0 + 1.0),
            div_hi: 1.0 / (1.0 - t0),
            grid: grid.clone(),
            normals,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    /// Discrete divergence: backward differences, `u(0)` at the first
    /// index and `-u(last - 1)` at the last.
    pub fn divergence(&self, v: &[f64], out: &mut [f64]) {
        let (rows, cols) = (self.grid.rows, self.grid.cols);
        let p = rows * cols;
        let (hx, hy) = (self.grid.hx(), self.grid.hy());
        let back = |u: &[f64], k: usize, at: usize, n: usize, stride: usize| -> f64 {
            if at == 0 {
                u[k]
            } else if at == n - 1 {
                -u[k - stride]
            } else {
                u[k] - u[k - stride]
            }
        };
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                out[k] = back(&v[..p], k, c, cols, 1) / hx + back(&v[p..], k, r, rows, cols) / hy;
            }
        }
    }

    /// `K^T z = -grad z` with forward differences, zero at the last index.
    pub fn neg_gradient(&self, z: &[f64], out: &mut [f64]) {
        let (rows, cols) = (self.grid.rows, self.grid.cols);
        let p = rows * cols;
        let (hx, hy) = (self.grid.hx(), self.grid.hy());
        for r in 0..rows {
            for c in 0..cols {
                let k = r * cols + c;
                out[k] = if c + 1 < cols { -(z[k + 1] - z[k]) / hx } else { 0.0 };
                out[p + k] = if r + 1 < rows { -(z[k + cols] - z[k]) / hy } else { 0.0 };
            }
        }
    }

    pub fn box_violation(&self, v: &[f64]) -> f64 {
        v.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn div_violation(&self, v: &[f64]) -> f64 {
        let mut d = vec![0.0; self.grid.len()];
        self.divergence(v, &mut d);
        d.iter().fold(0.0f64, |m, x| m.max(self.div_lo - x).max(x - self.div_hi))
    }

    pub fn orth_violation(&self, v: &[f64]) -> f64 {
        self.normals
            .iter()
            .map(|a| a.iter().zip(v).map(|(x, y)| x * y).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }

    pub fn violation(&self, v: &[f64]) -> f64 {
        self.box_violation(v).max(self.div_violation(v))
    }

    /// Projects onto `D ∩ S`, then scales toward zero until `E` and `D`
    /// hold exactly.
    pub fn restore(&self, v: &mut [f64]) {
        let y = v.to_vec();
        self.project_primal(&y, v);
        let mut d = vec![0.0; self.grid.len()];
        self.divergence(v, &mut d);
        let mut c: f64 = 1.0;
        for x in &d {
            if *x > self.div_hi {
                c = c.min(self.div_hi / x);
            } else if *x < self.div_lo {
                c = c.min(self.div_lo / x);
            }
        }
        for k in 0..v.len() {
            if v[k] > self.upper[k] {
                c = c.min(if self.upper[k] > 0.0 { self.upper[k] / v[k] } else { 0.0 });
            } else if v[k] < self.lower[k] {
                c = c.min(if self.lower[k] < 0.0 { self.lower[k] / v[k] } else { 0.0 });
            }
        }
        if c < 1.0 {
            let c = c * (1.0 - 1e-15);
            v.iter_mut().for_each(|x| *x *= c);
        }
    }
}

impl ProxSets for FeasibleSets2D {
    fn t0(&self) -> f64 {
        self.t0
    }
    fn dual_dim(&self) -> usize {
        self.grid.len()
    }
    fn k_op(&self, v: &[f64], out: &mut [f64]) {
        self.divergence(v, out)
    }
    fn k_adj(&self, z: &[f64], out: &mut [f64]) {
        self.neg_gradient(z, out)
    }
    fn delta_sq(&self) -> f64 {
        4.0 / self.grid.hx().powi(2) + 4.0 / self.grid.hy().powi(2)
    }
    fn project_primal(&self, y: &[f64], out: &mut [f64]) {
        project_box_hyperplanes(&self.lower, &self.upper, &self.normals, y, out)
    }
    fn dual_violation(&self, v: &[f64]) -> f64 {
        self.div_violation(v)
    }
}
