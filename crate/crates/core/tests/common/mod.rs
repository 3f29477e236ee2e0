#![allow(dead_code)]

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{DiscreteMeasure1D, Grid1D, LoggedDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// The synthetic location-scale set used throughout: n Gaussians on a
/// uniform N-point grid of [-10, 10].
pub fn gaussian_set(n: usize, n_grid: usize, seed: u64) -> (Grid1D, Vec<DiscreteMeasure1D>, Vec<(f64, f64)>) {
    let grid = Grid1D::uniform(-10.0, 10.0, n_grid).unwrap();
    let (data, params) = gaussian_location_scale(n, seed, &grid, GaussianRanges::default()).unwrap();
    (grid, data, params)
}

pub fn default_logged() -> LoggedDataset {
    let (grid, data, _) = gaussian_set(100, 256, 1);
    LoggedDataset::new(data, &grid, 10_000).unwrap()
}

/// Mixture of one to three Gaussian bumps on `grid`.
pub fn random_histogram(rng: &mut ChaCha8Rng, grid: &Grid1D) -> DiscreteMeasure1D {
    let m = rng.gen_range(1..=3);
    let bumps: Vec<(f64, f64, f64)> = (0..m)
        .map(|_| (rng.gen_range(0.2..1.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.6..2.0)))
        .collect();
    DiscreteMeasure1D::from_fn(grid.clone(), |x| {
        bumps.iter().map(|(w, mu, s)| w * (-0.5 * ((x - mu) / s).powi(2)).exp() / s).sum()
    })
    .unwrap()
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let fp = f(&y);
            y[j] = x[j] - h;
            let fm = f(&y);
            y[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `min 0.5 |v - y|^2` subject to `rows[i] . v <= rhs[i]` and
/// `eqs[l] . v = 0`, by Hildreth's dual coordinate ascent.
pub fn qp_hildreth(y: &[f64], rows: &[Vec<f64>], rhs: &[f64], eqs: &[Vec<f64>]) -> Vec<f64> {
    let mut lam = vec![0.0; rows.len()];
    let mut mu = vec![0.0; eqs.len()];
    let mut v = y.to_vec();
    let rn: Vec<f64> = rows.iter().map(|a| dot(a, a)).collect();
    let en: Vec<f64> = eqs.iter().map(|a| dot(a, a)).collect();
    for sweep in 0..2_000_000 {
        let mut change: f64 = 0.0;
        for i in 0..rows.len() {
            if rn[i] == 0.0 {
                continue;
            }
            let new = (lam[i] + (dot(&rows[i], &v) - rhs[i]) / rn[i]).max(0.0);
            let d = new - lam[i];
            if d != 0.0 {
                for (vj, aj) in v.iter_mut().zip(&rows[i]) {
                    *vj -= d * aj;
                }
                change = change.max(d.abs() * rn[i].sqrt());
                lam[i] = new;
            }
        }
        for l in 0..eqs.len() {
            if en[l] == 0.0 {
                continue;
            }
            let d = dot(&eqs[l], &v) / en[l];
            for (vj, aj) in v.iter_mut().zip(&eqs[l]) {
                *vj -= d * aj;
            }
            change = change.max(d.abs() * en[l].sqrt());
            mu[l] += d;
        }
        if change < 1e-15 && sweep > 10 {
            break;
        }
    }
    v
}

/// Rows of `id + (t0 +- 1) v in V` on `points` within `[a, b]`: range and
/// monotonicity, written straight from the definition.
pub fn feasibility_rows(points: &[f64], a: f64, b: f64, t0: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = points.len();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for c in [t0 + 1.0, t0 - 1.0] {
        for j in 0..n {
            // x_j + c v_j <= b and a <= x_j + c v_j
            let mut r = vec![0.0; n];
            r[j] = c;
            rows.push(r.clone());
            rhs.push(b - points[j]);
            r[j] = -c;
            rows.push(r);
            rhs.push(points[j] - a);
        }
        for j in 0..n - 1 {
            // x_j + c v_j <= x_{j+1} + c v_{j+1}
            let mut r = vec![0.0; n];
            r[j] = c;
            r[j + 1] = -c;
            rows.push(r);
            rhs.push(points[j + 1] - points[j]);
        }
    }
    (rows, rhs)
}

/// Euclidean projection onto `{a >= 0, sum a <= 1}` by enumerating supports.
pub fn simplex_oracle(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        // either the sum bound is inactive (a = y on support) or it is tight
        let mut cands = Vec::new();
        let mut free = vec![0.0; n];
        for &j in &idx {
            free[j] = y[j];
        }
        cands.push(free);
        if !idx.is_empty() {
            let shift = (idx.iter().map(|&j| y[j]).sum::<f64>() - 1.0) / idx.len() as f64;
            let mut tight = vec![0.0; n];
            for &j in &idx {
                tight[j] = y[j] - shift;
            }
            cands.push(tight);
        }
        for a in cands {
            let feasible = a.iter().all(|&x| x >= -1e-15) && a.iter().sum::<f64>() <= 1.0 + 1e-15;
            if !feasible {
                continue;
            }
            let d: f64 = a.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum();
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, a));
            }
        }
    }
    best.unwrap().1
}

/// Optimal transport cost between weights `a` and `b` by linear programming.
pub fn lp_ot_cost(a: &[f64], b: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..a.len())
        .map(|i| (0..b.len()).map(|j| lp.add_var(cost(i, j), (0.0, f64::INFINITY))).collect())
        .collect();
    for i in 0..a.len() {
        lp.add_constraint(vars[i].iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, a[i]);
    }
    // one column constraint is implied by the others
    for j in 0..b.len() - 1 {
        lp.add_constraint(vars.iter().map(|r| (r[j], 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, b[j]);
    }
    lp.solve().unwrap().objective()
}
