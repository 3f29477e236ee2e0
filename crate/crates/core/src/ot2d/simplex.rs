use serde::{Deserialize, Serialize};

use super::measure::{sq_dist, Atoms, Measure2D};
use crate::error::{Error, Result};

/// Largest support (on either side) accepted by the exact solver.
pub const EXACT_CAP: usize = 400;

/// Sparse coupling between `n_source` and `n_target` points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransportPlan {
    pub n_source: usize,
    pub n_target: usize,
    /// `(source, target, mass)` with positive mass.
    pub entries: Vec<(usize, usize, f64)>,
}

impl TransportPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.n_source];
        for &(i, _, m) in &self.entries {
            r[i] += m;
        }
        r
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n_target];
        for &(_, j, m) in &self.entries {
            c[j] += m;
        }
        c
    }

    /// Largest deviation of the marginals from `a` and `b`.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let r = self.row_sums().iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_target]; self.n_source];
        for &(i, j, m) in &self.entries {
            d[i][j] += m;
        }
        d
    }
}

/// Optimal basis of a transportation problem, reusable as a warm start
/// when only the costs change.
#[derive(Clone, Debug, Default)]
pub struct Basis {
    cells: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct ExactOt {
    pub plan: TransportPlan,
    pub cost: f64,
    pub pivots: usize,
    pub basis: Basis,
}

/// Exact squared-Euclidean transport between two lattice measures. The
/// plan is indexed by full grid indices.
pub fn ot_plan_exact(mu: &Measure2D, nu: &Measure2D) -> Result<(TransportPlan, f64)> {
    let (sa, sb) = (mu.support(), nu.support());
    let out = ot_atoms_exact(&Atoms::of(mu), &Atoms::of(nu), None)?;
    let entries = out.plan.entries.iter().map(|&(i, j, m)| (sa[i], sb[j], m)).collect();
    Ok((
        TransportPlan {
            n_source: mu.weights().len(),
            n_target: nu.weights().len(),
            entries,
        },
        out.cost,
    ))
}

/// Exact squared-Euclidean transport between two atom sets.
pub fn ot_atoms_exact(a: &Atoms, b: &Atoms, warm: Option<&Basis>) -> Result<ExactOt> {
    let size = a.len().max(b.len());
    if size > EXACT_CAP {
        return Err(Error::SizeCap { size, cap: EXACT_CAP });
    }
    let n = b.len();
    let mut cost = vec![0.0; a.len() * n];
    for (i, x) in a.positions.iter().enumerate() {
        for (j, y) in b.positions.iter().enumerate() {
            cost[i * n + j] = sq_dist(*x, *y);
        }
    }
    transport_simplex(&a.masses, &b.masses, &cost, warm)
}

/// Transportation simplex (northwest-corner start, potentials, most
/// negative reduced cost, Bland's rule after long degenerate stalls).
/// `cost` is row-major `a.len() x b.len()`.
pub fn transport_simplex(a: &[f64], b: &[f64], cost: &[f64], warm: Option<&Basis>) -> Result<ExactOt> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 {
        return Err(Error::Validation("transport between empty measures".into()));
    }
    if cost.len() != m * n {
        return Err(Error::Validation("cost matrix has wrong size".into()));
    }
    if a.iter().chain(b).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Validation("transport marginals must be finite and nonnegative".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 * sa.max(sb) {
        return Err(Error::Validation(format!("unbalanced marginals: {sa} vs {sb}")));
    }
    let b: Vec<f64> = b.iter().map(|x| x * sa / sb).collect();

    let mut basis = warm
        .and_then(|w| flows_on_tree(a, &b, &w.cells))
        .unwrap_or_else(|| northwest(a, &b));

    let cmax = cost.iter().fold(0.0f64, |x, y| x.max(y.abs())).max(1e-300);
    let tol = 1e-12 * cmax;
    let nodes = m + n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut stack = Vec::with_capacity(nodes);
    let mut seen = vec![false; nodes];
    let mut parent = vec![(usize::MAX, usize::MAX); nodes];
    let cap = 50 * m * n + 1000;
    let mut stall = 0usize;
    let mut pivots = 0usize;
    loop {
        for l in adj.iter_mut() {
            l.clear();
        }
        for (e, &(i, j, _)) in basis.iter().enumerate() {
            adj[i].push(e);
            adj[m + j].push(e);
        }
        // potentials u_i + v_j = c_ij on the basis tree
        seen.iter_mut().for_each(|s| *s = false);
        stack.clear();
        stack.push(0);
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &e in &adj[node] {
                let (i, j, _) = basis[e];
                let c = cost[i * n + j];
                if node < m {
                    if !seen[m + j] {
                        v[j] = c - u[i];
                        seen[m + j] = true;
                        stack.push(m + j);
                    }
                } else if !seen[i] {
                    u[i] = c - v[j];
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Transport("basis lost connectivity".into()));
        }
        let bland = stall > 10 * nodes;
        let mut enter = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                let r = cost[i * n + j] - u[i] - v[j];
                if r < best {
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = r;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        pivots += 1;
        if pivots > cap {
            return Err(Error::Transport(format!("no optimal basis after {cap} pivots")));
        }
        // tree path from column ej to row ei
        seen.iter_mut().for_each(|s| *s = false);
        stack.clear();
        stack.push(m + ej);
        seen[m + ej] = true;
        while let Some(node) = stack.pop() {
            if node == ei {
                break;
            }
            for &e in &adj[node] {
                let (i, j, _) = basis[e];
                let other = if node < m { m + j } else { i };
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = (node, e);
                    stack.push(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = ei;
        while node != m + ej {
            let (prev, e) = parent[node];
            path.push(e);
            node = prev;
        }
        path.reverse();
        // signs along the path from the column: -, +, -, ...
        let mut theta = f64::INFINITY;
        let mut leave = usize::MAX;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let f = basis[e].2;
                if f < theta || (bland && f == theta && e < leave) {
                    theta = f;
                    leave = e;
                }
            }
        }
        let theta = theta.max(0.0);
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis[e].2 = (basis[e].2 - theta).max(0.0);
            } else {
                basis[e].2 += theta;
            }
        }
        basis[leave] = (ei, ej, theta);
        stall = if theta > 0.0 { 0 } else { stall + 1 };
    }

    let total: f64 = basis.iter().map(|&(i, j, f)| f * cost[i * n + j]).sum();
    Ok(ExactOt {
        plan: TransportPlan {
            n_source: m,
            n_target: n,
            entries: basis.iter().filter(|c| c.2 > 0.0).copied().collect(),
        },
        cost: total,
        pivots,
        basis: Basis {
            cells: basis.iter().map(|&(i, j, _)| (i, j)).collect(),
        },
    })
}

fn northwest(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let (m, n) = (a.len(), b.len());
    let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
    let (mut i, mut j) = (0, 0);
    let mut cells = Vec::with_capacity(m + n - 1);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        cells.push((i, j, x));
        ra[i] -= x;
        rb[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || ra[i] <= rb[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    cells
}

/// Flows of a spanning-tree basis, or `None` if the cells do not form a
/// feasible spanning tree for these marginals.
fn flows_on_tree(a: &[f64], b: &[f64], cells: &[(usize, usize)]) -> Option<Vec<(usize, usize, f64)>> {
    let (m, n) = (a.len(), b.len());
    if cells.len() != m + n - 1 || cells.iter().any(|&(i, j)| i >= m || j >= n) {
        return None;
    }
    let mut rem: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut deg = vec![0usize; m + n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
    for (e, &(i, j)) in cells.iter().enumerate() {
        deg[i] += 1;
        deg[m + j] += 1;
        adj[i].push(e);
        adj[m + j].push(e);
    }
    let mut flows = vec![f64::NAN; cells.len()];
    let mut leaves: Vec<usize> = (0..m + n).filter(|&k| deg[k] == 1).collect();
    let mut done = 0;
    while let Some(node) = leaves.pop() {
        if deg[node] != 1 {
            continue;
        }
        let Some(&e) = adj[node].iter().find(|&&e| flows[e].is_nan()) else { continue };
        let (i, j) = cells[e];
        let other = if node < m { m + j } else { i };
        let f = rem[node];
        flows[e] = f;
        rem[node] = 0.0;
        rem[other] -= f;
        deg[node] = 0;
        deg[other] -= 1;
        done += 1;
        if deg[other] == 1 {
            leaves.push(other);
        }
    }
    let scale = a.iter().sum::<f64>().max(1e-300);
    if done != cells.len() || flows.iter().any(|f| *f < -1e-12 * scale) {
        return None;
    }
    Some(cells.iter().zip(flows).map(|(&(i, j), f)| (i, j, f.max(0.0))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot2d::Grid2D;

    #[test]
    fn identical_measures_cost_nothing() {
        let g = Grid2D::pixels(3, 3).unwrap();
        let mu = Measure2D::from_fn(g, |x, y| 1.0 + x + 2.0 * y).unwrap();
        let (plan, cost) = ot_plan_exact(&mu, &mu).unwrap();
        assert!(cost.abs() < 1e-14);
        for &(i, j, _) in &plan.entries {
            assert_eq!(i, j);
        }
        assert!(plan.marginal_error(mu.weights(), mu.weights()) < 1e-15);
    }

    #[test]
    fn two_atoms() {
        let g = Grid2D::pixels(4, 4).unwrap();
        let a = Measure2D::dirac(g.clone(), g.index(0, 0)).unwrap();
        let b = Measure2D::dirac(g.clone(), g.index(2, 3)).unwrap();
        let (_, cost) = ot_plan_exact(&a, &b).unwrap();
        assert!((cost - 13.0).abs() < 1e-12);
    }

    #[test]
    fn warm_start_reaches_the_same_optimum() {
        let a = vec![0.3, 0.2, 0.5];
        let b = vec![0.25, 0.25, 0.1, 0.4];
        let c1: Vec<f64> = (0..12).map(|k| ((k * 7) % 5) as f64).collect();
        let c2: Vec<f64> = (0..12).map(|k| ((k * 3) % 7) as f64).collect();
        let first = transport_simplex(&a, &b, &c1, None).unwrap();
        let warm = transport_simplex(&a, &b, &c2, Some(&first.basis)).unwrap();
        let cold = transport_simplex(&a, &b, &c2, None).unwrap();
        assert!((warm.cost - cold.cost).abs() < 1e-14);
    }

    #[test]
    fn size_cap() {
        let at = Atoms {
            positions: vec![[0.0, 0.0]; EXACT_CAP + 1],
            masses: vec![1.0 / (EXACT_CAP + 1) as f64; EXACT_CAP + 1],
        };
        assert!(matches!(ot_atoms_exact(&at, &at, None), Err(Error::SizeCap { .. })));
    }
}
