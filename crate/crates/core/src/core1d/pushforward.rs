use super::grid::Grid1D;
use super::measure::{solve_linear_density, DiscreteMeasure1D, QuantileFn};
use crate::error::{Error, Result};

/// Cells whose image is narrower than this fraction of their width are
/// treated as point masses, which bounds `1 / |T'|`.
/// Pieces of the pushforward narrower than this fraction of the output
/// spacing are sampled by hat averages.
pub const STEEP_FRACTION: f64 = 0.25;

pub const SLOPE_FLOOR: f64 = 1e-8;

/// Pushforward `T # rho` of a piecewise-linear density by a piecewise-linear
/// map, with exact cdf and quantile.
///
/// Each grid cell maps affinely onto an interval carrying a linear density
/// `rho(T^{-1}(y)) / |T'|`. Summing over cells handles non-injective maps:
/// every monotone branch contributes its own term.
#[derive(Clone, Debug)]
pub struct Pushforward {
    ys: Vec<f64>,
    atoms: Vec<f64>,
    dens_l: Vec<f64>,
    dens_r: Vec<f64>,
    cdf_before: Vec<f64>,
    cdf_after: Vec<f64>,
    raw_mass: f64,
    source: Grid1D,
}

struct Piece {
    lo: f64,
    hi: f64,
    dlo: f64,
    dhi: f64,
}

impl Piece {
    fn at(&self, y: f64) -> f64 {
        self.dlo + (self.dhi - self.dlo) * (y - self.lo) / (self.hi - self.lo)
    }
}

/// Builds `T # rho` for `T` sampled on `rho`'s grid.
pub fn pushforward(rho: &DiscreteMeasure1D, t: &[f64]) -> Result<Pushforward> {
    let grid = rho.grid();
    let n = grid.len();
    if t.len() != n {
        return Err(Error::Validation(format!(
            "map has {} samples for a grid of {} points",
            t.len(),
            n
        )));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation("map has non-finite values".into()));
    }
    let (tmin, tmax) = t
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if tmax - tmin <= SLOPE_FLOOR * grid.width() {
        return Err(Error::DegenerateMap(
            "map is constant on the whole grid; the pushforward has no density".into(),
        ));
    }
    let f = rho.density();
    let mut pieces = Vec::new();
    let mut point_masses = Vec::new();
    for j in 0..n - 1 {
        let dx = grid.spacing(j);
        let mass = 0.5 * dx * (f[j] + f[j + 1]);
        if mass <= 0.0 {
            continue;
        }
        let (t0, t1) = (t[j], t[j + 1]);
        let w = (t1 - t0).abs();
        if w <= SLOPE_FLOOR * dx {
            point_masses.push((0.5 * (t0 + t1), mass));
            continue;
        }
        let s = w / dx;
        pieces.push(if t1 > t0 {
            Piece { lo: t0, hi: t1, dlo: f[j] / s, dhi: f[j + 1] / s }
        } else {
            Piece { lo: t1, hi: t0, dlo: f[j + 1] / s, dhi: f[j] / s }
        });
    }

    let mut ys: Vec<f64> = pieces
        .iter()
        .flat_map(|p| [p.lo, p.hi])
        .chain(point_masses.iter().map(|a| a.0))
        .collect();
    ys.sort_by(|a, b| a.total_cmp(b));
    ys.dedup();
    let nb = ys.len();
    let idx = |y: f64| ys.partition_point(|&v| v < y);

    let mut atoms = vec![0.0; nb];
    for &(y, m) in &point_masses {
        atoms[idx(y)] += m;
    }
    let ni = nb.saturating_sub(1);
    let mut dens_l = vec![0.0; ni];
    let mut dens_r = vec![0.0; ni];
    for p in &pieces {
        let (i0, i1) = (idx(p.lo), idx(p.hi));
        for e in i0..i1 {
            dens_l[e] += p.at(ys[e]);
            dens_r[e] += p.at(ys[e + 1]);
        }
    }
    let mut cdf_before = vec![0.0; nb];
    let mut cdf_after = vec![0.0; nb];
    let mut acc = 0.0;
    for b in 0..nb {
        if b > 0 {
            acc += 0.5 * (ys[b] - ys[b - 1]) * (dens_l[b - 1] + dens_r[b - 1]);
        }
        cdf_before[b] = acc;
        acc += atoms[b];
        cdf_after[b] = acc;
    }
    let raw_mass = acc;
    for c in cdf_before.iter_mut().chain(cdf_after.iter_mut()) {
        *c = (*c / raw_mass).min(1.0);
    }
    if let Some(last) = cdf_after.last_mut() {
        *last = 1.0;
    }
    for v in dens_l.iter_mut().chain(dens_r.iter_mut()).chain(atoms.iter_mut()) {
        *v /= raw_mass;
    }
    Ok(Pushforward {
        ys,
        atoms,
        dens_l,
        dens_r,
        cdf_before,
        cdf_after,
        raw_mass,
        source: grid.clone(),
    })
}

/// `T # rho` as a density on the default output grid (see
/// [`Pushforward::default_grid`]).
pub fn pushforward_density(rho: &DiscreteMeasure1D, t: &[f64]) -> Result<DiscreteMeasure1D> {
    let p = pushforward(rho, t)?;
    p.to_density(&p.default_grid()?)
}

/// Maximal index ranges `[start, end]` on which the samples are monotone.
pub fn monotone_segments(t: &[f64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if t.len() < 2 {
        return out;
    }
    let mut start = 0;
    let mut dir = 0i8;
    for j in 0..t.len() - 1 {
        let d = t[j + 1] - t[j];
        let s = if d > 0.0 { 1 } else if d < 0.0 { -1 } else { 0 };
        if s != 0 && dir != 0 && s != dir {
            out.push((start, j));
            start = j;
        }
        if s != 0 {
            dir = s;
        }
    }
    out.push((start, t.len() - 1));
    out
}

impl Pushforward {
    pub fn support_min(&self) -> f64 {
        self.quantile_at(0.0)
    }

    pub fn support_max(&self) -> f64 {
        self.quantile_at(1.0)
    }

    /// Mass of the source measure before normalization (one for valid
    /// inputs).
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Total point mass from cells mapped below the slope floor.
    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        let nb = self.ys.len();
        if nb == 0 || y < self.ys[0] {
            return 0.0;
        }
        let b = self.ys.partition_point(|&v| v <= y) - 1;
        if b == nb - 1 || y == self.ys[b] {
            return self.cdf_after[b];
        }
        let s = y - self.ys[b];
        let l = self.ys[b + 1] - self.ys[b];
        let (d0, d1) = (self.dens_l[b], self.dens_r[b]);
        (self.cdf_after[b] + d0 * s + (d1 - d0) * s * s / (2.0 * l)).min(1.0)
    }

    /// Pointwise density at `y`; at a breakpoint where the density jumps,
    /// the mean of the one-sided limits.
    pub fn density_at(&self, y: f64) -> f64 {
        let (l, r) = self.one_sided(y);
        0.5 * (l + r)
    }

    /// Left and right limits of the density at `y`.
    pub fn one_sided(&self, y: f64) -> (f64, f64) {
        let nb = self.ys.len();
        if nb == 0 || y < self.ys[0] || y > self.ys[nb - 1] {
            return (0.0, 0.0);
        }
        let b = self.ys.partition_point(|&v| v <= y) - 1;
        let tol = 1e-12 * (1.0 + y.abs());
        let at_break = |k: usize| {
            let left = if k > 0 { self.dens_r[k - 1] } else { 0.0 };
            let right = if k < nb - 1 { self.dens_l[k] } else { 0.0 };
            (left, right)
        };
        if (y - self.ys[b]).abs() <= tol {
            return at_break(b);
        }
        if b + 1 < nb && (self.ys[b + 1] - y).abs() <= tol {
            return at_break(b + 1);
        }
        let s = (y - self.ys[b]) / (self.ys[b + 1] - self.ys[b]);
        let v = self.dens_l[b] + s * (self.dens_r[b] - self.dens_l[b]);
        (v, v)
    }

    /// Uniform grid with the source spacing, aligned with the source grid
    /// and extended to cover the support. Non-uniform source grids are kept
    /// as is when they already cover the support.
    pub fn default_grid(&self) -> Result<Grid1D> {
        let src = &self.source;
        let (lo, hi) = (self.support_min(), self.support_max());
        let (a, b) = (src.a(), src.b());
        if src.is_uniform() && src.first() == a && src.last() == b {
            let n = src.len();
            let h = (b - a) / (n - 1) as f64;
            let left = if lo < a { ((a - lo) / h - 1e-9).ceil() as i64 } else { 0 };
            let right = if hi > b { ((hi - b) / h - 1e-9).ceil() as i64 } else { 0 };
            if left == 0 && right == 0 {
                return Ok(src.clone());
            }
            let pts: Vec<f64> = (-left..(n as i64 + right))
                .map(|i| if i == n as i64 - 1 { b } else { a + i as f64 * h })
                .collect();
            let (ga, gb) = (pts[0].min(a), pts[pts.len() - 1].max(b));
            return Grid1D::new(pts, ga, gb);
        }
        if lo >= src.first() && hi <= src.last() {
            return Ok(src.clone());
        }
        let h = src.mean_spacing();
        let mut pts = Vec::new();
        if lo < src.first() {
            let k = ((src.first() - lo) / h - 1e-9).ceil() as usize;
            pts.extend((1..=k).rev().map(|i| src.first() - i as f64 * h));
        }
        pts.extend_from_slice(src.points());
        if hi > src.last() {
            let k = ((hi - src.last()) / h - 1e-9).ceil() as usize;
            pts.extend((1..=k).map(|i| src.last() + i as f64 * h));
        }
        let (ga, gb) = (pts[0].min(a), pts[pts.len() - 1].max(b));
        Grid1D::new(pts, ga, gb)
    }

    /// Density sampled on `grid` before renormalization.
    ///
    /// Grid points where the map is resolved get the pointwise density.
    /// Near steep pieces (images narrower than a quarter of the local
    /// spacing, i.e. near folds and flat stretches of the map) the
    /// hat average `int phi_j d(T # rho) / int phi_j` is used instead, so
    /// peaks stay finite and mass is kept. Point masses are spread over the
    /// two neighbouring hat functions.
    pub fn sample_density(&self, grid: &Grid1D) -> Vec<f64> {
        let pts = grid.points();
        let n = pts.len();
        let last = n - 1;
        let q = grid.trapezoid_weights();
        let hat = |k: usize, y: f64| -> (f64, f64) {
            let s = ((y - pts[k]) / (pts[k + 1] - pts[k])).clamp(0.0, 1.0);
            (1.0 - s, s)
        };
        let mut out: Vec<f64> = pts.iter().map(|&y| self.density_at(y)).collect();
        out[0] = self.one_sided(pts[0]).1;
        out[last] = self.one_sided(pts[last]).0;

        let mut hat_mass = vec![0.0; n];
        let mut steep = vec![false; n];
        let nb = self.ys.len();
        for b in 0..nb.saturating_sub(1) {
            let (lo, hi) = (self.ys[b], self.ys[b + 1]);
            let (d0, d1) = (self.dens_l[b], self.dens_r[b]);
            if hi <= lo || (d0 == 0.0 && d1 == 0.0) {
                continue;
            }
            let narrow = hi - lo < STEEP_FRACTION * grid.spacing(grid.cell_of(0.5 * (lo + hi)));
            let dens = |y: f64| d0 + (d1 - d0) * (y - lo) / (hi - lo);
            let mut u = lo;
            while u < hi {
                let k = grid.cell_of(u);
                let w = if u < pts[0] { pts[0].min(hi) } else if pts[k + 1] > u { pts[k + 1].min(hi) } else { hi };
                let w = if w <= u { hi } else { w };
                // density times hat is quadratic on [u, w]: Simpson is exact
                let mid = 0.5 * (u + w);
                let c = (w - u) / 6.0;
                let (a0, a1) = hat(k, u);
                let (m0, m1) = hat(k, mid);
                let (b0, b1) = hat(k, w);
                let (du, dm, dw) = (dens(u), dens(mid), dens(w));
                hat_mass[k] += c * (du * a0 + 4.0 * dm * m0 + dw * b0);
                hat_mass[k + 1] += c * (du * a1 + 4.0 * dm * m1 + dw * b1);
                if narrow {
                    steep[k] = true;
                    steep[k + 1] = true;
                }
                u = w;
            }
        }
        for j in 0..n {
            if steep[j] {
                out[j] = hat_mass[j] / q[j];
            }
        }
        for (b, &m) in self.atoms.iter().enumerate() {
            if m > 0.0 {
                let k = grid.cell_of(self.ys[b]);
                let (w0, w1) = hat(k, self.ys[b]);
                out[k] += m * w0 / q[k];
                out[k + 1] += m * w1 / q[k + 1];
            }
        }
        out
    }

    pub fn to_density(&self, grid: &Grid1D) -> Result<DiscreteMeasure1D> {
        Ok(DiscreteMeasure1D::normalized(grid.clone(), self.sample_density(grid))?.0)
    }
}

impl QuantileFn for Pushforward {
    fn quantile_at(&self, alpha: f64) -> f64 {
        let nb = self.ys.len();
        if !(alpha > 0.0) {
            for b in 0..nb {
                if self.atoms[b] > 0.0 || (b + 1 < nb && self.dens_l[b] + self.dens_r[b] > 0.0) {
                    return self.ys[b];
                }
            }
            return self.ys[0];
        }
        let alpha = alpha.min(1.0);
        let b = self.cdf_after.partition_point(|&c| c < alpha).min(nb - 1);
        if b > 0 && self.cdf_before[b] >= alpha {
            let e = b - 1;
            let r = alpha - self.cdf_after[e];
            return self.ys[e]
                + solve_linear_density(self.dens_l[e], self.dens_r[e], self.ys[b] - self.ys[e], r);
        }
        self.ys[b]
    }

    fn quantile_samples(&self, q: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(q);
        out.push(self.quantile_at(0.0));
        let nb = self.ys.len();
        let mut b = 0usize;
        for i in 1..q {
            let alpha = (i as f64 / (q - 1) as f64).min(1.0);
            while b < nb - 1 && self.cdf_after[b] < alpha {
                b += 1;
            }
            let v = if b > 0 && self.cdf_before[b] >= alpha {
                let e = b - 1;
                let r = alpha - self.cdf_after[e];
                self.ys[e]
                    + solve_linear_density(self.dens_l[e], self.dens_r[e], self.ys[b] - self.ys[e], r)
            } else {
                self.ys[b]
            };
            out.push(v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform01(n: usize) -> DiscreteMeasure1D {
        DiscreteMeasure1D::new(Grid1D::uniform(0.0, 1.0, n).unwrap(), vec![1.0; n]).unwrap()
    }

    #[test]
    fn identity_returns_source() {
        let g = Grid1D::uniform(-3.0, 3.0, 61).unwrap();
        let rho = DiscreteMeasure1D::from_fn(g.clone(), |x| (-x * x).exp()).unwrap();
        let out = pushforward_density(&rho, g.points()).unwrap();
        assert_eq!(out.grid(), &g);
        for (a, b) in out.density().iter().zip(rho.density()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_map_halves_density() {
        let rho = uniform01(101);
        let t: Vec<f64> = rho.grid().points().iter().map(|x| 2.0 * x).collect();
        let p = pushforward(&rho, &t).unwrap();
        assert!((p.cdf(1.0) - 0.5).abs() < 1e-12);
        assert!((p.quantile_at(0.25) - 0.5).abs() < 1e-12);
        let out = p.to_density(&p.default_grid().unwrap()).unwrap();
        assert!((out.grid().last() - 2.0).abs() < 1e-12);
        for &v in out.density() {
            assert!((v - 0.5).abs() < 1e-9, "{v}");
        }
    }

    #[test]
    fn folded_map_sums_branches() {
        let rho = uniform01(101);
        let t: Vec<f64> = rho.grid().points().iter().map(|x| (x - 0.5).abs() + 0.5).collect();
        let p = pushforward(&rho, &t).unwrap();
        assert_eq!(monotone_segments(&t), vec![(0, 50), (50, 100)]);
        for y in [0.6, 0.77, 0.99] {
            assert!((p.density_at(y) - 2.0).abs() < 1e-9, "{y}");
        }
        assert!((p.one_sided(0.5).1 - 2.0).abs() < 1e-9);
        assert!((p.cdf(0.75) - 0.5).abs() < 1e-12);
        assert_eq!(p.density_at(0.3), 0.0);
    }

    #[test]
    fn constant_map_is_degenerate() {
        let rho = uniform01(11);
        assert!(matches!(pushforward(&rho, &[0.3; 11]), Err(Error::DegenerateMap(_))));
    }

    #[test]
    fn flat_pieces_become_point_masses() {
        let rho = uniform01(11);
        let t: Vec<f64> = rho
            .grid()
            .points()
            .iter()
            .map(|&x| if x < 0.5 { 0.25 } else { x })
            .collect();
        let p = pushforward(&rho, &t).unwrap();
        assert!((p.atom_mass() - 0.4).abs() < 1e-12);
        assert!((p.quantile_at(0.3) - 0.25).abs() < 1e-12);
        let g = p.default_grid().unwrap();
        let s = p.sample_density(&g);
        assert!(s.iter().all(|v| v.is_finite()));
        assert!((g.integrate(&s) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn support_outside_domain_extends_grid() {
        let g = Grid1D::uniform(0.0, 1.0, 21).unwrap();
        let rho = DiscreteMeasure1D::new(g.clone(), vec![1.0; 21]).unwrap();
        let t: Vec<f64> = g.points().iter().map(|x| x + 0.3).collect();
        let p = pushforward(&rho, &t).unwrap();
        let out = p.default_grid().unwrap();
        assert!(out.last() >= 1.3 - 1e-12);
        assert_eq!(out.first(), 0.0);
        let m = p.to_density(&out).unwrap();
        assert!((m.mean() - 0.8).abs() < 1e-3);
    }
}
