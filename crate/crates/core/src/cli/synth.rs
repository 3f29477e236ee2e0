use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::core1d::{DiscreteMeasure1D, Grid1D};
use crate::error::{Error, Result};
use crate::ot2d::{Grid2D, Measure2D};

/// Uniform ranges for the means and standard deviations of the
/// location-scale family.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GaussianRanges {
    pub mean: (f64, f64),
    pub sd: (f64, f64),
}

impl Default for GaussianRanges {
    fn default() -> Self {
        Self {
            mean: (-3.0, 3.0),
            sd: (0.5, 2.0),
        }
    }
}

/// Truncated Gaussian `N(m, s^2)` restricted to the grid, normalized.
pub fn truncated_gaussian(grid: &Grid1D, m: f64, s: f64) -> Result<DiscreteMeasure1D> {
    if !(s > 0.0) {
        return Err(Error::Parameter(format!("standard deviation {s} must be positive")));
    }
    DiscreteMeasure1D::from_fn(grid.clone(), |x| (-0.5 * ((x - m) / s).powi(2)).exp())
}

/// `n` truncated Gaussians with means and deviations drawn uniformly from
/// `ranges`; also returns the drawn `(mean, sd)` pairs.
pub fn gaussian_location_scale(
    n: usize,
    seed: u64,
    grid: &Grid1D,
    ranges: GaussianRanges,
) -> Result<(Vec<DiscreteMeasure1D>, Vec<(f64, f64)>)> {
    if n == 0 {
        return Err(Error::Parameter("empty dataset requested (n = 0)".into()));
    }
    let (m0, m1) = ranges.mean;
    let (s0, s1) = ranges.sd;
    if !(m0 <= m1 && 0.0 < s0 && s0 <= s1) {
        return Err(Error::Parameter("invalid mean or sd range".into()));
    }
    if m0 < grid.a() || m1 > grid.b() {
        return Err(Error::Parameter("mean range must lie inside the domain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let m = if m1 > m0 { rng.gen_range(m0..m1) } else { m0 };
            let s = if s1 > s0 { rng.gen_range(s0..s1) } else { s0 };
            (m, s)
        })
        .collect();
    let data = params
        .iter()
        .map(|&(m, s)| truncated_gaussian(grid, m, s))
        .collect::<Result<_>>()?;
    Ok((data, params))
}

/// Parameters of the elongated blobs of the 2D toy set.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct BlobRanges {
    /// Half-range of the center offset from the lattice middle, in grid units.
    pub shift: f64,
    /// Half-range of the rotation angle, in radians.
    pub angle: f64,
    /// Standard deviations along and across the long axis.
    pub sd: (f64, f64),
    /// Weights below this fraction of the peak are dropped.
    pub trim: f64,
}

impl Default for BlobRanges {
    fn default() -> Self {
        Self {
            shift: 1.5,
            angle: 0.6,
            sd: (2.2, 0.9),
            trim: 1e-3,
        }
    }
}

/// Anisotropic Gaussian blob centered at `c`, long axis at angle `theta`.
pub fn blob2d(grid: &Grid2D, c: [f64; 2], theta: f64, sd: (f64, f64), trim: f64) -> Result<Measure2D> {
    if !(sd.0 > 0.0 && sd.1 > 0.0) {
        return Err(Error::Parameter("blob deviations must be positive".into()));
    }
    let (cs, sn) = (theta.cos(), theta.sin());
    let m = Measure2D::from_fn(grid.clone(), |x, y| {
        let (dx, dy) = (x - c[0], y - c[1]);
        let a = cs * dx + sn * dy;
        let b = -sn * dx + cs * dy;
        (-0.5 * ((a / sd.0).powi(2) + (b / sd.1).powi(2))).exp()
    })?;
    m.trimmed(trim)
}

/// `n` translated and rotated blobs on a `rows x cols` pixel lattice.
pub fn blobs_2d(n: usize, seed: u64, rows: usize, cols: usize, ranges: BlobRanges) -> Result<Vec<Measure2D>> {
    if n == 0 {
        return Err(Error::Parameter("empty dataset requested (n = 0)".into()));
    }
    let grid = Grid2D::pixels(rows, cols)?;
    let mid = [(cols - 1) as f64 / 2.0, (rows - 1) as f64 / 2.0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let dx = ranges.shift * (2.0 * rng.gen::<f64>() - 1.0);
            let dy = ranges.shift * (2.0 * rng.gen::<f64>() - 1.0);
            let th = std::f64::consts::FRAC_PI_2 + ranges.angle * (2.0 * rng.gen::<f64>() - 1.0);
            blob2d(&grid, [mid[0] + dx, mid[1] + dy], th, ranges.sd, ranges.trim)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_nonempty() {
        let g = Grid1D::uniform(-10.0, 10.0, 64).unwrap();
        let r = GaussianRanges::default();
        assert!(gaussian_location_scale(0, 1, &g, r).is_err());
        let (a, pa) = gaussian_location_scale(5, 7, &g, r).unwrap();
        let (b, pb) = gaussian_location_scale(5, 7, &g, r).unwrap();
        assert_eq!(pa, pb);
        assert_eq!(a[3].density(), b[3].density());
        let (_, pc) = gaussian_location_scale(5, 8, &g, r).unwrap();
        assert_ne!(pa, pc);
    }
}
