use rayon::prelude::*;

use super::grid::Grid1D;
use super::measure::{DiscreteMeasure1D, QuantileFn};
use crate::error::{Error, Result};

/// Default number of quantile levels for Wasserstein quadratures.
pub const DEFAULT_Q: usize = 10_000;

/// Midpoints of the `q - 1` cells of the uniform level grid of size `q`.
pub fn midpoint_levels(q: usize) -> Vec<f64> {
    let m = (q - 1) as f64;
    (0..q - 1).map(|k| (k as f64 + 0.5) / m).collect()
}

/// Midpoint rule for `int_0^1 (a - b)^2` from quantiles sampled at
/// [`midpoint_levels`].
pub fn quantile_l2_sq(qa: &[f64], qb: &[f64]) -> f64 {
    debug_assert_eq!(qa.len(), qb.len());
    let s: f64 = qa.iter().zip(qb).map(|(a, b)| (a - b) * (a - b)).sum();
    s / qa.len() as f64
}

/// Quantiles at the level midpoints of a `q`-point grid.
pub fn midpoint_quantiles<A: QuantileFn + ?Sized>(mu: &A, q: usize) -> Vec<f64> {
    midpoint_levels(q).into_iter().map(|a| mu.quantile_at(a)).collect()
}

/// Squared 2-Wasserstein distance between any two quantile functions.
///
/// The level integral uses the midpoint rule on the cells of the uniform
/// `q`-point level grid, so the support extremes at levels 0 and 1 (which
/// carry no mass) never enter the sum.
pub fn wasserstein_sq_between<A: QuantileFn + ?Sized, B: QuantileFn + ?Sized>(
    mu: &A,
    nu: &B,
    q: usize,
) -> Result<f64> {
    if q < 2 {
        return Err(Error::Parameter(format!("need Q >= 2 quantile levels, got {q}")));
    }
    Ok(quantile_l2_sq(&midpoint_quantiles(mu, q), &midpoint_quantiles(nu, q)))
}

/// 2-Wasserstein distance between two measures on the line.
pub fn wasserstein_distance(mu: &DiscreteMeasure1D, nu: &DiscreteMeasure1D, q: usize) -> Result<f64> {
    Ok(wasserstein_sq_between(mu, nu, q)?.sqrt())
}

/// Average of quantile functions of the dataset on `q` levels.
pub fn average_quantile(dataset: &[DiscreteMeasure1D], q: usize) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::Parameter("barycenter of an empty dataset".into()));
    }
    if q < 2 {
        return Err(Error::Parameter(format!("need Q >= 2 quantile levels, got {q}")));
    }
    let samples: Vec<Vec<f64>> = dataset.par_iter().map(|m| m.quantile_samples(q)).collect();
    let n = dataset.len() as f64;
    let mut avg = vec![0.0; q];
    for s in &samples {
        for (a, v) in avg.iter_mut().zip(s) {
            *a += v;
        }
    }
    for a in avg.iter_mut() {
        *a /= n;
    }
    Ok(avg)
}

/// Cdf of the piecewise-linear quantile `qs` (on uniform levels) at `x`.
pub fn cdf_from_quantile(qs: &[f64], x: f64) -> f64 {
    let q = qs.len();
    let dalpha = 1.0 / (q - 1) as f64;
    if x < qs[0] {
        return 0.0;
    }
    if x >= qs[q - 1] {
        return 1.0;
    }
    // last k with qs[k] <= x
    let k = qs.partition_point(|&v| v <= x) - 1;
    let (lo, hi) = (qs[k], qs[k + 1]);
    let frac = if hi > lo { (x - lo) / (hi - lo) } else { 1.0 };
    ((k as f64 + frac) * dalpha).min(1.0)
}

/// `sup { alpha : (1/n) sum_i F_i^-(alpha) <= x }`, by bisection on the
/// exact averaged quantile.
pub fn average_quantile_cdf(dataset: &[DiscreteMeasure1D], x: f64) -> f64 {
    let n = dataset.len() as f64;
    let qbar = |a: f64| dataset.iter().map(|m| m.quantile_at(a)).sum::<f64>() / n;
    if qbar(1.0) <= x {
        return 1.0;
    }
    if qbar(0.0) > x {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if qbar(mid) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Wasserstein barycenter: its quantile is the average of the data
/// quantiles. The cdf on `output` inverts the averaged quantile exactly
/// (bisection in the level); the density comes from central differences.
///
/// `q` only validates the dataset the same way the sampled routines do;
/// [`barycenter_from_quantile`] is the variant working from `q` samples.
pub fn barycenter(dataset: &[DiscreteMeasure1D], output: &Grid1D, q: usize) -> Result<DiscreteMeasure1D> {
    if dataset.is_empty() {
        return Err(Error::Parameter("barycenter of an empty dataset".into()));
    }
    if q < 2 {
        return Err(Error::Parameter(format!("need Q >= 2 quantile levels, got {q}")));
    }
    let cdf: Vec<f64> = output
        .points()
        .par_iter()
        .map(|&x| {
            // bisection stalls one ulp short of the flat ends
            let c = average_quantile_cdf(dataset, x);
            if c < 1e-14 {
                0.0
            } else if c > 1.0 - 1e-14 {
                1.0
            } else {
                c
            }
        })
        .collect();
    density_from_cdf(&cdf, output)
}

/// Barycenter from an averaged quantile sampled on `q` uniform levels,
/// inverted by linear interpolation in the level.
pub fn barycenter_from_quantile(avg: &[f64], output: &Grid1D) -> Result<DiscreteMeasure1D> {
    let cdf: Vec<f64> = output.points().iter().map(|&xj| cdf_from_quantile(avg, xj)).collect();
    density_from_cdf(&cdf, output)
}

fn density_from_cdf(cdf: &[f64], output: &Grid1D) -> Result<DiscreteMeasure1D> {
    let x = output.points();
    let n = x.len();
    let mut f = vec![0.0; n];
    for j in 0..n {
        let (l, r) = (j.saturating_sub(1), (j + 1).min(n - 1));
        f[j] = ((cdf[r] - cdf[l]) / (x[r] - x[l])).max(0.0);
    }
    // mass below the first or above the last grid point is folded into the
    // end cells so none is lost
    if cdf[0] > 0.0 {
        f[0] += 2.0 * cdf[0] / output.spacing(0);
    }
    if cdf[n - 1] < 1.0 {
        f[n - 1] += 2.0 * (1.0 - cdf[n - 1]) / output.spacing(n - 2);
    }
    DiscreteMeasure1D::normalized(output.clone(), f).map(|(m, _)| m)
}
