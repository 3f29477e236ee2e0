//! One-dimensional Wasserstein geometry on grids.

mod grid;
mod measure;
mod pushforward;
mod tangent;
mod wasserstein;

pub use grid::Grid1D;
pub use measure::{CdfQuantilePair, DiscreteMeasure1D, QuantileFn, MASS_TOL};
pub use pushforward::{monotone_segments, pushforward, pushforward_density, Pushforward, SLOPE_FLOOR, STEEP_FRACTION};
pub use tangent::{
    displaced, exp_map, exp_measure, feasibility_violation, in_feasible_set, log_map, LoggedDataset,
    TangentSpace, TangentVector,
};
pub use wasserstein::{
    average_quantile, average_quantile_cdf, barycenter, midpoint_levels, midpoint_quantiles, barycenter_from_quantile, cdf_from_quantile, quantile_l2_sq,
    wasserstein_distance, wasserstein_sq_between, DEFAULT_Q,
};

/// Quantiles of `measure` on `q` levels together with its grid cdf.
pub fn quantile(measure: &DiscreteMeasure1D, q: usize) -> crate::Result<CdfQuantilePair> {
    measure.quantile(q)
}
