//! Barycenter of a location-scale family: mean of the means, mean of the
//! deviations.
//!
//! cargo run --example barycenter_gaussians

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{barycenter, wasserstein_distance, Grid1D, LoggedDataset};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-12.0, 12.0, 512)?;
    let (data, params) = gaussian_location_scale(50, 7, &grid, GaussianRanges::default())?;
    let n = params.len() as f64;
    let m: f64 = params.iter().map(|p| p.0).sum::<f64>() / n;
    let s: f64 = params.iter().map(|p| p.1).sum::<f64>() / n;

    let bar = barycenter(&data, &grid, 10_000)?;
    println!("barycenter mean {:+.4} (expected {m:+.4})", bar.mean());
    println!("barycenter sd   {:.4} (expected {s:.4})", bar.std_dev());
    let spread: f64 = data.iter().map(|d| wasserstein_distance(d, &bar, 10_000).unwrap().powi(2)).sum::<f64>() / n;
    println!("mean squared distance to the barycenter {spread:.4}");

    let logged = LoggedDataset::with_barycenter(data, bar)?;
    println!("centering residual of the logs {:.2e}", logged.centering_residual());
    Ok(())
}
