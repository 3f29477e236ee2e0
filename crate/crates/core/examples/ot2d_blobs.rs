//! Entropic barycenter and one principal geodesic of 2D blobs.
//!
//! cargo run --release --example ot2d_blobs

use wgpca::cli::synth::{blobs_2d, BlobRanges};
use wgpca::ot2d::{
    barycenter2d_entropic, fit_component_2d, fit_log_pca_2d, reconstruction_error_2d, Fb2dConfig, Problem2D,
};

fn main() -> wgpca::Result<()> {
    let data = blobs_2d(16, 5, 8, 8, BlobRanges::default())?;
    let bar = barycenter2d_entropic(&data, 0.5, 20_000, 1e-7)?;
    println!("barycenter: {} iterations, marginal residual {:.1e}", bar.iterations, bar.residual);
    let problem = Problem2D::new(bar.measure.trimmed(1e-4)?, data)?;
    println!("support {} of {} pixels", problem.support().len(), problem.grid().len());

    let lp = fit_log_pca_2d(&problem)?;
    let scale = 1.25 * lp.eigenvalue;
    let c = fit_component_2d(&problem, &[], 0.0, &Fb2dConfig { max_outer: 60, ..Fb2dConfig::default() })?;
    println!("geodesic: H {:.4e} after {} iterations, converged {}", c.h, c.iterations, c.converged);
    println!("log-PCA curve error {:.4e}", reconstruction_error_2d(&problem, &lp.direction, scale, 0.0, 21)?);
    println!("geodesic curve error {:.4e}", reconstruction_error_2d(&problem, &c.direction, 1.0, c.t0, 21)?);
    Ok(())
}
