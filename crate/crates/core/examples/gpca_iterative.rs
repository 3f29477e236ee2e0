//! Two principal geodesics fitted one after the other.
//!
//! cargo run --release --example gpca_iterative

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{Grid1D, LoggedDataset};
use wgpca::gpca_iter::{default_t0_grid, fit_iterative, gpca_reconstruction_error, FbConfig};
use wgpca::logpca::{fit_log_pca_logged, logpca_reconstruction_error};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-12.0, 12.0, 128)?;
    let (data, _) = gaussian_location_scale(40, 3, &grid, GaussianRanges::default())?;
    let logged = LoggedDataset::new(data, &grid, 4000)?;
    let config = FbConfig {
        t0_grid: default_t0_grid(7),
        max_outer: 500,
        require_converged: false,
        ..FbConfig::default()
    };
    let comps = fit_iterative(&logged, 2, &config)?;
    let lp = fit_log_pca_logged(&logged, 2)?;
    for (k, c) in comps.iter().enumerate() {
        let b = &c.best;
        println!(
            "component {}: t0 {:+.3}, H {:.4e}, {} iterations, converged {}",
            k + 1,
            b.t0,
            b.h,
            b.iterations,
            b.converged
        );
        println!("  endpoint violation {:.1e}", b.endpoint_violation(&logged.space));
    }
    for k in 1..=2 {
        let refs: Vec<_> = comps[..k].iter().map(|c| &c.best).collect();
        let g = gpca_reconstruction_error(&refs, &logged, 4000)?;
        let l = logpca_reconstruction_error(&lp, &logged, k, 4000)?;
        println!("k = {k}: geodesic {g:.4e}, log-PCA {l:.4e}");
    }
    Ok(())
}
