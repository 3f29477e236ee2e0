//! Joint two-direction fit, started from the iterative geodesics.
//!
//! cargo run --release --example gpca_surface

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{Grid1D, LoggedDataset};
use wgpca::gpca_iter::{default_t0_grid, fit_iterative, gpca_reconstruction_error, FbConfig};
use wgpca::gpca_surface::{fit_surface, surface_reconstruction_error};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-12.0, 12.0, 128)?;
    let (data, _) = gaussian_location_scale(40, 2, &grid, GaussianRanges::default())?;
    let logged = LoggedDataset::new(data, &grid, 4000)?;
    let config = FbConfig {
        t0_grid: default_t0_grid(5),
        max_outer: 400,
        require_converged: false,
        ..FbConfig::default()
    };
    let comps = fit_iterative(&logged, 2, &config)?;
    let init: Vec<Vec<f64>> = comps.iter().map(|c| c.best.direction.clone()).collect();
    let t0: Vec<f64> = comps.iter().map(|c| c.best.t0).collect();
    let surface = fit_surface(&logged, &init, &t0, &FbConfig { max_outer: 1500, ..config })?;

    println!("objective {:.4e} after {} iterations", surface.objective, surface.iterations);
    println!("smallest Gram singular value {:.3e}", surface.min_singular);
    println!("endpoint violation {:.1e}", surface.endpoint_violation(&logged.space));
    let refs: Vec<_> = comps.iter().map(|c| &c.best).collect();
    println!("iterative error {:.4e}", gpca_reconstruction_error(&refs, &logged, 4000)?);
    println!("surface error   {:.4e}", surface_reconstruction_error(&surface, &logged, 4000)?);
    Ok(())
}
