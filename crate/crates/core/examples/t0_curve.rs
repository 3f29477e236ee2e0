//! Objective of the first geodesic as a function of its midpoint.
//!
//! cargo run --release --example t0_curve

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{Grid1D, LoggedDataset};
use wgpca::gpca_iter::{search_t0, FbConfig};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-12.0, 12.0, 128)?;
    let (data, _) = gaussian_location_scale(30, 11, &grid, GaussianRanges::default())?;
    let logged = LoggedDataset::new(data, &grid, 4000)?;
    let config = FbConfig {
        t0_grid: (-4..=4).map(|k| 0.2 * k as f64).collect(),
        max_outer: 400,
        require_converged: false,
        ..FbConfig::default()
    };
    let search = search_t0(&logged, &[], &config)?;
    println!("{:>6}  {:>12}  converged", "t0", "H");
    for p in &search.curve {
        let mark = if p.t0 == search.best.t0 { " <" } else { "" };
        println!("{:+6.2}  {:12.6e}  {}{mark}", p.t0, p.h, p.converged);
    }
    if search.boundary_hit {
        println!("best midpoint on the edge of the grid; widen it");
    }
    Ok(())
}
