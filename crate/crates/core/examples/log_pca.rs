//! Log-PCA of a Gaussian location-scale family.
//!
//! cargo run --example log_pca

use wgpca::cli::synth::{gaussian_location_scale, GaussianRanges};
use wgpca::core1d::{Grid1D, LoggedDataset};
use wgpca::logpca::{fit_log_pca_logged, logpca_reconstruction_error};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-12.0, 12.0, 256)?;
    let (data, _) = gaussian_location_scale(100, 1, &grid, GaussianRanges::default())?;
    let logged = LoggedDataset::new(data, &grid, 10_000)?;
    let model = fit_log_pca_logged(&logged, 4)?;

    let total = logged.total_variance();
    for (k, l) in model.eigenvalues.iter().enumerate() {
        println!("component {}: eigenvalue {l:.4e} ({:.2}% of the variance)", k + 1, 100.0 * l / total);
    }
    for k in 0..=2 {
        let e = logpca_reconstruction_error(&model, &logged, k, 10_000)?;
        let folds: usize = model.fold_counts(k)?.iter().sum();
        println!("k = {k}: reconstruction error {e:.4e}, folded cells {folds}");
    }
    Ok(())
}
