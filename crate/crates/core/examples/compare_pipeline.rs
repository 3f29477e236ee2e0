//! The `compare` command driven from code, writing to a temporary folder.
//!
//! cargo run --release --example compare_pipeline

use wgpca::cli::{run_pipeline, Command, RunConfig};

fn main() -> wgpca::Result<()> {
    let out = std::env::temp_dir().join("wgpca-compare-example");
    let config = RunConfig {
        command: Command::Compare,
        n: Some(30),
        n_grid: 128,
        q: 4000,
        max_outer: 400,
        t0_grid: vec![-0.5, -0.25, 0.0, 0.25, 0.5],
        out_dir: out.clone(),
        ..RunConfig::default()
    };
    let summary = run_pipeline(&config)?;
    for row in &summary.errors {
        println!("{:<14} k={} {:.4e}", row.method, row.k, row.error);
    }
    for name in &summary.not_converged {
        println!("not converged: {name}");
    }
    println!("{} files in {}", summary.files.len(), out.display());
    Ok(())
}
