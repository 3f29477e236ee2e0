//! Quantiles and 2-Wasserstein distances between histograms on a grid.
//!
//! cargo run --example wasserstein_1d

use wgpca::core1d::{wasserstein_distance, DiscreteMeasure1D, Grid1D};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-10.0, 10.0, 801)?;
    let gauss = |m: f64, s: f64| DiscreteMeasure1D::from_fn(grid.clone(), move |x| (-0.5 * ((x - m) / s).powi(2)).exp());
    let a = gauss(-1.0, 1.0)?;
    let b = gauss(2.0, 1.0)?;
    let c = gauss(0.0, 2.0)?;

    let pair = a.quantile(9)?;
    println!("quantiles of N(-1, 1) on 9 levels:");
    for (l, x) in pair.levels().iter().zip(&pair.quantile) {
        println!("  {l:.3} -> {x:+.4}");
    }

    // translates are |m1 - m2| apart, scales are |s1 - s2| apart
    println!("W(N(-1,1), N(2,1)) = {:.5}", wasserstein_distance(&a, &b, 10_000)?);
    println!("W(N(-1,1), N(0,2)) = {:.5}  (exact {:.5})", wasserstein_distance(&a, &c, 10_000)?, 2f64.sqrt());
    Ok(())
}
