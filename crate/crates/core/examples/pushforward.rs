//! Exact pushforward of a piecewise-linear density through a map that
//! folds.
//!
//! cargo run --example pushforward

use wgpca::core1d::{monotone_segments, pushforward, DiscreteMeasure1D, Grid1D};

fn main() -> wgpca::Result<()> {
    let grid = Grid1D::uniform(-1.0, 1.0, 201)?;
    let rho = DiscreteMeasure1D::from_fn(grid.clone(), |_| 1.0)?;
    let t: Vec<f64> = grid.points().iter().map(|x| x * x).collect();
    println!("monotone pieces {:?}", monotone_segments(&t));

    let pf = pushforward(&rho, &t)?;
    println!("mass {:.12}, support [{:.3}, {:.3}]", pf.raw_mass(), pf.support_min(), pf.support_max());
    // |x| with x uniform on [-1, 1] is uniform on [0, 1]; x^2 has density 1 / (2 sqrt y)
    for y in [0.04, 0.25, 0.81] {
        println!("  g({y}) = {:.4}  exact {:.4}", pf.density_at(y), 0.5 / f64::sqrt(y));
    }
    let out = pf.to_density(&pf.default_grid()?)?;
    println!("sampled on {} points, mean {:.4} (exact 1/3)", out.grid().len(), out.mean());
    Ok(())
}
