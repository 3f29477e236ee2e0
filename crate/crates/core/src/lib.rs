//! Principal component analysis of histograms in the 2-Wasserstein space.
//!
//! Densities live on a fixed grid and are compared through their quantile
//! functions. [`core1d`] holds the grid, measures, pushforwards, log and
//! exp maps and barycenters. On top of it:
//!
//! - [`logpca`]: linear PCA of the log maps at the barycenter.
//! - [`gpca_iter`]: principal geodesics fitted one at a time by
//!   forward-backward splitting, with an inner primal-dual prox.
//! - [`gpca_surface`]: several directions fitted jointly over the simplex
//!   hull of their endpoints.
//! - [`ot2d`]: the geodesic fit for measures on a pixel lattice, with an
//!   exact transportation simplex and an entropic barycenter.
//! - [`cli`]: configuration, CSV ingest, synthetic data and the output
//!   writer behind the `wgpca` binary.
//!
//! ```
//! use wgpca::core1d::{wasserstein_distance, DiscreteMeasure1D, Grid1D};
//!
//! let grid = Grid1D::uniform(-8.0, 8.0, 401).unwrap();
//! let a = DiscreteMeasure1D::from_fn(grid.clone(), |x| (-0.5 * (x + 1.0).powi(2)).exp()).unwrap();
//! let b = DiscreteMeasure1D::from_fn(grid, |x| (-0.5 * (x - 1.0).powi(2)).exp()).unwrap();
//! let d = wasserstein_distance(&a, &b, 4000).unwrap();
//! assert!((d - 2.0).abs() < 1e-3);
//! ```

pub mod cli;
pub mod core1d;
pub mod error;
pub mod gpca_iter;
pub mod gpca_surface;
pub mod logpca;
pub mod ot2d;
mod qp;

pub use error::{Error, Result};
