//! Two-dimensional histograms on a regular lattice: exact and entropic
//! transport, and geodesic PCA with divergence-constrained fields.

mod entropic;
mod fit;
mod measure;
mod sets;
mod simplex;

pub use entropic::{barycenter2d_entropic, EntropicBarycenter};
pub use fit::{
    fit_component_2d, fit_log_pca_2d, grad_f_2d, leading_field, reconstruction_error_2d, Evaluation, Fb2dConfig,
    GeodesicComponent2D, LogPca2D, Problem2D, ProxOptionsSer,
};
pub use measure::{sq_dist, Atoms, Grid2D, Measure2D};
pub use sets::FeasibleSets2D;
pub use simplex::{ot_atoms_exact, ot_plan_exact, transport_simplex, Basis, ExactOt, TransportPlan, EXACT_CAP};
