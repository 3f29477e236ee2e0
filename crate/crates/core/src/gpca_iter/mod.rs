//! Geodesic PCA one component at a time: forward-backward descent on
//! `(v, t)` under the feasibility constraints, with a grid search on `t0`.

mod fit;
mod objective;
mod prox;
mod reconstruction;
pub(crate) mod sets;

pub use fit::{default_t0_grid, fit_component, fit_component_from, fit_iterative, search_t0, FbConfig, GeodesicComponent, T0Point, T0Search};
pub use objective::{grad_f, h_value, lipschitz_bound, lipschitz_for, objective_f, project_time};
pub use prox::{prox_conj_e, prox_t, prox_v, ProxOptions, ProxSets, ProxSolver};
pub use reconstruction::{gpca_reconstruction_error, gpca_reconstruction_errors, project_onto_components};
pub use sets::{delta_sq, FeasibleSets};
