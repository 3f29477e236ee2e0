use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpca_iter::{default_t0_grid, FbConfig};

pub const SCHEMA: &str = "wgpca-output/1";

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "WGPCA_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Barycenter,
    Logpca,
    GpcaIter,
    GpcaSurface,
    #[serde(rename = "gpca-2d")]
    Gpca2d,
    Compare,
    Synth,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Truncated Gaussians with random means and deviations.
    Gaussian,
    /// Translated and rotated blobs on a pixel lattice.
    Blobs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    /// CSV inputs; synthetic data are generated when empty.
    pub inputs: Vec<PathBuf>,
    /// Domain of synthetic 1D data; for CSV input it overrides the grid ends.
    pub omega: Option<(f64, f64)>,
    pub n_grid: usize,
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub t0_grid: Vec<f64>,
    pub eta: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub q: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Number of synthetic measures (100 in 1D, 50 in 2D when unset).
    pub n: Option<usize>,
    /// Times sampled per curve for 2D reconstruction errors.
    pub samples: usize,
    pub kind: SynthKind,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Compare,
            inputs: Vec::new(),
            omega: None,
            n_grid: 256,
            rows: 12,
            cols: 12,
            k: 2,
            t0_grid: default_t0_grid(21),
            eta: 1e-8,
            max_outer: 5_000,
            max_inner: 20_000,
            q: 10_000,
            epsilon: 0.5,
            seed: 1,
            n: None,
            samples: 21,
            kind: SynthKind::Gaussian,
            out_dir: PathBuf::from("wgpca-out"),
        }
    }
}

impl RunConfig {
    pub fn is_2d(&self) -> bool {
        self.command == Command::Gpca2d || (self.command == Command::Synth && self.kind == SynthKind::Blobs)
    }

    pub fn n_synthetic(&self) -> usize {
        self.n.unwrap_or(if self.is_2d() { 50 } else { 100 })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.omega.unwrap_or((-10.0, 10.0))
    }

    pub fn fb_config(&self) -> FbConfig {
        FbConfig {
            eta: self.eta,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            t0_grid: self.t0_grid.clone(),
            require_converged: false,
            ..FbConfig::default()
        }
    }

    /// Checks every field before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if let Some((a, b)) = self.omega {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return bad(format!("omega = ({a}, {b}) must be finite and increasing"));
            }
        }
        if self.n_grid < 2 {
            return bad(format!("grid size {} must be at least 2", self.n_grid));
        }
        if self.rows < 2 || self.cols < 2 {
            return bad(format!("2D grid {}x{} must be at least 2x2", self.rows, self.cols));
        }
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.q < 2 {
            return bad(format!("Q = {} must be at least 2", self.q));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon = {} must be positive", self.epsilon));
        }
        if self.n == Some(0) {
            return bad("empty dataset requested (n = 0)".into());
        }
        if self.samples < 3 {
            return bad(format!("at least 3 samples per curve required, got {}", self.samples));
        }
        self.fb_config().validate().map_err(|e| Error::Validation(e.to_string()))
    }

    /// Midpoint of 2D fits: the single grid value when one is given, else 0.
    pub fn t0_2d(&self) -> f64 {
        if self.t0_grid.len() == 1 {
            self.t0_grid[0]
        } else {
            0.0
        }
    }
}
