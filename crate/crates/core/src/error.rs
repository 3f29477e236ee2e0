use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("degenerate map: {0}")]
    DegenerateMap(String),

    #[error("primal-dual prox did not converge in {iterations} iterations (relative change {residual:.3e})")]
    ProxNonConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },

    #[error("no t0 candidate converged ({tried} tried)")]
    NoConvergedCandidate { tried: usize },

    #[error("support of size {size} exceeds the exact solver cap of {cap}; use the entropic solver instead")]
    SizeCap { size: usize, cap: usize },

    #[error("entropic solver underflow at epsilon = {epsilon}; retry with a larger epsilon")]
    Underflow { epsilon: f64 },

    #[error("transport solver failed: {0}")]
    Transport(String),

    #[error("quadratic program failed: {0}")]
    Qp(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for input problems (bad data, bad parameters) as opposed to
    /// failures during numerical work.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) | Error::Parameter(_) | Error::Csv(_) => true,
            Error::Stage { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }
}
