use thiserror::Error;

/// Errors produced by the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular scattering denominator (|D|^2 = {0:e})")]
    Singular(f64),

    #[error("optical pumping chain has {0} closed classes; stationary distribution is not unique")]
    ReducibleChain(usize),

    #[error("power iteration did not reach residual {tolerance:e} after {iterations} steps")]
    NoStationaryConvergence { iterations: usize, tolerance: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("out of perturbative regime: correction factor {0} <= 0")]
    OutOfRegime(f64),

    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    NonConvergence {
        iterations: usize,
        residual_norm: f64,
        best: Box<crate::analysis::FitResult>,
    },

    #[error("vacuum Rabi splitting unresolved: {0}")]
    UnresolvedSplitting(String),

    #[error("dispersive regime violated: |delta_A| = {delta_a:e} < {min:e} rad/s")]
    DispersiveRegime { delta_a: f64, min: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
