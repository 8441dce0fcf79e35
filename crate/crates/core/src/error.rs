use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    InvalidInput { what: &'static str, reason: String },

    #[error("tile index {index} out of range 1..={max}")]
    TileOutOfRange { index: usize, max: usize },

    #[error("requested {requested} tiles but only {available} are available")]
    NotEnoughTiles { requested: usize, available: usize },

    #[error(
        "infeasible: communication and computing need {required:.6} s but only {available:.6} s of proactive streaming time exist"
    )]
    Infeasible { required: f64, available: f64 },

    #[error("observation window is empty; no samples fit before the prediction deadline")]
    EmptyObservation,

    #[error("predictor needs at least {needed} observed samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("no feasible duration plan on a grid with step {step} s")]
    NoGridPlan { step: f64 },

    #[error("{path}: line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            what,
            reason: reason.into(),
        }
    }
}
