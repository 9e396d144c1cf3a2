use thiserror::Error;

/// Errors produced anywhere in the sampling, estimation and reporting stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("activity rejected: {0}")]
    Rejected(String),

    #[error("calibration failed: population {n} is smaller than the {observed} nodes observed with triangles")]
    Calibration { n: u64, observed: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("histogram must be calibrated with a known population before use on this path")]
    Uncalibrated,

    #[error("observed count j={j} has zero mass under the current model")]
    ModelSupport { j: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("no signal: histogram contains no node with a sampled triangle")]
    NoSignal,

    #[error("unstable estimate: probability of an unobserved triangle-bearing node is {q}")]
    Unstable { q: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("generator could not reach the planted distribution (best total variation {best_tv:.4})")]
    Infeasible { best_tv: f64 },

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("window {window}: {source}")]
    Window {
        window: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end: 2 for configuration
    /// problems, 3 for anything caused by the input data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Window { source, .. } => source.exit_code(),
            _ => 3,
        }
    }

    pub(crate) fn in_window(self, window: u64) -> Error {
        Error::Window {
            window,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
