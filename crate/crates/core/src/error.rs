use thiserror::Error;

/// Errors raised by graph construction, estimation and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("label {label} at node {node} is outside 1..={k}")]
    LabelOutOfRange { node: usize, label: usize, k: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error(
        "enumeration needs {required} configurations but the budget is {budget}; \
         use the variational engine for this size"
    )]
    BudgetExceeded { required: f64, budget: u64 },

    #[error(
        "power iteration did not converge after {iterations} sweeps; \
         the transition matrix is possibly reducible or periodic"
    )]
    StationaryNotConverged { iterations: usize },

    #[error("transition matrix is reducible or periodic: {0}")]
    NotErgodic(String),

    #[error("variational bound became NaN at iteration {iteration} (k = {k})")]
    NanElbo { iteration: usize, k: usize },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("evidence evaluation failed at k = {k}: {source}")]
    Sweep {
        k: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
