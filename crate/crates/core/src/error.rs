use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("numerical failure in {op} on a {rows}x{cols} matrix: {msg}")]
    Numerical {
        op: &'static str,
        rows: usize,
        cols: usize,
        msg: String,
    },

    #[error("N = {n} exceeds the dense-storage limit of {limit} sites")]
    SizeGuard { n: usize, limit: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative outcome probability {p:.3e} at site {site}: state too corrupted to sample")]
    NegativeProbability { site: usize, p: f64 },

    #[error("degenerate centroids a = {a}, b = {b}: the network separates nothing (untrained?)")]
    DegenerateCentroids { a: f64, b: f64 },

    #[error("training aborted in round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Whether the error stems from arithmetic rather than bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::NegativeProbability { .. } => true,
            Error::Round { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
