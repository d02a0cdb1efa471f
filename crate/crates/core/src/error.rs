use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent caller input.
    #[error("input error: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The smoothing kernel assigns (numerically) zero mass to every sample.
    #[error("empty neighborhood at evaluation row(s) {rows:?}: total smoothing mass below 1e-300")]
    EmptyNeighborhood { rows: Vec<usize> },

    #[error("empty neighborhood at query point {0:?}: total smoothing mass below 1e-300")]
    EmptyNeighborhoodAt(Vec<f64>),

    /// A quantity that must be nonnegative came out below the rounding tolerance,
    /// or a linear solve failed.
    #[error("numerical integrity error: {0}")]
    Numerical(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by the numbers rather than by the request.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical(_) | Error::EmptyNeighborhood { .. } | Error::EmptyNeighborhoodAt(_) => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
