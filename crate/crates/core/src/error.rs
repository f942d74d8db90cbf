use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Input data (edge list, dataset, design file) is malformed.
    #[error("ingestion error{}: {message}", row.map(|r| format!(" at row {r}")).unwrap_or_default())]
    Ingestion { row: Option<usize>, message: String },

    /// The design or moment matrix is rank deficient.
    #[error("singular design: column(s) {} collinear with preceding columns", columns.join(", "))]
    Singular { columns: Vec<String> },

    /// A regression subsample has no rows to fit.
    #[error("empty subsample: {0}")]
    EmptySubsample(String),

    /// A design does not cover the degrees that occur in the network.
    #[error("configuration error: {0}")]
    Config(String),

    /// Exhaustive enumeration was requested on a graph that is too large.
    #[error("graph has {n} nodes; enumeration is limited to {max}")]
    TooLarge { n: usize, max: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn ingestion(row: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        Error::Ingestion {
            row: row.into(),
            message: message.into(),
        }
    }
}
