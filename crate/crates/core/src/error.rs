use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("invalid walk configuration: {0}")]
    WalkConfig(String),

    #[error("stream generation failed: {0}")]
    Generation(String),

    #[error("batch of {len} points is shorter than the window of {window}")]
    BatchTooShort { len: usize, window: usize },

    #[error("concept {0} reappears after a drift; streams must be contiguous per concept")]
    InterleavedConcept(usize),

    #[error("column is frozen")]
    FrozenColumn,

    #[error("non-finite value encountered: {0}")]
    Numerical(String),

    #[error("invalid sample: {0}")]
    Sample(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("invalid mode `{0}`")]
    Mode(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
