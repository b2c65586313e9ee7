use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph contains a directed cycle")]
    CyclicGraph,

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid variable table: {0}")]
    InvalidVariables(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid local structure for node `{node}`: {reason}")]
    InvalidStructure { node: String, reason: String },

    #[error("invalid parameters for node `{node}`: {reason}")]
    InvalidParams { node: String, reason: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unknown value `{value}` at row {row}, column {col}")]
    UnknownValue { row: usize, col: usize, value: String },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("explicit row count {k} out of range for {configs} parent configurations")]
    KOutOfRange { k: usize, configs: usize },

    #[error("joint state space of 2^{log2_states:.2} exceeds the cap of {cap} states")]
    StateSpaceTooLarge { log2_states: f64, cap: u64 },

    #[error("sample {index} has zero probability under the approximating network")]
    InfiniteSample { index: usize },

    #[error("network file: {0}")]
    Format(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short stable identifier used on machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CyclicGraph => "CyclicGraph",
            Error::EmptyDataset => "EmptyDataset",
            Error::InvalidVariables(_) => "InvalidVariables",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::InvalidStructure { .. } => "InvalidStructure",
            Error::InvalidParams { .. } => "InvalidParams",
            Error::SchemaMismatch(_) => "SchemaMismatch",
            Error::UnknownValue { .. } => "UnknownValue",
            Error::MalformedRow { .. } => "MalformedRow",
            Error::KOutOfRange { .. } => "KOutOfRange",
            Error::StateSpaceTooLarge { .. } => "StateSpaceTooLarge",
            Error::InfiniteSample { .. } => "InfiniteSample",
            Error::Format(_) => "Format",
            Error::Config(_) => "Config",
            Error::Io { .. } => "Io",
        }
    }
}
