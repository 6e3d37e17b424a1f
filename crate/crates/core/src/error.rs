use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("point is not strictly inside the unit ball (|z|^2 = {norm_sq})")]
    OutsideBall { norm_sq: f64 },

    #[error("distance gradient is singular for coincident points")]
    SingularGradient,

    #[error("direction vector must be nonzero")]
    ZeroDirection,

    #[error("node id {id} out of range ({len} nodes)")]
    InvalidId { id: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: self-loop on {token:?}")]
    SelfLoop { line: usize, token: String },

    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("graph has no edges")]
    NoEdges,

    #[error("graph is disconnected; use sampled mode")]
    Disconnected,

    #[error("could not split edges so that every held-out node keeps a training edge; try smaller held-out fractions")]
    SplitUnsatisfiable,

    #[error("exact δ-hyperbolicity refused for {nodes} nodes (cap {cap}); use sampled mode")]
    NodeCapExceeded { nodes: usize, cap: usize },

    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
