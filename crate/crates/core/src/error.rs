use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid density model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("point sampling produced {realized} points (cap {cap})")]
    PopulationSize { realized: usize, cap: usize },

    #[error("duplicate point at index {0}")]
    DuplicatePoint(usize),

    #[error("need at least {needed} vertices, got {got}")]
    TooFewVertices { needed: usize, got: usize },

    #[error("zero distance between distinct vertices {0} and {1}")]
    ZeroDistance(usize, usize),

    #[error("{truncated} of {iterations} rewiring walks hit the step cap")]
    TruncationAbort { truncated: usize, iterations: usize },

    #[error("greedy routing dead end on a base graph that should not have any ({source_vertex} -> {target})")]
    DeadEnd { source_vertex: usize, target: usize },

    #[error("cell size={size} method={method} replicate={replicate} seed={seed}: {source}")]
    Cell {
        size: usize,
        method: String,
        replicate: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format { line, msg: msg.into() }
    }
}
