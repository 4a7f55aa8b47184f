use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("parse error in {file} line {line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("label out of range: {0}")]
    LabelOutOfRange(String),

    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),

    #[error("unknown node type `{0}`")]
    UnknownNodeType(String),

    #[error("metapath `{name}`: {msg}")]
    MetaPath { name: String, msg: String },

    #[error("negative feature value at node {node}, column {col}")]
    NegativeFeature { node: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid sparse matrix: {0}")]
    InvalidSparse(String),

    #[error("no edges")]
    NoEdges,

    #[error("labels required")]
    LabelsRequired,

    #[error("zero-norm feature row at node {0}")]
    ZeroNormRow(usize),

    #[error("graph has {n} nodes, above the dense cap of {cap}; use the scalable builder")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("bad binary file {path}: {msg}")]
    Format { path: PathBuf, msg: String },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("class {0} has no training nodes")]
    MissingClass(usize),

    #[error("training diverged at epoch {epoch}: non-finite {what}")]
    Diverged {
        epoch: usize,
        what: String,
        /// Parameters from the last step whose loss was finite.
        last_good: Box<crate::model::ModelState>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
