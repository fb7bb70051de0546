use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Error, Debug)]
pub enum Error {
    /// Operand shapes are incompatible for the named operation.
    #[error("shape mismatch in {op}: left is {lhs_rows}x{lhs_cols}, right is {rhs_rows}x{rhs_cols}")]
    Shape {
        op: &'static str,
        lhs_rows: usize,
        lhs_cols: usize,
        rhs_rows: usize,
        rhs_cols: usize,
    },

    /// An input lies outside the mathematical domain of the operation.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A loss component became non-finite.
    #[error("non-finite value in {component}")]
    NonFinite { component: &'static str },

    /// A soft cluster lost all of its assignment mass.
    #[error("cluster {cluster} has collapsed (zero soft-assignment mass)")]
    ClusterCollapse { cluster: usize },

    /// Dataset or checkpoint file could not be read or written.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed content in a dataset or checkpoint file.
    #[error("parse error in {path} at line {line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Error::Shape {
            op,
            lhs_rows: lhs.0,
            lhs_cols: lhs.1,
            rhs_rows: rhs.0,
            rhs_cols: rhs.1,
        }
    }
}
