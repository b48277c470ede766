use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what}: expected length {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in `{field}` at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("operator has {columns} columns, materialization is limited to {limit}")]
    TooLarge { columns: usize, limit: usize },

    #[error("negative pixel in prior image {image} at pixel {pixel}: {value}")]
    NegativePixel {
        image: usize,
        pixel: usize,
        value: f64,
    },

    #[error("parse error at byte offset {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("matrix has numerical rank 0")]
    RankDeficient,

    #[error("convergence hypotheses violated: {0}")]
    HypothesisViolated(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
