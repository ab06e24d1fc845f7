use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(
        "index ({i}, {j}, {t}) out of range for a {n_objects}x{n_objects}x{n_relations} tensor"
    )]
    IndexOutOfRange {
        i: usize,
        j: usize,
        t: usize,
        n_objects: usize,
        n_relations: usize,
    },
    #[error("entry ({i}, {j}, {t}) is given conflicting values")]
    Conflict { i: usize, j: usize, t: usize },
    #[error("entry ({i}, {j}, {t}) has value {value}, expected 0 or 1")]
    NonBinary {
        i: usize,
        j: usize,
        t: usize,
        value: u8,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("tensor has no observed entries")]
    EmptyTensor,
    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("matrix is not positive definite after jitter ({0})")]
    NotPositiveDefinite(&'static str),
    #[error("sample set is empty")]
    EmptySampleSet,
}

impl Error {
    /// True for failures of the numerical procedures themselves, as opposed
    /// to bad input or configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. } | Error::NotPositiveDefinite(_)
        )
    }
}
