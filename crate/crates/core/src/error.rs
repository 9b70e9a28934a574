use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid rational {0}")]
    Rational(String),

    #[error("potential parse error: {0}")]
    Potential(String),

    #[error("insertion parse error: {0}")]
    Insertion(String),

    #[error("combinatorial budget exceeded: {0}; assert genericity manually or raise the cap")]
    BudgetExceeded(String),

    #[error("unbounded effective-degree polytope for support {support:?}: ray {ray:?} has zero theta-degree")]
    Unbounded { support: Vec<usize>, ray: Vec<String> },

    #[error("sector is empty: no semistable support is fixed by lambda {0:?}")]
    EmptySector(Vec<String>),

    #[error("infinite-dimensional cohomology ring: no pure power of H{0} in the leading ideal")]
    InfiniteRing(usize),

    #[error("ring mismatch: {0}")]
    RingMismatch(String),

    #[error("hypothesis violated: invariant monomial with exponent {0:?}")]
    Hypothesis(Vec<i64>),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        Error::Syntax { line: err.line(), column: err.column(), message: err.to_string() }
    }

    /// True for errors caused by malformed user input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Syntax { .. }
                | Error::Schema(_)
                | Error::DimensionMismatch(_)
                | Error::Rational(_)
                | Error::Potential(_)
                | Error::Insertion(_)
                | Error::Io(_)
        )
    }

    /// True for errors that indicate a bug in the engine rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Internal(_))
    }
}
