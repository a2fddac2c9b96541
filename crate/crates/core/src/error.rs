use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty basis")]
    EmptyBasis,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {what} (limit {limit})")]
    BudgetExceeded { what: String, limit: u64 },

    #[error("oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("no consistent hypothesis: {0}")]
    NoConsistentHypothesis(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("rounding failed after {retries} retries: {reason}")]
    RetriesExhausted { retries: u32, reason: String },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("task {task}: {source}")]
    Task {
        task: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_task(self, task: usize) -> Error {
        Error::Task { task, source: Box::new(self) }
    }

    pub fn at_trial(self, trial: usize) -> Error {
        Error::Trial { trial, source: Box::new(self) }
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Error {
        Error::Parse { line, msg: msg.into() }
    }

    /// Strips task and trial wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Task { source, .. } | Error::Trial { source, .. } => source.root(),
            e => e,
        }
    }

    /// Budget and assumption failures, as opposed to bad input or a bug.
    pub fn is_budget_or_assumption(&self) -> bool {
        matches!(
            self.root(),
            Error::BudgetExceeded { .. }
                | Error::RetriesExhausted { .. }
                | Error::AssumptionViolated(_)
                | Error::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
