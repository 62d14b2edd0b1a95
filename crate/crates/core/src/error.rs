use thiserror::Error;

/// Errors produced by the learner, solvers and network model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MospError {
    /// An oracle returned a non-finite value or gradient.
    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("solver failure after {iterations} iterations (residual {residual:e}): {context}")]
    SolverFailure {
        context: String,
        residual: f64,
        iterations: usize,
    },

    /// No strictly feasible point exists; `margin` is the best uniform slack found.
    #[error("infeasible instance (best uniform slack {margin:e})")]
    Infeasible { margin: f64 },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// A node did not receive an expected multiplier message.
    #[error("protocol error: {receiver} missing message from {sender} for slot {slot}")]
    Protocol {
        receiver: String,
        sender: String,
        slot: usize,
    },

    /// A requested computation exceeds its size guard.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T, E = MospError> = std::result::Result<T, E>;

pub(crate) fn argument(msg: impl Into<String>) -> MospError {
    MospError::Argument(msg.into())
}
