use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("rejected input: {0}")]
    RejectedInput(String),

    #[error("fields live on different grids ({left} vs {right})")]
    GridMismatch { left: String, right: String },

    /// `‖h'‖_∞` exceeded the series-convergence guard.
    #[error("steepness {steepness:.4} exceeds guard {guard}")]
    Steepness { steepness: f64, guard: f64 },

    #[error("elliptic solve did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    /// The state stopped being finite during time stepping.
    #[error("non-finite state at t = {time}")]
    NonFinite { time: f64 },

    /// A kernel reported a nonzero symbol on an exact phase zero.
    #[error("internal consistency fault: {0}")]
    Fault(String),
}

impl LabError {
    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        LabError::RejectedInput(msg.into())
    }
}
