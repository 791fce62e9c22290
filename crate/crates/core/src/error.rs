use thiserror::Error;

use crate::sim::SlotId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    QubitMismatch { left: usize, right: usize },

    #[error("qubit {qubit} out of range for a {width}-qubit register")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("parse error on line {line}: {msg}")]
    ParseLine { line: usize, msg: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    OutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("missing field `{field}`, needed for {needed_for}")]
    MissingField { field: &'static str, needed_for: &'static str },

    #[error("outcome slot s{} written twice", .0 .0)]
    SlotCollision(SlotId),

    #[error("outcome slot s{} referenced before it is filled", .0 .0)]
    UnfilledSlot(SlotId),

    #[error("outcome slot s{} is still needed by a pending detector", .0 .0)]
    SlotStillNeeded(SlotId),

    #[error("no accepted trajectories (acceptance probability is zero)")]
    ZeroAcceptance,

    #[error("channel is not trace preserving (trace deviation {0:.3e}); pass an explicit normalization")]
    NotTracePreserving(f64),

    #[error("degenerate preparations: no information along {0}")]
    DegeneratePreparations(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("numerical invariant violated: {0}")]
    Numerical(String),
}
