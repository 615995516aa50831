use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("exponential out of range at l = {l}")]
    Range { l: f64 },

    #[error("step size underflow at s = {s} (h = {h:e})")]
    StepSizeUnderflow { s: f64, h: f64 },

    #[error("step limit of {0} reached")]
    StepLimit(usize),

    #[error("no bracket: {0}")]
    NoBracket(String),

    #[error("backward crossings stalled at the focus after {found} of {wanted}")]
    FocusStall { found: usize, wanted: usize },

    #[error("l = {l} is outside the arc span ({lo}, {hi})")]
    OutOfRange { l: f64, lo: f64, hi: f64 },

    #[error("profile tail does not reach curvature {needed:e}")]
    TailTooShort { needed: f64 },

    #[error("operation needs a rotating solution (omega = 0)")]
    NotRotating,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
