use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes (or parameter layouts) do not fit together.
    #[error("structural error in {op}: {detail}")]
    Structural { op: &'static str, detail: String },

    /// A primitive was evaluated outside its mathematical domain.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("generation error: {0}")]
    Generation(String),

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step} (last finite loss {last_finite_loss:?} at step {last_finite_step:?})")]
    Divergence {
        step: u64,
        last_finite_step: Option<u64>,
        last_finite_loss: Option<f64>,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn structural(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Structural {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }
}
