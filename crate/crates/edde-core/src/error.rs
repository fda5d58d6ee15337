use alloc::string::String;

/// Errors produced by validation, training, and the ensemble pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A structurally invalid input (bad architecture, empty dataset, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// Two inputs whose shapes must agree do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Divergence { epoch: usize, detail: String },

    /// A boosting round failed; carries the 1-based round index.
    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: alloc::boxed::Box<Error>,
    },

    /// Internal invariant breakage that inputs should never be able to cause.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl core::fmt::Display) -> Self {
        Error::Validation(alloc::format!("{msg}"))
    }

    pub(crate) fn shape(msg: impl core::fmt::Display) -> Self {
        Error::ShapeMismatch(alloc::format!("{msg}"))
    }

    pub(crate) fn in_round(self, round: usize) -> Self {
        Error::Round {
            round,
            source: alloc::boxed::Box::new(self),
        }
    }
}
