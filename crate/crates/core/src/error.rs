use thiserror::Error;

/// Errors produced by graph construction, file parsing, and numerical
/// routines in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// A MAP estimate or posterior mode landed on the boundary of the
    /// parameter space; callers typically fall back to a closed form.
    #[error("boundary: {0}")]
    Boundary(String),

    /// The requested quantity has no analytic form for this instance.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// A numerical routine failed to converge or produced an invalid value.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// An approximation's validity conditions do not hold for this input.
    #[error("approximation invalid: {0}")]
    ApproximationInvalid(String),

    /// The evidence integral diverges for this input (improper posterior).
    #[error("undefined evidence: {0}")]
    UndefinedEvidence(String),

    /// An error raised while evaluating a named candidate model.
    #[error("model {model}: {source}")]
    Model {
        model: String,
        #[source]
        source: Box<Error>,
    },

    /// Every candidate model failed.
    #[error("all candidate models failed: {0}")]
    AllModelsFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps the error with the identity of the candidate model that raised it.
    pub fn for_model(self, model: &str) -> Error {
        Error::Model {
            model: model.to_string(),
            source: Box::new(self),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
