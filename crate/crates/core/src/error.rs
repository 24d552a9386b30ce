use thiserror::Error;

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum LgcError {
    #[error("domain error: {0}")]
    Domain(String),
    /// A requested frequency band does not fit under the grid's Nyquist limit.
    #[error("resolution error ({axis} axis): {message}")]
    Resolution { axis: &'static str, message: String },
    /// Quadrature failed to converge; carries the last estimate so callers can
    /// degrade gracefully (the runner records it as a per-row flag).
    #[error("accuracy error: {context} (last estimate {last_estimate:e})")]
    Accuracy { context: String, last_estimate: f64 },
    #[error("resource error: {0}")]
    Resource(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
    /// Linear system is singular; carries the closed-form value which is still
    /// well defined (and equal to zero) in the degenerate case.
    #[error("singular system: repeated coordinates (closed form = {closed_form})")]
    Singular { closed_form: f64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LgcError>;
