use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Argument outside a tabulated or windowed interval.
    #[error("{what} = {value:e} outside valid interval [{lo:e}, {hi:e}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// Order beyond what the special-function routines support.
    #[error("order l = {l} exceeds supported maximum {max}")]
    Capability { l: usize, max: usize },

    /// Invalid construction parameters (profiles, media, configs).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// Both continuity factors vanished; the mode normalization is undefined.
    #[error("degenerate mode normalization at l = {l}, x = {x:e}")]
    DegenerateNormalization { l: usize, x: f64 },

    /// The angular-momentum sum did not meet its tolerance before the cap.
    #[error("l-sum not converged at l_max = {l_max} (tail estimate {tail_estimate:e}, partial sum {partial:e})")]
    Truncation {
        l_max: usize,
        tail_estimate: f64,
        partial: f64,
    },

    /// A discretization is too coarse for the requested accuracy.
    #[error("accuracy error: {0}")]
    Accuracy(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that a finer discretization could cure.
    pub fn is_accuracy(&self) -> bool {
        matches!(self, Error::Accuracy(_) | Error::Truncation { .. })
    }
}
