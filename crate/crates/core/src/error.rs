use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypnetError {
    #[error("invalid argument `{field}`: {reason}")]
    Argument { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("grid too coarse: kernel needs spacing <= {max_spacing:.6e}, got {spacing:.6e} (at least {required_points} points per axis)")]
    Resolution {
        spacing: f64,
        max_spacing: f64,
        required_points: usize,
    },

    #[error("coefficient out of bounds: {0}")]
    Coefficient(String),

    #[error("symbol is not hyperbolic at {witness}: max |Re eigenvalue| = {real_part:.3e}")]
    NotHyperbolic { witness: String, real_part: f64 },

    #[error("strict hyperbolicity fails at {witness}: gap {gap:.3e} below {threshold:.3e}")]
    StrictHyperbolicity {
        witness: String,
        gap: f64,
        threshold: f64,
    },

    #[error("degenerate eigenvalues at {0}")]
    DegenerateEigenvalue(String),

    #[error("positivity check failed at {witness}: min eigenvalue {min_eig:.6e} below {bound:.6e}")]
    Positivity {
        witness: String,
        min_eig: f64,
        bound: f64,
    },

    #[error("symbol of declared order {declared} exceeds growth bound: estimated {estimated:.3}")]
    OrderMismatch { declared: f64, estimated: f64 },

    #[error("solution blew up at t = {time:.6e}")]
    BlowUp { time: f64 },

    #[error("non-finite value encountered: {0}")]
    NumericalFault(String),

    #[error("horizon too long: {0}")]
    Horizon(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o failure on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, HypnetError>;

impl HypnetError {
    pub fn arg(field: &str, reason: impl Into<String>) -> Self {
        HypnetError::Argument {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        HypnetError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    /// True for failures caused by the numbers rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            HypnetError::NotHyperbolic { .. }
                | HypnetError::StrictHyperbolicity { .. }
                | HypnetError::DegenerateEigenvalue(_)
                | HypnetError::Positivity { .. }
                | HypnetError::OrderMismatch { .. }
                | HypnetError::BlowUp { .. }
                | HypnetError::NumericalFault(_)
                | HypnetError::Degenerate(_)
        )
    }
}
