use thiserror::Error;

/// Errors raised by the numerical laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes or sizes between two operands.
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    /// A configuration violates a structural rule (layer shapes, omega range, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// An API was used out of order, e.g. backprop on an unfinalized tape.
    #[error("usage error: {0}")]
    Usage(String),
    /// A computation produced NaN/Inf or exceeded a stability bound.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A time step violates the explicit-scheme stability bound.
    #[error("stability bound violated: {what}; required dt <= {required_dt:e}")]
    Cfl { what: String, required_dt: f64 },
    /// Degenerate statistical input.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// A weight file could not be decoded.
    #[error("malformed weight file{}: {message}", layer.map(|l| format!(" (layer {l})")).unwrap_or_default())]
    Parse {
        layer: Option<usize>,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}
