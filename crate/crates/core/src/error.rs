use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("rank deficient: requested {requested} modes but usable rank is {usable}")]
    RankDeficient { requested: usize, usable: usize },

    #[error("degenerate supremizer for pressure mode {0}")]
    DegenerateMode(usize),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ill-posed least-squares problem ({0}); use a ridge parameter > 0")]
    IllPosed(String),

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("training diverged at epoch {0} (non-finite loss)")]
    Diverged(usize),

    #[error("time misalignment: trajectory time {t} has no snapshot within {tol}")]
    Misaligned { t: f64, tol: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::Error::$variant(alloc::format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
