use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("points {i} and {j} coincide")]
    CoincidentPoints { i: usize, j: usize },

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("vector ({0}, {1}, {2}) cannot be normalized")]
    InvalidVector(f64, f64, f64),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("root bracketing failed: {0}")]
    RootBracket(&'static str),

    #[error("adaptive quadrature exceeded maximum depth {depth} on [{lo}, {hi}]")]
    MaxDepth { depth: usize, lo: f64, hi: f64 },

    #[error("caps overlap: centers at {distance} rad but radius {radius} rad")]
    Overlap { distance: f64, radius: f64 },

    #[error("least-squares system is rank deficient")]
    RankDeficient,

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
