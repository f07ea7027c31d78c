use thiserror::Error;

/// Errors raised by the toolkit. Every variant names the quantity that went
/// wrong so scenario reports can surface it verbatim.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("unbounded witness for {what}: running maximum still increasing at x = {x}")]
    UnboundedWitness { what: String, x: f64 },

    #[error("objective not decaying: x*y - g(y) still increasing at y = {y_hi} (slope {x})")]
    NoDecay { x: f64, y_hi: f64 },

    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),

    #[error("convexity required: {0} is not declared convex")]
    ConvexityRequired(String),

    #[error("overflow guard: log-term {value} exceeds {limit} at index {index}")]
    OverflowGuard { index: usize, value: f64, limit: f64 },

    #[error("coefficient overflow: |c| = {0:e} exceeds 1e300")]
    CoefficientOverflow(f64),

    #[error("quadrature unconverged: doubling Q changed the result by {change:e} (allowed {allowed:e})")]
    QuadratureUnconverged { change: f64, allowed: f64 },

    #[error("series not converged: last shell contributes {last:e} against partial sum {sum:e}")]
    NotConverged { last: f64, sum: f64 },

    #[error("weight too weak: objective keeps growing at box half-width {half_width}")]
    WeightTooWeak { half_width: f64 },

    #[error("box too small: boundary sample ratio {ratio:e} exceeds {threshold:e}")]
    BoxTooSmall { ratio: f64, threshold: f64 },

    #[error("holomorphic extension mismatch: relative error {error:e} at z = {at}")]
    ExtensionMismatch { error: f64, at: String },

    #[error("bound violated in {theorem} check ({check}): {detail}")]
    BoundViolated { theorem: String, check: String, detail: String },

    #[error("no stable index shift found up to {cap}")]
    NoStableShift { cap: usize },

    #[error("index {index} outside family range 1..={m_max}")]
    IndexOutOfRange { index: usize, m_max: usize },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
