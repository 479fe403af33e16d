use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation `{op}` is not supported by the {variant} kernel")]
    UnsupportedVariant {
        op: &'static str,
        variant: &'static str,
    },

    #[error("moment-generating function overflows at lambda = {lambda}")]
    Overflow { lambda: f64 },

    #[error("kernel table: {0}")]
    KernelTable(String),

    #[error("kernel spec `{spec}`: {reason}")]
    KernelSpec { spec: String, reason: String },

    #[error("epsilon = {0:e} is below the admissible floor")]
    EpsilonTooSmall(f64),

    #[error("could not bracket the minimizer of psi at eps = {eps}")]
    BracketExpansion { eps: f64 },

    #[error("invalid eps bracket [{lo}, {hi}]: psi_min does not change sign")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("cubic has no positive real root")]
    NoPositiveRoot,

    #[error("cubic leading coefficient {0:e} is degenerate")]
    DegenerateCubic(f64),

    #[error("cubic has a single real root (discriminant {0:e})")]
    SingleRealRoot(f64),

    #[error("continuation seed eps = {eps} is not on the critical curve (residual {residual:e})")]
    SeedResidual { eps: f64, residual: f64 },

    #[error("continuation stage failed at h = {h}: {source}")]
    StageFailure { h: f64, source: Box<Error> },

    #[error("simulation became unstable at t = {t}")]
    Instability { t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
