use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Statics system has no solution (or no unique one) for the given load.
    #[error("inconsistent system: rank {rank} of {unknowns} unknowns, augmented rank {augmented_rank} (rank deficiency {deficiency})")]
    Inconsistent {
        rank: usize,
        augmented_rank: usize,
        unknowns: usize,
        deficiency: usize,
    },

    #[error("solver did not converge after {iterations} iterations (last residual {residual:e} mm)")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("singular constraint Jacobian at theta = {theta_deg} deg")]
    Singular { theta_deg: f64 },

    /// Wraps a chain-solver failure with the flexion angle that produced it.
    #[error("at theta = {theta_deg} deg: {source}")]
    AtAngle {
        theta_deg: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate optimum: baseline misalignment is zero, reduction undefined")]
    DegenerateOptimum,

    #[error("ill-conditioned calibration data: {0}")]
    IllConditioned(String),

    #[error("stream error: {0}")]
    Stream(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable tag, used in the CLI's JSON error report.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Argument(_) => "argument",
            Error::Inconsistent { .. } => "inconsistent",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Singular { .. } => "singular",
            Error::AtAngle { source, .. } => source.kind(),
            Error::DegenerateOptimum => "degenerate_optimum",
            Error::IllConditioned(_) => "ill_conditioned",
            Error::Stream(_) => "stream",
            Error::ConfigParse { .. } => "config_parse",
            Error::Validation(_) => "validation",
            Error::Csv(_) => "csv",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
