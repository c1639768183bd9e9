use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("kernel is singular at the origin: {0}")]
    SingularOrigin(String),

    #[error("unsupported kernel term: {0}")]
    UnsupportedTerm(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid mollifier: {0}")]
    InvalidMollifier(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("adaptive quadrature did not converge at r = {radius}: estimated error {error:e} for value {value:e}")]
    QuadratureFailure { radius: f64, value: f64, error: f64 },

    #[error("radius {radius} is outside the regularized kernel table (radius {table_radius}) and far-field fallback is disabled")]
    OutOfRange { radius: f64, table_radius: f64 },

    #[error("initial density has no positive grid point at h = {0}")]
    EmptySupport(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("particles {0} and {1} coincide under a kernel that is singular at the origin")]
    CoincidentParticles(usize, usize),

    #[error("operation not supported for this method variant: {0}")]
    VariantMismatch(String),

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("linear solver did not converge after {iterations} iterations (residual {residual:e})")]
    SolverNonConvergence { iterations: usize, residual: f64 },

    #[error("grid index mismatch: {0}")]
    IndexMismatch(String),

    #[error("profile is not radially symmetric: {0}")]
    NonRadialProfile(String),

    #[error("time {t} is at or beyond the blowup time {t_star}")]
    PastBlowup { t: f64, t_star: f64 },

    #[error("no root in bracket [{lo}, {hi}]")]
    NoRootInBracket { lo: f64, hi: f64 },

    #[error("need at least {needed} rows, got {got}")]
    InsufficientRows { needed: usize, got: usize },

    #[error("errors must be positive to fit a log-log slope (row {0})")]
    NonPositiveError(usize),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command line tool: 2 for invalid input or
    /// configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::QuadratureFailure { .. }
            | Error::StepUnderflow { .. }
            | Error::NonFinite(_)
            | Error::SolverNonConvergence { .. }
            | Error::CoincidentParticles(..)
            | Error::NoRootInBracket { .. }
            | Error::PastBlowup { .. }
            | Error::NonPositiveError(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
