use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value in {0} (blow-up or time step too large)")]
    NonFinite(&'static str),

    #[error("time step {dt} exceeds the stability bound {dt_max}")]
    TimeStepTooLarge { dt: f64, dt_max: f64 },

    #[error("histogram masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),

    #[error("histogram has negative mass {0} in bin {1}")]
    NegativeMass(f64, usize),

    #[error("too many bins for the exact solver: {bins} > {max}")]
    TooManyBins { bins: usize, max: usize },

    #[error("{what} did not converge after {iterations} iterations")]
    NotConverged { what: &'static str, iterations: usize },

    #[error("test function is not 1-Lipschitz between bins {0} and {1} (slope {2})")]
    LipschitzViolation(usize, usize, f64),

    #[error("Picard contraction check failed: 2*int |grad u|_inf = {0} >= 1")]
    ContractionFailed(f64),

    #[error("velocity history covers [{start}, {end}], requested time {t}")]
    HistoryRange { t: f64, start: f64, end: f64 },

    #[error("moment integral I_q diverges for q = {q} in dimension {d} (need q > d + 1)")]
    DivergentIntegral { q: f64, d: usize },

    #[error("unsupported density family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration errors:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("format error: {0}")]
    Format(String),

    #[error("format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Io(_) | Error::Format(_) | Error::VersionMismatch { .. } => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
