use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid dispersion relation: {0}")]
    InvalidDispersion(String),

    #[error("pulse width 1/omega = {width} is below four grid spacings ({min})")]
    PulseUnresolvable { width: f64, min: f64 },

    #[error("pulse tails 6/omega = {extent} exceed half the grid length ({max})")]
    PulseTooWide { extent: f64, max: f64 },

    #[error("operator is not Hermitian (max |A - A^dagger| = {0:e})")]
    NotHermitian(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("time-ordered product did not converge (last change {0:e})")]
    NonConvergent(f64),

    #[error("window boundary {boundary} is {offset:e} from the nearest grid point (tolerance {tolerance:e})")]
    WindowGridMisaligned {
        boundary: f64,
        offset: f64,
        tolerance: f64,
    },

    #[error("dense dimension {dim} exceeds the limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("need at least {needed} records, got {got}")]
    InsufficientRecords { needed: usize, got: usize },

    #[error("clock state is stationary (var(H_C) = {0:e})")]
    StationaryState(f64),

    #[error("clock pulse reached the grid edge at t = {t}")]
    Wraparound { t: f64 },

    #[error("invalid step configuration: {0}")]
    InvalidStep(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("state is not normalized (norm = {0})")]
    NotNormalized(f64),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),

    #[error("malformed state dump: {0}")]
    Dump(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit status: 1 for invalid input, 2 for runtime guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidDispersion(_)
            | Error::PulseUnresolvable { .. }
            | Error::PulseTooWide { .. }
            | Error::NotHermitian(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidStep(_)
            | Error::InvalidSchedule(_)
            | Error::NotNormalized(_)
            | Error::Config { .. } => 1,
            Error::NonConvergent(_)
            | Error::WindowGridMisaligned { .. }
            | Error::TooLarge { .. }
            | Error::InsufficientRecords { .. }
            | Error::StationaryState(_)
            | Error::Wraparound { .. }
            | Error::Io(_)
            | Error::Dump(_) => 2,
        }
    }
}
