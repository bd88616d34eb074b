use thiserror::Error;

/// Every failure mode of the library. Variants carry enough context to
/// explain the failure without a backtrace.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("kernel under-resolved: spacing {spacing} exceeds {limit}")]
    Resolution { spacing: f64, limit: f64 },

    #[error("range error: {0}")]
    Range(String),

    #[error("invalid model, {invariant} fails: {detail}")]
    ModelInvalid {
        invariant: &'static str,
        detail: String,
    },

    #[error("no crossing: {0}")]
    NoCrossing(String),

    #[error("instability at t = {t}: {detail}")]
    Instability { t: f64, detail: String },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("window exhausted at t = {t}: {detail}")]
    WindowExhausted { t: f64, detail: String },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("inconsistent model: {0}")]
    ModelInconsistent(String),

    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("bracket does not straddle the target: {0}")]
    Bracket(String),

    #[error("construction invariant violated: {0}")]
    ConstructionInvariant(String),

    #[error("envelope misplaced at t = {t}, x = {x}: {detail}")]
    EnvelopeMisplacement { t: f64, x: f64, detail: String },

    #[error("no admissible decay rate: {0}")]
    InfeasibleRate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) | Error::Parse { .. } | Error::Constraint(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
