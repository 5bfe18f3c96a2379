use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A comparison could not be resolved at the current precision. Internal:
    /// callers only see it turned into `PrecisionExhausted` by the driver.
    #[error("comparison indeterminate at current precision")]
    Indeterminate,
    #[error("precision exhausted in {op} at {bits} bits")]
    PrecisionExhausted { op: &'static str, bits: u32 },
    #[error("budget exceeded in {op}: {detail}")]
    BudgetExceeded { op: &'static str, detail: String },
    #[error("degenerate vector")]
    DegenerateVector,
    #[error("angle precondition violated: {0}")]
    AnglePrecondition(String),
    #[error("vector {0} is not a convergent of the owner")]
    NotConvergent(String),
    #[error("no interior peak: {0}")]
    NoInteriorPeak(String),
    #[error("valley hypotheses violated: {0}")]
    ValleyHypotheses(String),
    #[error("profile hypothesis ({clause}) fails at index {index}")]
    ProfileHypothesis { clause: String, index: usize },
    #[error("construction stalled at depth {depth}: {detail}")]
    ConstructionStalled { depth: usize, detail: String },
    #[error("tree too thin: no children recorded at depth {0}")]
    TreeTooThin(usize),
    #[error("verification failed: {}", .0.join("; "))]
    Verification(Vec<String>),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::PrecisionExhausted { .. } | Error::Indeterminate => 2,
            Error::BudgetExceeded { .. } => 3,
            Error::Verification(_) => 4,
            _ => 1,
        }
    }
}
