use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] ela_core::Error),

    #[error("crash budget exceeded: {crashed} crashed processes with f = {f}")]
    CrashBudget { crashed: usize, f: usize },

    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("invalid crash schedule: {0}")]
    InvalidSchedule(String),

    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    #[error("scheduler deadlock: {0}")]
    Deadlock(String),

    #[error("protocol state error: {0}")]
    State(String),

    #[error("trace version mismatch: got {got:?}, expected {expected:?}")]
    TraceVersion { got: String, expected: String },

    #[error("trace parse error: {0}")]
    TraceParse(String),

    #[error("trace incomplete: {0}")]
    TraceIncomplete(String),

    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
