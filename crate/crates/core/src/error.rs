use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} out of range for {len} vehicles")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("value {value} outside open interval ({lower}, {upper})")]
    Domain { value: f64, lower: f64, upper: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    #[error("configuration rule `{rule}` violated: {message}")]
    Config { rule: &'static str, message: String },

    #[error("trigger time {t} does not follow previous trigger at {previous}")]
    NonIncreasingTrigger { previous: f64, t: f64 },

    #[error("infeasible initial condition: {0}")]
    Infeasible(String),

    #[error("simulation fault at tick {tick} (t = {time:.3} s): {source}")]
    Fault {
        tick: usize,
        time: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(rule: &'static str, message: impl Into<String>) -> Self {
        Error::Config {
            rule,
            message: message.into(),
        }
    }
}
