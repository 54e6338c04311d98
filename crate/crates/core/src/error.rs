use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("trajectory of length {len} is shorter than Hankel depth {depth}")]
    TooShort { len: usize, depth: usize },

    #[error("buffer is frozen; append rejected")]
    FrozenBuffer,

    #[error("controller is not primed: {0}")]
    NotPrimed(String),

    #[error("input is persistently exciting of order {achieved}, but order {required} is required")]
    PersistentExcitation { achieved: usize, required: usize },

    #[error("QP infeasible ({reason})\n{dump}")]
    Infeasible { reason: String, dump: String },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("simulation diverged at t = {t} s, state = {state:?}")]
    Divergence { t: f64, state: Vec<f64> },

    #[error("invalid configuration `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            msg: msg.into(),
        }
    }
}
