use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("action {action} out of range for player {player} with {count} actions")]
    ActionOutOfRange {
        player: usize,
        action: usize,
        count: usize,
    },

    #[error("flat index {index} out of range for {total} joint actions")]
    FlatIndexOutOfRange { index: usize, total: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A measure has a zero (or negative) entry where strict positivity is required.
    #[error("measure of player {player} is not strictly positive at joint action {action}")]
    NotFullyMixed { player: usize, action: usize },

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed caller input (as opposed to IO).
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let full = e.to_string();
        let message = full.strip_suffix(&suffix).unwrap_or(&full).to_string();
        Error::Parse {
            line: e.line(),
            column: e.column(),
            message,
        }
    }
}
