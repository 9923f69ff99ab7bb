use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("duplicate channel name `{0}` in manifest")]
    DuplicateChannel(String),

    #[error("model channel `{0}` is not present in the dataset")]
    ModelChannel(String),

    #[error("{}: missing channel `{name}`", path.display())]
    MissingChannel { path: PathBuf, name: String },

    #[error("{}: column `{name}` appears more than once", path.display())]
    DuplicateColumn { path: PathBuf, name: String },

    #[error("{}: column `{name}` is not declared in the manifest", path.display())]
    UnknownColumn { path: PathBuf, name: String },

    #[error("{}: line {line} has {found} fields, expected {expected}", path.display())]
    RaggedRow {
        path: PathBuf,
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("{}: line {line}, channel `{channel}`: cannot parse `{value}` as a number", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        channel: String,
        value: String,
    },

    #[error("{}: line {line}, channel `{channel}`: non-finite value `{value}`", path.display())]
    NonFinite {
        path: PathBuf,
        line: u64,
        channel: String,
        value: String,
    },

    #[error("{}: dt {found} does not match the declared dt_seconds {declared}", path.display())]
    DtMismatch { path: PathBuf, declared: f64, found: f64 },

    #[error("{} already exists; pass --overwrite to replace it", .0.display())]
    OutputExists(PathBuf),

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] stateselect_core::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(stateselect_core::Error::SearchTooLarge { .. }) => 3,
            _ => 1,
        }
    }
}
