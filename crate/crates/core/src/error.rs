use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("box {top},{left}..{bottom},{right} is outside a {width}x{height} image")]
    Bounds {
        top: usize,
        left: usize,
        bottom: usize,
        right: usize,
        width: usize,
        height: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("training diverged at epoch {epoch} (mse = {mse})")]
    Divergence { epoch: usize, mse: f64 },

    #[error("{}format error at byte {offset}: {message}", path_prefix(.path))]
    Format {
        path: Option<PathBuf>,
        offset: usize,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn path_prefix(path: &Option<PathBuf>) -> String {
    match path {
        Some(p) => format!("{}: ", p.display()),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        Error::Format {
            path: None,
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a file path to a format error produced by an in-memory parser.
    pub fn with_path(self, path: impl Into<PathBuf>) -> Self {
        match self {
            Error::Format {
                path: None,
                offset,
                message,
            } => Error::Format {
                path: Some(path.into()),
                offset,
                message,
            },
            other => other,
        }
    }

    /// True for errors caused by malformed input data rather than bad settings.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Shape(_)
                | Error::Bounds { .. }
                | Error::EmptyInput(_)
                | Error::DivisionByZero(_)
                | Error::Io { .. }
                | Error::Divergence { .. }
        )
    }
}
