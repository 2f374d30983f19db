use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {msg}", path.display())]
    Format { path: PathBuf, line: usize, msg: String },

    #[error("{0}")]
    Filename(String),

    #[error("article {article_id}: span {start}..{end} invalid for text of {len} characters")]
    Span {
        article_id: u64,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("{}:{line}: empty span {start}..{end}", path.display())]
    EmptySpan {
        path: PathBuf,
        line: usize,
        start: usize,
        end: usize,
    },

    #[error("article {0} not found")]
    MissingArticle(u64),

    #[error("training data: {0}")]
    TrainingData(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("alignment: {0}")]
    Alignment(String),

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
