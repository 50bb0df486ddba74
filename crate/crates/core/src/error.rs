use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical parameter or argument lies outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// The angle set cannot determine the cosine basis.
    #[error("degenerate angle sampling: {0}")]
    DegenerateSampling(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Zero contrast: the relaxation rate is too fast to be resolved.
    #[error("contrast {contrast} is unresolvable: relaxation time below sensitivity (alpha = 1)")]
    Unresolvable { contrast: f64 },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
