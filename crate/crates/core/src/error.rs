use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in one of the input formats. `line` is 1-based.
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("invalid query id {0:?}")]
    InvalidQueryId(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty corpus: no tokens found")]
    EmptyCorpus,

    #[error("query {0} has no positive relevance judgment (unjudgeable)")]
    Unjudgeable(String),

    #[error("document {0:?} has no text in the document source")]
    MissingDocText(String),

    #[error("no top-ranked document has any token; relevance model is empty")]
    EmptyRelevanceModel,

    #[error("term {0:?} is absent from the collection statistics: doc text not drawn from the stats corpus")]
    TermNotInCollection(String),

    #[error("undefined normalization: corpus score is zero")]
    UndefinedNormalization,

    #[error("SMV requires positive scores (apply --score-shift); found {0}")]
    NonPositiveScore(f64),

    #[error("x% threshold undefined for nonpositive head score {0}")]
    NonPositiveHeadScore(f64),

    #[error("insufficient sample: {found} paired queries, at least {needed} required")]
    InsufficientSample { found: usize, needed: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by malformed or missing input, as opposed to
    /// inputs that are well formed but yield an empty or degenerate result.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Io { .. }
                | Error::InvalidQueryId(_)
                | Error::InvalidInput(_)
                | Error::MissingDocText(_)
                | Error::TermNotInCollection(_)
        )
    }
}
