use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Why a varint could not be decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedVarint {
    /// The stream ended before a terminating byte.
    Truncated,
    /// A multi-byte value ended in a zero group (e.g. `[0x80, 0x00]`).
    NonMinimal,
    /// No terminating byte within the 5-byte cap.
    TooLong,
}

impl fmt::Display for MalformedVarint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MalformedVarint::Truncated => "truncated varint",
            MalformedVarint::NonMinimal => "non-minimal varint encoding",
            MalformedVarint::TooLong => "varint longer than 5 bytes",
        })
    }
}

/// Structural problems in vocabulary, mapping, dictionary and container files.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: Vec<u8> },
    #[error("unsupported {what} version {version}")]
    UnsupportedVersion { what: &'static str, version: u8 },
    #[error("unknown container flag bits {0:#04x}")]
    UnknownFlags(u8),
    #[error("unknown backend wire code {0:#04x}")]
    UnknownBackend(u8),
    #[error("truncated {0}")]
    Truncated(&'static str),
    #[error("length mismatch in {what}: declared {declared}, actual {actual}")]
    LengthMismatch {
        what: &'static str,
        declared: u64,
        actual: u64,
    },
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}

/// Pipeline stage names used to label errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Tokenize,
    Reorder,
    Varint,
    Backend,
    Container,
    Vocabulary,
    Mapping,
    Detokenize,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Tokenize => "tokenize",
            Stage::Reorder => "reorder",
            Stage::Varint => "varint",
            Stage::Backend => "backend",
            Stage::Container => "container",
            Stage::Vocabulary => "vocabulary",
            Stage::Mapping => "mapping",
            Stage::Detokenize => "detokenize",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} exceeds the varint cap (2^35 - 1){}", index_suffix(*index))]
    ValueOutOfRange { value: u64, index: Option<usize> },
    #[error("{kind} at byte offset {offset}{}", index_suffix(*index))]
    MalformedVarint {
        kind: MalformedVarint,
        offset: usize,
        index: Option<usize>,
    },
    #[error("token id {id} out of range for vocabulary of {vocab_size} tokens")]
    InvalidToken { id: u64, vocab_size: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("format error: {0}")]
    Format(#[from] FormatError),
    #[error("{backend} backend error: {message}")]
    Backend { backend: String, message: String },
    #[error("unsupported backend: {0}")]
    UnsupportedBackend(String),
    #[error("vocabulary resolution failed: {0}")]
    Resolution(String),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn index_suffix(index: Option<usize>) -> String {
    match index {
        Some(i) => format!(" (element {i})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn at_stage(self, stage: Stage) -> Error {
        match self {
            already @ Error::Stage { .. } => already,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The innermost error, skipping stage labels.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
