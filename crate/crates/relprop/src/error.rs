//! Crate-wide error type.
//!
//! Errors that the file formats and the CLI must tell apart (missing file,
//! checksum mismatch, shape incompatibility, bad magic, ...) get their own
//! variants; everything else is grouped by failure mode.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Two tensor shapes that must conform do not; names both shapes.
    ShapeMismatch {
        context: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    /// A shape or parameter is invalid on its own (zero extent, window
    /// larger than input, bad output extent, ...).
    InvalidShape(String),
    /// Model file missing on disk.
    MissingFile(PathBuf),
    /// Weight blob does not hash to the manifest's checksum.
    ChecksumMismatch {
        expected: String,
        actual: String,
    },
    /// Layer chain is inconsistent with the declared input shape or the
    /// class list.
    ShapeIncompatible(String),
    /// Weight blob holds the wrong number of floats for a layer.
    WeightCount {
        layer: String,
        expected_weights: usize,
        expected_bias: usize,
        got: usize,
    },
    /// Training produced a non-finite loss.
    Divergence {
        epoch: usize,
    },
    /// Rule parameters violate their constraint (alpha - beta != 1, ...).
    InvalidRule(String),
    /// A layer kind the requested operation cannot handle.
    UnsupportedLayer(String),
    /// Group list is not a partition of the index set.
    BadPartition(String),
    /// Conservation audit requested for a map that does not decompose the
    /// function value (sensitivity maps).
    AuditNotApplicable(&'static str),
    /// Perturbation sample excluded: the explained logit is not positive,
    /// so a relative decrease is undefined.
    ScoreNotPositive {
        score: f64,
    },
    /// Every sample of an evaluation run was excluded.
    EmptySurvivorSet,
    /// IDX file with an unexpected magic number.
    BadMagic {
        path: PathBuf,
        magic: u32,
    },
    /// IDX file shorter than its header declares.
    Truncated(PathBuf),
    /// CSV parse failure, with the 1-based data row.
    Csv {
        row: usize,
        message: String,
    },
    /// Vocabulary file defines no tokens.
    EmptyVocabulary,
    /// Bad run configuration (CLI flags, plan parameters).
    InvalidConfig(String),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Json(serde_json::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch {
                context,
                left,
                right,
            } => {
                write!(
                    f,
                    "{context}: shape {left:?} does not conform with {right:?}"
                )
            }
            Error::InvalidShape(msg) => write!(f, "invalid shape: {msg}"),
            Error::MissingFile(p) => write!(f, "missing file: {}", p.display()),
            Error::ChecksumMismatch { expected, actual } => {
                write!(f, "weight blob checksum mismatch: manifest says {expected}, blob hashes to {actual}")
            }
            Error::ShapeIncompatible(msg) => write!(f, "incompatible shapes: {msg}"),
            Error::WeightCount {
                layer,
                expected_weights,
                expected_bias,
                got,
            } => {
                write!(
                    f,
                    "{layer}: expected {expected_weights} weight floats (+{expected_bias} bias), blob provides {got}"
                )
            }
            Error::Divergence { epoch } => {
                write!(f, "training diverged: non-finite loss at epoch {epoch}")
            }
            Error::InvalidRule(msg) => write!(f, "invalid rule: {msg}"),
            Error::UnsupportedLayer(kind) => write!(f, "unsupported layer kind: {kind}"),
            Error::BadPartition(msg) => write!(f, "groups do not partition the index set: {msg}"),
            Error::AuditNotApplicable(why) => write!(f, "conservation audit refused: {why}"),
            Error::ScoreNotPositive { score } => {
                write!(
                    f,
                    "sample excluded: explained logit {score} is not positive"
                )
            }
            Error::EmptySurvivorSet => {
                write!(f, "no sample survived the positive-score filter")
            }
            Error::BadMagic { path, magic } => {
                write!(f, "{}: unexpected IDX magic 0x{magic:08x}", path.display())
            }
            Error::Truncated(p) => write!(f, "{}: file truncated", p.display()),
            Error::Csv { row, message } => write!(f, "csv row {row}: {message}"),
            Error::EmptyVocabulary => write!(f, "vocabulary defines no tokens"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Error::Json(e) => write!(f, "json: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            Error::Json(e) => Some(e),
            _ => None,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e)
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by a bad configuration rather than a failure
    /// at run time. The CLI maps these to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::InvalidRule(_) | Error::InvalidShape(_)
        )
    }
}
