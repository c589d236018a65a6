use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the archive can report. Each variant carries a stable code
/// (see [`Error::code`]) that the command-line surface prints verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("identifier component {index} is empty")]
    InvalidIdentifierComponent { index: usize },
    #[error("{kind} identifiers take {expected} components, got {got}")]
    IdentifierArity {
        kind: &'static str,
        expected: &'static str,
        got: usize,
    },
    #[error("`{lexical}` is not a valid {datatype} value")]
    ValueSyntax { lexical: String, datatype: String },
    #[error("line {line_no}: {message}")]
    Parse { line_no: usize, message: String },
    #[error("line {line_no}: unsupported construct: {construct}")]
    UnsupportedConstruct { line_no: usize, construct: String },
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("duplicate key ({})", values.join(", "))]
    DuplicateKey { values: Vec<String> },
    #[error("key column `{column}` is null on line {line_no}")]
    NullKey { column: String, line_no: usize },

    #[error("archive already initialized or directory not empty: {}", .0.display())]
    AlreadyInitialized(PathBuf),
    #[error("not an archive: {}", .0.display())]
    NotAnArchive(PathBuf),
    #[error("another writer holds the archive lock: {}", .0.display())]
    WriterLocked(PathBuf),
    #[error("dataset already exists: {0}")]
    DatasetExists(String),
    #[error("dataset not found: {0}")]
    DatasetNotFound(String),
    #[error("version not found: {0}")]
    VersionNotFound(String),
    #[error("transaction time {new} is not after the previous version's start {previous}")]
    TemporalOrderViolation { previous: String, new: String },
    #[error("no version of {dataset} is current at {at}")]
    NoVersionAtTime { dataset: String, at: String },
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error("invalid temporal annotation: {0}")]
    InvalidTemporal(String),
    #[error("invalid provenance: {0}")]
    InvalidProvenance(String),

    #[error("change set endpoints belong to different datasets: {left} vs {right}")]
    DatasetMismatch { left: String, right: String },
    #[error("inapplicable delta: {0}")]
    InapplicableDelta(String),
    #[error("rule syntax error on line {line_no}: {message}")]
    RuleSyntax { line_no: usize, message: String },
    #[error("change set syntax error on line {line_no}: {message}")]
    ChangeSetSyntax { line_no: usize, message: String },

    #[error("resource already exists: {0}")]
    ResourceExists(String),
    #[error("resource not found: {0}")]
    ResourceNotFound(String),
    #[error("invalid resource definition: {0}")]
    InvalidResource(String),

    #[error("version {from} does not precede {to}")]
    VersionOrder { from: String, to: String },
    #[error("invalid selector: {0}")]
    InvalidSelector(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed metadata in {}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable numeric code, printed as `E<nnn>`.
    pub fn code(&self) -> u16 {
        match self {
            Error::InvalidIdentifierComponent { .. } => 101,
            Error::IdentifierArity { .. } => 109,
            Error::ValueSyntax { .. } => 102,
            Error::Parse { .. } => 103,
            Error::UnsupportedConstruct { .. } => 104,
            Error::ConfigMismatch(_) => 105,
            Error::InvalidConfig(_) => 106,
            Error::DuplicateKey { .. } => 107,
            Error::NullKey { .. } => 108,
            Error::AlreadyInitialized(_) => 201,
            Error::NotAnArchive(_) => 202,
            Error::WriterLocked(_) => 203,
            Error::DatasetExists(_) => 204,
            Error::DatasetNotFound(_) => 205,
            Error::VersionNotFound(_) => 206,
            Error::TemporalOrderViolation { .. } => 207,
            Error::NoVersionAtTime { .. } => 208,
            Error::CorruptArchive(_) => 209,
            Error::InvalidTemporal(_) => 210,
            Error::InvalidProvenance(_) => 211,
            Error::DatasetMismatch { .. } => 301,
            Error::InapplicableDelta(_) => 302,
            Error::RuleSyntax { .. } => 303,
            Error::ChangeSetSyntax { .. } => 304,
            Error::ResourceExists(_) => 401,
            Error::ResourceNotFound(_) => 402,
            Error::InvalidResource(_) => 403,
            Error::VersionOrder { .. } => 501,
            Error::InvalidSelector(_) => 502,
            Error::Io { .. } => 901,
            Error::Json { .. } => 902,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
