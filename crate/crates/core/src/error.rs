//! Error type shared across the pipeline.

/// Everything that can go wrong between reading a recording and writing a
/// report. Variants map onto the CLI exit-code contract: data-shaped
/// problems exit 2, numeric failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value violates its invariant; names the field.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Malformed input text; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Input too small for the requested operation.
    #[error("size error: {0}")]
    Size(String),

    /// Invalid frequency band bounds.
    #[error("invalid band: {0}")]
    Band(String),

    /// Class id out of range.
    #[error("label error: {0}")]
    Label(String),

    #[error("data error: {0}")]
    Data(String),

    /// Non-finite values where finite arithmetic is required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// n-shot plan asks for more blocks than the target has.
    #[error("split error: {0}")]
    Split(String),

    /// Scheme/plan combination that does not exist (e.g. SS at 0-shot).
    #[error("scheme error: {0}")]
    Scheme(String),

    #[error("unknown subject: {0}")]
    Lookup(String),

    #[error("AUC undefined: {0}")]
    UndefinedAuc(String),

    /// Training data containing a single class.
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    /// Bad magic, bad version, or CRC failure in a model file.
    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("I/O error at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the arithmetic itself rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
