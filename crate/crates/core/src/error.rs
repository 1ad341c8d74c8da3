use std::fmt;

/// Position inside a source document, used by parse errors.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Location {
    pub file: Option<String>,
    pub line: usize,
    pub column: usize,
}

impl Location {
    pub fn at(line: usize, column: usize) -> Self {
        Location {
            file: None,
            line,
            column,
        }
    }

    pub fn in_file(mut self, file: impl Into<String>) -> Self {
        self.file = Some(file.into());
        self
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}:{}:{}", file, self.line, self.column),
            None => write!(f, "{}:{}", self.line, self.column),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{location}: {message}")]
    Parse { location: Location, message: String },

    #[error("{0}")]
    Invalid(String),

    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },

    #[error("target level `{target}` is not coarser than `{current}`")]
    TargetNotCoarser { current: String, target: String },

    #[error("target level `{target}` is not finer than `{current}`")]
    TargetNotFiner { current: String, target: String },

    #[error("dimension `{0}` is not an axis of the cube")]
    NotAnAxis(String),

    #[error("not a permutation: {0}")]
    NotAPermutation(String),

    #[error("nothing to pull")]
    NothingToPull,

    #[error("label `{label}` is not unique at coordinate ({coordinate})")]
    LabelCollision { label: String, coordinate: String },

    #[error("operation not supported on this cube: {0}")]
    Unsupported(String),

    #[error("rule set rejected: {0}")]
    RulesRejected(String),

    #[error("new instance `{instance}` would have several parents ({parents})")]
    NonHomogeneousParent { instance: String, parents: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(location: Location, message: impl Into<String>) -> Self {
        Error::Parse {
            location,
            message: message.into(),
        }
    }

    pub(crate) fn unknown(kind: &'static str, id: impl Into<String>) -> Self {
        Error::Unknown {
            kind,
            id: id.into(),
        }
    }

    /// Attaches a file name to parse errors that do not carry one yet.
    pub fn with_file(self, file: &str) -> Self {
        match self {
            Error::Parse {
                mut location,
                message,
            } if location.file.is_none() => {
                location.file = Some(file.to_string());
                Error::Parse { location, message }
            }
            other => other,
        }
    }

    /// Stable machine-readable code for API envelopes.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse-error",
            Error::Invalid(_) => "invalid-argument",
            Error::Unknown { .. } => "unknown-reference",
            Error::TargetNotCoarser { .. } => "target-not-coarser",
            Error::TargetNotFiner { .. } => "target-not-finer",
            Error::NotAnAxis(_) => "not-an-axis",
            Error::NotAPermutation(_) => "not-a-permutation",
            Error::NothingToPull => "nothing-to-pull",
            Error::LabelCollision { .. } => "label-collision",
            Error::Unsupported(_) => "unsupported",
            Error::RulesRejected(_) => "rules-rejected",
            Error::NonHomogeneousParent { .. } => "non-homogeneous-parent",
            Error::Degenerate(_) => "degenerate-input",
            Error::Io { .. } => "io-error",
        }
    }

    pub fn location(&self) -> Option<&Location> {
        match self {
            Error::Parse { location, .. } => Some(location),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
