use std::fmt;
use std::path::PathBuf;

use crate::dsl::ParseDiagnostic;

/// Where an offending name or record was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Location {
    /// A position inside rule-file source text (1-based).
    Source { line: usize, column: usize },
    /// A path inside a JSON document, e.g. `dialogue d1 / turn 0 / user_acts[1]`.
    Record(String),
    /// No useful position (programmatic construction).
    Unknown,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Source { line, column } => write!(f, "{line}:{column}"),
            Location::Record(path) => f.write_str(path),
            Location::Unknown => f.write_str("<unknown>"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value {0:?}: values must be non-empty after trimming")]
    InvalidValue(String),
    #[error("invalid variable name {0:?}")]
    InvalidVariable(String),
    #[error("unbound variable ?{0}")]
    UnboundVariable(String),
    #[error("{at}: unknown slot {slot:?}")]
    UnknownSlot { slot: String, at: Location },
    #[error("{at}: unknown dialogue act {act:?}")]
    UnknownAct { act: String, at: Location },
    #[error("malformed act item: {0}")]
    MalformedAct(String),

    #[error("syntax error at {}:{}: {}", .0.line, .0.column, .0.message)]
    Syntax(ParseDiagnostic),
    #[error("rule {rule}: effect variable ?{variable} does not occur in any precondition")]
    RangeRestriction { rule: String, variable: String },
    #[error("duplicate rule id {id:?} at {line}:{column}")]
    DuplicateRuleId {
        id: String,
        line: usize,
        column: usize,
    },

    #[error("rule {rule}: effect variable ?{variable} has no binding in the active sections")]
    UnboundEffectVariable { rule: String, variable: String },
    #[error("rule {rule} has a db precondition but the context carries no db count")]
    MissingDbCount { rule: String },
    #[error("no prediction for dialogue {dialogue} turn {turn}")]
    MissingPrediction { dialogue: String, turn: usize },

    #[error("{location}: {message}")]
    Schema { location: String, message: String },
    #[error("duplicate dialogue id {0:?}")]
    DuplicateDialogueId(String),
    #[error("duplicate prediction for dialogue {dialogue} turn {turn}")]
    DuplicatePrediction { dialogue: String, turn: usize },
    #[error("duplicate restaurant name {0:?} in database")]
    DuplicateEntity(String),
    #[error("cannot sample {n} dialogues from a corpus of {size}")]
    SampleTooLarge { n: usize, size: usize },
    #[error("corpus contains no dialogues")]
    CorpusEmpty,

    #[error("ontology has no slots")]
    EmptyOntology,
    #[error("no turns to evaluate")]
    NoTurns,
    #[error("sign test needs at least one pair")]
    NoPairs,
    #[error("run group is invalid: {0}")]
    RunGroup(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(location: impl Into<String>, message: impl fmt::Display) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.to_string(),
        }
    }

    /// Process exit code for the command-line front end: 2 for bad input
    /// files, 3 for failures while running over valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnboundEffectVariable { .. }
            | Error::MissingDbCount { .. }
            | Error::MissingPrediction { .. }
            | Error::CorpusEmpty
            | Error::NoTurns
            | Error::NoPairs
            | Error::SampleTooLarge { .. }
            | Error::RunGroup(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
