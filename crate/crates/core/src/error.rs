use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{field} out of {bound}: {value}")]
    ConfigOutOfRange {
        field: &'static str,
        bound: &'static str,
        value: String,
    },

    #[error("config line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("feature {feature} is not finite: {value}")]
    NonFinite { feature: &'static str, value: f64 },

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("label {0:?} is not in the alphabet")]
    UnknownLabel(String),

    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),

    #[error("alphabet mismatch: expected [{expected}], found [{found}]")]
    AlphabetMismatch { expected: String, found: String },

    #[error("duplicate sample id {0}")]
    DuplicateSampleId(u64),

    #[error("dataset {0} is empty")]
    EmptyDataset(&'static str),

    #[error("class {class:?} is degenerate: {reason}")]
    DegenerateClass { class: String, reason: &'static str },

    #[error("single-class remainder: only {0:?} is left to discriminate")]
    SingleClassRemainder(String),

    #[error("invalid gesture window [{start}, {end}) for {frames} frames")]
    InvalidWindow {
        start: usize,
        end: usize,
        frames: usize,
    },

    #[error("gesture window has {found} frames, expected {expected}")]
    WindowLength { expected: usize, found: usize },

    #[error("{path}:{line}: {msg}")]
    Csv {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("rule file line {line}: {msg}")]
    RuleFile { line: usize, msg: String },

    #[error("invalid rule set: {0}")]
    InvalidRuleSet(String),

    #[error("rule covers no samples")]
    UncoveredRule,

    #[error("split: {0}")]
    Split(String),

    #[error("synth spec: {0}")]
    Synth(String),

    #[error("{path}: {source}")]
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
}
