use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("unknown label {0:?} (expected one of normal, memleak, shutdown)")]
    UnknownLabel(String),

    #[error("trace {trace_id:?}: non-monotone timestamps at line {line}")]
    NonMonotoneTimestamps { trace_id: String, line: usize },

    #[error("trace {0:?} has no samples")]
    TraceWithoutSamples(String),

    #[error("duplicate trace_id {0:?}")]
    DuplicateTraceId(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input sequence")]
    EmptyInput,

    #[error("band {band} infeasible for lengths {n} and {m} (need band >= |n - m|)")]
    InfeasibleBand { band: usize, n: usize, m: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("sequence too short: length {len}, need at least {need}")]
    TooShort { len: usize, need: usize },

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("empty candidate list")]
    NoCandidates,

    #[error("thread {0} already registered")]
    DuplicateThread(u32),

    #[error("emitter session already stopped")]
    SessionStopped,

    #[error("no healthy (normal) training trace for workload {0:?}")]
    NoNormalTraces(String),

    #[error("training data contains a single class; need at least two")]
    SingleClass,

    #[error("no prototype for workload {0:?}")]
    MissingPrototype(String),

    #[error("stratified split failed: {0}")]
    SplitFailed(String),

    #[error("model bundle error: {0}")]
    Bundle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(file: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            file: file.into(),
            line,
            msg: msg.into(),
        }
    }
}
