use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("line {line}: malformed problem header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: malformed line: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("line {line}: duplicate {role} designation")]
    DuplicateTerminal { line: usize, role: &'static str },
    #[error("missing {0} designation")]
    MissingTerminal(&'static str),
    #[error("line {line}: negative capacity {cap}")]
    NegativeCapacity { line: usize, cap: i64 },
    #[error("line {line}: vertex id {id} out of range 1..={n}")]
    VertexOutOfRange { line: usize, id: i64, n: usize },
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("scale mismatch: demand scale {demand}, flow scale {flow}")]
    ScaleMismatch { demand: i64, flow: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("routing failed: {0}")]
    RoutingFailed(String),
    #[error("precondition refused: {0}")]
    Refused(String),
    #[error("hierarchy is not laminar: {0}")]
    NonLaminar(String),
    #[error("flow conservation violated at vertex {0}")]
    Conservation(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn overflow(what: &str) -> Error {
    Error::Overflow(what.to_string())
}
