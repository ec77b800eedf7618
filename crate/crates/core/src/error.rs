use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("vertex count {0} exceeds the limit of 16")]
    TooManyVertices(usize),
    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop at vertex {0}")]
    Loop(usize),
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(usize, usize),
    #[error("blow-up has {parts} part sizes for a base graph on {base} vertices")]
    BlowupShape { base: usize, parts: usize },
    #[error("invalid graph6 string: {0}")]
    Graph6(String),
    #[error("enumeration limited to n <= 12, got {0}")]
    EnumerationLimit(usize),
    #[error("roots do not induce the flag type: {0}")]
    RootMismatch(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("parity violation: level {level} and type size {k} differ in parity")]
    Parity { level: usize, k: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid rational {0:?}")]
    Rational(String),
    #[error("certificate schema violation: {0}")]
    Schema(String),
    #[error("malformed solver output: {0}")]
    Solution(String),
    #[error("rounding failed: {0}")]
    Rounding(String),
}

pub type Result<T> = std::result::Result<T, Error>;
