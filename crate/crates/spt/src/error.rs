use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("atoms {0} and {1} coincide")]
    SingularGeometry(usize, usize),
    #[error("no c6 in [{lo:e}, {hi:e}] reaches target {target}")]
    NoSolution { target: f64, lo: f64, hi: f64 },
    #[error("geometry table parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeometryError {
    fn from(e: std::io::Error) -> Self {
        GeometryError::Io(e.to_string())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlockadeError {
    #[error("degenerate parameters: 1 + C_b = 0 at atom {0}")]
    ResonantPole(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("atoms are not in propagation order")]
    Unordered,
    #[error("sum rule violated by {0:e}")]
    SumRule(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("anti-Hermitian part deviates from channel sum by {0:e}")]
    AntiHermitian(f64),
    #[error("integrator instability at t={t}: norm grew by {growth:e}")]
    Instability { t: f64, growth: f64 },
    #[error("all jump weights vanish at t={0}")]
    ZeroWeights(f64),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Blockade(#[from] BlockadeError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("undefined estimate: {0}")]
    Undefined(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
