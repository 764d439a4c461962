use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zonotope dimension must be at least 1")]
    EmptyDimension,
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("zero direction")]
    ZeroDirection,
    #[error("strip orientation must be nonzero")]
    ZeroOrientation,
    #[error("negative size {0}")]
    NegativeSize(f64),
    #[error("{what} guard exceeded: {value} > {limit}")]
    GuardExceeded {
        what: &'static str,
        value: usize,
        limit: usize,
    },
    #[error("matrix is not symmetric (asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("malformed generator matrix: {0}")]
    Malformed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    /// The zonotope and the constraint halfspaces have no common point.
    #[error("empty intersection between zonotope and constraints")]
    Infeasible,
    #[error("linear program unbounded")]
    Unbounded,
    #[error("LP solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StripError {
    #[error("degenerate measurement {index}: zero regressor bound column")]
    DegenerateMeasurement { index: usize },
    #[error("measurement index {index} out of range (m = {m})")]
    IndexOutOfRange { index: usize, m: usize },
    #[error("measurement inconsistent with prior set")]
    EmptyIntersection,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Lp(LpError),
}

impl From<LpError> for StripError {
    fn from(e: LpError) -> Self {
        match e {
            LpError::Infeasible => StripError::EmptyIntersection,
            other => StripError::Lp(other),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LmiError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("LMI solver failure: {0}")]
    Solver(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("record {k}: {msg}")]
    Invalid { k: usize, msg: String },
}

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("step {k}: measurement inconsistent with the prior set (empty intersection)")]
    EmptyIntersection { k: usize },
    #[error("step {k}: {source}")]
    Lmi { k: usize, source: LmiError },
    #[error(transparent)]
    Strip(#[from] StripError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("operating point violates {0}")]
    InvalidOperatingPoint(String),
    #[error("invalid engine parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("oracle requires n = 2, got {0}")]
    Dimension(usize),
}
