use thiserror::Error;

use crate::driver::RunHistory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Bessel argument must be positive, got {0}")]
    NonPositiveArgument(f64),

    #[error("Y_{order}({argument}) overflows f64; lower the truncation order")]
    OverflowRegime { order: usize, argument: f64 },

    #[error("order {0} exceeds the supported maximum of 1024")]
    OrderTooLarge(usize),

    #[error("degenerate DtN mode n = {n}: |Lambda_n| = {magnitude:e} (exceptional frequency/radius pair)")]
    DegenerateMode { n: i64, magnitude: f64 },

    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    #[error("invalid radii: {0}")]
    InvalidRadii(String),

    #[error("boundary has {0} nodes, at least 3 are required")]
    EmptyBoundary(usize),

    #[error("boundary traces live on different node sets")]
    NodeSetMismatch,

    #[error("boundary angles must be strictly increasing in [0, 2pi)")]
    UnsortedBoundary,

    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("non-conforming mesh at edge ({0}, {1}): {2}")]
    NonConforming(usize, usize, String),

    #[error("triangle {0} is not counterclockwise")]
    OrientationError(usize),

    #[error("marking parameter theta = {0} is outside (0, 1)")]
    ThetaOutOfRange(f64),

    #[error("triangle index {0} out of range")]
    InvalidTriangle(usize),

    #[error("triangle {0} has area below 1e-16")]
    SingularElement(usize),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("field belongs to mesh generation {found}, expected {expected}")]
    MeshMismatch { expected: u64, found: u64 },

    #[error("field evaluation at the origin is singular")]
    OriginEvaluation,

    #[error("edge {0} is not an interior edge")]
    NotInteriorEdge(usize),

    #[error("edge {0} is not on the outer circle")]
    NotOuterEdge(usize),

    #[error("iteration cap reached after {} iterations", .0.records.len())]
    IterationCapReached(Box<RunHistory>),

    #[error("at least 3 usable points are needed for a rate fit, got {0}")]
    InsufficientData(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
