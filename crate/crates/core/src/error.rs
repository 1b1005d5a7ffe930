use thiserror::Error;

/// Errors raised by lattice construction, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum LbmError {
    #[error("direction index {index} out of range for lattice with {q} directions")]
    DirectionOutOfRange { index: usize, q: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("relaxation time {0} must exceed 1/2")]
    RelaxationTooSmall(f64),

    #[error("diffusion tensor {context} is not symmetric positive definite")]
    NotSpd { context: String },

    #[error("node {0} has an empty unknown-direction set")]
    EmptyUnknownSet(usize),

    #[error("node {0}: sum of e_k . n over unknown directions vanishes")]
    DegenerateNeumann(usize),

    #[error("boundary node {0} assigned more than once")]
    DuplicateBoundary(usize),

    #[error("non-finite concentration at step {step}, node {node}")]
    NonFinite { step: usize, node: usize },

    #[error("moment transform is singular")]
    SingularTransform,

    #[error("end time {end_time} is not an integer number of steps of {dt}")]
    NonIntegralSteps { end_time: f64, dt: f64 },

    #[error("flow did not reach steady state within {0} steps")]
    FlowNotConverged(usize),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty node mask")]
    EmptyMask,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LbmError>;
