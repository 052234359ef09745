use std::io;

use thiserror::Error;

/// Errors produced by the geometry, discretization and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid almost complex structure: {reason} (max |J^2 + I| = {max_defect:e})")]
    InvalidStructure { max_defect: f64, reason: String },

    #[error("degenerate frame: Gram-Schmidt pivot {pivot:e} below threshold")]
    DegenerateFrame { pivot: f64 },

    #[error("finite-difference stencil leaves the domain at {point:?}")]
    StencilOutOfDomain { point: Vec<f64> },

    #[error("matrix not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("disk iteration failed to contract (ratio {ratio:.3} after {iterations} iterations)")]
    NoContraction { iterations: usize, ratio: f64 },

    #[error("jets of length {0} are not supported (at most 2)")]
    JetTooLong(usize),

    #[error("disk image leaves the field's domain at {point:?}")]
    DiskEscapesDomain { point: Vec<f64> },

    #[error("defining function has no negative grid values")]
    EmptyDomain,

    #[error("defining function is not strictly plurisubharmonic (margin {margin:e})")]
    NotStrictlyPsh { margin: f64 },

    #[error("gradient of the defining function vanishes on the boundary (|grad rho| = {gradient:e})")]
    TransversalityFailure { gradient: f64 },

    #[error("Newton iteration stalled after {iterations} iterations (residual {residual:e})")]
    NewtonStalled { iterations: usize, residual: f64 },

    #[error("cannot keep iterate plurisubharmonic (margin {margin:e} below floor {floor:e})")]
    LostPositivity { margin: f64, floor: f64 },

    #[error("k schedule too short: last increment {last:e} exceeds extrapolated tail {tail:e}")]
    ScheduleTooShort { last: f64, tail: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
