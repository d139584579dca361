use thiserror::Error;

/// Errors raised by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{{{p},{q}}} is spherical (1/p + 1/q > 1/2) and q != 2")]
    SphericalUnsupported { p: String, q: u32 },
    #[error("generation 1 alone needs {needed} vertices, budget is {budget}")]
    BudgetExceeded { needed: usize, budget: usize },
    #[error("the layered construction closed up at generation {generation}")]
    SphericalClosure { generation: u32 },
    #[error("invalid parameters: {0}")]
    InvalidSpec(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(u32),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("wrong tessellation family: {0}")]
    WrongFamily(String),
    #[error("addressing scheme is not shortest-path invariant at vertex {vertex}")]
    NotInvariant { vertex: u32 },
    #[error("weakening not applicable to {{{p},{q}}}")]
    WeakeningNotApplicable { p: String, q: u32 },
    #[error("{{{p},{q}}} lies outside the region where combined faults are tolerated")]
    OutsidePositiveRegion { p: String, q: u32 },
    #[error("vertex {0} is too close to the truncation boundary")]
    BoundaryVertex(u32),
    #[error("state length {got} does not match {expected} cells")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("insufficient margin: {0}")]
    InsufficientMargin(String),
    #[error("face {face} has degree {degree}, expected 4")]
    FaceDegreeNot4 { face: usize, degree: usize },
    #[error("cell {cell} is not in error at time {time}")]
    RootNotInError { cell: u32, time: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
