use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("mesh topology error: {0}")]
    Topology(String),
    #[error("patch of element {element} stalled at {reached} members, target {target}")]
    PatchExhausted { element: usize, target: usize, reached: usize },
    #[error("unsupported {what}: requested {requested}, supported {supported}")]
    Unsupported { what: &'static str, requested: usize, supported: String },
    #[error("collocation set of element {element} is not unisolvent (rank {rank} < {expected})")]
    Unisolvence { element: usize, rank: usize, expected: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },
    #[error("meshes are not nested: {0}")]
    NotNested(String),
    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
