use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Bloch vector has zero length, direction undefined")]
    DirectionUndefined,

    #[error("singular weight matrix: {0}")]
    Singular(String),

    #[error("block dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("Fock cutoff {cutoff} keeps only {kept:.12} of the trace; need at least {needed}")]
    CutoffTooSmall { cutoff: usize, kept: f64, needed: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
