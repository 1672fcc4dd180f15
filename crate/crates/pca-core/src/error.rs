use thiserror::Error;

/// Errors produced by the simulation and operator layers.
#[derive(Debug, Error)]
pub enum PcaError {
    /// A lattice parameter violates a structural requirement.
    #[error("invalid lattice: {0}")]
    Lattice(String),

    /// Vector or matrix dimensions do not match.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A dense construction would exceed the configured cap.
    #[error("dense dimension {need} exceeds cap {cap}")]
    DenseCap { need: usize, cap: usize },

    /// A local update table is malformed (wrong size, not a bijection, ...).
    #[error("invalid update rule: {0}")]
    Rule(String),

    /// Input data is malformed (bitstrings, weights, file contents).
    #[error("invalid input: {0}")]
    Input(String),

    /// A numerical routine failed or produced out-of-tolerance results.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PcaError>;
