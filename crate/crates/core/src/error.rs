use thiserror::Error;

/// Errors produced by construction and validation of algebraic objects.
#[derive(Debug, Clone, Error)]
pub enum ForgeError {
    #[error("basis change is not unitary (residual {residual:.3e})")]
    NonUnitaryBasisChange { residual: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("block list must be non-empty and all block sizes positive")]
    EmptyBlocks,

    #[error("instrument is not unital: ‖Σ K†K − 1‖ = {residual:.3e}")]
    NotUnital { residual: f64 },

    #[error("dual map leaves the algebra on outcome {label:?} (residual {residual:.3e})")]
    RangeViolation { label: String, residual: f64 },

    #[error("unknown outcome label {0:?}")]
    UnknownLabel(String),

    #[error("instruments act on different algebras")]
    AlgebraMismatch,

    #[error("instruments have different outcome spaces")]
    OutcomeMismatch,

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCP { min_eigenvalue: f64 },

    #[error("operation requires an instrument on the full matrix algebra")]
    NotFullAlgebra,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("outcome labels must be non-empty and distinct")]
    BadOutcomeSpace,

    #[error("lattice size cap exceeded: d^L = {global_dim} > {cap}")]
    CapExceeded { global_dim: usize, cap: usize },

    #[error("region [{a},{b}] does not fit a lattice of {sites} sites")]
    RegionOutOfRange { a: usize, b: usize, sites: usize },

    #[error("region {inner} is not contained in region {outer}")]
    RegionOrderViolation { inner: String, outer: String },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("amplitude function is degenerate: {0}")]
    DegenerateAmplitude(String),
}

pub type Result<T> = std::result::Result<T, ForgeError>;
