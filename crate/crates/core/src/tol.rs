//! Numerical tolerances used across the crate.
//!
//! All defaults are sized for double precision on ambient dimensions up to
//! a few thousand. Validation entry points that accept an explicit tolerance
//! fall back to these when none is given.

/// Unitarity, positivity and Hermiticity checks on constructed operators.
pub const UNITARY: f64 = 1e-10;

/// Trace-normalization and unitality residuals (Σ K†K = 1, tr ρ = 1).
pub const UNITALITY: f64 = 1e-10;

/// Hilbert–Schmidt distance from a matrix to the span of a block algebra.
pub const MEMBERSHIP: f64 = 1e-9;

/// Dual-map reconstruction residuals for dilations and measuring processes.
pub const RECONSTRUCTION: f64 = 1e-9;

/// Repeatability, locality and intertwining identity residuals.
pub const IDENTITY_CHECK: f64 = 1e-9;

/// Duality pairing and mixture-identity residuals.
pub const PAIRING: f64 = 1e-10;

/// A Choi eigenvalue below `-NOT_CP` disqualifies a map from being CP.
pub const NOT_CP: f64 = 1e-9;

/// Choi eigenvalues below this floor are dropped during Kraus extraction.
pub const CHOI_FLOOR: f64 = 1e-12;

/// Rank decisions in span/orthonormalization computations.
pub const RANK: f64 = 1e-10;

/// Kraus operators with Frobenius norm below this are discarded as zero.
pub const ZERO_KRAUS: f64 = 1e-14;

/// Matching of quadrature grid points against spectral values.
pub const GRID_MATCH: f64 = 1e-8;
