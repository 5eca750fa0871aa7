//! Finite-dimensional operator-algebraic quantum measurement.
//!
//! A numerically exact toolkit for completely positive instruments on
//! finite-dimensional von Neumann algebras: block-algebra primitives with
//! commutants and conditional expectations, instrument statistics and
//! posterior states, constructive Stinespring/Naimark dilations, synthesis
//! and verification of measuring processes, and local-instrument
//! constructions on a one-dimensional lattice net of matrix algebras.
//!
//! ```
//! use instrument_forge::matrix::matrix_unit;
//! use instrument_forge::{
//!     synthesize_measuring_process, verify_realization, CPInstrument,
//!     FiniteVonNeumannAlgebra, OutcomeSpace,
//! };
//!
//! // Lüders measurement in the computational basis of C²
//! let instrument = CPInstrument::new(
//!     FiniteVonNeumannAlgebra::full(2),
//!     OutcomeSpace::new(vec!["0", "1"])?,
//!     vec![vec![matrix_unit(2, 0, 0)], vec![matrix_unit(2, 1, 1)]],
//! )?;
//!
//! // a unitary coupling, pure probe and projective meter realizing it
//! let process = synthesize_measuring_process(&instrument)?;
//! assert_eq!(process.ancilla_dim(), 8);
//! let report = verify_realization(&process, &instrument, 1e-9)?;
//! assert!(report.pass);
//! # Ok::<(), instrument_forge::ForgeError>(())
//! ```

pub mod algebra;
pub mod dilation;
pub mod error;
pub mod instrument;
pub mod io;
pub mod localnet;
pub mod matrix;
pub mod sampling;
pub mod state;
pub mod tol;

pub use algebra::{AlgebraElement, FiniteVonNeumannAlgebra};
pub use dilation::{
    canonical_extension, choi_matrix, dilate_instrument, induced_instrument,
    minimal_stinespring, synthesize_measuring_process, verify_realization, InstrumentDilation,
    MeasuringProcess, StinespringTriple,
};
pub use error::{ForgeError, Result};
pub use instrument::{
    instruments_equal, joint_distribution, CPInstrument, CheckResult, JointDistribution,
    OutcomeSpace, Posterior, PosteriorFamily, ValidationReport,
};
pub use localnet::{LocalNet, LocalInstrumentReport, Region};
pub use state::NormalState;
