//! Normal states as density matrices.

use crate::error::{ForgeError, Result};
use crate::matrix::{all_finite, cr, hermitian_eigen_sorted, hermiticity_residual, CMat, CVec, C64};
use crate::tol;

/// A normal state on B(C^D): Hermitian, positive semidefinite, unit trace.
/// Doubles as the predual element X ↦ tr(ρX).
#[derive(Clone, Debug)]
pub struct NormalState {
    density: CMat,
}

impl NormalState {
    /// Validates ρ ≥ 0 (up to `-tol`), ρ = ρ†, tr ρ = 1.
    pub fn new(density: CMat) -> Result<Self> {
        Self::with_tolerance(density, tol::UNITARY)
    }

    /// Same as [`Self::new`] with an explicit positivity/normalization slack.
    pub fn with_tolerance(density: CMat, eps: f64) -> Result<Self> {
        if density.nrows() != density.ncols() {
            return Err(ForgeError::InvalidState(format!(
                "density matrix is {}×{}",
                density.nrows(),
                density.ncols()
            )));
        }
        if !all_finite(&density) {
            return Err(ForgeError::InvalidState("non-finite entries".into()));
        }
        let herm = hermiticity_residual(&density);
        if herm > eps {
            return Err(ForgeError::InvalidState(format!(
                "not Hermitian (residual {herm:.3e})"
            )));
        }
        let tr = density.trace();
        if (tr - cr(1.0)).norm() > eps {
            return Err(ForgeError::InvalidState(format!(
                "trace is {tr} instead of 1"
            )));
        }
        let (vals, _) = hermitian_eigen_sorted(&density);
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -eps {
            return Err(ForgeError::InvalidState(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(Self { density })
    }

    /// Pure state |ψ⟩⟨ψ| from a nonzero vector, normalized internally.
    pub fn pure(vector: &CVec) -> Result<Self> {
        let n = vector.norm();
        if n < 1e-14 {
            return Err(ForgeError::InvalidState("zero vector".into()));
        }
        let v = vector / cr(n);
        let mut density = CMat::zeros(v.len(), v.len());
        for a in 0..v.len() {
            for b in 0..v.len() {
                density[(a, b)] = v[a] * v[b].conj();
            }
        }
        Ok(Self { density })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            density: CMat::identity(d, d) / cr(d as f64),
        }
    }

    /// Basis state |k⟩⟨k| on C^d.
    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut v = CVec::zeros(d);
        v[k] = cr(1.0);
        Self::pure(&v).expect("basis vector is nonzero")
    }

    pub fn density(&self) -> &CMat {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    /// Expectation tr(ρ X).
    pub fn expectation(&self, x: &CMat) -> C64 {
        (&self.density * x).trace()
    }

    /// Number of eigenvalues above `eps`.
    pub fn rank(&self, eps: f64) -> usize {
        let (vals, _) = hermitian_eigen_sorted(&self.density);
        vals.iter().filter(|&&v| v > eps).count()
    }
}
