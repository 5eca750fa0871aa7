//! Finite-dimensional von Neumann algebras in block form.
//!
//! Every finite-dimensional von Neumann algebra on C^D is unitarily
//! equivalent to a direct sum ⊕ᵢ (M_{nᵢ} ⊗ 1_{mᵢ}); we store the block list
//! `(nᵢ, mᵢ)` together with the basis-change unitary that conjugates the
//! canonical form into the ambient space. Commutants, conditional
//! expectations, and membership tests are closed-form in this representation.

use crate::error::{ForgeError, Result};
use crate::matrix::{
    cr, direct_sum, fro_norm, identity, kron, matrix_unit, ptrace_right, swap_matrix,
    unitarity_residual, all_finite, CMat, C64,
};
use crate::state::NormalState;
use crate::tol;

/// A von Neumann algebra M ⊆ B(C^D) given as ⊕ᵢ (M_{nᵢ} ⊗ 1_{mᵢ}) conjugated
/// by a basis-change unitary.
#[derive(Clone, Debug)]
pub struct FiniteVonNeumannAlgebra {
    blocks: Vec<(usize, usize)>,
    basis_change: CMat,
    ambient_dim: usize,
}

/// An element of a block algebra, stored as one nᵢ×nᵢ coefficient per block.
#[derive(Clone, Debug)]
pub struct AlgebraElement {
    coeffs: Vec<CMat>,
}

impl AlgebraElement {
    pub fn new(coeffs: Vec<CMat>) -> Self {
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    /// Blockwise product; elements must come from the same algebra.
    pub fn mul(&self, other: &Self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn dagger(&self) -> Self {
        Self::new(self.coeffs.iter().map(CMat::adjoint).collect())
    }

    pub fn scale(&self, z: C64) -> Self {
        Self::new(self.coeffs.iter().map(|a| a * z).collect())
    }

    /// Frobenius norm over all block coefficients.
    pub fn norm(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|m| m.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl FiniteVonNeumannAlgebra {
    /// Builds a block algebra; `basis_change` defaults to the identity.
    pub fn new(blocks: &[(usize, usize)], basis_change: Option<CMat>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|&(n, m)| n == 0 || m == 0) {
            return Err(ForgeError::EmptyBlocks);
        }
        let dim: usize = blocks.iter().map(|&(n, m)| n * m).sum();
        let basis_change = match basis_change {
            Some(u) => {
                if u.nrows() != dim || u.ncols() != dim {
                    return Err(ForgeError::DimensionMismatch(format!(
                        "basis change is {}×{}, ambient dimension is {dim}",
                        u.nrows(),
                        u.ncols()
                    )));
                }
                if !all_finite(&u) {
                    return Err(ForgeError::DimensionMismatch(
                        "basis change has non-finite entries".into(),
                    ));
                }
                let residual = unitarity_residual(&u);
                if residual > tol::UNITARY {
                    return Err(ForgeError::NonUnitaryBasisChange { residual });
                }
                u
            }
            None => identity(dim),
        };
        Ok(Self {
            blocks: blocks.to_vec(),
            basis_change,
            ambient_dim: dim,
        })
    }

    /// The full matrix algebra B(C^d).
    pub fn full(d: usize) -> Self {
        Self::new(&[(d, 1)], None).expect("full algebra is always valid")
    }

    /// The maximal abelian algebra of diagonal matrices on C^d.
    pub fn diagonal(d: usize) -> Self {
        Self::new(&vec![(1, 1); d], None).expect("diagonal algebra is always valid")
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn basis_change(&self) -> &CMat {
        &self.basis_change
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// True iff the algebra is all of B(C^D).
    pub fn is_full(&self) -> bool {
        self.blocks.len() == 1 && self.blocks[0] == (self.ambient_dim, 1)
    }

    /// Linear dimension Σᵢ nᵢ² of the algebra as a vector space.
    pub fn linear_dim(&self) -> usize {
        self.blocks.iter().map(|&(n, _)| n * n).sum()
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offs = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for &(n, m) in &self.blocks {
            offs.push(off);
            off += n * m;
        }
        offs
    }

    /// Validates block coefficient shapes and wraps them as an element.
    pub fn element(&self, coeffs: Vec<CMat>) -> Result<AlgebraElement> {
        if coeffs.len() != self.blocks.len() {
            return Err(ForgeError::DimensionMismatch(format!(
                "expected {} block coefficients, got {}",
                self.blocks.len(),
                coeffs.len()
            )));
        }
        for (c, &(n, _)) in coeffs.iter().zip(&self.blocks) {
            if c.nrows() != n || c.ncols() != n {
                return Err(ForgeError::DimensionMismatch(format!(
                    "block coefficient is {}×{}, expected {n}×{n}",
                    c.nrows(),
                    c.ncols()
                )));
            }
            if !all_finite(c) {
                return Err(ForgeError::DimensionMismatch(
                    "block coefficient has non-finite entries".into(),
                ));
            }
        }
        Ok(AlgebraElement::new(coeffs))
    }

    pub fn identity_element(&self) -> AlgebraElement {
        AlgebraElement::new(self.blocks.iter().map(|&(n, _)| identity(n)).collect())
    }

    pub fn zero_element(&self) -> AlgebraElement {
        AlgebraElement::new(self.blocks.iter().map(|&(n, _)| CMat::zeros(n, n)).collect())
    }

    /// A linear basis of the algebra: per block, all matrix units E_{ab}.
    pub fn basis_elements(&self) -> Vec<AlgebraElement> {
        let mut basis = Vec::with_capacity(self.linear_dim());
        for (i, &(n, _)) in self.blocks.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let coeffs = self
                        .blocks
                        .iter()
                        .enumerate()
                        .map(|(k, &(nk, _))| {
                            if k == i {
                                matrix_unit(n, a, b)
                            } else {
                                CMat::zeros(nk, nk)
                            }
                        })
                        .collect();
                    basis.push(AlgebraElement::new(coeffs));
                }
            }
        }
        basis
    }

    /// Global matrix of an element: basisChange† · (⊕ᵢ coeffᵢ ⊗ 1_{mᵢ}) · basisChange.
    pub fn embed(&self, element: &AlgebraElement) -> CMat {
        let blocks: Vec<CMat> = element
            .coeffs
            .iter()
            .zip(&self.blocks)
            .map(|(x, &(_, m))| kron(x, &identity(m)))
            .collect();
        self.basis_change.adjoint() * direct_sum(&blocks) * &self.basis_change
    }

    /// Trace-preserving conditional expectation of an ambient matrix onto the
    /// algebra: compress to block diagonal and average over multiplicities,
    /// coeffᵢ = (1/mᵢ)·tr_mult(Pᵢ X Pᵢ).
    pub fn conditional_expectation(&self, x: &CMat) -> Result<AlgebraElement> {
        self.check_ambient(x)?;
        let rotated = &self.basis_change * x * self.basis_change.adjoint();
        let offs = self.block_offsets();
        let coeffs = self
            .blocks
            .iter()
            .zip(&offs)
            .map(|(&(n, m), &off)| {
                let blk = rotated.view((off, off), (n * m, n * m)).into_owned();
                ptrace_right(&blk, n, m) / cr(m as f64)
            })
            .collect();
        Ok(AlgebraElement::new(coeffs))
    }

    /// Hilbert–Schmidt distance from `x` to the algebra's span, together with
    /// the membership verdict at the default tolerance. The orthogonal
    /// projection onto the span is exactly the conditional expectation.
    pub fn is_member(&self, x: &CMat) -> Result<(bool, f64)> {
        let projected = self.embed(&self.conditional_expectation(x)?);
        let residual = fro_norm(&(x - projected));
        Ok((residual < tol::MEMBERSHIP, residual))
    }

    /// Commutant ⊕ᵢ (1_{nᵢ} ⊗ M_{mᵢ}), re-expressed in block form with the
    /// factor/multiplicity roles swapped. Applying `commutant` twice returns
    /// the original algebra exactly.
    pub fn commutant(&self) -> Self {
        let swaps: Vec<CMat> = self
            .blocks
            .iter()
            .map(|&(n, m)| swap_matrix(n, m))
            .collect();
        let basis_change = direct_sum(&swaps) * &self.basis_change;
        Self {
            blocks: self.blocks.iter().map(|&(n, m)| (m, n)).collect(),
            basis_change,
            ambient_dim: self.ambient_dim,
        }
    }

    /// Tensor product algebra on C^{D_A·D_B}: blocks are all pairs
    /// (nᵢ·nⱼ, mᵢ·mⱼ) and the basis change reshuffles tensor factors so that
    /// embed(a⊗b) = embed(a) ⊗ embed(b).
    pub fn tensor(&self, other: &Self) -> Self {
        let da = self.ambient_dim;
        let db = other.ambient_dim;
        let offs_a = self.block_offsets();
        let offs_b = other.block_offsets();

        let mut blocks = Vec::with_capacity(self.blocks.len() * other.blocks.len());
        for &(ni, mi) in &self.blocks {
            for &(nj, mj) in &other.blocks {
                blocks.push((ni * nj, mi * mj));
            }
        }

        // Permutation mapping (block i, a, u) ⊗ (block j, b, v) of the factor
        // layout onto block (i,j) with factor index (a,b) and multiplicity
        // index (u,v).
        let mut reshuffle = CMat::zeros(da * db, da * db);
        let mut out_off = 0;
        for (i, &(ni, mi)) in self.blocks.iter().enumerate() {
            for (j, &(nj, mj)) in other.blocks.iter().enumerate() {
                for a in 0..ni {
                    for u in 0..mi {
                        for b in 0..nj {
                            for v in 0..mj {
                                let p = offs_a[i] + a * mi + u;
                                let q = offs_b[j] + b * mj + v;
                                let out =
                                    out_off + (a * nj + b) * (mi * mj) + (u * mj + v);
                                reshuffle[(out, p * db + q)] = cr(1.0);
                            }
                        }
                    }
                }
                out_off += ni * nj * mi * mj;
            }
        }

        let basis_change = reshuffle * kron(&self.basis_change, &other.basis_change);
        Self {
            blocks,
            basis_change,
            ambient_dim: da * db,
        }
    }

    /// Tensor product of elements, ordered consistently with [`Self::tensor`].
    pub fn tensor_elements(a: &AlgebraElement, b: &AlgebraElement) -> AlgebraElement {
        let mut coeffs = Vec::with_capacity(a.coeffs.len() * b.coeffs.len());
        for x in &a.coeffs {
            for y in &b.coeffs {
                coeffs.push(kron(x, y));
            }
        }
        AlgebraElement::new(coeffs)
    }

    /// Restriction of a normal state to the algebra: the unique element h with
    /// tr(ρ·embed(a)) = Σᵢ tr(hᵢ aᵢ) for all a, i.e. the density of ρ|_M.
    pub fn restrict_state(&self, rho: &NormalState) -> Result<AlgebraElement> {
        self.check_ambient(rho.density())?;
        let rotated = &self.basis_change * rho.density() * self.basis_change.adjoint();
        let offs = self.block_offsets();
        let coeffs = self
            .blocks
            .iter()
            .zip(&offs)
            .map(|(&(n, m), &off)| {
                let blk = rotated.view((off, off), (n * m, n * m)).into_owned();
                ptrace_right(&blk, n, m)
            })
            .collect();
        Ok(AlgebraElement::new(coeffs))
    }

    /// Maximal Hilbert–Schmidt projection residual between the spans of two
    /// algebras on the same ambient space; near zero iff the spans coincide.
    pub fn span_distance(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (src, dst) in [(self, other), (other, self)] {
            for e in src.basis_elements() {
                let x = src.embed(&e);
                let (_, residual) = dst.is_member(&x).expect("ambient dims match");
                worst = worst.max(residual);
            }
        }
        worst
    }

    /// Structural equality: same block list and same basis change matrix.
    pub fn same_presentation(&self, other: &Self) -> bool {
        self.blocks == other.blocks
            && self.ambient_dim == other.ambient_dim
            && fro_norm(&(&self.basis_change - &other.basis_change)) < 1e-12
    }

    fn check_ambient(&self, x: &CMat) -> Result<()> {
        if x.nrows() != self.ambient_dim || x.ncols() != self.ambient_dim {
            return Err(ForgeError::DimensionMismatch(format!(
                "matrix is {}×{}, ambient dimension is {}",
                x.nrows(),
                x.ncols(),
                self.ambient_dim
            )));
        }
        Ok(())
    }
}

/// Hilbert–Schmidt pairing tr(ρ·X) between a state and an ambient matrix.
pub fn pair(rho: &NormalState, x: &CMat) -> C64 {
    (rho.density() * x).trace()
}

/// Pairing of a state with an algebra element through its embedding.
pub fn pair_element(
    rho: &NormalState,
    algebra: &FiniteVonNeumannAlgebra,
    m: &AlgebraElement,
) -> C64 {
    pair(rho, &algebra.embed(m))
}
