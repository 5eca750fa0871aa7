//! Constructive dilation theory.
//!
//! Choi certificates for complete positivity, minimal Stinespring
//! representations, instrument dilations I(X, {s}) = V†(X ⊗ E₀(s))V,
//! synthesis of full measuring processes (K, σ, U, E) together with the
//! induced-instrument map (id⊗σ)[U†(X⊗E(Δ))U], and the canonical extension
//! of a subalgebra instrument to the full matrix algebra through the
//! trace-preserving conditional expectation.

use crate::algebra::FiniteVonNeumannAlgebra;
use crate::error::{ForgeError, Result};
use crate::instrument::{CPInstrument, OutcomeSpace};
use crate::matrix::{
    complete_orthonormal_basis, cr, fro_norm, hermitian_eigen_sorted, identity, kron, matrix_unit,
    op_norm, orthonormal_span, unitarity_residual, unvec_r, vec_r, CMat, CVec,
};
use crate::state::NormalState;
use crate::tol;

/// Choi matrix of the dual map X ↦ Σⱼ K†XK, as the D²×D² block matrix
/// Σ_{ab} E_ab ⊗ T(E_ab). Positive semidefinite iff the map is CP; its rank
/// is the minimal Kraus number.
pub fn choi_matrix(kraus: &[CMat], d: usize) -> Result<CMat> {
    let mut choi = CMat::zeros(d * d, d * d);
    for k in kraus {
        if k.nrows() != d || k.ncols() != d {
            return Err(ForgeError::DimensionMismatch(format!(
                "Kraus operator is {}×{}, expected {d}×{d}",
                k.nrows(),
                k.ncols()
            )));
        }
        let v = vec_r(&k.map(|z| z.conj()));
        for a in 0..d * d {
            for b in 0..d * d {
                choi[(a, b)] += v[a] * v[b].conj();
            }
        }
    }
    Ok(choi)
}

/// Choi matrix assembled from an arbitrary dual map given entrywise.
pub fn choi_from_dual(dual: impl Fn(&CMat) -> CMat, d: usize) -> CMat {
    let mut choi = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let img = dual(&matrix_unit(d, a, b));
            for c_ in 0..d {
                for e in 0..d {
                    choi[(a * d + c_, b * d + e)] = img[(c_, e)];
                }
            }
        }
    }
    choi
}

/// Extracts a minimal Kraus set from a Choi matrix by eigendecomposition;
/// eigenvalues below `floor` are dropped, negative ones below the CP
/// tolerance are an error.
pub fn kraus_from_choi(choi: &CMat, d: usize, floor: f64) -> Result<Vec<CMat>> {
    if choi.nrows() != d * d {
        return Err(ForgeError::DimensionMismatch(format!(
            "Choi matrix is {}×{}, expected {}×{}",
            choi.nrows(),
            choi.ncols(),
            d * d,
            d * d
        )));
    }
    let (vals, vecs) = hermitian_eigen_sorted(choi);
    if let Some(&min) = vals.last() {
        if min < -tol::NOT_CP {
            return Err(ForgeError::NotCP {
                min_eigenvalue: min,
            });
        }
    }
    let mut kraus = Vec::new();
    for (idx, &lam) in vals.iter().enumerate() {
        if lam > floor {
            let col = vecs.column(idx).into_owned() * cr(lam.sqrt());
            kraus.push(unvec_r(&col, d).map(|z| z.conj()));
        }
    }
    Ok(kraus)
}

/// Rank of a Choi matrix at the given eigenvalue threshold.
pub fn choi_rank(choi: &CMat, eps: f64) -> usize {
    let (vals, _) = hermitian_eigen_sorted(choi);
    vals.iter().filter(|&&v| v > eps).count()
}

/// Minimal Stinespring representation T(X) = V†π(X)V of a CP map whose
/// domain is the given algebra.
///
/// Built on H ⊗ C^r from a Choi-minimized Kraus set, then truncated to the
/// invariant subspace span{π(X)Vξ}. `V` is an isometry exactly when the map
/// is unital.
#[derive(Clone, Debug)]
pub struct StinespringTriple {
    dim_h: usize,
    kraus_rank: usize,
    dilation_dim: usize,
    /// Orthonormal columns spanning the minimal subspace of H ⊗ C^r.
    subspace: CMat,
    /// V: H → dilation space.
    isometry: CMat,
}

impl StinespringTriple {
    pub fn dilation_dim(&self) -> usize {
        self.dilation_dim
    }

    /// Number of linearly independent Kraus operators (the Choi rank).
    pub fn kraus_rank(&self) -> usize {
        self.kraus_rank
    }

    pub fn isometry(&self) -> &CMat {
        &self.isometry
    }

    /// π(X) for an ambient matrix X; a unital *-homomorphism on the domain
    /// algebra.
    pub fn rep(&self, x: &CMat) -> CMat {
        let lifted = kron(x, &identity(self.kraus_rank));
        self.subspace.adjoint() * lifted * &self.subspace
    }

    /// V†π(X)V, the represented CP map.
    pub fn reconstruct(&self, x: &CMat) -> CMat {
        self.isometry.adjoint() * self.rep(x) * &self.isometry
    }

    /// Images of the algebra basis under π.
    pub fn rep_on_basis(&self, algebra: &FiniteVonNeumannAlgebra) -> Vec<CMat> {
        algebra
            .basis_elements()
            .iter()
            .map(|e| self.rep(&algebra.embed(e)))
            .collect()
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }
}

/// Minimal Stinespring representation of the CP map Σⱼ K†·K on the given
/// algebra.
pub fn minimal_stinespring(
    kraus: &[CMat],
    algebra: &FiniteVonNeumannAlgebra,
) -> Result<StinespringTriple> {
    let d = algebra.ambient_dim();
    let choi = choi_matrix(kraus, d)?;
    let minimized = kraus_from_choi(&choi, d, tol::CHOI_FLOOR)?;
    let r = minimized.len();

    // V₀ ξ = Σⱼ (Kⱼξ) ⊗ |j⟩ on H ⊗ C^r, row-major composite index.
    let mut v0 = CMat::zeros(d * r, d);
    for (j, k) in minimized.iter().enumerate() {
        for h in 0..d {
            for col in 0..d {
                v0[(h * r + j, col)] = k[(h, col)];
            }
        }
    }

    // Truncate to span{π₀(X) V₀ ξ} over an algebra basis.
    let mut cands: Vec<CVec> = Vec::new();
    for e in algebra.basis_elements() {
        let lifted = kron(&algebra.embed(&e), &identity(r));
        let image = &lifted * &v0;
        for col in 0..d {
            cands.push(image.column(col).into_owned());
        }
    }
    let subspace = orthonormal_span(&cands, tol::RANK);
    let dilation_dim = subspace.ncols();
    let isometry = subspace.adjoint() * &v0;

    Ok(StinespringTriple {
        dim_h: d,
        kraus_rank: r,
        dilation_dim,
        subspace,
        isometry,
    })
}

/// Naimark-type dilation of an instrument on B(H): a meter space L₂ with
/// per-atom projections E₀(s) and an isometry V: H → H⊗L₂ such that
/// I(X, {s}) = V†(X ⊗ E₀(s))V. Minimal in the sense that the vectors
/// (X ⊗ E₀(s))Vξ span all of H⊗L₂.
#[derive(Clone, Debug)]
pub struct InstrumentDilation {
    labels: Vec<String>,
    dim_h: usize,
    meter_dim: usize,
    /// Per atom: (offset, length) of its meter segment; zero-length for
    /// atoms whose map vanishes.
    segments: Vec<(usize, usize)>,
    /// V: (D·meter_dim) × D.
    isometry: CMat,
}

impl InstrumentDilation {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn meter_dim(&self) -> usize {
        self.meter_dim
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn isometry(&self) -> &CMat {
        &self.isometry
    }

    /// Meter projection E₀(s) for the atom at `idx`.
    pub fn meter_projection(&self, idx: usize) -> CMat {
        let (off, len) = self.segments[idx];
        let mut p = CMat::zeros(self.meter_dim, self.meter_dim);
        for j in off..off + len {
            p[(j, j)] = cr(1.0);
        }
        p
    }

    /// V†(X ⊗ E₀(s))V.
    pub fn reconstruct(&self, x: &CMat, idx: usize) -> CMat {
        let lifted = kron(x, &self.meter_projection(idx));
        self.isometry.adjoint() * lifted * &self.isometry
    }

    /// Dimension defect of span{(X ⊗ E₀(s))Vξ}: zero when minimal.
    pub fn minimality_defect(&self) -> usize {
        let d = self.dim_h;
        let mut cands: Vec<CVec> = Vec::new();
        for idx in 0..self.labels.len() {
            let e0 = self.meter_projection(idx);
            for a in 0..d {
                for b in 0..d {
                    let lifted = kron(&matrix_unit(d, a, b), &e0);
                    let image = &lifted * &self.isometry;
                    for col in 0..d {
                        cands.push(image.column(col).into_owned());
                    }
                }
            }
        }
        let rank = orthonormal_span(&cands, tol::RANK).ncols();
        d * self.meter_dim - rank
    }
}

/// Builds the minimal dilation of an instrument on the full matrix algebra:
/// per-atom Kraus sets are Choi-minimized, the meter is their direct sum,
/// and Vξ = Σ_{s,j} (K_{s,j}ξ) ⊗ |s,j⟩.
pub fn dilate_instrument(instrument: &CPInstrument) -> Result<InstrumentDilation> {
    if !instrument.algebra().is_full() {
        return Err(ForgeError::NotFullAlgebra);
    }
    let d = instrument.algebra().ambient_dim();
    let labels = instrument.outcomes().labels().to_vec();

    let mut minimized: Vec<Vec<CMat>> = Vec::with_capacity(labels.len());
    let mut segments = Vec::with_capacity(labels.len());
    let mut meter_dim = 0;
    for idx in 0..labels.len() {
        let choi = choi_matrix(&instrument.kraus_sets()[idx], d)?;
        let set = kraus_from_choi(&choi, d, tol::CHOI_FLOOR)?;
        segments.push((meter_dim, set.len()));
        meter_dim += set.len();
        minimized.push(set);
    }

    let mut isometry = CMat::zeros(d * meter_dim, d);
    for (idx, set) in minimized.iter().enumerate() {
        let (off, _) = segments[idx];
        for (j, k) in set.iter().enumerate() {
            for h in 0..d {
                for col in 0..d {
                    isometry[(h * meter_dim + off + j, col)] = k[(h, col)];
                }
            }
        }
    }

    Ok(InstrumentDilation {
        labels,
        dim_h: d,
        meter_dim,
        segments,
        isometry,
    })
}

/// One spectral component of the probe, with the reshaped coupled columns
/// and their meter-masked versions cached at construction.
#[derive(Clone, Debug)]
struct ProbeComponent {
    weight: f64,
    /// R_c[h, κ] = (U(e_c ⊗ χ))[h·K + κ], one D×K matrix per c < D.
    columns: Vec<CMat>,
    /// masked[s][c] = R_c · E(s)ᵀ.
    masked: Vec<Vec<CMat>>,
}

/// A measuring process M = (K, σ, U, E): ancilla space K, probe state σ,
/// coupling unitary U on H⊗K, and a projective meter E on K whose atoms sum
/// to the identity.
#[derive(Clone, Debug)]
pub struct MeasuringProcess {
    dim_h: usize,
    ancilla_dim: usize,
    sigma: NormalState,
    unitary: CMat,
    meter: Vec<(String, CMat)>,
    probe: Vec<ProbeComponent>,
}

impl MeasuringProcess {
    /// Validates unitarity of U, the probe state, and that the meter is a
    /// complete family of orthogonal projections.
    pub fn new(
        dim_h: usize,
        sigma: NormalState,
        unitary: CMat,
        meter: Vec<(String, CMat)>,
    ) -> Result<Self> {
        let k = sigma.dim();
        if unitary.nrows() != dim_h * k || unitary.ncols() != dim_h * k {
            return Err(ForgeError::DimensionMismatch(format!(
                "coupling unitary is {}×{}, expected {}×{}",
                unitary.nrows(),
                unitary.ncols(),
                dim_h * k,
                dim_h * k
            )));
        }
        let ures = unitarity_residual(&unitary);
        if ures > tol::UNITARY * (dim_h * k) as f64 {
            return Err(ForgeError::NonUnitaryBasisChange { residual: ures });
        }
        let mut total = CMat::zeros(k, k);
        for (label, p) in &meter {
            if p.nrows() != k || p.ncols() != k {
                return Err(ForgeError::DimensionMismatch(format!(
                    "meter projection {label:?} is {}×{}, ancilla dimension is {k}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            if fro_norm(&(p * p - p)) > tol::UNITARY || fro_norm(&(p - p.adjoint())) > tol::UNITARY
            {
                return Err(ForgeError::DimensionMismatch(format!(
                    "meter entry {label:?} is not an orthogonal projection"
                )));
            }
            total += p;
        }
        if fro_norm(&(total - identity(k))) > tol::UNITARY * k as f64 {
            return Err(ForgeError::DimensionMismatch(
                "meter projections do not sum to the identity".into(),
            ));
        }
        for (i, (_, p)) in meter.iter().enumerate() {
            for (_, q) in meter.iter().skip(i + 1) {
                if fro_norm(&(p * q)) > tol::UNITARY {
                    return Err(ForgeError::DimensionMismatch(
                        "meter projections are not mutually orthogonal".into(),
                    ));
                }
            }
        }
        Ok(Self::assemble(dim_h, sigma, unitary, meter))
    }

    /// Constructor for processes whose ingredients are orthonormal by
    /// construction (synthesis); skips the O(n³) unitarity re-check.
    pub(crate) fn new_trusted(
        dim_h: usize,
        sigma: NormalState,
        unitary: CMat,
        meter: Vec<(String, CMat)>,
    ) -> Self {
        Self::assemble(dim_h, sigma, unitary, meter)
    }

    fn assemble(
        dim_h: usize,
        sigma: NormalState,
        unitary: CMat,
        meter: Vec<(String, CMat)>,
    ) -> Self {
        let k = sigma.dim();
        let (vals, vecs) = hermitian_eigen_sorted(sigma.density());
        let mut probe = Vec::new();
        for (idx, &p) in vals.iter().enumerate() {
            if p <= 1e-14 {
                continue;
            }
            let chi = vecs.column(idx);
            let mut columns = Vec::with_capacity(dim_h);
            for c_ in 0..dim_h {
                // W = U(e_c ⊗ χ) accumulated from the nonzero entries of χ,
                // which is a single column extraction for canonical probes
                let mut w = CVec::zeros(dim_h * k);
                for kap in 0..k {
                    if chi[kap].norm_sqr() == 0.0 {
                        continue;
                    }
                    w += unitary.column(c_ * k + kap) * chi[kap];
                }
                let mut r = CMat::zeros(dim_h, k);
                for h in 0..dim_h {
                    for kap in 0..k {
                        r[(h, kap)] = w[h * k + kap];
                    }
                }
                columns.push(r);
            }
            let masked = meter
                .iter()
                .map(|(_, e)| columns.iter().map(|rc| mask_columns(rc, e)).collect())
                .collect();
            probe.push(ProbeComponent {
                weight: p,
                columns,
                masked,
            });
        }
        Self {
            dim_h,
            ancilla_dim: k,
            sigma,
            unitary,
            meter,
            probe,
        }
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn sigma(&self) -> &NormalState {
        &self.sigma
    }

    pub fn unitary(&self) -> &CMat {
        &self.unitary
    }

    pub fn meter(&self) -> &[(String, CMat)] {
        &self.meter
    }

    pub fn labels(&self) -> Vec<String> {
        self.meter.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Faithfulness of the meter as a representation of the outcome algebra:
    /// no atom is represented by the zero projection.
    pub fn is_faithful(&self) -> bool {
        self.meter.iter().all(|(_, p)| fro_norm(p) > tol::ZERO_KRAUS)
    }

    /// The induced dual atom map X ↦ (id⊗σ)[U†(X⊗E(s))U].
    ///
    /// Evaluated through the cached coupled columns W_c = U(e_c ⊗ χ_r):
    /// T(X)[c,d] = Σ_r p_r tr(R_{c,r}† · X · R_{d,r} E(s)ᵀ), which never
    /// forms a (D·K)-dimensional operator.
    pub fn dual_atom(&self, x: &CMat, meter_idx: usize) -> CMat {
        let d = self.dim_h;
        let mut out = CMat::zeros(d, d);
        for comp in &self.probe {
            let z = &comp.masked[meter_idx];
            for dd in 0..d {
                let xz = x * &z[dd];
                for c_ in 0..d {
                    let val = hs_dot(&comp.columns[c_], &xz);
                    out[(c_, dd)] += cr(comp.weight) * val;
                }
            }
        }
        out
    }

    /// Choi matrix of the induced dual atom map.
    pub fn induced_choi(&self, meter_idx: usize) -> CMat {
        let d = self.dim_h;
        let k = self.ancilla_dim;
        let mut choi = CMat::zeros(d * d, d * d);
        for comp in &self.probe {
            let z = &comp.masked[meter_idx];
            for a in 0..d {
                for b in 0..d {
                    // T(E_ab)[c,d] = Σ_κ conj(R_c[a,κ]) Z_d[b,κ]
                    for c_ in 0..d {
                        for dd in 0..d {
                            let mut acc = crate::matrix::c(0.0, 0.0);
                            for kap in 0..k {
                                acc += comp.columns[c_][(a, kap)].conj() * z[dd][(b, kap)];
                            }
                            choi[(a * d + c_, b * d + dd)] += cr(comp.weight) * acc;
                        }
                    }
                }
            }
        }
        choi
    }
}

/// R · Eᵀ, with a fast path for diagonal meter projections.
fn mask_columns(r: &CMat, e: &CMat) -> CMat {
    let k = e.nrows();
    let mut off_diag = 0.0;
    for i in 0..k {
        for j in 0..k {
            if i != j {
                off_diag += e[(i, j)].norm_sqr();
            }
        }
    }
    if off_diag < 1e-28 {
        let mut out = r.clone();
        for kap in 0..k {
            let w = e[(kap, kap)];
            for h in 0..r.nrows() {
                out[(h, kap)] *= w;
            }
        }
        out
    } else {
        r * e.transpose()
    }
}

/// Σ conj(a) ∘ b entrywise.
fn hs_dot(a: &CMat, b: &CMat) -> crate::matrix::C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Synthesizes a faithful measuring process realizing an instrument on the
/// full matrix algebra.
///
/// The ancilla is assembled as K = L₂ ⊗ L₃ with L₂ the dilation meter and
/// L₃ = H ⊗ L₂; the probe is the pure state on the first canonical basis
/// vectors, the meter is E(s) = E₀(s) ⊗ 1_{L₃}, and the coupling unitary
/// deterministically extends U₀(ξ⊗η₂⊗η₃) = Vξ⊗η₃.
pub fn synthesize_measuring_process(instrument: &CPInstrument) -> Result<MeasuringProcess> {
    let dilation = dilate_instrument(instrument)?;
    let d = dilation.dim_h();
    let l2 = dilation.meter_dim();
    let l3 = d * l2;
    let k = l2 * l3;
    let n = d * k;

    // Orthonormal basis of H⊗L₂ whose first D columns are Vξ over the
    // canonical ξ; the remaining columns complete it deterministically.
    let completed = complete_orthonormal_basis(dilation.isometry());

    // U maps e_i⊗η₂⊗η₃ ↦ Vξ_i⊗η₃ and pairs the remaining canonical domain
    // vectors with the remaining image vectors b_k ⊗ e_t in index order.
    let mut domain_order: Vec<usize> = (0..d).map(|i| i * k).collect();
    for idx in 0..n {
        if idx % k != 0 || idx / k >= d {
            domain_order.push(idx);
        }
    }

    let mut unitary = CMat::zeros(n, n);
    let mut slot = 0;
    // first the D designated images
    for i in 0..d {
        let col = completed.column(i);
        for row_hl in 0..l3 {
            unitary[(row_hl * l3, domain_order[slot])] = col[row_hl];
        }
        slot += 1;
    }
    // then the rest: b_kk ⊗ e_t, skipping the pairs already used
    for kk in 0..l3 {
        for t in 0..l3 {
            if kk < d && t == 0 {
                continue;
            }
            let col = completed.column(kk);
            for row_hl in 0..l3 {
                unitary[(row_hl * l3 + t, domain_order[slot])] = col[row_hl];
            }
            slot += 1;
        }
    }
    debug_assert_eq!(slot, n);

    let mut probe = CVec::zeros(k);
    probe[0] = cr(1.0);
    let sigma = NormalState::pure(&probe)?;

    let meter = dilation
        .labels()
        .iter()
        .enumerate()
        .map(|(idx, label)| {
            (
                label.clone(),
                kron(&dilation.meter_projection(idx), &identity(l3)),
            )
        })
        .collect();

    // U pairs two orthonormal bases entry for entry; skip the O(n³) re-check
    Ok(MeasuringProcess::new_trusted(d, sigma, unitary, meter))
}

/// Reads off the instrument induced by a measuring process on the given
/// algebra, checking the range condition (id⊗σ)[U†(M⊗E(s))U] ∈ M first.
pub fn induced_instrument(
    process: &MeasuringProcess,
    algebra: &FiniteVonNeumannAlgebra,
) -> Result<CPInstrument> {
    let d = algebra.ambient_dim();
    if d != process.dim_h() {
        return Err(ForgeError::DimensionMismatch(format!(
            "process acts on H of dimension {}, algebra ambient dimension is {d}",
            process.dim_h()
        )));
    }

    let basis = algebra.basis_elements();
    for (idx, (label, _)) in process.meter().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for e in &basis {
            let image = process.dual_atom(&algebra.embed(e), idx);
            let (_, residual) = algebra.is_member(&image)?;
            worst = worst.max(residual);
        }
        if worst >= tol::MEMBERSHIP {
            return Err(ForgeError::RangeViolation {
                label: label.clone(),
                residual: worst,
            });
        }
    }

    let mut kraus = Vec::with_capacity(process.meter().len());
    for idx in 0..process.meter().len() {
        let choi = process.induced_choi(idx);
        kraus.push(kraus_from_choi(&choi, d, tol::CHOI_FLOOR)?);
    }
    CPInstrument::new(
        algebra.clone(),
        OutcomeSpace::new(process.labels())?,
        kraus,
    )
}

/// Canonical extension of an instrument on M ⊆ B(H) to all of B(H):
/// Ĩ(X, Δ) = I(E(X), Δ) with E the trace-preserving conditional expectation,
/// realized by composing each Kraus set with a Kraus form of E.
pub fn canonical_extension(instrument: &CPInstrument) -> Result<CPInstrument> {
    if instrument.algebra().is_full() {
        return Ok(instrument.clone());
    }
    let algebra = instrument.algebra();
    let d = algebra.ambient_dim();
    let ce_kraus = conditional_expectation_kraus(algebra);

    let mut new_sets = Vec::with_capacity(instrument.kraus_sets().len());
    for set in instrument.kraus_sets() {
        let mut composed = Vec::new();
        for k in set {
            for f in &ce_kraus {
                let prod = f * k;
                if fro_norm(&prod) > tol::ZERO_KRAUS {
                    composed.push(prod);
                }
            }
        }
        new_sets.push(composed);
    }

    CPInstrument::new(
        FiniteVonNeumannAlgebra::full(d),
        instrument.outcomes().clone(),
        new_sets,
    )
}

/// Kraus operators of the trace-preserving conditional expectation onto a
/// block algebra: per block, (1/√mᵢ)·(1_{nᵢ} ⊗ E_uv) conjugated into the
/// ambient basis. The set is closed under adjoints, so it serves both the
/// dual and the predual form.
pub fn conditional_expectation_kraus(algebra: &FiniteVonNeumannAlgebra) -> Vec<CMat> {
    let d = algebra.ambient_dim();
    let u = algebra.basis_change();
    let mut offsets = Vec::new();
    let mut off = 0;
    for &(n, m) in algebra.blocks() {
        offsets.push(off);
        off += n * m;
    }
    let mut out = Vec::new();
    for (i, &(n, m)) in algebra.blocks().iter().enumerate() {
        let scale = cr(1.0 / (m as f64).sqrt());
        for uu in 0..m {
            for vv in 0..m {
                let mut block = CMat::zeros(d, d);
                let local = kron(&identity(n), &matrix_unit(m, uu, vv)) * scale;
                block
                    .view_mut((offsets[i], offsets[i]), (n * m, n * m))
                    .copy_from(&local);
                out.push(u.adjoint() * block * u);
            }
        }
    }
    out
}

/// Residual report of [`verify_realization`].
#[derive(Clone, Debug)]
pub struct RealizationReport {
    pub per_atom: Vec<(String, f64)>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares an instrument against a measuring process: max over the algebra
/// basis M and atoms s of ‖I(M,{s}) − (id⊗σ)[U†(M⊗E(s))U]‖.
pub fn verify_realization(
    process: &MeasuringProcess,
    instrument: &CPInstrument,
    tolerance: f64,
) -> Result<RealizationReport> {
    let algebra = instrument.algebra();
    if algebra.ambient_dim() != process.dim_h() {
        return Err(ForgeError::DimensionMismatch(format!(
            "process H dimension {} vs algebra ambient {}",
            process.dim_h(),
            algebra.ambient_dim()
        )));
    }
    let basis = algebra.basis_elements();
    let mut per_atom = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (proc_idx, (label, _)) in process.meter().iter().enumerate() {
        let inst_idx = instrument.outcomes().index_of(label)?;
        let mut worst: f64 = 0.0;
        for e in &basis {
            let x = algebra.embed(e);
            let lhs = instrument.dual_atom(inst_idx, &x);
            let rhs = process.dual_atom(&x, proc_idx);
            worst = worst.max(op_norm(&(lhs - rhs)));
        }
        max_residual = max_residual.max(worst);
        per_atom.push((label.clone(), worst));
    }
    Ok(RealizationReport {
        per_atom,
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
    })
}
