//! A one-dimensional toy local net of matrix algebras.
//!
//! Sites 0..L each carry M_d; an interval region O gets the tensor factor
//! A(O) = ⊗_{i∈O} M_d embedded into the global algebra by a site
//! permutation. Disjoint regions commute, inclusion is isotone, and the
//! commutant of an interval algebra is the algebra of the complementary
//! sites, which is all the causal structure the lattice keeps.

use std::str::FromStr;

use rand::Rng;

use crate::algebra::{AlgebraElement, FiniteVonNeumannAlgebra};
use crate::dilation::{dilate_instrument, kraus_from_choi, choi_from_dual};
use crate::error::{ForgeError, Result};
use crate::instrument::{CPInstrument, OutcomeSpace};
use crate::matrix::{
    cr, hermitian_eigen_sorted, hermiticity_residual, identity, kron, matrix_unit, op_norm,
    perm_matrix, psd_inv_sqrt, ptrace_right, CMat, C64,
};
use crate::sampling::random_complex_matrix;
use crate::tol;

/// Hard cap on the global Hilbert-space dimension d^L.
pub const GLOBAL_DIM_CAP: usize = 4096;

/// An interval of lattice sites, inclusive on both ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub a: usize,
    pub b: usize,
}

impl Region {
    pub fn new(a: usize, b: usize) -> Self {
        assert!(a <= b, "region interval must satisfy a ≤ b");
        Self { a, b }
    }

    pub fn len(&self) -> usize {
        self.b - self.a + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sites(&self) -> Vec<usize> {
        (self.a..=self.b).collect()
    }

    pub fn contains(&self, other: &Region) -> bool {
        self.a <= other.a && other.b <= self.b
    }
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.a, self.b)
    }
}

impl FromStr for Region {
    type Err = String;

    /// Parses the CLI syntax "a..b".
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("region {s:?} is not of the form a..b"))?;
        let a: usize = a.trim().parse().map_err(|e| format!("bad region start: {e}"))?;
        let b: usize = b.trim().parse().map_err(|e| format!("bad region end: {e}"))?;
        if a > b {
            return Err(format!("region {s:?} has start after end"));
        }
        Ok(Region::new(a, b))
    }
}

/// Residuals of the local-instrument conditions for one instrument.
#[derive(Clone, Debug)]
pub struct LocalInstrumentReport {
    /// max ‖Ĩ(AB,{s}) − Ĩ(A,{s})B‖ over sampled A, complement generators B.
    pub locality_residual: f64,
    /// max membership residual of Ĩ(A,{s}) in A(O₁) over an A(O₁) basis.
    pub range_residual: f64,
    /// ‖VA − (A⊗1)V‖ over complement generators, when computed.
    pub intertwining_residual: Option<f64>,
}

impl LocalInstrumentReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.locality_residual < tolerance
            && self.range_residual < tolerance
            && self.intertwining_residual.is_none_or(|r| r < tolerance)
    }
}

/// The lattice net itself: L sites of local dimension d.
#[derive(Clone, Copy, Debug)]
pub struct LocalNet {
    sites: usize,
    local_dim: usize,
    global_dim: usize,
}

impl LocalNet {
    pub fn new(sites: usize, local_dim: usize) -> Result<Self> {
        if sites < 2 || local_dim < 2 {
            return Err(ForgeError::DimensionMismatch(
                "a net needs at least 2 sites of local dimension at least 2".into(),
            ));
        }
        let mut global_dim: usize = 1;
        for _ in 0..sites {
            global_dim = global_dim.saturating_mul(local_dim);
            if global_dim > GLOBAL_DIM_CAP {
                return Err(ForgeError::CapExceeded {
                    global_dim,
                    cap: GLOBAL_DIM_CAP,
                });
            }
        }
        Ok(Self {
            sites,
            local_dim,
            global_dim,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn global_dim(&self) -> usize {
        self.global_dim
    }

    /// The global algebra B(C^{d^L}).
    pub fn global_algebra(&self) -> FiniteVonNeumannAlgebra {
        FiniteVonNeumannAlgebra::full(self.global_dim)
    }

    pub fn check_region(&self, o: &Region) -> Result<()> {
        if o.b >= self.sites {
            return Err(ForgeError::RegionOutOfRange {
                a: o.a,
                b: o.b,
                sites: self.sites,
            });
        }
        Ok(())
    }

    /// Permutation Π reordering site factors so the listed sites come first,
    /// followed by the remaining sites in ascending order; Π ψ indexes as
    /// (x_listed, x_rest).
    fn site_order_permutation(&self, front: &[usize]) -> CMat {
        let l = self.sites;
        let d = self.local_dim;
        let mut order: Vec<usize> = front.to_vec();
        for i in 0..l {
            if !front.contains(&i) {
                order.push(i);
            }
        }
        let mut perm = vec![0usize; self.global_dim];
        for (x, slot) in perm.iter_mut().enumerate() {
            // digits of x, most significant first
            let mut digits = vec![0usize; l];
            let mut rem = x;
            for i in (0..l).rev() {
                digits[i] = rem % d;
                rem /= d;
            }
            let mut y = 0usize;
            for &site in &order {
                y = y * d + digits[site];
            }
            *slot = y;
        }
        perm_matrix(&perm)
    }

    /// Algebra of an arbitrary site set (ascending order); the empty set
    /// yields the scalars.
    pub fn site_set_algebra(&self, sites_in: &[usize]) -> Result<FiniteVonNeumannAlgebra> {
        let mut sites = sites_in.to_vec();
        sites.sort_unstable();
        sites.dedup();
        if sites.iter().any(|&s| s >= self.sites) {
            return Err(ForgeError::RegionOutOfRange {
                a: sites.first().copied().unwrap_or(0),
                b: sites.last().copied().unwrap_or(0),
                sites: self.sites,
            });
        }
        let factor = self.local_dim.pow(sites.len() as u32);
        let mult = self.global_dim / factor;
        let pi = self.site_order_permutation(&sites);
        FiniteVonNeumannAlgebra::new(&[(factor, mult)], Some(pi))
    }

    /// A(O) for an interval region.
    pub fn region_algebra(&self, o: &Region) -> Result<FiniteVonNeumannAlgebra> {
        self.check_region(o)?;
        self.site_set_algebra(&o.sites())
    }

    /// Complement sites of an interval, grouped into maximal intervals.
    pub fn causal_complement(&self, o: &Region) -> Result<Vec<Region>> {
        self.check_region(o)?;
        let mut out = Vec::new();
        if o.a > 0 {
            out.push(Region::new(0, o.a - 1));
        }
        if o.b + 1 < self.sites {
            out.push(Region::new(o.b + 1, self.sites - 1));
        }
        Ok(out)
    }

    fn complement_sites(&self, o: &Region) -> Vec<usize> {
        (0..self.sites).filter(|i| *i < o.a || *i > o.b).collect()
    }

    /// Embeds a single-site operator as m on `site` and identity elsewhere.
    pub fn site_operator(&self, site: usize, m: &CMat) -> Result<CMat> {
        if site >= self.sites {
            return Err(ForgeError::RegionOutOfRange {
                a: site,
                b: site,
                sites: self.sites,
            });
        }
        let alg = self.site_set_algebra(&[site])?;
        let elem = alg.element(vec![m.clone()])?;
        Ok(alg.embed(&elem))
    }

    /// Lifts an instrument given on the region factor B(C^{d^{|O|}}) to an
    /// instrument on A(O) inside the global algebra (Kraus ⊗ identity).
    pub fn lift_instrument(&self, o: &Region, inst: &CPInstrument) -> Result<CPInstrument> {
        let alg = self.region_algebra(o)?;
        let factor = self.local_dim.pow(o.len() as u32);
        if inst.algebra().ambient_dim() != factor {
            return Err(ForgeError::DimensionMismatch(format!(
                "instrument acts on dimension {}, region factor has dimension {factor}",
                inst.algebra().ambient_dim()
            )));
        }
        if !inst.algebra().is_full() {
            return Err(ForgeError::NotFullAlgebra);
        }
        let kraus = inst
            .kraus_sets()
            .iter()
            .map(|set| {
                set.iter()
                    .map(|k| {
                        let e = alg.element(vec![k.clone()])?;
                        Ok(alg.embed(&e))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        CPInstrument::new(alg, inst.outcomes().clone(), kraus)
    }

    /// Extends an instrument on A(O₁) to a local instrument on the global
    /// algebra for the split pair (O₁, O₂): the O₁ action is kept, the collar
    /// O₂∖O₁ is averaged by the trace-preserving conditional expectation, and
    /// the complement of O₂ is untouched.
    pub fn extend_local(
        &self,
        instrument: &CPInstrument,
        o1: &Region,
        o2: &Region,
    ) -> Result<CPInstrument> {
        self.check_region(o1)?;
        self.check_region(o2)?;
        if !o2.contains(o1) {
            return Err(ForgeError::RegionOrderViolation {
                inner: o1.to_string(),
                outer: o2.to_string(),
            });
        }
        let alg1 = self.region_algebra(o1)?;
        if instrument.algebra().ambient_dim() != self.global_dim
            || !instrument.algebra().same_presentation(&alg1)
        {
            return Err(ForgeError::AlgebraMismatch);
        }

        let d1 = self.local_dim.pow(o1.len() as u32);
        let rest1 = self.global_dim / d1;

        // Restrict each atom map to the O₁ factor: T_s(X⊗1) = T_s^{(1)}(X)⊗1.
        let pi1 = alg1.basis_change().clone();
        let restricted_kraus: Vec<Vec<CMat>> = (0..instrument.outcomes().len())
            .map(|s| {
                let dual = |x: &CMat| -> CMat {
                    let lifted = pi1.adjoint() * kron(x, &identity(rest1)) * &pi1;
                    let image = instrument.dual_atom(s, &lifted);
                    let rotated = &pi1 * image * pi1.adjoint();
                    ptrace_right(&rotated, d1, rest1) / cr(rest1 as f64)
                };
                let choi = choi_from_dual(dual, d1);
                kraus_from_choi(&choi, d1, tol::CHOI_FLOOR)
            })
            .collect::<Result<_>>()?;

        // Factor layout O₁ | collar | rest, with the conditional expectation
        // onto the scalars acting on the collar factor.
        let collar_sites: Vec<usize> = o2
            .sites()
            .into_iter()
            .filter(|s| *s < o1.a || *s > o1.b)
            .collect();
        let dc = self.local_dim.pow(collar_sites.len() as u32);
        let dr = self.global_dim / (d1 * dc);
        let mut order = o1.sites();
        order.extend(&collar_sites);
        let pi2 = self.site_order_permutation(&order);

        let scale = cr(1.0 / (dc as f64).sqrt());
        let mut new_sets = Vec::with_capacity(restricted_kraus.len());
        for set in &restricted_kraus {
            let mut out = Vec::with_capacity(set.len() * dc * dc);
            for k in set {
                for u in 0..dc {
                    for v in 0..dc {
                        let collar_part = matrix_unit(dc, u, v) * scale;
                        let local = kron(&kron(k, &collar_part), &identity(dr));
                        out.push(pi2.adjoint() * local * &pi2);
                    }
                }
            }
            new_sets.push(out);
        }

        CPInstrument::new(
            self.global_algebra(),
            instrument.outcomes().clone(),
            new_sets,
        )
    }

    /// Checks the local-instrument conditions for (O₁, O₂): the bimodule
    /// identity Ĩ(AB,Δ) = Ĩ(A,Δ)B over `samples` random global A against a
    /// basis of the complement factor of O₂, and the range condition
    /// Ĩ(A,Δ) ∈ A(O₁) on an A(O₁) basis. O₂ = O₁ expresses strict locality.
    pub fn is_local_instrument(
        &self,
        instrument: &CPInstrument,
        o1: &Region,
        o2: &Region,
        rng: &mut impl Rng,
        samples: usize,
    ) -> Result<LocalInstrumentReport> {
        self.check_region(o1)?;
        self.check_region(o2)?;
        if !o2.contains(o1) {
            return Err(ForgeError::RegionOrderViolation {
                inner: o1.to_string(),
                outer: o2.to_string(),
            });
        }
        if instrument.algebra().ambient_dim() != self.global_dim {
            return Err(ForgeError::DimensionMismatch(format!(
                "instrument ambient dimension {} does not match the net ({})",
                instrument.algebra().ambient_dim(),
                self.global_dim
            )));
        }

        let n_atoms = instrument.outcomes().len();

        let complement = self.complement_sites(o2);
        let mut locality: f64 = 0.0;
        if !complement.is_empty() {
            let alg_c = self.site_set_algebra(&complement)?;
            let gens: Vec<CMat> = alg_c
                .basis_elements()
                .iter()
                .map(|e| alg_c.embed(e))
                .collect();
            for _ in 0..samples {
                let mut a = random_complex_matrix(rng, self.global_dim, self.global_dim);
                let nrm = op_norm(&a);
                if nrm > 0.0 {
                    a /= cr(nrm);
                }
                for b in &gens {
                    let ab = &a * b;
                    for s in 0..n_atoms {
                        let lhs = instrument.dual_atom(s, &ab);
                        let rhs = instrument.dual_atom(s, &a) * b;
                        locality = locality.max(op_norm(&(lhs - rhs)));
                    }
                }
            }
        }

        let alg1 = self.region_algebra(o1)?;
        let mut range: f64 = 0.0;
        for e in alg1.basis_elements() {
            let x = alg1.embed(&e);
            for s in 0..n_atoms {
                let (_, residual) = alg1.is_member(&instrument.dual_atom(s, &x))?;
                range = range.max(residual);
            }
        }

        Ok(LocalInstrumentReport {
            locality_residual: locality,
            range_residual: range,
            intertwining_residual: None,
        })
    }

    /// Intertwining residual of the minimal dilation of a global-algebra
    /// instrument: max over complement generators A of O₂ of
    /// ‖VA − (A⊗1)V‖.
    pub fn intertwining_check(&self, instrument: &CPInstrument, o2: &Region) -> Result<f64> {
        self.check_region(o2)?;
        if instrument.algebra().ambient_dim() != self.global_dim {
            return Err(ForgeError::DimensionMismatch(format!(
                "instrument ambient dimension {} does not match the net ({})",
                instrument.algebra().ambient_dim(),
                self.global_dim
            )));
        }
        let dilation = dilate_instrument(instrument)?;
        let v = dilation.isometry();
        let meter = dilation.meter_dim();

        let complement = self.complement_sites(o2);
        if complement.is_empty() {
            return Ok(0.0);
        }
        let alg_c = self.site_set_algebra(&complement)?;
        let mut worst: f64 = 0.0;
        for e in alg_c.basis_elements() {
            let a = alg_c.embed(&e);
            let lhs = v * &a;
            let rhs = kron(&a, &identity(meter)) * v;
            worst = worst.max(op_norm(&(lhs - rhs)));
        }
        Ok(worst)
    }

    /// Discretized von Neumann measurement model of a Hermitian A ∈ A(O₁):
    /// Kraus K_x = √w_x·α(x·1 − A) over the grid of outcome points, with a
    /// final right-normalization restoring Σ K†K = 1 exactly.
    ///
    /// The amplitude α is the function on the grid points extended by zero;
    /// a spectral value λ contributes to outcome x only when x − λ lands on
    /// the grid (within [`tol::GRID_MATCH`]).
    pub fn von_neumann_model(
        &self,
        a: &AlgebraElement,
        amplitudes: &[(f64, C64)],
        weights: Option<&[f64]>,
        o1: &Region,
    ) -> Result<CPInstrument> {
        let alg1 = self.region_algebra(o1)?;
        if a.coeffs().len() != 1 {
            return Err(ForgeError::DimensionMismatch(
                "region algebra element must have a single block coefficient".into(),
            ));
        }
        let local = &a.coeffs()[0];
        let herm = hermiticity_residual(local);
        if herm > tol::UNITARY {
            return Err(ForgeError::NotHermitian { residual: herm });
        }
        if amplitudes.is_empty() || amplitudes.iter().all(|(_, al)| al.norm() < 1e-15) {
            return Err(ForgeError::DegenerateAmplitude("all-zero amplitude".into()));
        }
        if let Some(w) = weights {
            if w.len() != amplitudes.len() {
                return Err(ForgeError::DimensionMismatch(format!(
                    "{} weights for {} grid points",
                    w.len(),
                    amplitudes.len()
                )));
            }
            if w.iter().any(|&x| x < 0.0) {
                return Err(ForgeError::DegenerateAmplitude(
                    "negative quadrature weight".into(),
                ));
            }
        }

        let lookup = |y: f64| -> C64 {
            for (x, al) in amplitudes {
                if (y - x).abs() < tol::GRID_MATCH {
                    return *al;
                }
            }
            C64::default()
        };

        let n1 = local.nrows();
        let (eigvals, eigvecs) = hermitian_eigen_sorted(local);
        let mut raw_kraus: Vec<CMat> = Vec::with_capacity(amplitudes.len());
        for (g, (x, _)) in amplitudes.iter().enumerate() {
            let w = weights.map_or(1.0, |w| w[g]);
            let mut k = CMat::zeros(n1, n1);
            for (idx, &lam) in eigvals.iter().enumerate() {
                let coef = lookup(x - lam) * cr(w.sqrt());
                if coef.norm() > 0.0 {
                    let v = eigvecs.column(idx);
                    for p in 0..n1 {
                        for q in 0..n1 {
                            k[(p, q)] += coef * v[p] * v[q].conj();
                        }
                    }
                }
            }
            raw_kraus.push(k);
        }

        let mut total = CMat::zeros(n1, n1);
        for k in &raw_kraus {
            total += k.adjoint() * k;
        }
        let normalizer = psd_inv_sqrt(&total, tol::CHOI_FLOOR).ok_or_else(|| {
            ForgeError::DegenerateAmplitude(
                "amplitude grid does not cover the spectrum of A".into(),
            )
        })?;

        let labels: Vec<String> = amplitudes.iter().map(|(x, _)| format!("{x}")).collect();
        let kraus: Vec<Vec<CMat>> = raw_kraus
            .into_iter()
            .map(|k| {
                let local_k = k * &normalizer;
                let elem = alg1.element(vec![local_k])?;
                Ok(vec![alg1.embed(&elem)])
            })
            .collect::<Result<_>>()?;

        CPInstrument::new(self.global_algebra(), OutcomeSpace::new(labels)?, kraus)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::instruments_equal;
    use crate::sampling;
    use crate::state::NormalState;

    fn lueders_z_site() -> CPInstrument {
        CPInstrument::new(
            FiniteVonNeumannAlgebra::full(2),
            OutcomeSpace::new(vec!["0", "1"]).unwrap(),
            vec![vec![matrix_unit(2, 0, 0)], vec![matrix_unit(2, 1, 1)]],
        )
        .unwrap()
    }

    #[test]
    fn net_construction_and_cap() {
        let net = LocalNet::new(2, 2).unwrap();
        assert_eq!(net.global_dim(), 4);
        assert!(net.global_algebra().is_full());

        let net4 = LocalNet::new(4, 2).unwrap();
        assert_eq!(net4.global_dim(), 16);

        assert!(matches!(
            LocalNet::new(13, 2),
            Err(ForgeError::CapExceeded { .. })
        ));
        assert!(LocalNet::new(1, 2).is_err());
    }

    #[test]
    fn disjoint_site_algebras_commute() {
        let net = LocalNet::new(3, 2).unwrap();
        let a0 = net.region_algebra(&Region::new(0, 0)).unwrap();
        let a2 = net.region_algebra(&Region::new(2, 2)).unwrap();
        let mut worst: f64 = 0.0;
        for x in a0.basis_elements() {
            let xg = a0.embed(&x);
            for y in a2.basis_elements() {
                let yg = a2.embed(&y);
                worst = worst.max((&xg * &yg - &yg * &xg).norm());
            }
        }
        assert!(worst < 1e-12, "commutator norm {worst:.3e}");
    }

    #[test]
    fn isotony_of_interval_algebras() {
        let net = LocalNet::new(3, 2).unwrap();
        let small = net.region_algebra(&Region::new(0, 0)).unwrap();
        let big = net.region_algebra(&Region::new(0, 1)).unwrap();
        for e in small.basis_elements() {
            let (ok, res) = big.is_member(&small.embed(&e)).unwrap();
            assert!(ok, "inclusion residual {res:.3e}");
        }
    }

    #[test]
    fn region_algebra_blocks_and_duality() {
        let net = LocalNet::new(2, 2).unwrap();
        let a = net.region_algebra(&Region::new(0, 0)).unwrap();
        assert_eq!(a.blocks(), &[(2, 2)]);

        let full = net.region_algebra(&Region::new(0, 1)).unwrap();
        assert!(full.is_full());

        // toy Haag duality: commutant of A(O) is A(O′)
        let net3 = LocalNet::new(3, 2).unwrap();
        for (a, b) in [(0usize, 0usize), (0, 1), (1, 1), (1, 2), (0, 2)] {
            let o = Region::new(a, b);
            let alg = net3.region_algebra(&o).unwrap();
            let comp_sites = net3.complement_sites(&o);
            let dual = net3.site_set_algebra(&comp_sites).unwrap();
            let dist = alg.commutant().span_distance(&dual);
            assert!(dist < 1e-12, "duality residual {dist:.3e} for {o}");
        }
    }

    #[test]
    fn causal_complement_examples() {
        let net = LocalNet::new(3, 2).unwrap();
        assert_eq!(
            net.causal_complement(&Region::new(0, 0)).unwrap(),
            vec![Region::new(1, 2)]
        );
        assert_eq!(net.causal_complement(&Region::new(0, 2)).unwrap(), vec![]);
        assert_eq!(
            net.causal_complement(&Region::new(1, 1)).unwrap(),
            vec![Region::new(0, 0), Region::new(2, 2)]
        );
        // full-lattice complement algebra is the scalars
        let scalars = net.site_set_algebra(&[]).unwrap();
        assert_eq!(scalars.blocks(), &[(1, 8)]);
        assert!(matches!(
            net.check_region(&Region::new(1, 3)),
            Err(ForgeError::RegionOutOfRange { .. })
        ));
    }

    #[test]
    fn extension_of_site_lueders_is_local() {
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let o2 = Region::new(0, 1);
        let lifted = net.lift_instrument(&o1, &lueders_z_site()).unwrap();
        let extended = net.extend_local(&lifted, &o1, &o2).unwrap();

        // restriction to A(O₁) reproduces the input
        let alg1 = net.region_algebra(&o1).unwrap();
        for s in 0..2 {
            for e in alg1.basis_elements() {
                let x = alg1.embed(&e);
                let diff = (extended.dual_atom(s, &x) - lifted.dual_atom(s, &x)).norm();
                assert!(diff < 1e-10, "restriction residual {diff:.3e}");
            }
        }

        // the extension acts as Z-measurement ⊗ identity on a product state
        let mut rng = sampling::rng(7);
        let report = net
            .is_local_instrument(&extended, &o1, &o2, &mut rng, 4)
            .unwrap();
        assert!(report.locality_residual < 1e-9, "{report:?}");
        assert!(report.range_residual < 1e-9, "{report:?}");

        // site-2 generators are untouched (collar is site 1)
        let pauli_x = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let x2 = net.site_operator(2, &pauli_x).unwrap();
        for s in 0..2 {
            let lhs = extended.dual_atom(s, &x2);
            let rhs = extended.dual_atom(s, &identity(8)) * &x2;
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn trivial_instrument_extends_to_trivial() {
        // with an empty collar the extension is exactly the global trivial
        // instrument; with a collar it still restricts to the identity on
        // A(O₁) ∨ A(O₂′) and stays local
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let trivial_site =
            CPInstrument::trivial(FiniteVonNeumannAlgebra::full(2), "only").unwrap();
        let lifted = net.lift_instrument(&o1, &trivial_site).unwrap();

        let extended = net.extend_local(&lifted, &o1, &o1).unwrap();
        let trivial_global =
            CPInstrument::trivial(net.global_algebra(), "only").unwrap();
        assert!(instruments_equal(&extended, &trivial_global, 1e-9).unwrap());

        let o2 = Region::new(0, 1);
        let collared = net.extend_local(&lifted, &o1, &o2).unwrap();
        for alg in [
            net.region_algebra(&o1).unwrap(),
            net.site_set_algebra(&[2]).unwrap(),
        ] {
            for e in alg.basis_elements() {
                let x = alg.embed(&e);
                assert!((collared.dual_atom(0, &x) - &x).norm() < 1e-10);
            }
        }
        let mut rng = sampling::rng(3);
        let report = net
            .is_local_instrument(&collared, &o1, &o2, &mut rng, 2)
            .unwrap();
        assert!(report.locality_residual < 1e-10 && report.range_residual < 1e-10);
    }

    #[test]
    fn global_trivial_instrument_is_local_everywhere() {
        let net = LocalNet::new(3, 2).unwrap();
        let trivial = CPInstrument::trivial(net.global_algebra(), "only").unwrap();
        let mut rng = sampling::rng(1);
        for (o1, o2) in [
            (Region::new(0, 0), Region::new(0, 0)),
            (Region::new(0, 0), Region::new(0, 1)),
            (Region::new(1, 1), Region::new(0, 2)),
        ] {
            let report = net
                .is_local_instrument(&trivial, &o1, &o2, &mut rng, 2)
                .unwrap();
            assert!(report.locality_residual < 1e-12 && report.range_residual < 1e-12);
        }
    }

    #[test]
    fn measuring_complement_observable_is_not_local() {
        // global Lüders measurement of Z on site 2 versus O₁ = [0,0]
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let o2 = Region::new(0, 1);
        let p0 = net.site_operator(2, &matrix_unit(2, 0, 0)).unwrap();
        let p1 = net.site_operator(2, &matrix_unit(2, 1, 1)).unwrap();
        let nonlocal = CPInstrument::new(
            net.global_algebra(),
            OutcomeSpace::new(vec!["0", "1"]).unwrap(),
            vec![vec![p0], vec![p1]],
        )
        .unwrap();

        let mut rng = sampling::rng(11);
        let report = net
            .is_local_instrument(&nonlocal, &o1, &o2, &mut rng, 4)
            .unwrap();
        assert!(
            report.locality_residual > 0.1,
            "expected a gross locality violation, got {:.3e}",
            report.locality_residual
        );

        let res = net.intertwining_check(&nonlocal, &o2).unwrap();
        assert!(res >= 0.5, "intertwining residual {res:.3e}");
    }

    #[test]
    fn intertwining_of_extension_dilation_vanishes() {
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let o2 = Region::new(0, 1);
        let lifted = net.lift_instrument(&o1, &lueders_z_site()).unwrap();
        let extended = net.extend_local(&lifted, &o1, &o2).unwrap();
        let res = net.intertwining_check(&extended, &o2).unwrap();
        assert!(res < 1e-9, "intertwining residual {res:.3e}");

        // trivial instrument: V is a copy isometry commuting with everything
        let trivial = CPInstrument::trivial(net.global_algebra(), "only").unwrap();
        let res = net.intertwining_check(&trivial, &o2).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn von_neumann_model_sharp_pointer_is_projective() {
        // α a Kronecker delta at 0, A with spectrum on the grid
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let alg1 = net.region_algebra(&o1).unwrap();
        let a = alg1
            .element(vec![CMat::from_row_slice(
                2,
                2,
                &[cr(2.0), cr(0.0), cr(0.0), cr(0.0)],
            )])
            .unwrap();
        let amplitudes = vec![(0.0, cr(1.0)), (2.0, cr(0.0))];
        // α(0)=1 only: outcome x receives the λ = x eigenprojector
        let inst = net.von_neumann_model(&a, &amplitudes, None, &o1).unwrap();
        assert!(inst.validate().pass());

        let p_lam2 = net.site_operator(0, &matrix_unit(2, 0, 0)).unwrap();
        let got = inst.dual_atom(0, &identity(8));
        // outcome "0" catches eigenvalue 0, i.e. projector 1 − P_{λ=2}
        assert!((got - (identity(8) - p_lam2)).norm() < 1e-10);
    }

    #[test]
    fn von_neumann_model_flat_amplitude_is_unsharp_and_strictly_local() {
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let alg1 = net.region_algebra(&o1).unwrap();
        // A = diag(2, 0) on site 0, flat amplitude over the grid {0, 2}
        let a = alg1
            .element(vec![CMat::from_row_slice(
                2,
                2,
                &[cr(2.0), cr(0.0), cr(0.0), cr(0.0)],
            )])
            .unwrap();
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        let amplitudes = vec![(0.0, s), (2.0, s)];
        let inst = net.von_neumann_model(&a, &amplitudes, None, &o1).unwrap();

        // exact unitality after renormalization
        let report = inst.validate();
        assert!(report.pass());
        let unit = report.checks.iter().find(|c| c.name == "unitality").unwrap();
        assert!(unit.residual < 1e-12);

        // closed form: K_0 = P₀/√2, K_2 = P₂ + P₀/√2 on the site factor
        let p0 = matrix_unit(2, 1, 1); // λ = 0 eigenprojector of diag(2,0)
        let p2 = matrix_unit(2, 0, 0);
        let k0_expected = net
            .site_operator(0, &(&p0 * s))
            .unwrap();
        let k2_expected = net
            .site_operator(0, &(&p2 + &p0 * s))
            .unwrap();
        let k0 = &inst.kraus_sets()[0][0];
        let k2 = &inst.kraus_sets()[1][0];
        assert!((k0 - k0_expected).norm() < 1e-10, "K_0 mismatch");
        assert!((k2 - k2_expected).norm() < 1e-10, "K_2 mismatch");

        // strictly local: O₂ = O₁ in one code path
        let mut rng = sampling::rng(19);
        let rep = net
            .is_local_instrument(&inst, &o1, &o1, &mut rng, 4)
            .unwrap();
        assert!(rep.locality_residual < 1e-9 && rep.range_residual < 1e-9, "{rep:?}");

        let res = net.intertwining_check(&inst, &o1).unwrap();
        assert!(res < 1e-9);
    }

    #[test]
    fn von_neumann_model_with_unused_grid_point_is_still_unital() {
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let alg1 = net.region_algebra(&o1).unwrap();
        let a = alg1
            .element(vec![CMat::from_row_slice(
                2,
                2,
                &[cr(2.0), cr(0.0), cr(0.0), cr(0.0)],
            )])
            .unwrap();
        let s = cr(std::f64::consts::FRAC_1_SQRT_2);
        // the zero-amplitude grid point 7 yields a dead atom
        let amplitudes = vec![(0.0, s), (2.0, s), (7.0, cr(0.0))];
        let inst = net.von_neumann_model(&a, &amplitudes, None, &o1).unwrap();
        assert!(inst.validate().pass());
        assert_eq!(inst.discrete_support(), vec!["0", "2"]);

        // degenerate: amplitude misses the spectrum entirely
        let bad = vec![(100.0, cr(1.0))];
        assert!(matches!(
            net.von_neumann_model(&a, &bad, None, &o1),
            Err(ForgeError::DegenerateAmplitude(_))
        ));
        // all-zero amplitude
        let zero = vec![(0.0, cr(0.0))];
        assert!(matches!(
            net.von_neumann_model(&a, &zero, None, &o1),
            Err(ForgeError::DegenerateAmplitude(_))
        ));
    }

    #[test]
    fn region_parsing() {
        assert_eq!("0..2".parse::<Region>().unwrap(), Region::new(0, 2));
        assert_eq!("1..1".parse::<Region>().unwrap(), Region::new(1, 1));
        assert!("2..1".parse::<Region>().is_err());
        assert!("abc".parse::<Region>().is_err());
    }

    #[test]
    fn extension_respects_probabilities_on_product_states() {
        let net = LocalNet::new(3, 2).unwrap();
        let o1 = Region::new(0, 0);
        let o2 = Region::new(0, 1);
        let lifted = net.lift_instrument(&o1, &lueders_z_site()).unwrap();
        let extended = net.extend_local(&lifted, &o1, &o2).unwrap();

        // |+⟩⊗|0⟩⊗|0⟩: outcome probabilities 1/2 each
        let mut v = crate::matrix::CVec::zeros(8);
        v[0] = cr(1.0);
        v[4] = cr(1.0);
        let rho = NormalState::pure(&v).unwrap();
        let p0 = extended.outcome_probability(&rho, &["0"]).unwrap();
        assert!((p0 - 0.5).abs() < 1e-10);
    }
}
