//! Completely positive instruments over finite outcome spaces.
//!
//! An instrument assigns to every outcome a CP map in Kraus form; the dual
//! map acts on observables as X ↦ Σⱼ K†XK and the predual on densities as
//! ρ ↦ Σⱼ KρK†. Complete positivity is structural; construction validates
//! total unitality I(1,S) = 1 and the range condition I(M,Δ) ∈ M.

use std::collections::BTreeSet;

use crate::algebra::{AlgebraElement, FiniteVonNeumannAlgebra};
use crate::error::{ForgeError, Result};
use crate::matrix::{all_finite, cr, fro_norm, identity, kron, op_norm, CMat};
use crate::state::NormalState;
use crate::tol;

/// Finite outcome space: the atoms of S, with the power set as σ-algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutcomeSpace {
    labels: Vec<String>,
}

impl OutcomeSpace {
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() || labels.iter().any(String::is_empty) {
            return Err(ForgeError::BadOutcomeSpace);
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != labels.len() {
            return Err(ForgeError::BadOutcomeSpace);
        }
        Ok(Self { labels })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ForgeError::UnknownLabel(label.to_string()))
    }

    /// Resolves a subset of labels to sorted, deduplicated atom indices.
    pub fn resolve(&self, subset: &[&str]) -> Result<Vec<usize>> {
        let mut idx: Vec<usize> = subset
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        Ok(idx)
    }

    /// All atom indices, i.e. the full set S.
    pub fn all(&self) -> Vec<usize> {
        (0..self.labels.len()).collect()
    }
}

/// One named validation check with its residual and threshold.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            pass: residual < tolerance,
        }
    }
}

/// Result of [`CPInstrument::validate`].
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn worst(&self) -> Option<&CheckResult> {
        self.checks
            .iter()
            .max_by(|a, b| (a.residual / a.tolerance).total_cmp(&(b.residual / b.tolerance)))
    }
}

/// Post-measurement state for one atom, indefinite when the atom has
/// probability zero.
#[derive(Clone, Debug)]
pub enum Posterior {
    State(NormalState),
    Indefinite,
}

#[derive(Clone, Debug)]
pub struct PosteriorEntry {
    pub label: String,
    pub weight: f64,
    pub posterior: Posterior,
}

/// Outcome-indexed weights and posterior states for one input state.
#[derive(Clone, Debug)]
pub struct PosteriorFamily {
    pub entries: Vec<PosteriorEntry>,
}

impl PosteriorFamily {
    pub fn weight(&self, label: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.weight)
    }

    pub fn posterior(&self, label: &str) -> Option<&Posterior> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| &e.posterior)
    }
}

/// Joint outcome table of two successive measurements.
#[derive(Clone, Debug)]
pub struct JointDistribution {
    pub second_labels: Vec<String>,
    pub first_labels: Vec<String>,
    /// prob[t][s] = Pr{y = t, x = s}.
    pub prob: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn prob(&self, second: &str, first: &str) -> Option<f64> {
        let t = self.second_labels.iter().position(|l| l == second)?;
        let s = self.first_labels.iter().position(|l| l == first)?;
        Some(self.prob[t][s])
    }

    /// Marginal over the second outcome: Pr{x = s}.
    pub fn first_marginal(&self) -> Vec<f64> {
        let ns = self.first_labels.len();
        (0..ns)
            .map(|s| self.prob.iter().map(|row| row[s]).sum())
            .collect()
    }

    /// Marginal over the first outcome: Pr{y = t}.
    pub fn second_marginal(&self) -> Vec<f64> {
        self.prob.iter().map(|row| row.iter().sum()).collect()
    }
}

/// A CP instrument for (M, S) in Kraus form.
#[derive(Clone, Debug)]
pub struct CPInstrument {
    algebra: FiniteVonNeumannAlgebra,
    outcomes: OutcomeSpace,
    kraus: Vec<Vec<CMat>>,
}

impl CPInstrument {
    /// Validated constructor: checks dimensions, total unitality, and the
    /// range condition I(M, {s}) ∈ M on an algebra basis.
    pub fn new(
        algebra: FiniteVonNeumannAlgebra,
        outcomes: OutcomeSpace,
        kraus: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        let inst = Self::unvalidated(algebra, outcomes, kraus)?;
        let report = inst.validate();
        for check in &report.checks {
            if !check.pass {
                return Err(match check.name.split(':').next().unwrap_or("") {
                    "unitality" => ForgeError::NotUnital {
                        residual: check.residual,
                    },
                    "cp" => ForgeError::NotCP {
                        min_eigenvalue: -check.residual,
                    },
                    _ => ForgeError::RangeViolation {
                        label: check.name.split(':').nth(1).unwrap_or("?").to_string(),
                        residual: check.residual,
                    },
                });
            }
        }
        Ok(inst)
    }

    /// Dimension-checked constructor that skips the physics checks; used by
    /// validation reporting, where failures must be described, not raised.
    pub fn unvalidated(
        algebra: FiniteVonNeumannAlgebra,
        outcomes: OutcomeSpace,
        kraus: Vec<Vec<CMat>>,
    ) -> Result<Self> {
        if kraus.len() != outcomes.len() {
            return Err(ForgeError::DimensionMismatch(format!(
                "{} Kraus sets for {} outcomes",
                kraus.len(),
                outcomes.len()
            )));
        }
        let d = algebra.ambient_dim();
        for set in &kraus {
            for k in set {
                if k.nrows() != d || k.ncols() != d {
                    return Err(ForgeError::DimensionMismatch(format!(
                        "Kraus operator is {}×{}, ambient dimension is {d}",
                        k.nrows(),
                        k.ncols()
                    )));
                }
                if !all_finite(k) {
                    return Err(ForgeError::DimensionMismatch(
                        "Kraus operator has non-finite entries".into(),
                    ));
                }
            }
        }
        Ok(Self {
            algebra,
            outcomes,
            kraus,
        })
    }

    /// The trivial single-outcome instrument (identity Kraus).
    pub fn trivial(algebra: FiniteVonNeumannAlgebra, label: &str) -> Result<Self> {
        let d = algebra.ambient_dim();
        Self::new(
            algebra,
            OutcomeSpace::new(vec![label])?,
            vec![vec![identity(d)]],
        )
    }

    pub fn algebra(&self) -> &FiniteVonNeumannAlgebra {
        &self.algebra
    }

    pub fn outcomes(&self) -> &OutcomeSpace {
        &self.outcomes
    }

    pub fn kraus_sets(&self) -> &[Vec<CMat>] {
        &self.kraus
    }

    pub fn kraus_for(&self, label: &str) -> Result<&[CMat]> {
        Ok(&self.kraus[self.outcomes.index_of(label)?])
    }

    /// Σ over all outcomes of Σⱼ K†K; equals 1 for a valid instrument.
    pub fn total_effect(&self) -> CMat {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d, d);
        for set in &self.kraus {
            for k in set {
                acc += k.adjoint() * k;
            }
        }
        acc
    }

    /// Effect I(1, {s}) of a single atom.
    pub fn atom_effect(&self, idx: usize) -> CMat {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d, d);
        for k in &self.kraus[idx] {
            acc += k.adjoint() * k;
        }
        acc
    }

    /// Dual atom map applied to an arbitrary ambient matrix: Σⱼ K†XK.
    pub fn dual_atom(&self, idx: usize, x: &CMat) -> CMat {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d, d);
        for k in &self.kraus[idx] {
            acc += k.adjoint() * x * k;
        }
        acc
    }

    /// Predual atom map applied to an arbitrary density-like matrix: Σⱼ KρK†.
    pub fn predual_atom(&self, idx: usize, rho: &CMat) -> CMat {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d, d);
        for k in &self.kraus[idx] {
            acc += k * rho * k.adjoint();
        }
        acc
    }

    /// Transfer matrix of the predual atom map under row-major vectorization:
    /// vec(Σ KρK†) = (Σ K ⊗ conj(K)) vec(ρ).
    pub fn predual_transfer(&self, idx: usize) -> CMat {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d * d, d * d);
        for k in &self.kraus[idx] {
            acc += kron(k, &k.map(|z| z.conj()));
        }
        acc
    }

    /// Runs the named validation checks: per-outcome complete positivity
    /// (min Choi eigenvalue), total unitality, per-outcome range condition.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        let d = self.algebra.ambient_dim();

        for (idx, label) in self.outcomes.labels().iter().enumerate() {
            let choi = crate::dilation::choi_matrix(&self.kraus[idx], d)
                .expect("dimensions already validated");
            let (vals, _) = crate::matrix::hermitian_eigen_sorted(&choi);
            let min = vals.last().copied().unwrap_or(0.0);
            checks.push(CheckResult::new(
                format!("cp:{label}"),
                (-min).max(0.0),
                tol::NOT_CP,
            ));
        }

        let unitality = op_norm(&(self.total_effect() - identity(d)));
        checks.push(CheckResult::new("unitality", unitality, tol::UNITALITY));

        let basis = self.algebra.basis_elements();
        for (idx, label) in self.outcomes.labels().iter().enumerate() {
            let mut worst: f64 = 0.0;
            for e in &basis {
                let image = self.dual_atom(idx, &self.algebra.embed(e));
                let (_, residual) = self
                    .algebra
                    .is_member(&image)
                    .expect("dimensions already validated");
                worst = worst.max(residual);
            }
            checks.push(CheckResult::new(
                format!("range:{label}"),
                worst,
                tol::MEMBERSHIP,
            ));
        }

        ValidationReport { checks }
    }

    /// I(M, Δ) = Σ_{s∈Δ} Σⱼ K†MK, re-expressed as an algebra element.
    pub fn apply_dual(&self, m: &AlgebraElement, subset: &[&str]) -> Result<AlgebraElement> {
        let global = self.apply_dual_global(&self.algebra.embed(m), subset)?;
        self.algebra.conditional_expectation(&global)
    }

    /// Dual map on an arbitrary ambient matrix, without re-expression.
    pub fn apply_dual_global(&self, x: &CMat, subset: &[&str]) -> Result<CMat> {
        let d = self.algebra.ambient_dim();
        let mut acc = CMat::zeros(d, d);
        for idx in self.outcomes.resolve(subset)? {
            acc += self.dual_atom(idx, x);
        }
        Ok(acc)
    }

    /// I(Δ)ρ = Σ_{s∈Δ} Σⱼ KρK†, a subnormalized density.
    pub fn apply_predual(&self, rho: &NormalState, subset: &[&str]) -> Result<CMat> {
        self.apply_predual_raw(rho.density(), subset)
    }

    pub fn apply_predual_raw(&self, rho: &CMat, subset: &[&str]) -> Result<CMat> {
        let d = self.algebra.ambient_dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(ForgeError::DimensionMismatch(format!(
                "state is {}×{}, ambient dimension is {d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let mut acc = CMat::zeros(d, d);
        for idx in self.outcomes.resolve(subset)? {
            acc += self.predual_atom(idx, rho);
        }
        Ok(acc)
    }

    /// Pr{x ∈ Δ ‖ ρ} = tr I(Δ)ρ.
    pub fn outcome_probability(&self, rho: &NormalState, subset: &[&str]) -> Result<f64> {
        Ok(self.apply_predual(rho, subset)?.trace().re)
    }

    /// Per-atom weights and normalized posterior states; atoms with vanishing
    /// probability are marked indefinite rather than carrying a NaN state.
    pub fn posterior_family(&self, rho: &NormalState) -> Result<PosteriorFamily> {
        let mut entries = Vec::with_capacity(self.outcomes.len());
        for (idx, label) in self.outcomes.labels().iter().enumerate() {
            let sub = self.predual_atom(idx, rho.density());
            let weight = sub.trace().re;
            let posterior = if weight > tol::CHOI_FLOOR {
                // the exact posterior is a state; the slack only absorbs the
                // division by a possibly small weight
                let density = sub / cr(weight);
                Posterior::State(NormalState::with_tolerance(density, 1e-7)?)
            } else {
                Posterior::Indefinite
            };
            entries.push(PosteriorEntry {
                label: label.clone(),
                weight: weight.max(0.0),
                posterior,
            });
        }
        Ok(PosteriorFamily { entries })
    }

    /// Weak repeatability I(I(1,Δ₂),Δ₁) = I(1,Δ₁∩Δ₂), checked over all atom
    /// pairs (sufficient for finite S by additivity). Returns the verdict and
    /// the maximal residual.
    pub fn is_weakly_repeatable(&self) -> (bool, f64) {
        let n = self.outcomes.len();
        let mut worst: f64 = 0.0;
        for s in 0..n {
            for t in 0..n {
                let lhs = self.dual_atom(s, &self.atom_effect(t));
                let rhs = if s == t {
                    self.atom_effect(s)
                } else {
                    CMat::zeros(lhs.nrows(), lhs.ncols())
                };
                worst = worst.max(op_norm(&(lhs - rhs)));
            }
        }
        (worst < tol::IDENTITY_CHECK, worst)
    }

    /// Repeatability I(Δ₁)I(Δ₂) = I(Δ₁∩Δ₂) as predual maps, checked on a
    /// spanning set via the transfer-matrix representation. Evaluated through
    /// the ambient Kraus realization; on the full matrix algebra this is the
    /// predual identity itself.
    pub fn is_repeatable(&self) -> (bool, f64) {
        let n = self.outcomes.len();
        let transfers: Vec<CMat> = (0..n).map(|s| self.predual_transfer(s)).collect();
        let mut worst: f64 = 0.0;
        for s in 0..n {
            for t in 0..n {
                let lhs = &transfers[s] * &transfers[t];
                let rhs = if s == t {
                    transfers[s].clone()
                } else {
                    CMat::zeros(lhs.nrows(), lhs.ncols())
                };
                worst = worst.max(fro_norm(&(lhs - rhs)));
            }
        }
        (worst < tol::IDENTITY_CHECK, worst)
    }

    /// Atoms s whose map T(s) is nonzero; for finite S the decomposition
    /// I(Δ) = Σ_{s∈Δ} T(s) always holds, so every finite instrument is
    /// discrete with this support.
    pub fn discrete_support(&self) -> Vec<&str> {
        self.outcomes
            .labels()
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                self.kraus[*idx]
                    .iter()
                    .map(CMat::norm_squared)
                    .sum::<f64>()
                    > tol::CHOI_FLOOR
            })
            .map(|(_, l)| l.as_str())
            .collect()
    }
}

/// Joint distribution Pr(t, s) = tr(J'({t}) J({s}) ρ) of two successive
/// measurements, `first` applied first.
pub fn joint_distribution(
    second: &CPInstrument,
    first: &CPInstrument,
    rho: &NormalState,
) -> Result<JointDistribution> {
    if !second.algebra.same_presentation(&first.algebra) {
        return Err(ForgeError::AlgebraMismatch);
    }
    let mut prob = Vec::with_capacity(second.outcomes.len());
    for t in 0..second.outcomes.len() {
        let mut row = Vec::with_capacity(first.outcomes.len());
        for s in 0..first.outcomes.len() {
            let after_first = first.predual_atom(s, rho.density());
            let after_second = second.predual_atom(t, &after_first);
            row.push(after_second.trace().re);
        }
        prob.push(row);
    }
    Ok(JointDistribution {
        second_labels: second.outcomes.labels().to_vec(),
        first_labels: first.outcomes.labels().to_vec(),
        prob,
    })
}

/// Maximal operator-norm distance between the dual maps of two instruments,
/// evaluated over the algebra basis and all atoms. Kraus gauge does not
/// matter: only the maps are compared.
pub fn dual_map_distance(a: &CPInstrument, b: &CPInstrument) -> Result<f64> {
    if !a.algebra.same_presentation(&b.algebra) {
        return Err(ForgeError::AlgebraMismatch);
    }
    if a.outcomes != b.outcomes {
        return Err(ForgeError::OutcomeMismatch);
    }
    let basis = a.algebra.basis_elements();
    let mut worst: f64 = 0.0;
    for s in 0..a.outcomes.len() {
        for e in &basis {
            let x = a.algebra.embed(e);
            worst = worst.max(op_norm(&(a.dual_atom(s, &x) - b.dual_atom(s, &x))));
        }
    }
    Ok(worst)
}

/// Statistical equality of instruments: identical dual maps on the algebra.
pub fn instruments_equal(a: &CPInstrument, b: &CPInstrument, tolerance: f64) -> Result<bool> {
    Ok(dual_map_distance(a, b)? < tolerance)
}
