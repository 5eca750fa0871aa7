//! JSON spec formats for algebras, instruments, states, measuring processes
//! and lattice nets.
//!
//! Matrices are flat row-major lists of `[re, im]` pairs; dimensions are
//! inferred from context (see docs/formats.md at the repository root).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::FiniteVonNeumannAlgebra;
use crate::dilation::MeasuringProcess;
use crate::error::ForgeError;
use crate::instrument::{CPInstrument, OutcomeSpace};
use crate::localnet::LocalNet;
use crate::matrix::{c, CMat};
use crate::state::NormalState;

/// Errors at the file/format boundary, kept separate from the numerical
/// validation errors.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("malformed spec {path}: {message}")]
    Json { path: String, message: String },

    #[error("invalid spec: {0}")]
    Invalid(String),

    #[error(transparent)]
    Forge(#[from] ForgeError),
}

pub type SpecResult<T> = std::result::Result<T, SpecError>;

fn matrix_to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for cc in 0..cols {
            let z = m[(r, cc)];
            out.push([z.re, z.im]);
        }
    }
    out
}

fn matrix_from_pairs(data: &[[f64; 2]], rows: usize, cols: usize) -> SpecResult<CMat> {
    if data.len() != rows * cols {
        return Err(SpecError::Invalid(format!(
            "matrix has {} entries, expected {rows}×{cols} = {}",
            data.len(),
            rows * cols
        )));
    }
    let m = CMat::from_fn(rows, cols, |r, cc| {
        let [re, im] = data[r * cols + cc];
        c(re, im)
    });
    if !crate::matrix::all_finite(&m) {
        return Err(SpecError::Invalid("matrix has non-finite entries".into()));
    }
    Ok(m)
}

fn square_dim(len: usize) -> SpecResult<usize> {
    let n = (len as f64).sqrt().round() as usize;
    if n * n != len {
        return Err(SpecError::Invalid(format!(
            "{len} entries do not form a square matrix"
        )));
    }
    Ok(n)
}

/// {"blocks":[[n,m],...],"basis_change":[[re,im],...]} (row-major, optional).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub blocks: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_change: Option<Vec<[f64; 2]>>,
}

impl AlgebraSpec {
    pub fn to_algebra(&self) -> SpecResult<FiniteVonNeumannAlgebra> {
        let blocks: Vec<(usize, usize)> = self.blocks.iter().map(|&[n, m]| (n, m)).collect();
        let dim: usize = blocks.iter().map(|&(n, m)| n * m).sum();
        let basis_change = self
            .basis_change
            .as_ref()
            .map(|data| matrix_from_pairs(data, dim, dim))
            .transpose()?;
        Ok(FiniteVonNeumannAlgebra::new(&blocks, basis_change)?)
    }

    pub fn from_algebra(algebra: &FiniteVonNeumannAlgebra) -> Self {
        let identity_change = algebra
            .basis_change()
            .eq(&crate::matrix::identity(algebra.ambient_dim()));
        Self {
            blocks: algebra.blocks().iter().map(|&(n, m)| [n, m]).collect(),
            basis_change: if identity_change {
                None
            } else {
                Some(matrix_to_pairs(algebra.basis_change()))
            },
        }
    }
}

/// Inline algebra spec or a path to one, relative to the referring file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlgebraRef {
    Inline(AlgebraSpec),
    Path(String),
}

impl AlgebraRef {
    pub fn resolve(&self, base_dir: &Path) -> SpecResult<FiniteVonNeumannAlgebra> {
        match self {
            AlgebraRef::Inline(spec) => spec.to_algebra(),
            AlgebraRef::Path(p) => {
                let full = base_dir.join(p);
                let spec: AlgebraSpec = read_json(&full)?;
                spec.to_algebra()
            }
        }
    }
}

/// {"algebra": <spec or path>, "outcomes":[labels], "kraus":{label:[matrices]}}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstrumentSpec {
    pub algebra: AlgebraRef,
    pub outcomes: Vec<String>,
    pub kraus: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

impl InstrumentSpec {
    /// Builds without the physics checks; dimension errors still surface.
    pub fn build_unvalidated(&self, base_dir: &Path) -> SpecResult<CPInstrument> {
        let algebra = self.algebra.resolve(base_dir)?;
        let d = algebra.ambient_dim();
        let outcomes = OutcomeSpace::new(self.outcomes.clone()).map_err(SpecError::Forge)?;
        for label in self.kraus.keys() {
            if !self.outcomes.iter().any(|l| l == label) {
                return Err(SpecError::Invalid(format!(
                    "kraus entry {label:?} is not a declared outcome"
                )));
            }
        }
        let mut kraus = Vec::with_capacity(self.outcomes.len());
        for label in &self.outcomes {
            let sets = self.kraus.get(label).cloned().unwrap_or_default();
            let mats = sets
                .iter()
                .map(|data| matrix_from_pairs(data, d, d))
                .collect::<SpecResult<Vec<_>>>()?;
            kraus.push(mats);
        }
        Ok(CPInstrument::unvalidated(algebra, outcomes, kraus)?)
    }

    /// Builds and validates.
    pub fn build(&self, base_dir: &Path) -> SpecResult<CPInstrument> {
        let inst = self.build_unvalidated(base_dir)?;
        Ok(CPInstrument::new(
            inst.algebra().clone(),
            inst.outcomes().clone(),
            inst.kraus_sets().to_vec(),
        )?)
    }

    pub fn from_instrument(instrument: &CPInstrument) -> Self {
        let mut kraus = BTreeMap::new();
        for (idx, label) in instrument.outcomes().labels().iter().enumerate() {
            kraus.insert(
                label.clone(),
                instrument.kraus_sets()[idx]
                    .iter()
                    .map(matrix_to_pairs)
                    .collect(),
            );
        }
        Self {
            algebra: AlgebraRef::Inline(AlgebraSpec::from_algebra(instrument.algebra())),
            outcomes: instrument.outcomes().labels().to_vec(),
            kraus,
        }
    }
}

/// {"density": [[re,im],...]} row-major.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateSpec {
    pub density: Vec<[f64; 2]>,
}

impl StateSpec {
    pub fn to_state(&self) -> SpecResult<NormalState> {
        let d = square_dim(self.density.len())?;
        let m = matrix_from_pairs(&self.density, d, d)?;
        NormalState::new(m).map_err(SpecError::Forge)
    }

    pub fn from_state(state: &NormalState) -> Self {
        Self {
            density: matrix_to_pairs(state.density()),
        }
    }
}

/// {"ancilla_dim":k,"sigma":matrix,"U":matrix,"meter":{label:projection}}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub ancilla_dim: usize,
    pub sigma: Vec<[f64; 2]>,
    #[serde(rename = "U")]
    pub unitary: Vec<[f64; 2]>,
    pub meter: BTreeMap<String, Vec<[f64; 2]>>,
}

impl ProcessSpec {
    pub fn to_process(&self) -> SpecResult<MeasuringProcess> {
        let k = self.ancilla_dim;
        if k == 0 {
            return Err(SpecError::Invalid("ancilla_dim must be positive".into()));
        }
        let sigma = matrix_from_pairs(&self.sigma, k, k)?;
        let n = square_dim(self.unitary.len())?;
        if n % k != 0 {
            return Err(SpecError::Invalid(format!(
                "U has dimension {n}, not divisible by ancilla_dim {k}"
            )));
        }
        let dim_h = n / k;
        let unitary = matrix_from_pairs(&self.unitary, n, n)?;
        let mut meter = Vec::new();
        for (label, data) in &self.meter {
            meter.push((label.clone(), matrix_from_pairs(data, k, k)?));
        }
        let sigma = NormalState::new(sigma).map_err(SpecError::Forge)?;
        Ok(MeasuringProcess::new(dim_h, sigma, unitary, meter)?)
    }

    pub fn from_process(process: &MeasuringProcess) -> Self {
        let mut meter = BTreeMap::new();
        for (label, p) in process.meter() {
            meter.insert(label.clone(), matrix_to_pairs(p));
        }
        Self {
            ancilla_dim: process.ancilla_dim(),
            sigma: matrix_to_pairs(process.sigma().density()),
            unitary: matrix_to_pairs(process.unitary()),
            meter,
        }
    }
}

/// {"sites":L,"local_dim":d}.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetSpec {
    pub sites: usize,
    pub local_dim: usize,
}

impl NetSpec {
    pub fn to_net(&self) -> SpecResult<LocalNet> {
        Ok(LocalNet::new(self.sites, self.local_dim)?)
    }
}

/// Reads and deserializes a JSON file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> SpecResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| SpecError::Json {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Serializes to pretty JSON with a trailing newline; output bytes depend
/// only on the value.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serialization cannot fail");
    bytes.push(b'\n');
    bytes
}

/// Writes pretty JSON to a file.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> SpecResult<()> {
    std::fs::write(path, to_json_bytes(value)).map_err(|e| SpecError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
