//! Single-qubit Kraus channels applied independently to each qubit, and
//! robustness sweeps of a trained cascade.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{BinaryClassifier, CascadeMetrics, CascadeModel};
use crate::error::{Error, Result};
use crate::qcore::matrix::{pauli_x, pauli_y, pauli_z};
use crate::qcore::{features_of, state_of_features, CMatrix, DensityMatrix};
use crate::sampling::{DatasetKind, LabeledDataset, Row};

pub const DEFAULT_STRENGTHS: [f64; 8] = [0.01, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NoiseKind {
    AmplitudeDamping,
    PhaseDamping,
    /// `ρ → (1−p)ρ + (p/3)(XρX + YρY + ZρZ)`; fully mixing at p = 3/4.
    Depolarizing,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [Self::AmplitudeDamping, Self::PhaseDamping, Self::Depolarizing];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AmplitudeDamping => "AMPLITUDE_DAMPING",
            Self::PhaseDamping => "PHASE_DAMPING",
            Self::Depolarizing => "DEPOLARIZING",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown noise channel {s:?}")))
    }
}

pub fn kraus_set(kind: NoiseKind, strength: f64) -> Result<Vec<CMatrix>> {
    if !(0.0..=1.0).contains(&strength) {
        return Err(Error::InvalidArgument(format!("noise strength {strength} outside [0, 1]")));
    }
    let g = strength;
    let real = |rows: [[f64; 2]; 2]| CMatrix::from_real_rows(&[rows[0].to_vec(), rows[1].to_vec()]);
    Ok(match kind {
        NoiseKind::AmplitudeDamping => vec![
            CMatrix::diag(&[1.0, (1.0 - g).sqrt()]),
            real([[0.0, g.sqrt()], [0.0, 0.0]]),
        ],
        NoiseKind::PhaseDamping => vec![CMatrix::diag(&[1.0, (1.0 - g).sqrt()]), CMatrix::diag(&[0.0, g.sqrt()])],
        NoiseKind::Depolarizing => {
            let s = (g / 3.0).sqrt();
            vec![
                CMatrix::identity(2).scale((1.0 - g).sqrt()),
                pauli_x().scale(s),
                pauli_y().scale(s),
                pauli_z().scale(s),
            ]
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NoiseChannel {
    pub kind: NoiseKind,
    pub strength: f64,
    kraus: Vec<CMatrix>,
}

impl NoiseChannel {
    pub fn new(kind: NoiseKind, strength: f64) -> Result<Self> {
        Ok(Self {
            kind,
            strength,
            kraus: kraus_set(kind, strength)?,
        })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ K†K − I`, largest entry modulus.
    pub fn completeness_error(&self) -> f64 {
        let mut acc = CMatrix::zeros(2, 2);
        for k in &self.kraus {
            acc.add_scaled(&k.adjoint().matmul(k), 1.0);
        }
        acc.max_abs_diff(&CMatrix::identity(2))
    }

    /// Applies the channel to one qubit (0 = A, most significant).
    pub fn apply_to_qubit(&self, rho: &CMatrix, qubit: usize, n_qubits: usize) -> CMatrix {
        let d = rho.rows();
        let mut out = CMatrix::zeros(d, d);
        for k in &self.kraus {
            let full = CMatrix::identity(1 << qubit)
                .kron(k)
                .kron(&CMatrix::identity(1 << (n_qubits - qubit - 1)));
            out.add_scaled(&rho.conjugate_by(&full), 1.0);
        }
        out
    }
}

/// The channel on every qubit of a three-qubit state.
pub fn apply_all_qubits(rho: &DensityMatrix, channel: &NoiseChannel) -> Result<DensityMatrix> {
    let n = rho.n_qubits();
    let mut m = rho.matrix().clone();
    for q in 0..n {
        m = channel.apply_to_qubit(&m, q, n);
    }
    DensityMatrix::new(m.hermitian_part())
}

/// Copy of `ds` with every state passed through the channel; labels kept.
pub fn corrupt_dataset(ds: &LabeledDataset, channel: &NoiseChannel) -> Result<LabeledDataset> {
    let rows = ds
        .rows
        .par_iter()
        .map(|r| {
            let rho = DensityMatrix::new(state_of_features(&r.features))?;
            Ok(Row {
                features: features_of(&apply_all_qubits(&rho, channel)?)?,
                label: r.label,
                origin: r.origin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(ds.kind, rows, ds.seed)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePoint {
    pub kind: NoiseKind,
    pub strength: f64,
    pub accuracy: f64,
    pub n_states: usize,
}

/// Four-class accuracy of the cascade on corrupted copies of a clean test set.
pub fn noise_sweep<M: BinaryClassifier + Sync>(
    cascade: &CascadeModel<M>,
    clean: &LabeledDataset,
    kinds: &[NoiseKind],
    strengths: &[f64],
) -> Result<Vec<NoisePoint>> {
    if clean.kind != DatasetKind::Cascade4 {
        return Err(Error::InvalidArgument(format!(
            "noise sweeps need a CASCADE4 dataset, got {}",
            clean.kind
        )));
    }
    if kinds.is_empty() || strengths.is_empty() {
        return Err(Error::InvalidArgument("empty noise grid".into()));
    }
    let states = clean
        .rows
        .par_iter()
        .map(|r| DensityMatrix::new(state_of_features(&r.features)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(kinds.len() * strengths.len());
    for &kind in kinds {
        for &strength in strengths {
            let channel = NoiseChannel::new(kind, strength)?;
            let preds = states
                .par_iter()
                .map(|rho| Ok(cascade.classify(&features_of(&apply_all_qubits(rho, &channel)?)?).label()))
                .collect::<Result<Vec<u8>>>()?;
            let m = CascadeMetrics::from_pairs(clean.rows.iter().map(|r| r.label).zip(preds));
            out.push(NoisePoint {
                kind,
                strength,
                accuracy: m.accuracy,
                n_states: clean.len(),
            });
        }
    }
    Ok(out)
}
