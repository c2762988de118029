//! Three-qubit Pauli strings and the 63-component expectation-value feature map.
//!
//! A string σ_i⊗σ_j⊗σ_k is addressed by the flat index `n = 16i + 4j + k`
//! with `σ_0..σ_3 = I, X, Y, Z`. The all-identity string (n = 0) is excluded,
//! leaving n ∈ 1..=63. Feature vectors store Tr(ρ·P_n) at position `n - 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::matrix::{CMatrix, C64, I, ONE, ZERO};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 63;

const LETTERS: [char; 4] = ['I', 'X', 'Y', 'Z'];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct PauliIndex(u8);

impl PauliIndex {
    pub fn new(flat: usize) -> Result<Self> {
        if (1..=N_FEATURES).contains(&flat) {
            Ok(Self(flat as u8))
        } else {
            Err(Error::InvalidArgument(format!(
                "Pauli flat index {flat} outside 1..=63"
            )))
        }
    }

    pub fn from_triple(i: usize, j: usize, k: usize) -> Result<Self> {
        if i > 3 || j > 3 || k > 3 {
            return Err(Error::InvalidArgument(format!(
                "Pauli triple ({i},{j},{k}) has an entry outside 0..=3"
            )));
        }
        Self::new(16 * i + 4 * j + k)
    }

    pub fn flat(self) -> usize {
        self.0 as usize
    }

    /// Position in a feature vector.
    pub fn position(self) -> usize {
        self.flat() - 1
    }

    pub fn from_position(pos: usize) -> Result<Self> {
        Self::new(pos + 1)
    }

    pub fn triple(self) -> (usize, usize, usize) {
        let n = self.flat();
        (n / 16, (n / 4) % 4, n % 4)
    }

    pub fn name(self) -> String {
        let (i, j, k) = self.triple();
        [LETTERS[i], LETTERS[j], LETTERS[k]].iter().collect()
    }

    pub fn all() -> impl Iterator<Item = PauliIndex> {
        (1..=N_FEATURES).map(|n| PauliIndex(n as u8))
    }

    /// Number of non-identity factors.
    pub fn weight(self) -> usize {
        let (i, j, k) = self.triple();
        [i, j, k].iter().filter(|&&x| x != 0).count()
    }
}

impl TryFrom<u8> for PauliIndex {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Self::new(v as usize)
    }
}

impl From<PauliIndex> for u8 {
    fn from(p: PauliIndex) -> u8 {
        p.0
    }
}

impl fmt::Display for PauliIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PauliIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits: Vec<usize> = s
            .chars()
            .map(|ch| LETTERS.iter().position(|&l| l == ch.to_ascii_uppercase()))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::InvalidArgument(format!("bad Pauli name {s:?}")))?;
        if digits.len() != 3 {
            return Err(Error::InvalidArgument(format!("bad Pauli name {s:?}")));
        }
        Self::from_triple(digits[0], digits[1], digits[2])
    }
}

/// Canonical column names `IIX, IIY, ..., ZZZ`.
pub fn feature_names() -> Vec<String> {
    PauliIndex::all().map(PauliIndex::name).collect()
}

/// A Pauli string is a phased permutation: row `r` of P has its single
/// non-zero entry in column `r ^ flip`, with value `phase[r]`.
#[derive(Clone, Debug)]
struct MonomialPauli {
    flip: usize,
    phase: [C64; 8],
}

fn single_qubit_entry(op: usize, out_bit: usize, in_bit: usize) -> C64 {
    match (op, out_bit, in_bit) {
        (0, a, b) | (3, a, b) if a != b => ZERO,
        (0, _, _) => ONE,
        (3, 0, _) => ONE,
        (3, _, _) => -ONE,
        (1, a, b) if a != b => ONE,
        (2, 0, 1) => -I,
        (2, 1, 0) => I,
        _ => ZERO,
    }
}

fn pauli_table() -> &'static [MonomialPauli; 64] {
    static TABLE: OnceLock<[MonomialPauli; 64]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|n| {
            let ops = [n / 16, (n / 4) % 4, n % 4];
            let mut flip = 0;
            for (q, &op) in ops.iter().enumerate() {
                if op == 1 || op == 2 {
                    flip |= 1 << (2 - q);
                }
            }
            let phase = std::array::from_fn(|r| {
                let c = r ^ flip;
                ops.iter().enumerate().fold(ONE, |acc, (q, &op)| {
                    let shift = 2 - q;
                    acc * single_qubit_entry(op, (r >> shift) & 1, (c >> shift) & 1)
                })
            });
            MonomialPauli { flip, phase }
        })
    })
}

/// Dense 8×8 matrix of a Pauli string.
pub fn pauli_matrix(p: PauliIndex) -> CMatrix {
    let m = &pauli_table()[p.flat()];
    let mut out = CMatrix::zeros(8, 8);
    for r in 0..8 {
        out[(r, r ^ m.flip)] = m.phase[r];
    }
    out
}

/// Pauli-basis expectation values of a three-qubit state, indexed by
/// [`PauliIndex::position`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PauliFeatures(Vec<f64>);

impl PauliFeatures {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != N_FEATURES {
            return Err(Error::Dimension(format!(
                "feature vector needs {N_FEATURES} entries, got {}",
                values.len()
            )));
        }
        Ok(Self(values))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; N_FEATURES])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn get(&self, p: PauliIndex) -> f64 {
        self.0[p.position()]
    }

    pub fn set(&mut self, p: PauliIndex, v: f64) {
        self.0[p.position()] = v;
    }

    /// Values at the given features, in the given order.
    pub fn project(&self, active: &[PauliIndex]) -> Vec<f64> {
        active.iter().map(|p| self.get(*p)).collect()
    }
}

/// `t_n = Tr(ρ·P_n)` for all 63 non-identity strings.
pub fn features_of(rho: &DensityMatrix) -> Result<PauliFeatures> {
    features_of_matrix(rho.matrix())
}

pub(crate) fn features_of_matrix(m: &CMatrix) -> Result<PauliFeatures> {
    if m.rows() != 8 || m.cols() != 8 {
        return Err(Error::Dimension(format!(
            "feature map needs an 8x8 state, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let table = pauli_table();
    let values = (1..64)
        .map(|n| {
            let p = &table[n];
            // Tr(ρP) = Σ_r ρ[r][c] P[c][r], c = r ^ flip
            let t: C64 = (0..8)
                .map(|r| {
                    let c = r ^ p.flip;
                    m[(r, c)] * p.phase[c]
                })
                .sum();
            debug_assert!(t.im.abs() < 1e-10, "imaginary trace residue {}", t.im);
            t.re
        })
        .collect();
    Ok(PauliFeatures(values))
}

/// `ρ = (I + Σ_n t_n P_n) / 8`. Hermitian and unit-trace for any input; not
/// necessarily positive.
pub fn state_of_features(f: &PauliFeatures) -> CMatrix {
    let table = pauli_table();
    let mut m = CMatrix::identity(8);
    for (pos, &t) in f.values().iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let p = &table[pos + 1];
        for r in 0..8 {
            m[(r, r ^ p.flip)] += p.phase[r] * t;
        }
    }
    m.scale(0.125)
}
