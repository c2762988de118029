//! Validated density matrices and the qubit-level operations on them.
//!
//! Qubit A is the leftmost tensor factor, i.e. the most significant bit of a
//! computational-basis index.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::eigen::{hermitian_eigenvalues, min_eigenvalue};
use super::matrix::{basis_ket, CMatrix, C64, ZERO};
use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = -1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
    C,
}

impl Subsystem {
    pub const ALL: [Subsystem; 3] = [Subsystem::A, Subsystem::B, Subsystem::C];

    pub fn qubit(self) -> usize {
        match self {
            Subsystem::A => 0,
            Subsystem::B => 1,
            Subsystem::C => 2,
        }
    }

    /// Cut label with this subsystem on the left, e.g. `A|BC`.
    pub fn cut_label(self) -> &'static str {
        match self {
            Subsystem::A => "A|BC",
            Subsystem::B => "B|AC",
            Subsystem::C => "C|AB",
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Subsystem::A => "A",
            Subsystem::B => "B",
            Subsystem::C => "C",
        };
        f.write_str(s)
    }
}

fn qubit_count(dim: usize) -> Option<usize> {
    match dim {
        2 => Some(1),
        4 => Some(2),
        8 => Some(3),
        _ => None,
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix of dimension 2, 4 or 8.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CMatrix", into = "CMatrix")]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::check(&m)?;
        Ok(Self(m))
    }

    /// Skips validation. Callers are responsible for the invariants; the
    /// generators in this crate only mix, tensor and unitarily rotate states.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(m.is_square() && qubit_count(m.rows()).is_some());
        Self(m)
    }

    /// Validates the invariants of `m` and reports the first violation.
    pub fn check(m: &CMatrix) -> Result<()> {
        if !m.is_square() || qubit_count(m.rows()).is_none() {
            return Err(Error::Dimension(format!(
                "density matrix must be 2x2, 4x4 or 8x8, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let herm = m.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = m.trace();
        if (tr - C64::new(1.0, 0.0)).norm() >= TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let lo = min_eigenvalue(m)?;
        if lo < PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {lo:e}"
            )));
        }
        Ok(())
    }

    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::new(CMatrix::projector(&v))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::new_unchecked(CMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn n_qubits(&self) -> usize {
        qubit_count(self.dim()).expect("validated dimension")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0).expect("density matrices are Hermitian")
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self::new_unchecked(self.0.kron(&other.0))
    }

    /// `U ρ U†`, re-Hermitized against roundoff.
    pub fn rotate(&self, u: &CMatrix) -> DensityMatrix {
        Self::new_unchecked(self.0.conjugate_by(u).hermitian_part())
    }

    /// Convex combination `Σ w_i ρ_i`. Weights must be non-negative and sum to 1.
    pub fn mix(parts: &[(f64, &DensityMatrix)]) -> Result<DensityMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        let mut acc = CMatrix::zeros(dim, dim);
        for (w, rho) in parts {
            if rho.dim() != dim {
                return Err(Error::Dimension("mixture of unequal dimensions".into()));
            }
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative weight {w}")));
            }
            total += w;
            acc.add_scaled(rho.matrix(), *w);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(Self::new_unchecked(acc.hermitian_part()))
    }

    /// Fidelity with a pure state, ⟨ψ|ρ|ψ⟩.
    pub fn overlap(&self, ket: &[C64]) -> f64 {
        let d = self.dim();
        assert_eq!(ket.len(), d);
        let mut acc = ZERO;
        for r in 0..d {
            for c in 0..d {
                acc += ket[r].conj() * self.0[(r, c)] * ket[c];
            }
        }
        acc.re
    }
}

impl TryFrom<CMatrix> for DensityMatrix {
    type Error = Error;

    fn try_from(m: CMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<DensityMatrix> for CMatrix {
    fn from(rho: DensityMatrix) -> CMatrix {
        rho.0
    }
}

/// (|000⟩ + |111⟩)/√2
pub fn ghz_ket() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![ZERO; 8];
    v[0] = C64::new(s, 0.0);
    v[7] = C64::new(s, 0.0);
    v
}

/// (|001⟩ + |010⟩ + |100⟩)/√3
pub fn w_ket() -> Vec<C64> {
    let s = 1.0 / 3f64.sqrt();
    let mut v = vec![ZERO; 8];
    for i in [1, 2, 4] {
        v[i] = C64::new(s, 0.0);
    }
    v
}

/// (|00⟩ + |11⟩)/√2
pub fn bell_phi_plus() -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![ZERO; 4];
    v[0] = C64::new(s, 0.0);
    v[3] = C64::new(s, 0.0);
    v
}

pub fn ghz_state() -> DensityMatrix {
    DensityMatrix::new_unchecked(CMatrix::projector(&ghz_ket()))
}

pub fn w_state() -> DensityMatrix {
    DensityMatrix::new_unchecked(CMatrix::projector(&w_ket()))
}

pub fn basis_state(dim: usize, index: usize) -> DensityMatrix {
    DensityMatrix::new_unchecked(CMatrix::projector(&basis_ket(dim, index)))
}

/// Traces out one qubit of a three-qubit state; the two remaining qubits keep
/// their relative order.
pub fn partial_trace(rho: &DensityMatrix, subsystem: Subsystem) -> Result<DensityMatrix> {
    if rho.dim() != 8 {
        return Err(Error::Dimension(format!(
            "partial trace expects a three-qubit state, got dim {}",
            rho.dim()
        )));
    }
    Ok(DensityMatrix::new_unchecked(trace_out_qubit(
        rho.matrix(),
        3,
        subsystem.qubit(),
    )))
}

fn trace_out_qubit(m: &CMatrix, n_qubits: usize, qubit: usize) -> CMatrix {
    let shift = n_qubits - 1 - qubit;
    let low_mask = (1 << shift) - 1;
    // reduced index → full index with bit `shift` set to `b`
    let expand = |idx: usize, b: usize| ((idx & !low_mask) << 1) | (b << shift) | (idx & low_mask);
    let d = 1 << (n_qubits - 1);
    CMatrix::from_fn(d, d, |r, c| {
        (0..2).map(|b| m[(expand(r, b), expand(c, b))]).sum()
    })
}

/// Transposes the named qubit. Accepts 2-qubit (A or B) and 3-qubit states.
/// The result is Hermitian with unit trace but may be indefinite.
pub fn partial_transpose(m: &CMatrix, subsystem: Subsystem) -> Result<CMatrix> {
    let n_qubits = match (m.rows(), m.cols()) {
        (4, 4) => 2,
        (8, 8) => 3,
        (r, c) => {
            return Err(Error::Dimension(format!(
                "partial transpose expects 4x4 or 8x8, got {r}x{c}"
            )))
        }
    };
    let q = subsystem.qubit();
    if q >= n_qubits {
        return Err(Error::InvalidArgument(format!(
            "subsystem {subsystem} does not exist in a {n_qubits}-qubit state"
        )));
    }
    let bit = 1 << (n_qubits - 1 - q);
    Ok(CMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        let swap = (r ^ c) & bit;
        m[(r ^ swap, c ^ swap)]
    }))
}

/// Minimum eigenvalue of the partial transpose on the given qubit.
pub fn min_pt_eigenvalue(rho: &DensityMatrix, subsystem: Subsystem) -> Result<f64> {
    min_eigenvalue(&partial_transpose(rho.matrix(), subsystem)?)
}

/// Permutation unitary reordering qubits: output qubit `k` takes input qubit
/// `order[k]`.
pub fn qubit_permutation(order: [usize; 3]) -> CMatrix {
    let mut u = CMatrix::zeros(8, 8);
    for src in 0..8 {
        let bit = |q: usize| (src >> (2 - q)) & 1;
        let dst = (bit(order[0]) << 2) | (bit(order[1]) << 1) | bit(order[2]);
        u[(dst, src)] = C64::new(1.0, 0.0);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::matrix::ONE;

    fn product3(a: &DensityMatrix, b: &DensityMatrix, c: &DensityMatrix) -> DensityMatrix {
        a.tensor(b).tensor(c)
    }

    fn qubit(theta: f64, phi: f64, r: f64) -> DensityMatrix {
        // Bloch vector of length r
        let (x, y, z) = (
            r * theta.sin() * phi.cos(),
            r * theta.sin() * phi.sin(),
            r * theta.cos(),
        );
        DensityMatrix::new(CMatrix::from_rows(&[
            vec![C64::new((1.0 + z) / 2.0, 0.0), C64::new(x / 2.0, -y / 2.0)],
            vec![C64::new(x / 2.0, y / 2.0), C64::new((1.0 - z) / 2.0, 0.0)],
        ]))
        .unwrap()
    }

    #[test]
    fn validation_rejects_bad_matrices() {
        assert!(DensityMatrix::new(CMatrix::identity(8)).is_err());
        assert!(DensityMatrix::new(CMatrix::identity(3).scale(1.0 / 3.0)).is_err());
        assert!(DensityMatrix::new(CMatrix::diag(&[1.5, -0.5])).is_err());
        let mut m = CMatrix::identity(2).scale(0.5);
        m[(0, 1)] = ONE * 0.1;
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn trace_a_of_basis_state() {
        let reduced = partial_trace(&basis_state(8, 0), Subsystem::A).unwrap();
        assert!(reduced.matrix().max_abs_diff(basis_state(4, 0).matrix()) < 1e-15);
    }

    #[test]
    fn trace_c_of_ghz() {
        let reduced = partial_trace(&ghz_state(), Subsystem::C).unwrap();
        let want = CMatrix::diag(&[0.5, 0.0, 0.0, 0.5]);
        assert!(reduced.matrix().max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn trace_b_of_product() {
        let (a, b, c) = (qubit(0.3, 1.1, 0.9), qubit(2.0, -0.4, 0.5), qubit(1.2, 2.2, 1.0));
        let rho = product3(&a, &b, &c);
        let reduced = partial_trace(&rho, Subsystem::B).unwrap();
        assert!(reduced.matrix().max_abs_diff(a.tensor(&c).matrix()) < 1e-15);
        for s in Subsystem::ALL {
            let r = partial_trace(&rho, s).unwrap();
            assert!((r.matrix().trace().re - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn partial_trace_rejects_two_qubits() {
        assert!(partial_trace(&DensityMatrix::maximally_mixed(4), Subsystem::A).is_err());
    }

    #[test]
    fn product_state_stays_ppt() {
        let rho = qubit(0.7, 0.2, 1.0).tensor(&qubit(1.9, 2.5, 1.0));
        for s in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(rho.matrix(), s).unwrap();
            assert!(min_eigenvalue(&pt).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let bell = DensityMatrix::pure(&bell_phi_plus()).unwrap();
        let pt = partial_transpose(bell.matrix(), Subsystem::B).unwrap();
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
        assert!((pt.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn embedded_bell_keeps_negative_eigenvalue() {
        let bell = DensityMatrix::pure(&bell_phi_plus()).unwrap();
        let rho = bell.tensor(&basis_state(2, 0));
        assert!((min_pt_eigenvalue(&rho, Subsystem::A).unwrap() + 0.5).abs() < 1e-12);
        assert!((min_pt_eigenvalue(&rho, Subsystem::B).unwrap() + 0.5).abs() < 1e-12);
        assert!(min_pt_eigenvalue(&rho, Subsystem::C).unwrap() >= -1e-12);
    }

    #[test]
    fn partial_transpose_rejects_bad_partition() {
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(partial_transpose(rho.matrix(), Subsystem::C).is_err());
        assert!(partial_transpose(&CMatrix::identity(2), Subsystem::A).is_err());
    }

    #[test]
    fn qubit_permutation_moves_factors() {
        let (a, b, c) = (qubit(0.3, 1.1, 0.9), qubit(2.0, -0.4, 0.5), qubit(1.2, 2.2, 1.0));
        // (B, A, C) ordering from an A, B, C product
        let u = qubit_permutation([1, 0, 2]);
        let moved = product3(&a, &b, &c).rotate(&u);
        assert!(moved.matrix().max_abs_diff(product3(&b, &a, &c).matrix()) < 1e-15);
    }

    #[test]
    fn mix_checks_weights() {
        let a = basis_state(2, 0);
        let b = basis_state(2, 1);
        assert!(DensityMatrix::mix(&[(0.5, &a), (0.4, &b)]).is_err());
        assert!(DensityMatrix::mix(&[(1.5, &a), (-0.5, &b)]).is_err());
        let m = DensityMatrix::mix(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!((m.purity() - 0.5).abs() < 1e-15);
    }
}
