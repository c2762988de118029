//! Analytic reference tools: PPT test, fidelity witnesses and the
//! out-of-distribution state families with their known classes.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::qcore::matrix::{CMatrix, C64};
use crate::qcore::state::{ghz_ket, min_pt_eigenvalue, w_ket, DensityMatrix, Subsystem};
use crate::sampling::states::{dirichlet_weights, local_unitary};
use crate::sampling::{DatasetKind, RngSeed, StreamRng};

pub const PPT_TOL: f64 = 1e-9;
pub const GME_TOL: f64 = 1e-9;

/// `(is_ppt, min eigenvalue of ρ^{T_s})`.
pub fn ppt_check(rho: &DensityMatrix, cut: Subsystem) -> Result<(bool, f64)> {
    let lo = min_pt_eigenvalue(rho, cut)?;
    Ok((lo >= -PPT_TOL, lo))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Witness {
    /// `3/4·I − |GHZ⟩⟨GHZ|`
    Ghz,
    /// `2/3·I − |W⟩⟨W|`
    W,
}

pub fn witness_value(rho: &DensityMatrix, which: Witness) -> Result<f64> {
    if rho.dim() != 8 {
        return Err(Error::Dimension(format!("witness needs dim 8, got {}", rho.dim())));
    }
    Ok(match which {
        Witness::Ghz => 0.75 - rho.overlap(&ghz_ket()),
        Witness::W => 2.0 / 3.0 - rho.overlap(&w_ket()),
    })
}

fn real_matrix(entries: [[f64; 8]; 8], scale: f64) -> CMatrix {
    CMatrix::from_fn(8, 8, |r, c| C64::new(entries[r][c] * scale, 0.0))
}

/// Horodecki 2⊗4 bound entangled state, `0 < a < 1`.
pub fn horodecki_state(a: f64) -> Result<DensityMatrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("Horodecki parameter {a} outside (0, 1)")));
    }
    let p = (1.0 + a) / 2.0;
    let q = (1.0 - a * a).sqrt() / 2.0;
    let m = [
        [a, 0., 0., 0., 0., a, 0., 0.],
        [0., a, 0., 0., 0., 0., a, 0.],
        [0., 0., a, 0., 0., 0., 0., a],
        [0., 0., 0., a, 0., 0., 0., 0.],
        [0., 0., 0., 0., p, 0., 0., q],
        [a, 0., 0., 0., 0., a, 0., 0.],
        [0., a, 0., 0., 0., 0., a, 0.],
        [0., 0., a, 0., q, 0., 0., p],
    ];
    DensityMatrix::new(real_matrix(m, 1.0 / (7.0 * a + 1.0)))
}

/// Edge state with positive parameters `a, b, c`.
pub fn edge_state(a: f64, b: f64, c: f64) -> Result<DensityMatrix> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "edge state parameters must be positive, got ({a}, {b}, {c})"
        )));
    }
    let n = 2.0 + a + 1.0 / a + b + 1.0 / b + c + 1.0 / c;
    let mut m = [[0.0; 8]; 8];
    let diag = [1.0, a, b, c, 1.0 / c, 1.0 / b, 1.0 / a, 1.0];
    for (i, d) in diag.into_iter().enumerate() {
        m[i][i] = d;
    }
    m[0][7] = 1.0;
    m[7][0] = 1.0;
    DensityMatrix::new(real_matrix(m, 1.0 / n))
}

/// The four product kets `|000⟩, |−+1⟩, |+1−⟩, |1−+⟩`.
pub fn upb_kets() -> [Vec<C64>; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let one = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let plus = [C64::new(s, 0.0), C64::new(s, 0.0)];
    let minus = [C64::new(s, 0.0), C64::new(-s, 0.0)];
    let prod = |a: [C64; 2], b: [C64; 2], c: [C64; 2]| -> Vec<C64> {
        let mut v = Vec::with_capacity(8);
        for x in a {
            for y in b {
                for z in c {
                    v.push(x * y * z);
                }
            }
        }
        v
    };
    [
        prod(zero, zero, zero),
        prod(minus, plus, one),
        prod(plus, one, minus),
        prod(one, minus, plus),
    ]
}

/// `(I − Σ|v_i⟩⟨v_i|)/4` over the UPB kets, optionally locally rotated.
pub fn upb_state<R: Rng + ?Sized>(rotation: Option<&mut R>) -> DensityMatrix {
    let mut m = CMatrix::identity(8);
    for v in upb_kets() {
        m.add_scaled(&CMatrix::projector(&v), -1.0);
    }
    let rho = DensityMatrix::new(m.scale(0.25).hermitian_part()).expect("UPB complement is a state");
    match rotation {
        Some(rng) => rho.rotate(&local_unitary(rng)),
        None => rho,
    }
}

/// GME concurrence of a three-qubit X-matrix: with diagonal `d` and
/// anti-diagonal `z_i = ρ[i][7−i]` for `i = 0..4`,
/// `2·max(0, max_i(|z_i| − Σ_{j≠i} √(d_j d_{7−j})))`.
pub fn x_state_gme_concurrence(m: &CMatrix) -> Result<f64> {
    if m.rows() != 8 || m.cols() != 8 {
        return Err(Error::Dimension("X-state must be 8x8".into()));
    }
    let w: Vec<f64> = (0..4)
        .map(|j| (m[(j, j)].re * m[(7 - j, 7 - j)].re).max(0.0).sqrt())
        .collect();
    let total: f64 = w.iter().sum();
    let best = (0..4)
        .map(|i| m[(i, 7 - i)].norm() - (total - w[i]))
        .fold(0.0, f64::max);
    Ok(2.0 * best)
}

pub fn gme_label(m: &CMatrix) -> Result<u8> {
    Ok(u8::from(x_state_gme_concurrence(m)? > GME_TOL))
}

/// Random X-state: flat Dirichlet diagonal, each anti-diagonal modulus uniform
/// on `[0, √(d_i d_{7−i})]` with a uniform phase.
pub fn random_x_state<R: Rng + ?Sized>(rng: &mut R) -> (DensityMatrix, u8) {
    let d = dirichlet_weights(8, 1.0, rng);
    let mut m = CMatrix::zeros(8, 8);
    for (i, &di) in d.iter().enumerate() {
        m[(i, i)] = C64::new(di, 0.0);
    }
    for i in 0..4 {
        let r = rng.gen::<f64>() * (d[i] * d[7 - i]).sqrt();
        let z = C64::from_polar(r, rng.gen::<f64>() * std::f64::consts::TAU);
        m[(i, 7 - i)] = z;
        m[(7 - i, i)] = z.conj();
    }
    let label = gme_label(&m).expect("8x8");
    (DensityMatrix::new_unchecked(m), label)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OodFamily {
    Horodecki,
    Edge,
    Upb,
    XState,
}

impl OodFamily {
    pub const ALL: [OodFamily; 4] = [Self::Horodecki, Self::Edge, Self::Upb, Self::XState];

    pub fn tag(self) -> &'static str {
        match self {
            Self::Horodecki => "HORODECKI",
            Self::Edge => "EDGE",
            Self::Upb => "UPB",
            Self::XState => "XSTATE",
        }
    }

    /// Known output of the model trained on `model`, where one is defined.
    /// The PPT-entangled families lie in B\S; X-states only have a GHZ target
    /// (per sample, see [`OodSample::expected`]).
    pub fn expected_label(self, model: DatasetKind) -> Option<u8> {
        match (self, model) {
            (Self::XState, _) => None,
            (_, DatasetKind::B) => Some(1),
            (_, DatasetKind::W) | (_, DatasetKind::Ghz) => Some(0),
            (_, DatasetKind::Cascade4) => Some(1),
        }
    }
}

impl fmt::Display for OodFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for OodFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown OOD family '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct OodSample {
    pub family: OodFamily,
    pub rotated: bool,
    pub params: Vec<f64>,
    pub state: DensityMatrix,
    pub gme_label: Option<u8>,
}

impl OodSample {
    pub fn expected(&self, model: DatasetKind) -> Option<u8> {
        match (self.family, model) {
            (OodFamily::XState, DatasetKind::Ghz) => self.gme_label,
            (f, m) => f.expected_label(m),
        }
    }

    /// Family tag, with a `_ROTATED` suffix for locally rotated members.
    pub fn family_label(&self) -> String {
        if self.rotated {
            format!("{}_ROTATED", self.family.tag())
        } else {
            self.family.tag().to_string()
        }
    }
}

fn log_uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// `n` members of `family`. Horodecki `a` is uniform on (0.05, 0.95); Edge
/// parameters are log-uniform on (0.1, 10). With `rotated`, each state gets
/// an independent local unitary (not allowed for X-states, which would lose
/// their shape). The unrotated UPB family is a single state repeated.
pub fn ood_samples(family: OodFamily, n: usize, rotated: bool, seed: RngSeed) -> Result<Vec<OodSample>> {
    if rotated && family == OodFamily::XState {
        return Err(Error::InvalidArgument("X-states are not rotated".into()));
    }
    let tag = format!("ood/{}/{}", family.tag(), u8::from(rotated));
    (0..n)
        .map(|i| {
            let mut rng: StreamRng = seed.derive(&tag, i as u64).rng();
            let (state, params, gme) = match family {
                OodFamily::Horodecki => {
                    let a = 0.05 + 0.9 * rng.gen::<f64>();
                    (horodecki_state(a)?, vec![a], None)
                }
                OodFamily::Edge => {
                    let p: Vec<f64> = (0..3).map(|_| log_uniform(0.1, 10.0, &mut rng)).collect();
                    (edge_state(p[0], p[1], p[2])?, p, None)
                }
                OodFamily::Upb => (upb_state::<StreamRng>(None), vec![], None),
                OodFamily::XState => {
                    let (rho, label) = random_x_state(&mut rng);
                    (rho, vec![], Some(label))
                }
            };
            let state = if rotated {
                state.rotate(&local_unitary(&mut rng))
            } else {
                state
            };
            Ok(OodSample {
                family,
                rotated,
                params,
                state,
                gme_label: gme,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::state::{basis_state, bell_phi_plus, ghz_state, w_state};
    use crate::sampling::states::{separable_state, GeneratorConfig};

    fn rng(i: u64) -> StreamRng {
        RngSeed::new(99, i).rng()
    }

    #[test]
    fn witness_examples() {
        let g = witness_value(&ghz_state(), Witness::Ghz).unwrap();
        assert!((g + 0.25).abs() < 1e-12);
        let w = witness_value(&w_state(), Witness::W).unwrap();
        assert!((w + 1.0 / 3.0).abs() < 1e-12);
        let m = witness_value(&DensityMatrix::maximally_mixed(8), Witness::Ghz).unwrap();
        assert!((m - 0.625).abs() < 1e-12);
    }

    #[test]
    fn bell_embedding_fails_ppt() {
        let bell = DensityMatrix::pure(&bell_phi_plus()).unwrap();
        // |Φ+⟩ on AB, |0⟩ on C
        let rho = bell.tensor(&basis_state(2, 0));
        let (ok, lo) = ppt_check(&rho, Subsystem::A).unwrap();
        assert!(!ok);
        assert!((lo + 0.5).abs() < 1e-9);
        assert!(ppt_check(&rho, Subsystem::C).unwrap().0);
    }

    #[test]
    fn separable_outputs_are_ppt() {
        let cfg = GeneratorConfig::default();
        let mut r = rng(1);
        for _ in 0..300 {
            let rho = separable_state(&cfg, &mut r);
            for s in Subsystem::ALL {
                assert!(ppt_check(&rho, s).unwrap().0);
            }
        }
    }

    #[test]
    fn horodecki_layout() {
        let rho = horodecki_state(0.5).unwrap();
        let m = rho.matrix();
        assert!((m.trace().re - 1.0).abs() < 1e-12);
        let expect = (1.0f64 - 0.25).sqrt() / 2.0 / 4.5;
        assert!((m[(4, 7)].re - expect).abs() < 1e-15);
        assert!(ppt_check(&rho, Subsystem::A).unwrap().0);
        for a in [0.05, 0.3, 0.77, 0.95] {
            let rho = horodecki_state(a).unwrap();
            assert!((rho.matrix()[(4, 7)].re - (1.0 - a * a).sqrt() / 2.0 / (7.0 * a + 1.0)).abs() < 1e-15);
        }
        assert!(horodecki_state(0.0).is_err());
        assert!(horodecki_state(1.0).is_err());
    }

    #[test]
    fn edge_examples() {
        let rho = edge_state(1.0, 1.0, 1.0).unwrap();
        let m = rho.matrix();
        for i in 0..8 {
            assert!((m[(i, i)].re - 0.125).abs() < 1e-15);
        }
        assert!((m[(0, 7)].re - 0.125).abs() < 1e-15);
        let rho = edge_state(2.0, 3.0, 4.0).unwrap();
        assert!(rho.eigenvalues().iter().all(|&e| e >= -1e-9));
        assert!(edge_state(0.0, 1.0, 1.0).is_err());
        assert!(edge_state(1.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn upb_properties() {
        let rho = upb_state::<StreamRng>(None);
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        for v in upb_kets() {
            assert!(rho.overlap(&v).abs() < 1e-12);
        }
        for s in Subsystem::ALL {
            assert!(ppt_check(&rho, s).unwrap().0);
        }
        let mut r = rng(2);
        let rot = upb_state(Some(&mut r));
        let mut a = rho.eigenvalues();
        let mut b = rot.eigenvalues();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn x_state_labels() {
        assert_eq!(gme_label(ghz_state().matrix()).unwrap(), 1);
        assert!((x_state_gme_concurrence(ghz_state().matrix()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(gme_label(DensityMatrix::maximally_mixed(8).matrix()).unwrap(), 0);
        let mut r = rng(3);
        for _ in 0..200 {
            let (rho, _) = random_x_state(&mut r);
            DensityMatrix::check(rho.matrix()).unwrap();
            let m = rho.matrix();
            for i in 0..8 {
                for j in 0..8 {
                    if i != j && i + j != 7 {
                        assert_eq!(m[(i, j)].norm(), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn ood_families_are_valid() {
        for fam in OodFamily::ALL {
            for rotated in [false, true] {
                if rotated && fam == OodFamily::XState {
                    assert!(ood_samples(fam, 1, true, RngSeed::root(1)).is_err());
                    continue;
                }
                for s in ood_samples(fam, 100, rotated, RngSeed::root(1)).unwrap() {
                    DensityMatrix::check(s.state.matrix()).unwrap();
                }
            }
        }
    }

    #[test]
    fn expected_labels() {
        assert_eq!(OodFamily::Horodecki.expected_label(DatasetKind::B), Some(1));
        assert_eq!(OodFamily::Upb.expected_label(DatasetKind::W), Some(0));
        assert_eq!(OodFamily::Edge.expected_label(DatasetKind::Ghz), Some(0));
        assert_eq!(OodFamily::XState.expected_label(DatasetKind::B), None);
        assert_eq!("xstate".parse::<OodFamily>().unwrap(), OodFamily::XState);
    }
}
