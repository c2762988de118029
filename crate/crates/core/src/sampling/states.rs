//! Random state generators for the four nested three-qubit classes.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::matrix::{CMatrix, C64};
use crate::qcore::state::{
    ghz_state, min_pt_eigenvalue, qubit_permutation, w_state, DensityMatrix, Subsystem,
};

/// Werner-W states with α above this value leave the biseparable class.
pub const ALPHA_CRITICAL: f64 = 3.0 / 7.0;
/// GHZ/W mixtures with ε at or above this value belong to the W class.
pub const EPSILON_CRITICAL: f64 = 0.708;

/// Knobs shared by all generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Symmetric Dirichlet concentration for every convex mixture.
    pub beta: f64,
    /// MA component count is uniform on `1..=max_components`.
    pub max_components: usize,
    /// Probability that a single-qubit factor is pure rather than MA-mixed.
    pub pure_factor_prob: f64,
    /// Probability that a two-qubit candidate is a Haar pure state rather
    /// than MA-mixed (candidates still have to fail the PPT test).
    pub pure_pair_prob: f64,
    pub max_separable_terms: usize,
    pub max_biseparable_terms: usize,
    pub max_class_b_terms: usize,
    pub max_w_class_terms: usize,
    /// Two-qubit states are accepted once their partial transpose has an
    /// eigenvalue below this threshold.
    pub entangled_pt_threshold: f64,
    /// Redraw biseparable mixtures that are PPT across every cut, so label-1
    /// rows of the B dataset are certified non-separable.
    pub require_npt_biseparable: bool,
    pub max_rejections: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            max_components: 50,
            pure_factor_prob: 0.5,
            pure_pair_prob: 0.5,
            max_separable_terms: 50,
            max_biseparable_terms: 3,
            max_class_b_terms: 10,
            max_w_class_terms: 4,
            entangled_pt_threshold: -1e-6,
            require_npt_biseparable: true,
            max_rejections: 1_000_000,
        }
    }
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed d×d unitary: Gram–Schmidt on a complex Ginibre matrix.
/// Modified Gram–Schmidt yields an R factor with positive real diagonal,
/// which is what makes Q exactly Haar.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    assert!(d >= 1, "unitary dimension must be positive");
    let mut cols: Vec<Vec<C64>> = (0..d)
        .map(|_| (0..d).map(|_| gaussian_c64(rng)).collect())
        .collect();
    for j in 0..d {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let q = &done[k];
            let v = &mut rest[0];
            let proj: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    CMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// Haar-random pure state, distributed as `U|0⟩` for Haar `U`.
pub fn haar_ket<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian_c64(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn haar_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    DensityMatrix::new_unchecked(CMatrix::projector(&haar_ket(d, rng)))
}

/// Symmetric Dirichlet weights via normalized Gamma draws. Defined for n = 1.
pub fn dirichlet_weights<R: Rng + ?Sized>(n: usize, beta: f64, rng: &mut R) -> Vec<f64> {
    assert!(n >= 1 && beta > 0.0);
    if n == 1 {
        return vec![1.0];
    }
    let gamma = Gamma::new(beta, 1.0).expect("positive shape");
    loop {
        let g: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            return g.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Dirichlet-weighted mixture of `n_components` Haar pure states.
pub fn ma_mixed_state<R: Rng + ?Sized>(
    d: usize,
    n_components: usize,
    beta: f64,
    rng: &mut R,
) -> Result<DensityMatrix> {
    if !(1..=50).contains(&n_components) {
        return Err(Error::InvalidArgument(format!(
            "MA component count {n_components} outside 1..=50"
        )));
    }
    if beta <= 0.0 || beta.is_nan() {
        return Err(Error::InvalidArgument(format!("Dirichlet beta {beta} must be positive")));
    }
    let weights = dirichlet_weights(n_components, beta, rng);
    let mut acc = CMatrix::zeros(d, d);
    for w in weights {
        acc.add_scaled(&CMatrix::projector(&haar_ket(d, rng)), w);
    }
    Ok(DensityMatrix::new_unchecked(acc.hermitian_part()))
}

/// MA state with a uniformly drawn component count.
pub fn random_ma_state<R: Rng + ?Sized>(d: usize, cfg: &GeneratorConfig, rng: &mut R) -> DensityMatrix {
    let n = rng.gen_range(1..=cfg.max_components);
    ma_mixed_state(d, n, cfg.beta, rng).expect("validated configuration")
}

/// Pure (Haar) or MA-mixed single-qubit state.
pub fn single_qubit_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> DensityMatrix {
    if rng.gen_bool(cfg.pure_factor_prob) {
        haar_pure_state(2, rng)
    } else {
        random_ma_state(2, cfg, rng)
    }
}

fn mixture<R: Rng + ?Sized>(
    terms: Vec<DensityMatrix>,
    beta: f64,
    rng: &mut R,
) -> DensityMatrix {
    let weights = dirichlet_weights(terms.len(), beta, rng);
    let dim = terms[0].dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for (w, rho) in weights.into_iter().zip(&terms) {
        acc.add_scaled(rho.matrix(), w);
    }
    DensityMatrix::new_unchecked(acc.hermitian_part())
}

/// Fully separable state: mixture of 1..=50 product states.
pub fn separable_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> DensityMatrix {
    let m = rng.gen_range(1..=cfg.max_separable_terms);
    let terms = (0..m)
        .map(|_| {
            let a = single_qubit_state(cfg, rng);
            let b = single_qubit_state(cfg, rng);
            let c = single_qubit_state(cfg, rng);
            a.tensor(&b).tensor(&c)
        })
        .collect();
    mixture(terms, cfg.beta, rng)
}

/// Pure or MA-mixed two-qubit state that violates the PPT criterion.
pub fn two_qubit_entangled<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<DensityMatrix> {
    for _ in 0..cfg.max_rejections {
        let rho = if rng.gen_bool(cfg.pure_pair_prob) {
            haar_pure_state(4, rng)
        } else {
            random_ma_state(4, cfg, rng)
        };
        if is_pt_entangled(&rho, cfg.entangled_pt_threshold) {
            return Ok(rho);
        }
    }
    Err(Error::RejectionLimit(cfg.max_rejections))
}

/// Acceptance rule used by [`two_qubit_entangled`].
pub fn is_pt_entangled(rho: &DensityMatrix, threshold: f64) -> bool {
    min_pt_eigenvalue(rho, Subsystem::B).expect("two-qubit state") < threshold
}

/// Places `single ⊗ pair` so that `single` sits on the `lone` qubit and the
/// pair occupies the remaining two in order.
pub fn embed_bipartite(single: &DensityMatrix, pair: &DensityMatrix, lone: Subsystem) -> DensityMatrix {
    let built = single.tensor(pair);
    match lone {
        Subsystem::A => built,
        // built order (B, A, C)
        Subsystem::B => built.rotate(&qubit_permutation([1, 0, 2])),
        // built order (C, A, B)
        Subsystem::C => built.rotate(&qubit_permutation([1, 2, 0])),
    }
}

/// Single term `ρ_L ⊗ ρ_MN` across a uniformly chosen bipartition.
pub fn biseparable_term<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<DensityMatrix> {
    let lone = Subsystem::ALL[rng.gen_range(0..3)];
    let single = single_qubit_state(cfg, rng);
    let pair = two_qubit_entangled(cfg, rng)?;
    Ok(embed_bipartite(&single, &pair, lone))
}

/// Mixture of 1..=`max_biseparable_terms` terms over all three bipartitions. With
/// `require_npt_biseparable`, mixtures that are PPT on every cut are redrawn.
pub fn biseparable_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<DensityMatrix> {
    for _ in 0..cfg.max_rejections {
        let n = rng.gen_range(1..=cfg.max_biseparable_terms);
        let terms = (0..n)
            .map(|_| biseparable_term(cfg, rng))
            .collect::<Result<Vec<_>>>()?;
        let rho = mixture(terms, cfg.beta, rng);
        if !cfg.require_npt_biseparable || is_npt_on_some_cut(&rho, cfg.entangled_pt_threshold) {
            return Ok(rho);
        }
    }
    Err(Error::RejectionLimit(cfg.max_rejections))
}

/// True when some single-qubit cut has a partial-transpose eigenvalue below
/// `threshold`.
pub fn is_npt_on_some_cut(rho: &DensityMatrix, threshold: f64) -> bool {
    Subsystem::ALL
        .iter()
        .any(|&s| min_pt_eigenvalue(rho, s).expect("three-qubit state") < threshold)
}

/// Member of the convex hull of separable and biseparable samples: a raw
/// separable or biseparable sample (one third each), otherwise a mixture of
/// 2..=`max_class_b_terms` such samples.
pub fn class_b_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<DensityMatrix> {
    let draw = |rng: &mut R| {
        if rng.gen_bool(0.5) {
            Ok(separable_state(cfg, rng))
        } else {
            biseparable_state(cfg, rng)
        }
    };
    match rng.gen_range(0..3) {
        0 => return Ok(separable_state(cfg, rng)),
        1 => return biseparable_state(cfg, rng),
        _ => {}
    }
    let n = rng.gen_range(2..=cfg.max_class_b_terms.max(2));
    let terms = (0..n).map(|_| draw(rng)).collect::<Result<Vec<_>>>()?;
    Ok(mixture(terms, cfg.beta, rng))
}

/// `U₁⊗U₂⊗U₃` with independent Haar factors.
pub fn local_unitary<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let a = haar_unitary(2, rng);
    let b = haar_unitary(2, rng);
    let c = haar_unitary(2, rng);
    a.kron(&b).kron(&c)
}

pub fn rotated_class_state<R: Rng + ?Sized>(base: &DensityMatrix, rng: &mut R) -> Result<DensityMatrix> {
    if base.dim() != 8 {
        return Err(Error::Dimension(format!(
            "local rotation expects a three-qubit state, got dim {}",
            base.dim()
        )));
    }
    Ok(base.rotate(&local_unitary(rng)))
}

/// Label 1 iff the state lies in W\B.
pub fn werner_w_label(alpha: f64) -> u8 {
    u8::from(alpha > ALPHA_CRITICAL)
}

/// Label 1 iff the state lies in GHZ\W.
pub fn ghz_w_label(epsilon: f64) -> u8 {
    u8::from(epsilon < EPSILON_CRITICAL)
}

fn unit_interval(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {x} outside [0, 1]")))
    }
}

/// `α|W⟩⟨W| + (1−α) I/8`, optionally locally rotated.
pub fn werner_w_state<R: Rng + ?Sized>(
    alpha: f64,
    rotation: Option<&mut R>,
) -> Result<(DensityMatrix, u8)> {
    unit_interval("alpha", alpha)?;
    let mixed = DensityMatrix::maximally_mixed(8);
    let rho = DensityMatrix::mix(&[(alpha, &w_state()), (1.0 - alpha, &mixed)])?;
    let rho = match rotation {
        Some(rng) => rotated_class_state(&rho, rng)?,
        None => rho,
    };
    Ok((rho, werner_w_label(alpha)))
}

/// `(1−ε)|GHZ⟩⟨GHZ| + ε|W⟩⟨W|`, optionally locally rotated after mixing.
pub fn ghz_w_mixture<R: Rng + ?Sized>(
    epsilon: f64,
    rotation: Option<&mut R>,
) -> Result<(DensityMatrix, u8)> {
    unit_interval("epsilon", epsilon)?;
    let rho = DensityMatrix::mix(&[(1.0 - epsilon, &ghz_state()), (epsilon, &w_state())])?;
    let rho = match rotation {
        Some(rng) => rotated_class_state(&rho, rng)?,
        None => rho,
    };
    Ok((rho, ghz_w_label(epsilon)))
}
