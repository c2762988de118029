//! Two-variable SMO on the soft-margin dual
//!
//! ```text
//! min ½ αᵀQα − eᵀα   s.t. yᵀα = 0, 0 ≤ α ≤ C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! The first index of each pair is the maximal KKT violator; the second is
//! picked by the largest second-order decrease of the objective.

use super::cache::{FeatureMatrix, KernelCache};
use super::kernel::KernelSpec;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    /// Iteration cap is `max_passes * n`.
    pub max_passes: u64,
    pub cache_bytes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
            cache_bytes: super::cache::DEFAULT_CACHE_BYTES,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// `y` holds ±1.
pub fn solve(x: &FeatureMatrix, y: &[f64], spec: &KernelSpec, params: &SmoParams) -> Result<SmoSolution> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::Dimension(format!("{} samples but {} labels", n, y.len())));
    }
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", params.c)));
    }
    if !(params.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("stop tolerance must be positive, got {}", params.tol)));
    }
    spec.validate()?;
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::Training("training data contains a single class".into()));
    }

    let c = params.c;
    let mut cache = KernelCache::new(*spec, x, params.cache_bytes);
    let qd: Vec<f64> = (0..n).map(|t| cache.diag(t)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_passes.saturating_mul(n as u64).max(1);
    let mut iterations = 0u64;
    let mut converged = false;

    while iterations < max_iter {
        let Some((i, j)) = select_working_set(&mut cache, &qd, &alpha, &grad, y, c, params.tol) else {
            converged = true;
            break;
        };
        iterations += 1;

        let (ki, kj) = cache.row_pair(i, j);
        let kij = ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ai, aj) = pair_update(
            old_i,
            old_j,
            y[i],
            y[j],
            grad[i],
            grad[j],
            qd[i] + qd[j] - 2.0 * kij,
            c,
        );
        let (di, dj) = (ai - old_i, aj - old_j);
        let (ci, cj) = (y[i] * di, y[j] * dj);
        for t in 0..n {
            grad[t] += y[t] * (ki[t] * ci + kj[t] * cj);
        }
        alpha[i] = ai;
        alpha[j] = aj;
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    Ok(SmoSolution {
        alpha,
        rho,
        iterations,
        converged,
    })
}

fn in_up(a: f64, y: f64, c: f64) -> bool {
    if y > 0.0 {
        a < c
    } else {
        a > 0.0
    }
}

fn in_low(a: f64, y: f64, c: f64) -> bool {
    if y > 0.0 {
        a > 0.0
    } else {
        a < c
    }
}

fn select_working_set(
    cache: &mut KernelCache<'_>,
    qd: &[f64],
    alpha: &[f64],
    grad: &[f64],
    y: &[f64],
    c: f64,
    tol: f64,
) -> Option<(usize, usize)> {
    let n = alpha.len();
    let mut gmax = f64::NEG_INFINITY;
    let mut i_best = None;
    for t in 0..n {
        if in_up(alpha[t], y[t], c) {
            let v = -y[t] * grad[t];
            if v >= gmax {
                gmax = v;
                i_best = Some(t);
            }
        }
    }
    let i = i_best?;
    let kii = qd[i];
    let ki = cache.row(i);

    let mut gmax2 = f64::NEG_INFINITY;
    let mut j_best = None;
    let mut obj_min = f64::INFINITY;
    for t in 0..n {
        if !in_low(alpha[t], y[t], c) {
            continue;
        }
        let v = y[t] * grad[t];
        gmax2 = gmax2.max(v);
        let grad_diff = gmax + v;
        if grad_diff > 0.0 {
            let mut quad = kii + qd[t] - 2.0 * ki[t];
            if quad <= 0.0 {
                quad = TAU;
            }
            let obj = -(grad_diff * grad_diff) / quad;
            if obj <= obj_min {
                obj_min = obj;
                j_best = Some(t);
            }
        }
    }
    if gmax + gmax2 < tol {
        return None;
    }
    j_best.map(|j| (i, j))
}

/// Analytic solution for the pair, clipped to the box.
#[allow(clippy::too_many_arguments)]
fn pair_update(
    ai: f64,
    aj: f64,
    yi: f64,
    yj: f64,
    gi: f64,
    gj: f64,
    quad: f64,
    c: f64,
) -> (f64, f64) {
    let quad = if quad <= 0.0 { TAU } else { quad };
    let (mut ai, mut aj) = (ai, aj);
    if yi != yj {
        let delta = (-gi - gj) / quad;
        let diff = ai - aj;
        ai += delta;
        aj += delta;
        if diff > 0.0 {
            if aj < 0.0 {
                aj = 0.0;
                ai = diff;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = -diff;
        }
        if diff > 0.0 {
            if ai > c {
                ai = c;
                aj = c - diff;
            }
        } else if aj > c {
            aj = c;
            ai = c + diff;
        }
    } else {
        let delta = (gi - gj) / quad;
        let sum = ai + aj;
        ai -= delta;
        aj += delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
    }
    (ai, aj)
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut n_free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::new(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn decision(x: &FeatureMatrix, y: &[f64], sol: &SmoSolution, spec: &KernelSpec, p: &[f64]) -> f64 {
        (0..x.n_rows())
            .map(|i| sol.alpha[i] * y[i] * spec.eval_unchecked(x.row(i), p))
            .sum::<f64>()
            - sol.rho
    }

    #[test]
    fn separable_pair() {
        let x = fm(&[&[-1.0], &[1.0]]);
        let y = [-1.0, 1.0];
        let spec = KernelSpec::rbf(1.0).unwrap();
        let sol = solve(&x, &y, &spec, &SmoParams { c: 10.0, ..Default::default() }).unwrap();
        assert!(sol.converged);
        assert!(decision(&x, &y, &sol, &spec, &[-1.0]) < 0.0);
        assert!(decision(&x, &y, &sol, &spec, &[1.0]) > 0.0);
        // closed form: α = 2 / (2 − 2e^{-4}) for both points, rho = 0
        let expect = 1.0 / (1.0 - (-4f64).exp());
        assert!((sol.alpha[0] - expect).abs() < 1e-9);
        assert!(sol.rho.abs() < 1e-12);
    }

    #[test]
    fn dual_feasible_on_overlapping_data() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin(), (1.3 * t).cos()]
            })
            .collect();
        let y: Vec<f64> = (0..60).map(|i| if (i * 7) % 5 < 2 { 1.0 } else { -1.0 }).collect();
        let x = FeatureMatrix::new(&rows);
        let spec = KernelSpec::rbf(0.5).unwrap();
        let c = 2.0;
        let sol = solve(&x, &y, &spec, &SmoParams { c, ..Default::default() }).unwrap();
        assert!(sol.converged);
        let s: f64 = sol.alpha.iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!(s.abs() < 1e-10, "sum {s}");
        assert!(sol.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
    }

    #[test]
    fn rejects_bad_input() {
        let x = fm(&[&[0.0], &[1.0]]);
        let spec = KernelSpec::rbf(1.0).unwrap();
        assert!(matches!(
            solve(&x, &[1.0, 1.0], &spec, &SmoParams::default()),
            Err(Error::Training(_))
        ));
        assert!(solve(&x, &[1.0, -1.0], &spec, &SmoParams { c: 0.0, ..Default::default() }).is_err());
        assert!(solve(&x, &[1.0], &spec, &SmoParams::default()).is_err());
    }
}
