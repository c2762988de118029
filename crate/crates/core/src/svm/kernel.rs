use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum KernelKind {
    Rbf,
    Poly,
}

/// `RBF: exp(-γ‖x−y‖²)`, `POLY: (γ⟨x,y⟩ + coef0)^degree`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub gamma: f64,
    pub degree: u32,
    pub coef0: f64,
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        let spec = Self {
            kind: KernelKind::Rbf,
            gamma,
            degree: 0,
            coef0: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn poly(gamma: f64, degree: u32, coef0: f64) -> Result<Self> {
        let spec = Self {
            kind: KernelKind::Poly,
            gamma,
            degree,
            coef0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.kind == KernelKind::Poly && !(2..=9).contains(&self.degree) {
            return Err(Error::InvalidArgument(format!(
                "polynomial degree must be in 2..=9, got {}",
                self.degree
            )));
        }
        if !self.coef0.is_finite() {
            return Err(Error::InvalidArgument("coef0 must be finite".into()));
        }
        Ok(())
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    /// Kernel value on two equal-length vectors; length is not checked.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Rbf => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-self.gamma * d2).exp()
            }
            KernelKind::Poly => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                self.from_dot(dot)
            }
        }
    }

    /// Polynomial kernel from a precomputed inner product.
    #[inline]
    pub(crate) fn from_dot(&self, dot: f64) -> f64 {
        (self.gamma * dot + self.coef0).powi(self.degree as i32)
    }

    /// RBF kernel from a precomputed squared distance.
    #[inline]
    pub(crate) fn from_sq_dist(&self, d2: f64) -> f64 {
        (-self.gamma * d2).exp()
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "kernel inputs have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(spec.eval_unchecked(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rbf_identity_is_one() {
        let k = KernelSpec::rbf(0.3).unwrap();
        assert_eq!(kernel_eval(&k, &[0.2, -0.7], &[0.2, -0.7]).unwrap(), 1.0);
    }

    #[test]
    fn rbf_unit_distance() {
        let k = KernelSpec::rbf(1.0).unwrap();
        let v = kernel_eval(&k, &[0.0], &[1.0]).unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
    }

    #[test]
    fn poly_degree_two() {
        let k = KernelSpec::poly(1.0, 2, 0.0).unwrap();
        assert_eq!(kernel_eval(&k, &[1.0, 1.0], &[1.0, 1.0]).unwrap(), 4.0);
    }

    #[test]
    fn invalid_specs() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::poly(1.0, 1, 0.0).is_err());
        assert!(KernelSpec::poly(1.0, 10, 0.0).is_err());
        let k = KernelSpec::rbf(1.0).unwrap();
        assert!(kernel_eval(&k, &[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn json_shape() {
        let k = KernelSpec::poly(0.5, 3, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(k).unwrap();
        assert_eq!(v["kind"], "POLY");
        assert_eq!(v["degree"], 3);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            x in prop::collection::vec(-1.0f64..1.0, 5),
            y in prop::collection::vec(-1.0f64..1.0, 5),
            gamma in 0.001f64..5.0,
            degree in 2u32..=9,
        ) {
            let rbf = KernelSpec::rbf(gamma).unwrap();
            let kxy = kernel_eval(&rbf, &x, &y).unwrap();
            prop_assert_eq!(kxy, kernel_eval(&rbf, &y, &x).unwrap());
            prop_assert!(kxy > 0.0 && kxy <= 1.0);
            if x != y {
                let d2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
                // exp underflow aside, distinct points stay strictly below one
                if gamma * d2 > 1e-12 {
                    prop_assert!(kxy < 1.0);
                }
            }
            let poly = KernelSpec::poly(gamma, degree, 1.0).unwrap();
            prop_assert_eq!(
                kernel_eval(&poly, &x, &y).unwrap(),
                kernel_eval(&poly, &y, &x).unwrap()
            );
        }
    }
}
