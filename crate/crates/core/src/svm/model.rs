use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cache::FeatureMatrix;
use super::kernel::{KernelKind, KernelSpec};
use super::smo::{solve, SmoParams};
use crate::error::{Error, Result};
use crate::qcore::{PauliFeatures, PauliIndex};
use crate::sampling::LabeledDataset;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub val_accuracy: Option<f64>,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub format_version: u32,
    /// Name of the dataset the model was trained on (`B`, `W`, `GHZ`).
    pub kind: String,
    pub kernel: KernelSpec,
    #[serde(rename = "C")]
    pub c: f64,
    pub bias: f64,
    pub active_features: Vec<PauliIndex>,
    pub support_vectors: Vec<Vec<f64>>,
    pub signed_duals: Vec<f64>,
    pub meta: TrainingMeta,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub c: f64,
    pub kernel: KernelSpec,
    pub tol: f64,
    pub max_passes: u64,
    pub cache_bytes: usize,
}

impl TrainConfig {
    pub fn new(c: f64, kernel: KernelSpec) -> Self {
        let d = SmoParams::default();
        Self {
            c,
            kernel,
            tol: d.tol,
            max_passes: d.max_passes,
            cache_bytes: d.cache_bytes,
        }
    }

    fn smo(&self) -> SmoParams {
        SmoParams {
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            cache_bytes: self.cache_bytes,
        }
    }
}

/// Rows of `ds` restricted to `active`, in that order.
pub fn project_dataset(ds: &LabeledDataset, active: &[PauliIndex]) -> FeatureMatrix {
    let rows: Vec<Vec<f64>> = ds.rows.iter().map(|r| r.features.project(active)).collect();
    FeatureMatrix::new(&rows)
}

pub fn all_features() -> Vec<PauliIndex> {
    PauliIndex::all().collect()
}

/// Train on a binary dataset restricted to `active` features. Labels 0/1 map
/// to −1/+1.
pub fn train(ds: &LabeledDataset, active: &[PauliIndex], cfg: &TrainConfig, seed: u64) -> Result<SvmModel> {
    if ds.kind.n_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "SVM training needs a binary dataset, got {}",
            ds.kind
        )));
    }
    let x = project_dataset(ds, active);
    train_matrix(ds.kind.as_str(), &x, &ds.labels(), active, cfg, seed)
}

pub fn train_matrix(
    kind: &str,
    x: &FeatureMatrix,
    labels: &[u8],
    active: &[PauliIndex],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<SvmModel> {
    if x.n_cols() != active.len() && x.n_rows() > 0 {
        return Err(Error::Dimension(format!(
            "{} columns for {} active features",
            x.n_cols(),
            active.len()
        )));
    }
    let y: Vec<f64> = labels
        .iter()
        .map(|&l| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            other => Err(Error::InvalidArgument(format!("binary label expected, got {other}"))),
        })
        .collect::<Result<_>>()?;
    let sol = solve(x, &y, &cfg.kernel, &cfg.smo())?;
    let mut support_vectors = Vec::new();
    let mut signed_duals = Vec::new();
    for (i, &a) in sol.alpha.iter().enumerate() {
        if a > 0.0 {
            support_vectors.push(x.row(i).to_vec());
            signed_duals.push(a * y[i]);
        }
    }
    Ok(SvmModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: kind.to_string(),
        kernel: cfg.kernel,
        c: cfg.c,
        bias: -sol.rho,
        active_features: active.to_vec(),
        support_vectors,
        signed_duals,
        meta: TrainingMeta {
            seed,
            val_accuracy: None,
            iterations: sol.iterations,
            converged: sol.converged,
        },
    })
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.active_features.len()
    }

    /// Decision value on a vector already restricted to the active features.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(self.decision_unchecked(x))
    }

    #[inline]
    pub(crate) fn decision_unchecked(&self, x: &[f64]) -> f64 {
        let k = &self.kernel;
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.signed_duals)
            .map(|(sv, &a)| a * k.eval_unchecked(sv, x))
            .sum();
        s + self.bias
    }

    pub fn decision_features(&self, f: &PauliFeatures) -> f64 {
        self.decision_unchecked(&f.project(&self.active_features))
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        Ok(u8::from(self.decision_value(x)? > 0.0))
    }

    pub fn predict_features(&self, f: &PauliFeatures) -> u8 {
        u8::from(self.decision_features(f) > 0.0)
    }

    pub fn decision_values(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        if x.n_rows() > 0 && x.n_cols() != self.n_features() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows())
            .into_par_iter()
            .map(|i| self.decision_unchecked(x.row(i)))
            .collect())
    }

    pub fn decision_values_dataset(&self, ds: &LabeledDataset) -> Vec<f64> {
        ds.rows
            .par_iter()
            .map(|r| self.decision_features(&r.features))
            .collect()
    }

    pub fn dual_sum(&self) -> f64 {
        self.signed_duals.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        self.kernel.validate()?;
        let d = self.n_features();
        let bad_sv = self.support_vectors.iter().any(|sv| sv.len() != d);
        if bad_sv || self.support_vectors.len() != self.signed_duals.len() {
            return Err(Error::Schema("support vectors and duals disagree in shape".into()));
        }
        if self.signed_duals.iter().any(|a| a.abs() > self.c * (1.0 + 1e-12)) {
            return Err(Error::Schema("dual outside the box constraint".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SvmModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    pub fn is_rbf(&self) -> bool {
        self.kernel.kind == KernelKind::Rbf
    }
}
