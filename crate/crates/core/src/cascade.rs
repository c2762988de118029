//! Four-class classifier built from the three binary witness models, applied
//! in the order GHZ, W, B.

use std::fmt;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::PauliFeatures;
use crate::sampling::{build_dataset, DatasetKind, GeneratorConfig, LabeledDataset, RngSeed};
use crate::svm::SvmModel;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Class index matches the CASCADE4 dataset label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntanglementClass {
    S = 0,
    BSep = 1,
    WB = 2,
    GhzW = 3,
}

impl EntanglementClass {
    pub const ALL: [EntanglementClass; 4] = [Self::S, Self::BSep, Self::WB, Self::GhzW];

    pub fn label(self) -> u8 {
        self as u8
    }

    pub fn from_label(l: u8) -> Result<Self> {
        Self::ALL
            .get(l as usize)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no entanglement class {l}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::S => "S",
            Self::BSep => "B\\S",
            Self::WB => "W\\B",
            Self::GhzW => "GHZ\\W",
        }
    }
}

impl fmt::Display for EntanglementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub trait BinaryClassifier {
    fn predict_features(&self, f: &PauliFeatures) -> u8;
}

impl BinaryClassifier for SvmModel {
    fn predict_features(&self, f: &PauliFeatures) -> u8 {
        SvmModel::predict_features(self, f)
    }
}

impl<F: Fn(&PauliFeatures) -> u8> BinaryClassifier for F {
    fn predict_features(&self, f: &PauliFeatures) -> u8 {
        self(f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeModel<M = SvmModel> {
    pub m_ghz: M,
    pub m_w: M,
    pub m_b: M,
}

impl<M: BinaryClassifier> CascadeModel<M> {
    pub fn new(m_ghz: M, m_w: M, m_b: M) -> Self {
        Self { m_ghz, m_w, m_b }
    }

    pub fn classify(&self, f: &PauliFeatures) -> EntanglementClass {
        if self.m_ghz.predict_features(f) == 1 {
            EntanglementClass::GhzW
        } else if self.m_w.predict_features(f) == 1 {
            EntanglementClass::WB
        } else if self.m_b.predict_features(f) == 1 {
            EntanglementClass::BSep
        } else {
            EntanglementClass::S
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeMetrics {
    pub accuracy: f64,
    /// `confusion[true][predicted]`, classes in label order S, B\S, W\B, GHZ\W.
    pub confusion: Vec<Vec<u64>>,
    pub recall: Vec<f64>,
}

impl CascadeMetrics {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u8, u8)>) -> Self {
        let mut confusion = vec![vec![0u64; 4]; 4];
        for (t, p) in pairs {
            confusion[t as usize][p as usize] += 1;
        }
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..4).map(|i| confusion[i][i]).sum();
        let recall = (0..4)
            .map(|i| {
                let row: u64 = confusion[i].iter().sum();
                if row == 0 {
                    0.0
                } else {
                    confusion[i][i] as f64 / row as f64
                }
            })
            .collect();
        Self {
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            confusion,
            recall,
        }
    }
}

pub fn evaluate_cascade<M: BinaryClassifier + Sync>(model: &CascadeModel<M>, ds: &LabeledDataset) -> Result<CascadeMetrics> {
    if ds.kind != DatasetKind::Cascade4 {
        return Err(Error::InvalidArgument(format!(
            "cascade evaluation needs a CASCADE4 dataset, got {}",
            ds.kind
        )));
    }
    let preds: Vec<u8> = ds
        .rows
        .par_iter()
        .map(|r| model.classify(&r.features).label())
        .collect();
    Ok(CascadeMetrics::from_pairs(
        ds.rows.iter().map(|r| r.label).zip(preds),
    ))
}

pub fn build_cascade4_dataset(n: usize, seed: RngSeed, cfg: &GeneratorConfig) -> Result<LabeledDataset> {
    build_dataset(DatasetKind::Cascade4, n, seed, cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CascadeBundle {
    pub format_version: u32,
    pub class_order: Vec<String>,
    pub m_ghz: SvmModel,
    pub m_w: SvmModel,
    pub m_b: SvmModel,
}

impl CascadeModel<SvmModel> {
    pub fn to_bundle(&self) -> CascadeBundle {
        CascadeBundle {
            format_version: BUNDLE_FORMAT_VERSION,
            class_order: [
                EntanglementClass::GhzW,
                EntanglementClass::WB,
                EntanglementClass::BSep,
                EntanglementClass::S,
            ]
            .iter()
            .map(|c| c.name().to_string())
            .collect(),
            m_ghz: self.m_ghz.clone(),
            m_w: self.m_w.clone(),
            m_b: self.m_b.clone(),
        }
    }

    pub fn from_bundle(b: CascadeBundle) -> Result<Self> {
        if b.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Version {
                found: b.format_version,
                expected: BUNDLE_FORMAT_VERSION,
            });
        }
        for m in [&b.m_ghz, &b.m_w, &b.m_b] {
            m.validate()?;
        }
        Ok(Self::new(b.m_ghz, b.m_w, b.m_b))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.to_bundle())?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_bundle(serde_json::from_str(&s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{min_eigenvalue, partial_transpose, state_of_features, PauliIndex, Subsystem};

    type Stub = Box<dyn Fn(&PauliFeatures) -> u8 + Sync>;

    fn stub(v: u8) -> Stub {
        Box::new(move |_: &PauliFeatures| v)
    }

    #[test]
    fn fall_through_to_separable() {
        let m = CascadeModel::new(stub(0), stub(0), stub(0));
        assert_eq!(m.classify(&PauliFeatures::zeros()), EntanglementClass::S);
    }

    #[test]
    fn first_stage_short_circuits() {
        let m = CascadeModel::new(stub(1), stub(1), stub(1));
        assert_eq!(m.classify(&PauliFeatures::zeros()), EntanglementClass::GhzW);
        let m = CascadeModel::new(stub(0), stub(1), stub(1));
        assert_eq!(m.classify(&PauliFeatures::zeros()), EntanglementClass::WB);
        let m = CascadeModel::new(stub(0), stub(0), stub(1));
        assert_eq!(m.classify(&PauliFeatures::zeros()), EntanglementClass::BSep);
    }

    /// Each stub reads the true class from a feature slot reserved for the test.
    fn oracle_stubs() -> CascadeModel<Stub> {
        let slot = PauliIndex::new(1).unwrap();
        let at = move |k: f64| -> Stub { Box::new(move |f: &PauliFeatures| u8::from(f.get(slot) >= k)) };
        CascadeModel::new(at(3.0), at(2.0), at(1.0))
    }

    fn synthetic(labels: &[u8]) -> LabeledDataset {
        let rows = labels
            .iter()
            .map(|&l| {
                let mut f = PauliFeatures::zeros();
                f.set(PauliIndex::new(1).unwrap(), l as f64);
                crate::sampling::Row {
                    features: f,
                    label: l,
                    origin: crate::sampling::Origin::Unknown,
                }
            })
            .collect();
        LabeledDataset::new(DatasetKind::Cascade4, rows, 0).unwrap()
    }

    #[test]
    fn oracle_members_give_identity_confusion() {
        let ds = synthetic(&[0, 1, 2, 3, 3, 2, 1, 0, 0]);
        let m = evaluate_cascade(&oracle_stubs(), &ds).unwrap();
        assert_eq!(m.accuracy, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(m.confusion[i][j], 0);
                }
            }
        }
        assert_eq!(m.confusion[0][0], 3);
    }

    #[test]
    fn all_zero_stubs_score_the_separable_fraction() {
        let ds = synthetic(&[0, 1, 2, 3, 0, 0]);
        let m = evaluate_cascade(&CascadeModel::new(stub(0), stub(0), stub(0)), &ds).unwrap();
        assert!((m.accuracy - 0.5).abs() < 1e-15);
        assert!(m.confusion.iter().all(|row| row[1..].iter().all(|&c| c == 0)));
    }

    #[test]
    fn upstream_errors_are_not_corrected() {
        // m_ghz fires on everything: only GHZ\W rows can be right
        let ds = synthetic(&[0, 1, 2, 3]);
        let m = evaluate_cascade(&CascadeModel::new(stub(1), oracle_stubs().m_w, oracle_stubs().m_b), &ds).unwrap();
        assert_eq!(m.accuracy, 0.25);
        assert_eq!(m.recall, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_binary_dataset() {
        let ds = LabeledDataset::new(DatasetKind::B, vec![], 0).unwrap();
        assert!(evaluate_cascade(&CascadeModel::new(stub(0), stub(0), stub(0)), &ds).is_err());
    }

    #[test]
    fn cascade4_rows_are_balanced_and_separable_rows_ppt() {
        let cfg = GeneratorConfig::default();
        let ds = build_cascade4_dataset(40, RngSeed::root(5), &cfg).unwrap();
        assert_eq!(ds.counts(), vec![10; 4]);
        let again = build_cascade4_dataset(40, RngSeed::root(5), &cfg).unwrap();
        assert_eq!(ds, again);
        for row in ds.rows.iter().filter(|r| r.label == 0) {
            let m = state_of_features(&row.features);
            for cut in Subsystem::ALL {
                let pt = partial_transpose(&m, cut).unwrap();
                assert!(min_eigenvalue(&pt).unwrap() >= -1e-9);
            }
        }
    }
}
