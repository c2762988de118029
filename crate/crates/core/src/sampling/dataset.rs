//! Labeled feature datasets for the three witness models and the four-class
//! cascade, plus their CSV / JSON file forms.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{RngSeed, StreamRng};
use super::states::{
    biseparable_state, class_b_state, ghz_w_mixture, rotated_class_state, separable_state,
    werner_w_state, GeneratorConfig, ALPHA_CRITICAL, EPSILON_CRITICAL,
};
use crate::error::{Error, Result};
use crate::qcore::pauli::{feature_names, features_of, PauliFeatures, N_FEATURES};
use crate::qcore::state::{ghz_state, w_state, DensityMatrix};

pub const GENERATOR_VERSION: &str = "qcascade-gen/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetKind {
    B,
    W,
    #[serde(rename = "GHZ")]
    Ghz,
    #[serde(rename = "CASCADE4")]
    Cascade4,
}

impl DatasetKind {
    pub const BINARY: [DatasetKind; 3] = [DatasetKind::B, DatasetKind::W, DatasetKind::Ghz];

    pub fn n_classes(self) -> usize {
        match self {
            DatasetKind::Cascade4 => 4,
            _ => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::B => "B",
            DatasetKind::W => "W",
            DatasetKind::Ghz => "GHZ",
            DatasetKind::Cascade4 => "CASCADE4",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "B" => Ok(DatasetKind::B),
            "W" => Ok(DatasetKind::W),
            "GHZ" => Ok(DatasetKind::Ghz),
            "CASCADE4" => Ok(DatasetKind::Cascade4),
            _ => Err(Error::InvalidArgument(format!("unknown dataset kind {s:?}"))),
        }
    }
}

/// Which generator produced a row. Not persisted in CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Origin {
    Separable,
    Biseparable,
    ClassB,
    WernerW { alpha: f64 },
    PureW,
    PureGhz,
    GhzW { epsilon: f64 },
    /// Mixture of W-dataset draws relabeled as the W class.
    WClassMix,
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub features: PauliFeatures,
    pub label: u8,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kind: DatasetKind,
    pub seed: u64,
    pub counts: Vec<usize>,
    pub generator_version: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub kind: DatasetKind,
    pub rows: Vec<Row>,
    pub seed: u64,
    pub generator_version: String,
}

impl LabeledDataset {
    pub fn new(kind: DatasetKind, rows: Vec<Row>, seed: u64) -> Result<Self> {
        let k = kind.n_classes() as u8;
        if let Some(bad) = rows.iter().find(|r| r.label >= k) {
            return Err(Error::Schema(format!(
                "label {} invalid for {kind} dataset",
                bad.label
            )));
        }
        Ok(Self {
            kind,
            rows,
            seed,
            generator_version: GENERATOR_VERSION.to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.kind.n_classes()];
        for r in &self.rows {
            c[r.label as usize] += 1;
        }
        c
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            kind: self.kind,
            seed: self.seed,
            counts: self.counts(),
            generator_version: self.generator_version.clone(),
        }
    }

    /// Rows at the given positions, in that order.
    pub fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            kind: self.kind,
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            seed: self.seed,
            generator_version: self.generator_version.clone(),
        }
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    /// CSV body: canonical feature columns plus `label`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        let io = |e| Error::io("<csv>", e);
        let mut header = feature_names().join(",");
        header.push_str(",label\n");
        w.write_all(header.as_bytes()).map_err(io)?;
        let mut line = String::with_capacity(64 * 25);
        for row in &self.rows {
            line.clear();
            for v in row.features.values() {
                line.push_str(&format_float(*v));
                line.push(',');
            }
            line.push_str(&row.label.to_string());
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: std::io::Read>(input: R, kind: DatasetKind, seed: u64) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader
            .lines()
            .map(|l| l.map_err(|e| Error::io("<csv>", e)))
            .filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
        let header = lines
            .next()
            .ok_or_else(|| Error::Schema("empty dataset file".into()))??;
        let mut expected = feature_names();
        expected.push("label".into());
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols != expected {
            return Err(Error::Schema(
                "dataset header does not match the 63 canonical Pauli columns + label".into(),
            ));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != N_FEATURES + 1 {
                return Err(Error::Schema(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 1,
                    fields.len(),
                    N_FEATURES + 1
                )));
            }
            let values = fields[..N_FEATURES]
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Schema(format!("row {}: {e}", lineno + 1)))?;
            let label = fields[N_FEATURES]
                .parse::<u8>()
                .map_err(|e| Error::Schema(format!("row {} label: {e}", lineno + 1)))?;
            rows.push(Row {
                features: PauliFeatures::new(values)?,
                label,
                origin: Origin::Unknown,
            });
        }
        Self::new(kind, rows, seed)
    }

    pub fn save(&self, csv_path: &Path) -> Result<()> {
        let f = std::fs::File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        self.write_csv(f)?;
        let meta_path = meta_path_for(csv_path);
        let json = serde_json::to_string_pretty(&self.meta())?;
        std::fs::write(&meta_path, json + "\n").map_err(|e| Error::io(&meta_path, e))
    }

    /// Loads a dataset CSV and its metadata sidecar.
    pub fn load(csv_path: &Path) -> Result<Self> {
        let meta_path = meta_path_for(csv_path);
        let meta_text =
            std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: DatasetMeta = serde_json::from_str(&meta_text)?;
        let f = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut ds = Self::read_csv(f, meta.kind, meta.seed)?;
        if ds.counts() != meta.counts {
            return Err(Error::Schema(format!(
                "class counts {:?} disagree with metadata {:?}",
                ds.counts(),
                meta.counts
            )));
        }
        ds.generator_version = meta.generator_version;
        Ok(ds)
    }
}

/// `data.csv` → `data.meta.json`
pub fn meta_path_for(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

/// 17 significant digits; parses back to the identical `f64`.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn uniform_open_above<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    // (lo, hi]
    hi - rng.gen::<f64>() * (hi - lo)
}

fn uniform_closed_below<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    // [lo, hi)
    lo + rng.gen::<f64>() * (hi - lo)
}

/// Fraction of label-0 rows drawn from the structured class generator (the
/// rest come from the threshold family on the label-0 side).
const LABEL0_BULK_FRACTION: f64 = 0.7;

/// One state for `(kind, label)` following the dataset recipes.
pub fn sample_state<R: Rng + ?Sized>(
    kind: DatasetKind,
    label: u8,
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<(DensityMatrix, Origin)> {
    match (kind, label) {
        (DatasetKind::B, 0) | (DatasetKind::Cascade4, 0) => {
            Ok((separable_state(cfg, rng), Origin::Separable))
        }
        (DatasetKind::B, 1) | (DatasetKind::Cascade4, 1) => {
            Ok((biseparable_state(cfg, rng)?, Origin::Biseparable))
        }
        (DatasetKind::W, 0) => {
            if rng.gen_bool(LABEL0_BULK_FRACTION) {
                Ok((class_b_state(cfg, rng)?, Origin::ClassB))
            } else {
                let alpha = uniform_closed_below(0.0, ALPHA_CRITICAL, rng);
                let (rho, _) = werner_w_state(alpha, Some(rng))?;
                Ok((rho, Origin::WernerW { alpha }))
            }
        }
        (DatasetKind::W, 1) | (DatasetKind::Cascade4, 2) => {
            if rng.gen_bool(0.5) {
                Ok((rotated_class_state(&w_state(), rng)?, Origin::PureW))
            } else {
                let alpha = uniform_open_above(ALPHA_CRITICAL, 1.0, rng);
                let (rho, _) = werner_w_state(alpha, Some(rng))?;
                Ok((rho, Origin::WernerW { alpha }))
            }
        }
        (DatasetKind::Ghz, 0) => {
            if rng.gen_bool(LABEL0_BULK_FRACTION) {
                Ok((w_class_state(cfg, rng)?, Origin::WClassMix))
            } else {
                let epsilon = uniform_closed_below(EPSILON_CRITICAL, 1.0, rng);
                let (rho, _) = ghz_w_mixture(epsilon, Some(rng))?;
                Ok((rho, Origin::GhzW { epsilon }))
            }
        }
        (DatasetKind::Ghz, 1) | (DatasetKind::Cascade4, 3) => {
            if rng.gen_bool(0.5) {
                Ok((rotated_class_state(&ghz_state(), rng)?, Origin::PureGhz))
            } else {
                let epsilon = uniform_closed_below(0.0, EPSILON_CRITICAL, rng);
                let (rho, _) = ghz_w_mixture(epsilon, Some(rng))?;
                Ok((rho, Origin::GhzW { epsilon }))
            }
        }
        _ => Err(Error::InvalidArgument(format!(
            "label {label} invalid for {kind} dataset"
        ))),
    }
}

/// W-class member: a Dirichlet mixture of 1..=`max_w_class_terms` draws from
/// either side of the W dataset.
pub fn w_class_state<R: Rng + ?Sized>(cfg: &GeneratorConfig, rng: &mut R) -> Result<DensityMatrix> {
    let n = rng.gen_range(1..=cfg.max_w_class_terms);
    let terms = (0..n)
        .map(|_| {
            let label = u8::from(rng.gen_bool(0.5));
            sample_state(DatasetKind::W, label, cfg, rng).map(|(rho, _)| rho)
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = super::states::dirichlet_weights(n, cfg.beta, rng);
    let parts: Vec<(f64, &DensityMatrix)> = weights.into_iter().zip(terms.iter()).collect();
    DensityMatrix::mix(&parts)
}

/// Label of row `i`: classes cycle so every class count differs by at most one.
pub fn row_label(kind: DatasetKind, i: usize) -> u8 {
    (i % kind.n_classes()) as u8
}

/// Generates `n_rows` balanced rows. Row `i` draws from its own stream
/// `seed.derive("dataset/<kind>", i)`, so the output does not depend on
/// thread scheduling.
pub fn build_dataset(
    kind: DatasetKind,
    n_rows: usize,
    seed: RngSeed,
    cfg: &GeneratorConfig,
) -> Result<LabeledDataset> {
    let min_rows = kind.n_classes();
    if n_rows < min_rows {
        return Err(Error::InvalidArgument(format!(
            "{kind} dataset needs at least {min_rows} rows, got {n_rows}"
        )));
    }
    let tag = format!("dataset/{kind}");
    let rows = (0..n_rows)
        .into_par_iter()
        .map(|i| {
            let label = row_label(kind, i);
            let mut rng: StreamRng = seed.derive(&tag, i as u64).rng();
            let (rho, origin) = sample_state(kind, label, cfg, &mut rng)?;
            Ok(Row {
                features: features_of(&rho)?,
                label,
                origin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LabeledDataset::new(kind, rows, seed.seed)
}
