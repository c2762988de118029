use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::featsel::{ConsensusRanking, ImportanceRanking, ModelCurve};
use crate::qcore::PauliIndex;
use crate::sampling::dataset::format_float;
use crate::sampling::DatasetKind;

/// CSV table whose first line is `# config_hash=<hex> seed=<n>`.
#[derive(Clone, Debug)]
pub struct CsvTable {
    header: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

pub fn fmt_f(v: f64) -> String {
    format_float(v)
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl CsvTable {
    pub fn new(cfg: &ExperimentConfig, columns: &[&str]) -> Self {
        Self {
            header: format!("# config_hash={} seed={}", cfg.hash(), cfg.seed),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.header);
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(|f| escape(f)).collect();
            let _ = writeln!(s, "{}", line.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }
}

/// Creates the parent directory of `path` if it has one.
pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

/// Importance ranking of one model plus its prefix retraining curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankFile {
    pub kind: DatasetKind,
    pub scores: Vec<f64>,
    pub order: Vec<PauliIndex>,
    pub n_repeats: usize,
    pub seed: u64,
    pub baseline: f64,
    /// `(k, test accuracy)` after retraining on the top-k features.
    pub curve: Vec<(usize, f64)>,
}

impl RankFile {
    pub fn new(kind: DatasetKind, r: &ImportanceRanking, curve: Vec<(usize, f64)>) -> Self {
        Self {
            kind,
            scores: r.scores.clone(),
            order: r.order.clone(),
            n_repeats: r.n_repeats,
            seed: r.seed,
            baseline: r.baseline,
            curve,
        }
    }

    pub fn model_curve(&self) -> Result<ModelCurve> {
        Ok(ModelCurve {
            tag: self.kind.to_string(),
            order: self.order.clone(),
            gains: crate::featsel::gains_from_curve(&self.curve)?,
        })
    }
}

pub fn consensus_table(cfg: &ExperimentConfig, c: &ConsensusRanking) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["rank", "feature_name", "flat_index", "provenance"]);
    for (i, (p, prov)) in c.order.iter().zip(&c.provenance).enumerate() {
        t.push(vec![(i + 1).to_string(), p.name(), p.flat().to_string(), prov.to_string()]);
    }
    t
}
