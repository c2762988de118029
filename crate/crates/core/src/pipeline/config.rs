use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::featsel::Randomization;
use crate::noise::{NoiseKind, DEFAULT_STRENGTHS};
use crate::sampling::DatasetKind;
use crate::svm::tune::{DEFAULT_C_GRID, DEFAULT_GAMMA_GRID};

/// Every knob of an experiment run. Text form is one `key = value` per line,
/// `#` starts a comment, lists are comma-separated.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_b: usize,
    pub n_w: usize,
    pub n_ghz: usize,
    /// Size of the held-out four-class set.
    pub n_cascade: usize,
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub c_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    /// Training rows used for the grid search; 0 searches on the full split.
    /// The winning cell is always retrained on the full training split.
    pub tune_rows: usize,
    pub svm_tol: f64,
    pub cache_mb: usize,
    pub featsel_repeats: usize,
    /// Validation rows scored for importance; 0 uses the whole split.
    pub featsel_eval_rows: usize,
    /// Training rows for prefix retraining; 0 uses the whole split.
    pub featsel_train_rows: usize,
    pub featsel_mode: Randomization,
    pub noise_kinds: Vec<NoiseKind>,
    pub noise_strengths: Vec<f64>,
    pub ood_samples: usize,
    pub out_dir: PathBuf,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            n_b: 20_000,
            n_w: 20_000,
            n_ghz: 20_000,
            n_cascade: 4_000,
            train_frac: 0.70,
            val_frac: 0.15,
            test_frac: 0.15,
            c_grid: DEFAULT_C_GRID.to_vec(),
            gamma_grid: DEFAULT_GAMMA_GRID.to_vec(),
            tune_rows: 4_000,
            svm_tol: 1e-3,
            cache_mb: 1024,
            featsel_repeats: 50,
            featsel_eval_rows: 0,
            featsel_train_rows: 0,
            featsel_mode: Randomization::Permute,
            noise_kinds: NoiseKind::ALL.to_vec(),
            noise_strengths: DEFAULT_STRENGTHS.to_vec(),
            ood_samples: 2_000,
            out_dir: PathBuf::from("out"),
            threads: 0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn n_for(&self, kind: DatasetKind) -> usize {
        match kind {
            DatasetKind::B => self.n_b,
            DatasetKind::W => self.n_w,
            DatasetKind::Ghz => self.n_ghz,
            DatasetKind::Cascade4 => self.n_cascade,
        }
    }

    pub fn grid(&self) -> Vec<(f64, f64)> {
        self.c_grid
            .iter()
            .flat_map(|&c| self.gamma_grid.iter().map(move |&g| (c, g)))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let fr = [self.train_frac, self.val_frac, self.test_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("split fractions {fr:?} must sum to 1")));
        }
        for (name, n) in [("n_b", self.n_b), ("n_w", self.n_w), ("n_ghz", self.n_ghz), ("n_cascade", self.n_cascade)] {
            if n < 10 {
                return Err(Error::InvalidArgument(format!("{name} = {n} is below 10")));
            }
        }
        if self.c_grid.is_empty() || self.gamma_grid.is_empty() {
            return Err(Error::InvalidArgument("hyperparameter grid is empty".into()));
        }
        if self.c_grid.iter().chain(&self.gamma_grid).any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidArgument("grid values must be positive".into()));
        }
        if self.featsel_repeats < 1 {
            return Err(Error::InvalidArgument("featsel_repeats must be at least 1".into()));
        }
        if self.noise_kinds.is_empty() || self.noise_strengths.is_empty() {
            return Err(Error::InvalidArgument("noise grid is empty".into()));
        }
        if self.noise_strengths.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidArgument("noise strengths must lie in [0, 1]".into()));
        }
        if !(self.svm_tol > 0.0) {
            return Err(Error::InvalidArgument("svm_tol must be positive".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse_num(key, v)?,
            "n_b" => self.n_b = parse_num(key, v)?,
            "n_w" => self.n_w = parse_num(key, v)?,
            "n_ghz" => self.n_ghz = parse_num(key, v)?,
            "n_cascade" => self.n_cascade = parse_num(key, v)?,
            "train_frac" => self.train_frac = parse_num(key, v)?,
            "val_frac" => self.val_frac = parse_num(key, v)?,
            "test_frac" => self.test_frac = parse_num(key, v)?,
            "c_grid" => self.c_grid = parse_list(key, v)?,
            "gamma_grid" => self.gamma_grid = parse_list(key, v)?,
            "tune_rows" => self.tune_rows = parse_num(key, v)?,
            "svm_tol" => self.svm_tol = parse_num(key, v)?,
            "cache_mb" => self.cache_mb = parse_num(key, v)?,
            "featsel_repeats" => self.featsel_repeats = parse_num(key, v)?,
            "featsel_eval_rows" => self.featsel_eval_rows = parse_num(key, v)?,
            "featsel_train_rows" => self.featsel_train_rows = parse_num(key, v)?,
            "featsel_mode" => {
                self.featsel_mode = match v.to_ascii_lowercase().as_str() {
                    "permute" => Randomization::Permute,
                    "uniform" => Randomization::Uniform,
                    _ => return Err(Error::InvalidArgument(format!("bad featsel_mode {v:?}"))),
                }
            }
            "noise_kinds" => self.noise_kinds = parse_list(key, v)?,
            "noise_strengths" => self.noise_strengths = parse_list(key, v)?,
            "ood_samples" => self.ood_samples = parse_num(key, v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "threads" => self.threads = parse_num(key, v)?,
            other => return Err(Error::InvalidArgument(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses the text form over the defaults, then validates.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("config line {}: expected key = value", lineno + 1)))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Canonical text form. `out_dir` and `threads` are left out because they
    /// do not change any result.
    pub fn to_text(&self) -> String {
        let mode = match self.featsel_mode {
            Randomization::Permute => "permute",
            Randomization::Uniform => "uniform",
        };
        let mut s = String::new();
        let pairs: Vec<(&str, String)> = vec![
            ("seed", self.seed.to_string()),
            ("n_b", self.n_b.to_string()),
            ("n_w", self.n_w.to_string()),
            ("n_ghz", self.n_ghz.to_string()),
            ("n_cascade", self.n_cascade.to_string()),
            ("train_frac", self.train_frac.to_string()),
            ("val_frac", self.val_frac.to_string()),
            ("test_frac", self.test_frac.to_string()),
            ("c_grid", join(&self.c_grid)),
            ("gamma_grid", join(&self.gamma_grid)),
            ("tune_rows", self.tune_rows.to_string()),
            ("svm_tol", self.svm_tol.to_string()),
            ("cache_mb", self.cache_mb.to_string()),
            ("featsel_repeats", self.featsel_repeats.to_string()),
            ("featsel_eval_rows", self.featsel_eval_rows.to_string()),
            ("featsel_train_rows", self.featsel_train_rows.to_string()),
            ("featsel_mode", mode.to_string()),
            ("noise_kinds", join(&self.noise_kinds)),
            ("noise_strengths", join(&self.noise_strengths)),
            ("ood_samples", self.ood_samples.to_string()),
        ];
        for (k, v) in pairs {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::to_text`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn cache_bytes(&self) -> usize {
        self.cache_mb.saturating_mul(1 << 20)
    }
}
