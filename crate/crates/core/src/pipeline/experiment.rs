use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{fmt_f, CsvTable};
use super::config::ExperimentConfig;
use crate::cascade::{evaluate_cascade, CascadeMetrics, CascadeModel, EntanglementClass};
use crate::error::{Error, Result};
use crate::featsel::{
    importance_scores, prefix_accuracy_curve, CascadeTraining, ConsensusRanking, ImportanceRanking,
};
use crate::noise::NoisePoint;
use crate::oracles::{ood_samples, OodFamily};
use crate::qcore::{features_of, PauliIndex, N_FEATURES};
use crate::sampling::{build_dataset, DatasetKind, GeneratorConfig, LabeledDataset, RngSeed};
use crate::svm::smo::SmoParams;
use crate::svm::tune::GridCell;
use crate::svm::{all_features, evaluate, train, tune, KernelSpec, Metrics, SvmModel, TrainConfig};

pub fn root_seed(cfg: &ExperimentConfig) -> RngSeed {
    RngSeed::root(cfg.seed)
}

pub fn generate(kind: DatasetKind, n: usize, cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    build_dataset(kind, n, root_seed(cfg), &GeneratorConfig::default())
}

/// Row indices of the train, validation and test splits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split: each class is shuffled on its own stream and cut at the
/// configured fractions. Indices come back in ascending order.
pub fn split_indices(labels: &[u8], cfg: &ExperimentConfig, tag: &str) -> Splits {
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut s = Splits {
        train: vec![],
        val: vec![],
        test: vec![],
    };
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] as usize == c).collect();
        idx.shuffle(&mut root_seed(cfg).derive(&format!("split/{tag}"), c as u64).rng());
        let n = idx.len() as f64;
        let a = (n * cfg.train_frac).round() as usize;
        let b = ((n * (cfg.train_frac + cfg.val_frac)).round() as usize).clamp(a, idx.len());
        s.train.extend_from_slice(&idx[..a]);
        s.val.extend_from_slice(&idx[a..b]);
        s.test.extend_from_slice(&idx[b..]);
    }
    s.train.sort_unstable();
    s.val.sort_unstable();
    s.test.sort_unstable();
    s
}

#[derive(Clone, Debug)]
pub struct SplitData {
    pub train: LabeledDataset,
    pub val: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn split_dataset(ds: &LabeledDataset, cfg: &ExperimentConfig) -> SplitData {
    let s = split_indices(&ds.labels(), cfg, ds.kind.as_str());
    SplitData {
        train: ds.subset(&s.train),
        val: ds.subset(&s.val),
        test: ds.subset(&s.test),
    }
}

/// Stratified random subset of `rows` rows; the whole set when `rows` is 0 or
/// not smaller than the dataset.
pub fn subsample(ds: &LabeledDataset, rows: usize, tag: &str, cfg: &ExperimentConfig) -> LabeledDataset {
    if rows == 0 || rows >= ds.len() {
        return ds.clone();
    }
    let labels = ds.labels();
    let frac = rows as f64 / ds.len() as f64;
    let mut keep = Vec::with_capacity(rows);
    for c in 0..ds.kind.n_classes() {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] as usize == c).collect();
        idx.shuffle(&mut root_seed(cfg).derive(&format!("subsample/{tag}"), c as u64).rng());
        let take = (idx.len() as f64 * frac).round() as usize;
        keep.extend_from_slice(&idx[..take.min(idx.len())]);
    }
    keep.sort_unstable();
    ds.subset(&keep)
}

pub fn base_train_config(cfg: &ExperimentConfig, c: f64, kernel: KernelSpec) -> TrainConfig {
    TrainConfig {
        c,
        kernel,
        tol: cfg.svm_tol,
        max_passes: SmoParams::default().max_passes,
        cache_bytes: cfg.cache_bytes(),
    }
}

/// The hyperparameters a trained model was fitted with.
pub fn train_config_of(model: &SvmModel, cfg: &ExperimentConfig) -> TrainConfig {
    base_train_config(cfg, model.c, model.kernel)
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: SvmModel,
    pub best_c: f64,
    pub best_gamma: f64,
    pub cells: Vec<GridCell>,
    /// Training rows used during the grid search.
    pub tuned_on: usize,
    pub val: Metrics,
    pub test: Metrics,
}

/// Grid search for an RBF model on (a subsample of) the training split, then
/// a refit of the winning cell on the full training split.
pub fn train_kind(split: &SplitData, cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    let template = KernelSpec::rbf(1.0)?;
    let base = base_train_config(cfg, 1.0, template);
    let features = all_features();
    let tag = format!("tune/{}", split.train.kind);
    let tune_set = subsample(&split.train, cfg.tune_rows, &tag, cfg);
    let r = tune(&tune_set, &split.val, &cfg.grid(), template, &base, &features, cfg.seed)?;
    let mut model = if tune_set.len() == split.train.len() {
        r.model
    } else {
        let full = TrainConfig {
            c: r.best_c,
            kernel: template.with_gamma(r.best_gamma)?,
            ..base
        };
        train(&split.train, &features, &full, cfg.seed)?
    };
    let val = evaluate(&model, &split.val);
    model.meta.val_accuracy = Some(val.accuracy);
    let test = evaluate(&model, &split.test);
    Ok(TrainOutcome {
        model,
        best_c: r.best_c,
        best_gamma: r.best_gamma,
        cells: r.cells,
        tuned_on: tune_set.len(),
        val,
        test,
    })
}

/// Long-format metrics: `split,record,x,y,value`. Records are `accuracy` and
/// `auc` (value only), `confusion` (x = true, y = predicted, value = count)
/// and `roc` (x = FPR, y = TPR).
pub fn metrics_table(cfg: &ExperimentConfig, parts: &[(&str, &Metrics)]) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["split", "record", "x", "y", "value"]);
    let e = String::new;
    for (split, m) in parts {
        let s = split.to_string();
        t.push(vec![s.clone(), "accuracy".into(), e(), e(), fmt_f(m.accuracy)]);
        t.push(vec![s.clone(), "auc".into(), e(), e(), fmt_f(m.auc)]);
        for (i, row) in m.confusion.iter().enumerate() {
            for (j, n) in row.iter().enumerate() {
                t.push(vec![s.clone(), "confusion".into(), i.to_string(), j.to_string(), n.to_string()]);
            }
        }
        for &(x, y) in &m.roc {
            t.push(vec![s.clone(), "roc".into(), fmt_f(x), fmt_f(y), e()]);
        }
    }
    t
}

pub fn tuning_table(cfg: &ExperimentConfig, out: &TrainOutcome) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["C", "gamma", "val_correct", "val_accuracy", "selected"]);
    for c in &out.cells {
        let selected = c.c == out.best_c && c.gamma == out.best_gamma;
        t.push(vec![
            fmt_f(c.c),
            fmt_f(c.gamma),
            c.val_correct.to_string(),
            fmt_f(c.val_accuracy),
            u8::from(selected).to_string(),
        ]);
    }
    t
}

pub fn cascade_tables(cfg: &ExperimentConfig, m: &CascadeMetrics) -> (CsvTable, CsvTable) {
    let mut conf = CsvTable::new(cfg, &["true_class", "predicted_class", "count"]);
    for (i, row) in m.confusion.iter().enumerate() {
        for (j, n) in row.iter().enumerate() {
            conf.push(vec![
                EntanglementClass::ALL[i].name().into(),
                EntanglementClass::ALL[j].name().into(),
                n.to_string(),
            ]);
        }
    }
    let mut summary = CsvTable::new(cfg, &["metric", "value"]);
    summary.push(vec!["accuracy".into(), fmt_f(m.accuracy)]);
    for (c, r) in EntanglementClass::ALL.iter().zip(&m.recall) {
        summary.push(vec![format!("recall_{}", c.name()), fmt_f(*r)]);
    }
    (conf, summary)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodRecord {
    pub family: String,
    pub params: Vec<f64>,
    pub model: DatasetKind,
    pub predicted: u8,
    pub expected: u8,
}

/// Predictions of each model on `n` members of each family. Samples without
/// a defined target for a model are skipped for that model.
pub fn ood_report(
    models: &[(DatasetKind, &SvmModel)],
    families: &[OodFamily],
    n: usize,
    rotated: bool,
    cfg: &ExperimentConfig,
) -> Result<Vec<OodRecord>> {
    let mut out = Vec::new();
    for &family in families {
        let samples = ood_samples(family, n, rotated, root_seed(cfg))?;
        let feats = samples
            .par_iter()
            .map(|s| features_of(&s.state))
            .collect::<Result<Vec<_>>>()?;
        for &(kind, model) in models {
            for (s, f) in samples.iter().zip(&feats) {
                if let Some(expected) = s.expected(kind) {
                    out.push(OodRecord {
                        family: s.family_label(),
                        params: s.params.clone(),
                        model: kind,
                        predicted: model.predict_features(f),
                        expected,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OodSummary {
    pub family: String,
    pub model: DatasetKind,
    pub accuracy: f64,
    pub n: usize,
}

pub fn ood_summary(records: &[OodRecord]) -> Vec<OodSummary> {
    let mut out: Vec<(OodSummary, usize)> = Vec::new();
    for r in records {
        let hit = usize::from(r.predicted == r.expected);
        match out.iter_mut().find(|(s, _)| s.family == r.family && s.model == r.model) {
            Some((s, ok)) => {
                s.n += 1;
                *ok += hit;
            }
            None => out.push((
                OodSummary {
                    family: r.family.clone(),
                    model: r.model,
                    accuracy: 0.0,
                    n: 1,
                },
                hit,
            )),
        }
    }
    out.into_iter()
        .map(|(mut s, ok)| {
            s.accuracy = ok as f64 / s.n as f64;
            s
        })
        .collect()
}

pub fn ood_tables(cfg: &ExperimentConfig, records: &[OodRecord]) -> (CsvTable, CsvTable) {
    let mut rep = CsvTable::new(cfg, &["family", "params", "model", "predicted", "expected"]);
    for r in records {
        let params: Vec<String> = r.params.iter().map(|p| fmt_f(*p)).collect();
        rep.push(vec![
            r.family.clone(),
            params.join(";"),
            r.model.to_string(),
            r.predicted.to_string(),
            r.expected.to_string(),
        ]);
    }
    let mut sum = CsvTable::new(cfg, &["family", "model", "accuracy", "n"]);
    for s in ood_summary(records) {
        sum.push(vec![s.family, s.model.to_string(), fmt_f(s.accuracy), s.n.to_string()]);
    }
    (rep, sum)
}

pub fn noise_table(cfg: &ExperimentConfig, points: &[NoisePoint]) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["kind", "strength", "accuracy", "n_states", "seed"]);
    for p in points {
        t.push(vec![
            p.kind.to_string(),
            fmt_f(p.strength),
            fmt_f(p.accuracy),
            p.n_states.to_string(),
            cfg.seed.to_string(),
        ]);
    }
    t
}

/// Importance ranking on (a subsample of) the validation split, then test
/// accuracy after retraining on each prefix `ks` of that ranking.
pub fn rank_model(
    model: &SvmModel,
    split: &SplitData,
    ks: &[usize],
    cfg: &ExperimentConfig,
) -> Result<(ImportanceRanking, Vec<(usize, f64)>)> {
    let kind = split.train.kind;
    let eval = subsample(&split.val, cfg.featsel_eval_rows, &format!("featsel-eval/{kind}"), cfg);
    let seed = root_seed(cfg).derive(&format!("featsel/{kind}"), 0);
    let ranking = importance_scores(model, &eval, cfg.featsel_repeats, cfg.featsel_mode, seed)?;
    let train_set = subsample(&split.train, cfg.featsel_train_rows, &format!("featsel-train/{kind}"), cfg);
    let curve = prefix_accuracy_curve(
        &train_set,
        &split.test,
        &ranking.order,
        ks,
        &train_config_of(model, cfg),
        cfg.seed,
    )?;
    Ok((ranking, curve))
}

pub fn all_ks() -> Vec<usize> {
    (1..=N_FEATURES).collect()
}

pub fn prefix_table(cfg: &ExperimentConfig, order: &[PauliIndex], curve: &[(usize, f64)]) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["k", "feature_name", "accuracy"]);
    for &(k, a) in curve {
        t.push(vec![k.to_string(), order[k - 1].name(), fmt_f(a)]);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub k: usize,
    pub feature: PauliIndex,
    pub acc_b: f64,
    pub acc_w: f64,
    pub acc_ghz: f64,
    /// Undefined below three features.
    pub acc_cascade: Option<f64>,
}

pub struct AblationInputs<'a> {
    pub ghz: (&'a SplitData, &'a SvmModel),
    pub w: (&'a SplitData, &'a SvmModel),
    pub b: (&'a SplitData, &'a SvmModel),
    pub cascade_test: &'a LabeledDataset,
}

/// Retrains all three models on each consensus prefix (hyperparameters of
/// the given full models) and records binary and cascade test accuracy.
pub fn ablation(
    consensus: &ConsensusRanking,
    ks: &[usize],
    inputs: &AblationInputs<'_>,
    cfg: &ExperimentConfig,
) -> Result<Vec<AblationRow>> {
    if let Some(k) = ks.iter().find(|&&k| k < 1 || k > consensus.order.len()) {
        return Err(Error::InvalidArgument(format!("prefix size {k} out of range")));
    }
    let sub = |s: &SplitData| subsample(&s.train, cfg.featsel_train_rows, &format!("featsel-train/{}", s.train.kind), cfg);
    let (tg, tw, tb) = (sub(inputs.ghz.0), sub(inputs.w.0), sub(inputs.b.0));
    let training = CascadeTraining {
        ghz: (&tg, train_config_of(inputs.ghz.1, cfg)),
        w: (&tw, train_config_of(inputs.w.1, cfg)),
        b: (&tb, train_config_of(inputs.b.1, cfg)),
    };
    ks.iter()
        .map(|&k| {
            let m = training.train_on(&consensus.order[..k], cfg.seed)?;
            let acc = |model: &SvmModel, s: &SplitData| evaluate(model, &s.test).accuracy;
            Ok(AblationRow {
                k,
                feature: consensus.order[k - 1],
                acc_b: acc(&m.m_b, inputs.b.0),
                acc_w: acc(&m.m_w, inputs.w.0),
                acc_ghz: acc(&m.m_ghz, inputs.ghz.0),
                acc_cascade: if k >= 3 {
                    Some(evaluate_cascade(&m, inputs.cascade_test)?.accuracy)
                } else {
                    None
                },
            })
        })
        .collect()
}

pub fn ablation_table(cfg: &ExperimentConfig, rows: &[AblationRow]) -> CsvTable {
    let mut t = CsvTable::new(cfg, &["feature_name", "acc_B", "acc_W", "acc_GHZ", "acc_cascade"]);
    for r in rows {
        t.push(vec![
            r.feature.name(),
            fmt_f(r.acc_b),
            fmt_f(r.acc_w),
            fmt_f(r.acc_ghz),
            r.acc_cascade.map(fmt_f).unwrap_or_default(),
        ]);
    }
    t
}

pub fn cascade_of(ghz: &SvmModel, w: &SvmModel, b: &SvmModel) -> CascadeModel {
    CascadeModel::new(ghz.clone(), w.clone(), b.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn splits_are_disjoint_stratified_and_deterministic() {
        let labels: Vec<u8> = (0..200).map(|i| (i % 2) as u8).collect();
        let cfg = small_cfg();
        let s = split_indices(&labels, &cfg, "B");
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (140, 30, 30));
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..200).collect::<Vec<_>>());
        assert_eq!(s.val.iter().filter(|&&i| labels[i] == 1).count(), 15);
        assert_eq!(split_indices(&labels, &cfg, "B"), s);
        assert_ne!(split_indices(&labels, &ExperimentConfig { seed: 4, ..cfg }, "B"), s);
    }

    #[test]
    fn subsample_keeps_class_balance() {
        let cfg = small_cfg();
        let ds = generate(DatasetKind::B, 60, &cfg).unwrap();
        let s = subsample(&ds, 20, "t", &cfg);
        assert_eq!(s.counts(), vec![10, 10]);
        assert_eq!(subsample(&ds, 0, "t", &cfg), ds);
    }

    #[test]
    fn ood_summary_counts() {
        let rec = |family: &str, p, e| OodRecord {
            family: family.into(),
            params: vec![],
            model: DatasetKind::B,
            predicted: p,
            expected: e,
        };
        let s = ood_summary(&[rec("UPB", 1, 1), rec("UPB", 0, 1), rec("EDGE", 1, 1)]);
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].n, s[0].accuracy), (2, 0.5));
        assert_eq!(s[1].accuracy, 1.0);
    }

    #[test]
    fn metrics_table_shape() {
        let m = crate::svm::metrics_from_scores(&[0.5, -0.2, 0.1, -0.9], &[1, 0, 0, 1]);
        let t = metrics_table(&small_cfg(), &[("test", &m)]);
        let roc_rows = t.render().lines().filter(|l| l.starts_with("test,roc")).count();
        // thresholds at +inf, the three midpoints and -inf
        assert_eq!(roc_rows, 5);
        assert_eq!(t.len(), 2 + 4 + 5);
    }
}
