//! Permutation importance, prefix retraining curves and the cross-model
//! consensus ordering of the 63 features.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{evaluate_cascade, CascadeModel};
use crate::error::{Error, Result};
use crate::qcore::{PauliIndex, N_FEATURES};
use crate::sampling::{DatasetKind, LabeledDataset, RngSeed};
use crate::svm::{project_dataset, train, FeatureMatrix, KernelKind, SvmModel, TrainConfig};

/// How a feature column is destroyed when scoring its importance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Randomization {
    /// Shuffle the column across evaluation rows.
    Permute,
    /// Replace every entry by an independent uniform draw on [−1, 1].
    Uniform,
}

/// Predictions of a fixed model on a fixed evaluation matrix, optionally with
/// one active column replaced.
pub trait ColumnScorer: Sync {
    fn n_rows(&self) -> usize;
    /// Active-feature column of `p`, or `None` when the model ignores it.
    fn column_of(&self, p: PauliIndex) -> Option<usize>;
    fn column(&self, col: usize) -> Vec<f64>;
    fn predict(&self, replaced: Option<(usize, &[f64])>) -> Vec<u8>;
}

/// SVM scorer that caches per-(row, support vector) squared distances or inner
/// products, so replacing one column costs O(rows · SVs).
pub struct SvmScorer<'a> {
    model: &'a SvmModel,
    x: FeatureMatrix,
    /// Row-major `[row][sv]`: squared distance (RBF) or inner product (POLY).
    base: Option<Vec<f64>>,
}

const SCORER_CACHE_LIMIT: usize = 1 << 25;

impl<'a> SvmScorer<'a> {
    pub fn new(model: &'a SvmModel, eval: &LabeledDataset) -> Self {
        let x = project_dataset(eval, &model.active_features);
        let n_sv = model.support_vectors.len();
        let base = (x.n_rows() * n_sv <= SCORER_CACHE_LIMIT).then(|| {
            (0..x.n_rows())
                .into_par_iter()
                .flat_map_iter(|r| {
                    let xr = x.row(r);
                    model.support_vectors.iter().map(move |sv| match model.kernel.kind {
                        KernelKind::Rbf => xr.iter().zip(sv).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
                        KernelKind::Poly => xr.iter().zip(sv).map(|(a, b)| a * b).sum::<f64>(),
                    })
                })
                .collect()
        });
        Self { model, x, base }
    }

    fn row_value(&self, r: usize, replaced: Option<(usize, &[f64])>) -> f64 {
        let m = self.model;
        let Some(base) = &self.base else {
            let mut row = self.x.row(r).to_vec();
            if let Some((c, v)) = replaced {
                row[c] = v[r];
            }
            return m.decision_value(&row).expect("projected row");
        };
        let n_sv = m.support_vectors.len();
        let cached = &base[r * n_sv..(r + 1) * n_sv];
        let k = &m.kernel;
        let mut s = m.bias;
        match (replaced, k.kind) {
            (None, KernelKind::Rbf) => {
                for (d2, a) in cached.iter().zip(&m.signed_duals) {
                    s += a * k.from_sq_dist(*d2);
                }
            }
            (None, KernelKind::Poly) => {
                for (dot, a) in cached.iter().zip(&m.signed_duals) {
                    s += a * k.from_dot(*dot);
                }
            }
            (Some((c, v)), KernelKind::Rbf) => {
                let (old, new) = (self.x.row(r)[c], v[r]);
                for ((d2, a), sv) in cached.iter().zip(&m.signed_duals).zip(&m.support_vectors) {
                    let t = sv[c];
                    let d2 = (d2 - (old - t) * (old - t) + (new - t) * (new - t)).max(0.0);
                    s += a * k.from_sq_dist(d2);
                }
            }
            (Some((c, v)), KernelKind::Poly) => {
                let (old, new) = (self.x.row(r)[c], v[r]);
                for ((dot, a), sv) in cached.iter().zip(&m.signed_duals).zip(&m.support_vectors) {
                    s += a * k.from_dot(dot + (new - old) * sv[c]);
                }
            }
        }
        s
    }
}

impl ColumnScorer for SvmScorer<'_> {
    fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    fn column_of(&self, p: PauliIndex) -> Option<usize> {
        self.model.active_features.iter().position(|&q| q == p)
    }

    fn column(&self, col: usize) -> Vec<f64> {
        (0..self.x.n_rows()).map(|r| self.x.row(r)[col]).collect()
    }

    fn predict(&self, replaced: Option<(usize, &[f64])>) -> Vec<u8> {
        (0..self.x.n_rows())
            .into_par_iter()
            .map(|r| u8::from(self.row_value(r, replaced) > 0.0))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    /// Mean accuracy drop per feature, indexed by feature position (flat − 1).
    pub scores: Vec<f64>,
    /// Features by descending score; ties go to the lower flat index.
    pub order: Vec<PauliIndex>,
    pub n_repeats: usize,
    pub baseline: f64,
    pub seed: u64,
}

impl ImportanceRanking {
    pub fn from_scores(scores: Vec<f64>, n_repeats: usize, baseline: f64, seed: u64) -> Result<Self> {
        if scores.len() != N_FEATURES {
            return Err(Error::Dimension(format!("{} importance scores", scores.len())));
        }
        let mut order: Vec<PauliIndex> = PauliIndex::all().collect();
        order.sort_by(|a, b| {
            scores[b.position()]
                .total_cmp(&scores[a.position()])
                .then(a.flat().cmp(&b.flat()))
        });
        Ok(Self {
            scores,
            order,
            n_repeats,
            baseline,
            seed,
        })
    }
}

fn accuracy(pred: &[u8], labels: &[u8]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let ok = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    ok as f64 / labels.len() as f64
}

/// Importance of feature i: mean over repeats of `S − S_j`, where `S` is the
/// accuracy on `labels` and `S_j` the accuracy with column i randomized.
/// Features the model does not use score exactly zero.
pub fn importance_scores_with<S: ColumnScorer>(
    scorer: &S,
    labels: &[u8],
    n_repeats: usize,
    mode: Randomization,
    seed: RngSeed,
) -> Result<ImportanceRanking> {
    if n_repeats < 1 {
        return Err(Error::InvalidArgument("importance needs at least one repeat".into()));
    }
    if labels.len() != scorer.n_rows() {
        return Err(Error::Dimension(format!(
            "{} labels for {} evaluation rows",
            labels.len(),
            scorer.n_rows()
        )));
    }
    let baseline = accuracy(&scorer.predict(None), labels);
    let jobs: Vec<(PauliIndex, usize, usize)> = PauliIndex::all()
        .filter_map(|p| scorer.column_of(p).map(|c| (p, c)))
        .flat_map(|(p, c)| (0..n_repeats).map(move |j| (p, c, j)))
        .collect();
    let drops: Vec<(PauliIndex, f64)> = jobs
        .par_iter()
        .map(|&(p, c, j)| {
            let mut rng = seed.derive(&format!("importance/{}", p.flat()), j as u64).rng();
            let values = match mode {
                Randomization::Permute => {
                    let mut v = scorer.column(c);
                    v.shuffle(&mut rng);
                    v
                }
                Randomization::Uniform => (0..scorer.n_rows()).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            };
            (p, baseline - accuracy(&scorer.predict(Some((c, &values))), labels))
        })
        .collect();
    let mut scores = vec![0.0; N_FEATURES];
    for (p, d) in drops {
        scores[p.position()] += d;
    }
    for s in &mut scores {
        *s /= n_repeats as f64;
    }
    ImportanceRanking::from_scores(scores, n_repeats, baseline, seed.seed)
}

pub fn importance_scores(
    model: &SvmModel,
    eval: &LabeledDataset,
    n_repeats: usize,
    mode: Randomization,
    seed: RngSeed,
) -> Result<ImportanceRanking> {
    importance_scores_with(&SvmScorer::new(model, eval), &eval.labels(), n_repeats, mode, seed)
}

fn check_ks(ks: &[usize], lo: usize, max: usize) -> Result<()> {
    match ks.iter().find(|&&k| k < lo || k > max) {
        Some(k) => Err(Error::InvalidArgument(format!("prefix size {k} outside {lo}..={max}"))),
        None => Ok(()),
    }
}

/// Test accuracy after retraining on the top-k features of `order`, with the
/// hyperparameters of `cfg` held fixed.
pub fn prefix_accuracy_curve(
    train_set: &LabeledDataset,
    test_set: &LabeledDataset,
    order: &[PauliIndex],
    ks: &[usize],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    check_ks(ks, 1, order.len())?;
    let labels = test_set.labels();
    ks.iter()
        .map(|&k| {
            let model = train(train_set, &order[..k], cfg, seed)?;
            let x = project_dataset(test_set, &model.active_features);
            let pred: Vec<u8> = model.decision_values(&x)?.iter().map(|&s| u8::from(s > 0.0)).collect();
            Ok((k, accuracy(&pred, &labels)))
        })
        .collect()
}

/// `acc(k) − acc(k−1)` for k = 1..=63 from a full prefix curve; the first
/// entry is measured against chance (0.5).
pub fn gains_from_curve(curve: &[(usize, f64)]) -> Result<Vec<f64>> {
    let full = curve.len() == N_FEATURES && curve.iter().enumerate().all(|(i, &(k, _))| k == i + 1);
    if !full {
        return Err(Error::MalformedRanking("gains need a curve over k = 1..=63".into()));
    }
    let mut prev = 0.5;
    Ok(curve
        .iter()
        .map(|&(_, a)| {
            let g = a - prev;
            prev = a;
            g
        })
        .collect())
}

/// One model's contribution to the consensus: its ranking and the accuracy
/// gain of adding the feature at each rank.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelCurve {
    pub tag: String,
    pub order: Vec<PauliIndex>,
    pub gains: Vec<f64>,
}

impl ModelCurve {
    fn validate(&self) -> Result<()> {
        let unique: HashSet<PauliIndex> = self.order.iter().copied().collect();
        if self.order.len() != N_FEATURES || unique.len() != N_FEATURES {
            return Err(Error::MalformedRanking(format!(
                "{} ranking is not a permutation of the 63 features",
                self.tag
            )));
        }
        if self.gains.len() != N_FEATURES || self.gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::MalformedRanking(format!("{} gains must be 63 finite values", self.tag)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Top feature of the named model.
    Top(String),
    /// Highest-gain candidate at this rank.
    Gain(String),
    /// Taken from the reserve list; pushed there by the named model.
    Reserve(String),
    /// Never selected; appended at the end in flat-index order.
    Fill,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Top(t) => write!(f, "top:{t}"),
            Self::Gain(t) => write!(f, "gain:{t}"),
            Self::Reserve(t) => write!(f, "reserve:{t}"),
            Self::Fill => f.write_str("fill"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ReserveEvent {
    Push { rank: usize, feature: PauliIndex, tag: String, gain: f64 },
    Take { rank: usize, feature: PauliIndex },
    SkipSelected { rank: usize, feature: PauliIndex },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusRanking {
    pub order: Vec<PauliIndex>,
    pub provenance: Vec<Provenance>,
    pub reserve_trace: Vec<ReserveEvent>,
}

/// Merges three model rankings, given in the order GHZ, W, B.
pub fn consensus_ranking(curves: [&ModelCurve; 3]) -> Result<ConsensusRanking> {
    for c in curves {
        c.validate()?;
    }
    let mut order = Vec::with_capacity(N_FEATURES);
    let mut provenance = Vec::with_capacity(N_FEATURES);
    let mut trace = Vec::new();
    let mut seen = HashSet::new();
    let mut reserve: VecDeque<(PauliIndex, String)> = VecDeque::new();

    for c in curves {
        if seen.insert(c.order[0]) {
            order.push(c.order[0]);
            provenance.push(Provenance::Top(c.tag.clone()));
        }
    }

    for rank in 1..N_FEATURES {
        if order.len() == N_FEATURES {
            break;
        }
        let mut cands: Vec<(f64, PauliIndex, &str)> = curves
            .iter()
            .map(|c| (c.gains[rank], c.order[rank], c.tag.as_str()))
            .collect();
        // stable: equal gains keep the GHZ, W, B order
        cands.sort_by(|a, b| b.0.total_cmp(&a.0));
        let (_, best, best_tag) = cands[0];
        for &(gain, feature, tag) in &cands[1..] {
            reserve.push_back((feature, tag.to_string()));
            trace.push(ReserveEvent::Push {
                rank: rank + 1,
                feature,
                tag: tag.to_string(),
                gain,
            });
        }
        if seen.insert(best) {
            order.push(best);
            provenance.push(Provenance::Gain(best_tag.to_string()));
            continue;
        }
        while let Some((feature, tag)) = reserve.pop_front() {
            if seen.insert(feature) {
                order.push(feature);
                provenance.push(Provenance::Reserve(tag));
                trace.push(ReserveEvent::Take { rank: rank + 1, feature });
                break;
            }
            trace.push(ReserveEvent::SkipSelected { rank: rank + 1, feature });
        }
    }

    for (feature, tag) in reserve {
        if seen.insert(feature) {
            order.push(feature);
            provenance.push(Provenance::Reserve(tag));
        }
    }
    for p in PauliIndex::all() {
        if seen.insert(p) {
            order.push(p);
            provenance.push(Provenance::Fill);
        }
    }
    Ok(ConsensusRanking {
        order,
        provenance,
        reserve_trace: trace,
    })
}

/// Binary training splits and hyperparameters for the three cascade members.
pub struct CascadeTraining<'a> {
    pub ghz: (&'a LabeledDataset, TrainConfig),
    pub w: (&'a LabeledDataset, TrainConfig),
    pub b: (&'a LabeledDataset, TrainConfig),
}

impl CascadeTraining<'_> {
    pub fn train_on(&self, active: &[PauliIndex], seed: u64) -> Result<CascadeModel> {
        for (ds, kind) in [(self.ghz.0, DatasetKind::Ghz), (self.w.0, DatasetKind::W), (self.b.0, DatasetKind::B)] {
            if ds.kind != kind {
                return Err(Error::InvalidArgument(format!("expected a {kind} dataset, got {}", ds.kind)));
            }
        }
        Ok(CascadeModel::new(
            train(self.ghz.0, active, &self.ghz.1, seed)?,
            train(self.w.0, active, &self.w.1, seed)?,
            train(self.b.0, active, &self.b.1, seed)?,
        ))
    }
}

/// Four-class accuracy of cascades retrained on the top-k consensus features.
pub fn cascade_prefix_curve(
    consensus: &ConsensusRanking,
    ks: &[usize],
    training: &CascadeTraining<'_>,
    test_set: &LabeledDataset,
    seed: u64,
) -> Result<Vec<(usize, f64)>> {
    check_ks(ks, 3, consensus.order.len())?;
    ks.iter()
        .map(|&k| {
            let model = training.train_on(&consensus.order[..k], seed)?;
            Ok((k, evaluate_cascade(&model, test_set)?.accuracy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{train_matrix, KernelSpec};
    use proptest::prelude::*;
    use rand::Rng;

    fn p(flat: usize) -> PauliIndex {
        PauliIndex::new(flat).unwrap()
    }

    /// Rows of 63 columns from a closure; labels from another.
    struct FnScorer<F: Fn(&[f64]) -> u8 + Sync> {
        rows: Vec<Vec<f64>>,
        f: F,
    }

    impl<F: Fn(&[f64]) -> u8 + Sync> ColumnScorer for FnScorer<F> {
        fn n_rows(&self) -> usize {
            self.rows.len()
        }
        fn column_of(&self, p: PauliIndex) -> Option<usize> {
            Some(p.position())
        }
        fn column(&self, col: usize) -> Vec<f64> {
            self.rows.iter().map(|r| r[col]).collect()
        }
        fn predict(&self, replaced: Option<(usize, &[f64])>) -> Vec<u8> {
            self.rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut r = r.clone();
                    if let Some((c, v)) = replaced {
                        r[c] = v[i];
                    }
                    (self.f)(&r)
                })
                .collect()
        }
    }

    fn threshold_stub() -> (FnScorer<impl Fn(&[f64]) -> u8 + Sync>, Vec<u8>) {
        let mut rng = RngSeed::root(4).rng();
        let rows: Vec<Vec<f64>> = (0..400).map(|_| (0..63).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| u8::from(r[5] > 0.0)).collect();
        (FnScorer { rows, f: |r: &[f64]| u8::from(r[5] > 0.0) }, labels)
    }

    #[test]
    fn threshold_feature_dominates() {
        let (s, labels) = threshold_stub();
        for mode in [Randomization::Permute, Randomization::Uniform] {
            let r = importance_scores_with(&s, &labels, 20, mode, RngSeed::root(1)).unwrap();
            assert_eq!(r.baseline, 1.0);
            assert_eq!(r.order[0], p(6));
            assert!(r.scores[5] > 0.3);
            // the stub never reads the other columns
            assert!(r.scores.iter().enumerate().all(|(i, &v)| i == 5 || v == 0.0));
            // all-zero ties fall back to flat order
            assert_eq!(r.order[1], p(1));
        }
    }

    #[test]
    fn ignored_feature_in_linear_model() {
        let mut rng = RngSeed::root(5).rng();
        let rows: Vec<Vec<f64>> = (0..500).map(|_| (0..63).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let w: Vec<f64> = (0..63).map(|i| if i == 10 { 0.0 } else { ((i * 7) % 5) as f64 - 2.0 }).collect();
        let f = move |r: &[f64]| u8::from(r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() > 0.0);
        let labels: Vec<u8> = rows.iter().map(|r| f(r)).collect();
        let s = FnScorer { rows, f };
        let r = importance_scores_with(&s, &labels, 5, Randomization::Permute, RngSeed::root(2)).unwrap();
        assert_eq!(r.scores[10], 0.0);
        assert!(importance_scores_with(&s, &labels, 0, Randomization::Permute, RngSeed::root(2)).is_err());
    }

    #[test]
    fn svm_scorer_matches_direct_evaluation() {
        let mut rng = RngSeed::root(6).rng();
        let active: Vec<PauliIndex> = [3, 17, 40].iter().map(|&f| p(f)).collect();
        let rows: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] * r[1] > 0.0)).collect();
        let x = FeatureMatrix::new(&rows);
        for kernel in [KernelSpec::rbf(0.7).unwrap(), KernelSpec::poly(0.5, 3, 1.0).unwrap()] {
            let m = train_matrix("T", &x, &labels, &active, &TrainConfig::new(5.0, kernel), 0).unwrap();
            let ds = LabeledDataset::new(
                DatasetKind::B,
                rows.iter()
                    .zip(&labels)
                    .map(|(r, &l)| {
                        let mut f = crate::qcore::PauliFeatures::zeros();
                        for (v, q) in r.iter().zip(&active) {
                            f.set(*q, *v);
                        }
                        crate::sampling::Row { features: f, label: l, origin: crate::sampling::Origin::Unknown }
                    })
                    .collect(),
                0,
            )
            .unwrap();
            let s = SvmScorer::new(&m, &ds);
            assert_eq!(s.column_of(p(17)), Some(1));
            assert_eq!(s.column_of(p(1)), None);
            let direct: Vec<u8> = rows.iter().map(|r| m.predict(r).unwrap()).collect();
            assert_eq!(s.predict(None), direct);
            let newcol: Vec<f64> = (0..80).map(|i| ((i * 13) % 7) as f64 / 7.0 - 0.5).collect();
            let replaced: Vec<u8> = rows
                .iter()
                .zip(&newcol)
                .map(|(r, &v)| m.predict(&[r[0], v, r[2]]).unwrap())
                .collect();
            assert_eq!(s.predict(Some((1, &newcol))), replaced);
        }
    }

    #[test]
    fn identity_permutation_drops_nothing() {
        // a column of constants is unchanged by any shuffle
        let rows: Vec<Vec<f64>> = (0..50).map(|i| {
            let mut r = vec![0.25; 63];
            r[0] = if i % 2 == 0 { -1.0 } else { 1.0 };
            r
        }).collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 0.0)).collect();
        let s = FnScorer { rows, f: |r: &[f64]| u8::from(r[0] + r[1] > 0.0) };
        let r = importance_scores_with(&s, &labels, 10, Randomization::Permute, RngSeed::root(3)).unwrap();
        assert_eq!(r.scores[1], 0.0);
    }

    fn curve(tag: &str, order: Vec<usize>, gains: Vec<f64>) -> ModelCurve {
        ModelCurve {
            tag: tag.into(),
            order: order.into_iter().map(p).collect(),
            gains,
        }
    }

    fn flat_order() -> Vec<usize> {
        (1..=63).collect()
    }

    #[test]
    fn identical_rankings_pass_through() {
        let mut o: Vec<usize> = flat_order();
        o.reverse();
        let g: Vec<f64> = (0..63).map(|i| 1.0 / (i + 1) as f64).collect();
        let c = curve("X", o.clone(), g);
        let r = consensus_ranking([&c, &c, &c]).unwrap();
        assert_eq!(r.order, o.into_iter().map(p).collect::<Vec<_>>());
    }

    #[test]
    fn hand_traced_step_two() {
        let ghz = headed("GHZ", &[1, 4], &[0.0, 0.02]);
        let w = headed("W", &[2, 5], &[0.0, 0.05]);
        let b = headed("B", &[3, 6], &[0.0, 0.01]);
        let r = consensus_ranking([&ghz, &w, &b]).unwrap();
        assert_eq!(&r.order[..4], &[p(1), p(2), p(3), p(5)]);
        assert_eq!(r.provenance[3], Provenance::Gain("W".into()));
        let pushed: Vec<PauliIndex> = r
            .reserve_trace
            .iter()
            .filter_map(|e| match e {
                ReserveEvent::Push { rank: 2, feature, .. } => Some(*feature),
                _ => None,
            })
            .collect();
        assert_eq!(pushed, vec![p(4), p(6)]);
    }

    /// Rankings that start with `head` and continue in flat order.
    fn headed(tag: &str, head: &[usize], gains_head: &[f64]) -> ModelCurve {
        let mut o = head.to_vec();
        o.extend(flat_order().into_iter().filter(|f| !head.contains(f)));
        let mut g = gains_head.to_vec();
        g.resize(63, 0.0);
        curve(tag, o, g)
    }

    #[test]
    fn reserve_skips_selected_entries() {
        // rank 2: W wins with 5, reserve [4, 6]
        // rank 3: W wins with 4, reserve [4, 6, 7, 8]
        // rank 4: W's 1 wins but is selected; 4 is skipped, 6 taken
        let ghz = headed("GHZ", &[1, 4, 7, 10], &[0.0, 0.02, 0.0, 0.0]);
        let w = headed("W", &[2, 5, 4, 1], &[0.0, 0.05, 0.03, 0.09]);
        let b = headed("B", &[3, 6, 8, 11], &[0.0, 0.01, 0.0, 0.0]);
        let r = consensus_ranking([&ghz, &w, &b]).unwrap();
        assert_eq!(&r.order[..6], &[p(1), p(2), p(3), p(5), p(4), p(6)]);
        assert!(r.reserve_trace.contains(&ReserveEvent::SkipSelected { rank: 4, feature: p(4) }));
        assert_eq!(r.provenance[5], Provenance::Reserve("B".into()));
    }

    #[test]
    fn malformed_input() {
        let mut o = flat_order();
        o[5] = 1;
        let bad = curve("B", o, vec![0.0; 63]);
        let good = curve("W", flat_order(), vec![0.0; 63]);
        assert!(matches!(consensus_ranking([&good, &good, &bad]), Err(Error::MalformedRanking(_))));
        let short = curve("B", flat_order(), vec![0.0; 10]);
        assert!(consensus_ranking([&good, &good, &short]).is_err());
    }

    #[test]
    fn gains_definition() {
        let c: Vec<(usize, f64)> = (1..=63).map(|k| (k, 0.5 + k as f64 * 0.005)).collect();
        let g = gains_from_curve(&c).unwrap();
        assert!((g[0] - 0.005).abs() < 1e-12);
        assert!((g[10] - 0.005).abs() < 1e-12);
        assert!(gains_from_curve(&c[..5]).is_err());
    }

    #[test]
    fn prefix_curve_rejects_bad_k() {
        let ds = LabeledDataset::new(DatasetKind::B, vec![], 0).unwrap();
        let cfg = TrainConfig::new(1.0, KernelSpec::rbf(1.0).unwrap());
        let order: Vec<PauliIndex> = PauliIndex::all().collect();
        assert!(prefix_accuracy_curve(&ds, &ds, &order, &[0], &cfg, 0).is_err());
        let cons = ConsensusRanking { order, provenance: vec![], reserve_trace: vec![] };
        let t = CascadeTraining { ghz: (&ds, cfg), w: (&ds, cfg), b: (&ds, cfg) };
        assert!(cascade_prefix_curve(&cons, &[2], &t, &ds, 0).is_err());
    }

    fn random_curve(tag: &str, seed: u64) -> ModelCurve {
        let mut rng = RngSeed::root(seed).rng();
        let mut order: Vec<PauliIndex> = PauliIndex::all().collect();
        order.shuffle(&mut rng);
        let gains = (0..63).map(|_| rng.gen_range(-0.02..0.05)).collect();
        ModelCurve { tag: tag.into(), order, gains }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn consensus_is_a_permutation(seed in any::<u64>()) {
            let a = random_curve("GHZ", seed);
            let b = random_curve("W", seed.wrapping_add(1));
            let c = random_curve("B", seed.wrapping_add(2));
            let r = consensus_ranking([&a, &b, &c]).unwrap();
            let set: HashSet<PauliIndex> = r.order.iter().copied().collect();
            prop_assert_eq!(r.order.len(), 63);
            prop_assert_eq!(set.len(), 63);
            prop_assert_eq!(r.provenance.len(), 63);
            prop_assert_eq!(consensus_ranking([&a, &b, &c]).unwrap(), r);
        }
    }
}
