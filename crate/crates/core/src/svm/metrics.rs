use serde::{Deserialize, Serialize};

use super::model::SvmModel;
use crate::sampling::LabeledDataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    /// (false-positive rate, true-positive rate), from (0,0) to (1,1).
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
}

pub fn evaluate(model: &SvmModel, ds: &LabeledDataset) -> Metrics {
    let scores = model.decision_values_dataset(ds);
    metrics_from_scores(&scores, &ds.labels())
}

/// Binary metrics from real-valued scores; a row is predicted positive iff
/// its score is above zero.
pub fn metrics_from_scores(scores: &[f64], labels: &[u8]) -> Metrics {
    assert_eq!(scores.len(), labels.len(), "scores and labels differ in length");
    let mut confusion = vec![vec![0u64; 2]; 2];
    for (&s, &l) in scores.iter().zip(labels) {
        confusion[usize::from(l != 0)][usize::from(s > 0.0)] += 1;
    }
    let n = scores.len();
    let correct = confusion[0][0] + confusion[1][1];
    let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
    let roc = roc_curve(scores, labels);
    let auc = trapezoid(&roc);
    Metrics {
        accuracy,
        confusion,
        roc,
        auc,
    }
}

/// Thresholds at +∞, the midpoints between consecutive distinct scores and
/// −∞; a row is positive when its score exceeds the threshold.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Vec<(f64, f64)> {
    let pos = labels.iter().filter(|&&l| l != 0).count() as f64;
    let neg = labels.len() as f64 - pos;
    let rate = |k: f64, total: f64| if total > 0.0 { k / total } else { 0.0 };

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if labels[order[k]] != 0 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        points.push((rate(fp, neg), rate(tp, pos)));
    }
    if points.len() == 1 {
        points.push((1.0, 1.0));
    }
    points
}

pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}
