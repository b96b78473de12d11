use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::numcore::bce_term;

/// Mean binary cross-entropy with probabilities clipped to `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(scores: &[f64], labels: &[f64]) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().zip(labels).map(|(&p, &y)| bce_term(p, y)).sum::<f64>() / scores.len() as f64
}

fn class_counts(labels: &[f64]) -> (usize, usize) {
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    (pos, labels.len() - pos)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Computed from average ranks.
pub fn auc(scores: &[f64], labels: &[f64]) -> Result<f64, TrainError> {
    if scores.len() != labels.len() {
        return Err(TrainError::Contract(format!(
            "auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(TrainError::NonFinite("auc: NaN score".into()));
    }
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(TrainError::UndefinedMetric("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum of positives keeps every quantity an integer.
    let mut twice_rank_sum = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share the average (i + j + 2) / 2.
        let twice_avg = (i + j + 2) as u128;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as u128;
        twice_rank_sum += twice_avg * tied_pos;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2 * p * n) as f64)
}

/// ROC points `(fpr, tpr)` at every distinct threshold, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scores: &[f64], labels: &[f64]) -> Result<Vec<(f64, f64)>, TrainError> {
    let (pos, neg) = class_counts(labels);
    if pos == 0 || neg == 0 {
        return Err(TrainError::UndefinedMetric("roc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1.0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Area under a polyline by the trapezoid rule.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Confusion counts and derived scores at a fixed threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// No positive predictions: precision reported as 0.
    pub precision_undefined: bool,
    /// No positive labels: recall reported as 0.
    pub recall_undefined: bool,
}

/// Predictions are positive when `score > threshold`.
pub fn classification_metrics(scores: &[f64], labels: &[f64], threshold: f64) -> ClassificationMetrics {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s > threshold, y == 1.0) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassificationMetrics {
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
        accuracy: ratio(tp + tn, scores.len()),
        precision_undefined: tp + fp == 0,
        recall_undefined: tp + fn_ == 0,
    }
}

/// Binary accuracy threshold.
pub const DECISION_THRESHOLD: f64 = 0.5;

/// Loss plus the five classification scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub loss: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub binary_accuracy: f64,
    pub auc: f64,
    pub samples: usize,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

impl MetricsReport {
    /// Metric names in table order, matching [`values`](Self::values).
    pub const COLUMNS: [&'static str; 6] = ["Loss", "Precision", "Recall", "F1-Score", "Binary Accuracy", "AUC"];

    pub fn from_scores(scores: &[f64], labels: &[f64]) -> Result<Self, TrainError> {
        let c = classification_metrics(scores, labels, DECISION_THRESHOLD);
        Ok(Self {
            loss: bce_loss(scores, labels),
            precision: c.precision,
            recall: c.recall,
            f1: c.f1,
            binary_accuracy: c.accuracy,
            auc: auc(scores, labels)?,
            samples: scores.len(),
            precision_undefined: c.precision_undefined,
            recall_undefined: c.recall_undefined,
        })
    }

    pub fn values(&self) -> [f64; 6] {
        [self.loss, self.precision, self.recall, self.f1, self.binary_accuracy, self.auc]
    }
}
