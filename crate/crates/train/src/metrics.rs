//! Confusion-matrix-based classification metrics.
//!
//! Macro averages are unweighted means over all `K` classes; classes
//! absent from the ground truth contribute zero and are listed in the
//! report note. Weighted averages use ground-truth support. All metric
//! fields are percentages.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TrainError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub f1_macro: f64,
    pub p_macro: f64,
    pub r_macro: f64,
    pub wf1: f64,
    pub wp: f64,
    /// Per-class accuracy (diagonal over support), percentage.
    pub per_class_acc: Vec<f64>,
    /// `confusion[true][pred]` counts.
    pub confusion: Vec<Vec<usize>>,
    /// Classes with zero ground-truth support (contribute zero to the
    /// macro averages).
    pub absent_classes: Vec<usize>,
}

impl MetricsReport {
    pub fn total(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn supports(&self) -> Vec<usize> {
        self.confusion.iter().map(|row| row.iter().sum()).collect()
    }

    /// Per-class F1 (fractions, not percentages).
    pub fn per_class_f1(&self) -> Vec<f64> {
        per_class(&self.confusion).2
    }
}

pub fn confusion_matrix(truths: &[usize], preds: &[usize], k: usize) -> Vec<Vec<usize>> {
    assert_eq!(truths.len(), preds.len(), "confusion: length mismatch");
    let mut m = vec![vec![0usize; k]; k];
    for (&t, &p) in truths.iter().zip(preds) {
        m[t][p] += 1;
    }
    m
}

fn per_class(confusion: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let k = confusion.len();
    let mut precision = vec![0.0; k];
    let mut recall = vec![0.0; k];
    let mut f1 = vec![0.0; k];
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..k).map(|r| confusion[r][c]).sum();
        precision[c] = if predicted > 0 {
            tp / predicted as f64
        } else {
            0.0
        };
        recall[c] = if support > 0 { tp / support as f64 } else { 0.0 };
        f1[c] = if precision[c] + recall[c] > 0.0 {
            2.0 * precision[c] * recall[c] / (precision[c] + recall[c])
        } else {
            0.0
        };
    }
    (precision, recall, f1)
}

/// Builds the full report from a `K x K` confusion matrix.
pub fn metrics_from_confusion(confusion: Vec<Vec<usize>>) -> Result<MetricsReport> {
    let k = confusion.len();
    let total: usize = confusion.iter().flatten().sum();
    if total == 0 {
        return Err(TrainError::EmptySplit);
    }
    let (precision, recall, f1) = per_class(&confusion);
    let supports: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let absent: Vec<usize> = (0..k).filter(|&c| supports[c] == 0).collect();

    let trace: usize = (0..k).map(|c| confusion[c][c]).sum();
    let kf = k as f64;
    let weight = |c: usize| supports[c] as f64 / total as f64;

    let pct = 100.0;
    Ok(MetricsReport {
        acc: pct * trace as f64 / total as f64,
        f1_macro: pct * f1.iter().sum::<f64>() / kf,
        p_macro: pct * precision.iter().sum::<f64>() / kf,
        r_macro: pct * recall.iter().sum::<f64>() / kf,
        wf1: pct * (0..k).map(|c| weight(c) * f1[c]).sum::<f64>(),
        wp: pct * (0..k).map(|c| weight(c) * precision[c]).sum::<f64>(),
        per_class_acc: recall.iter().map(|r| pct * r).collect(),
        confusion,
        absent_classes: absent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_hundred() {
        let truths = [0, 1, 2, 0, 1, 2];
        let report =
            metrics_from_confusion(confusion_matrix(&truths, &truths, 3)).unwrap();
        assert_eq!(report.acc, 100.0);
        assert_eq!(report.f1_macro, 100.0);
        assert_eq!(report.wf1, 100.0);
        assert_eq!(report.wp, 100.0);
        for c in 0..3 {
            for p in 0..3 {
                let expect = if c == p { 2 } else { 0 };
                assert_eq!(report.confusion[c][p], expect);
            }
        }
    }

    #[test]
    fn ten_sample_fixture_matches_hand_computation() {
        let truths = [0, 0, 0, 0, 1, 1, 1, 2, 2, 2];
        let preds = [0, 0, 1, 2, 1, 1, 0, 2, 2, 0];
        let report = metrics_from_confusion(confusion_matrix(&truths, &preds, 3)).unwrap();

        // per class: P = [1/2, 2/3, 2/3], R = [1/2, 2/3, 2/3]
        let macro_expect = 100.0 * (0.5 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0;
        assert!((report.acc - 60.0).abs() < 1e-12);
        assert!((report.p_macro - macro_expect).abs() < 1e-12);
        assert!((report.r_macro - macro_expect).abs() < 1e-12);
        assert!((report.f1_macro - macro_expect).abs() < 1e-12);
        let weighted_expect = 100.0 * (0.4 * 0.5 + 0.3 * (2.0 / 3.0) + 0.3 * (2.0 / 3.0));
        assert!((report.wf1 - weighted_expect).abs() < 1e-12);
        assert!((report.wp - weighted_expect).abs() < 1e-12);

        // row sums equal supports
        assert_eq!(report.supports(), vec![4, 3, 3]);
        assert_eq!(report.total(), 10);
    }

    #[test]
    fn degenerate_one_class_predictor_on_balanced_pair() {
        let truths = [0, 0, 1, 1];
        let preds = [0, 0, 0, 0];
        let report = metrics_from_confusion(confusion_matrix(&truths, &preds, 2)).unwrap();
        assert!((report.acc - 50.0).abs() < 1e-12);
        // class 0: P=1/2, R=1, F1=2/3; class 1: all zero
        assert!((report.f1_macro - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_f1_bounded_by_class_extremes() {
        let truths = [0, 0, 0, 1, 1, 2];
        let preds = [0, 1, 0, 1, 1, 0];
        let report = metrics_from_confusion(confusion_matrix(&truths, &preds, 3)).unwrap();
        let f1s = report.per_class_f1();
        let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min) * 100.0;
        let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * 100.0;
        assert!(report.wf1 >= lo - 1e-12 && report.wf1 <= hi + 1e-12);
    }

    #[test]
    fn absent_classes_are_reported() {
        let truths = [0, 0, 1];
        let preds = [0, 0, 1];
        let report = metrics_from_confusion(confusion_matrix(&truths, &preds, 3)).unwrap();
        assert_eq!(report.absent_classes, vec![2]);
        // absent class drags macro below 100 even with perfect predictions
        assert!((report.f1_macro - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(report.acc, 100.0);
    }

    #[test]
    fn empty_split_is_an_error() {
        assert!(metrics_from_confusion(vec![vec![0; 2]; 2]).is_err());
    }
}
