//! Confusion-matrix evaluation: per-class precision/recall/F1 and
//! support-weighted aggregates. Any 0/0 ratio is reported as 0.

use alloc::string::String;
use alloc::{vec, vec::Vec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricsError {
    LengthMismatch { truth: usize, predictions: usize },
    ClassOutOfRange { id: usize, classes: usize },
    EmptyEvaluation,
}

impl core::fmt::Display for MetricsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricsError::LengthMismatch { truth, predictions } => {
                write!(f, "{truth} labels vs {predictions} predictions")
            }
            MetricsError::ClassOutOfRange { id, classes } => {
                write!(f, "class id {id} out of range for {classes} classes")
            }
            MetricsError::EmptyEvaluation => write!(f, "nothing to evaluate"),
        }
    }
}

impl core::error::Error for MetricsError {}

/// `C×C` counts; rows are true classes, columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Row sum: number of evaluated samples whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.count(c, p)).sum()
    }

    /// Column sum: number of samples predicted as `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.count(t, c)).sum()
    }

    pub fn row(&self, truth: usize) -> &[u64] {
        &self.counts[truth * self.classes..(truth + 1) * self.classes]
    }
}

/// Tally true/predicted class pairs into a confusion matrix.
pub fn confusion(
    y_true: &[usize],
    y_pred: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            predictions: y_pred.len(),
        });
    }
    let mut counts = vec![0u64; classes * classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= classes {
            return Err(MetricsError::ClassOutOfRange { id: t, classes });
        }
        if p >= classes {
            return Err(MetricsError::ClassOutOfRange { id: p, classes });
        }
        counts[t * classes + p] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Per-class precision, recall, and F1 from a confusion matrix.
pub fn per_class_metrics(m: &ConfusionMatrix) -> Vec<ClassMetrics> {
    (0..m.classes())
        .map(|c| {
            let tp = m.count(c, c) as f64;
            let col = m.predicted(c) as f64;
            let row = m.support(c) as f64;
            let precision = if col > 0.0 { tp / col } else { 0.0 };
            let recall = if row > 0.0 { tp / row } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
            }
        })
        .collect()
}

/// Full evaluation report: per-class metrics plus support-weighted averages.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub class_names: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub support: Vec<u64>,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
}

/// Support-weighted aggregation: `Σ_c (support_c / Σ support) · metric_c`.
/// Classes with zero support contribute nothing.
pub fn weighted_report(
    per_class: &[ClassMetrics],
    support: &[u64],
    class_names: &[String],
) -> Result<EvalReport, MetricsError> {
    assert_eq!(per_class.len(), support.len());
    assert_eq!(per_class.len(), class_names.len());
    let total: u64 = support.iter().sum();
    if total == 0 {
        return Err(MetricsError::EmptyEvaluation);
    }
    let mut wp = 0.0;
    let mut wr = 0.0;
    let mut wf = 0.0;
    for (m, &s) in per_class.iter().zip(support) {
        let w = s as f64 / total as f64;
        wp += w * m.precision;
        wr += w * m.recall;
        wf += w * m.f1;
    }
    Ok(EvalReport {
        class_names: class_names.to_vec(),
        per_class: per_class.to_vec(),
        support: support.to_vec(),
        weighted_precision: wp,
        weighted_recall: wr,
        weighted_f1: wf,
    })
}

/// Convenience: confusion → per-class → weighted report in one call.
pub fn evaluate(
    y_true: &[usize],
    y_pred: &[usize],
    class_names: &[String],
) -> Result<EvalReport, MetricsError> {
    let m = confusion(y_true, y_pred, class_names.len())?;
    let per_class = per_class_metrics(&m);
    let support: Vec<u64> = (0..m.classes()).map(|c| m.support(c)).collect();
    weighted_report(&per_class, &support, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn perfect_predictions_give_identity_diagonal() {
        let m = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        for t in 0..3 {
            for p in 0..3 {
                assert_eq!(m.count(t, p), u64::from(t == p));
            }
        }
        let metrics = per_class_metrics(&m);
        assert!(metrics.iter().all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
    }

    #[test]
    fn hand_tallied_matrix_and_metrics() {
        let m = confusion(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(m.row(0), &[1, 1]);
        assert_eq!(m.row(1), &[0, 2]);

        let metrics = per_class_metrics(&m);
        assert_eq!(metrics[0].precision, 1.0);
        assert_eq!(metrics[0].recall, 0.5);
        assert!((metrics[0].f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((metrics[1].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(metrics[1].recall, 1.0);
        assert!((metrics[1].f1 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn empty_inputs_give_zero_matrix() {
        let m = confusion(&[], &[], 3).unwrap();
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn absent_class_reports_zero_across_the_board() {
        // class 2 never true and never predicted: the 0/0 → 0 rule
        let m = confusion(&[0, 1], &[0, 1], 3).unwrap();
        let metrics = per_class_metrics(&m);
        assert_eq!(metrics[2].precision, 0.0);
        assert_eq!(metrics[2].recall, 0.0);
        assert_eq!(metrics[2].f1, 0.0);
    }

    #[test]
    fn weighted_average_hand_value() {
        let per_class = [
            ClassMetrics { precision: 1.0, recall: 0.5, f1: 2.0 / 3.0 },
            ClassMetrics { precision: 2.0 / 3.0, recall: 1.0, f1: 0.8 },
        ];
        let names = ["a".to_string(), "b".to_string()];
        let report = weighted_report(&per_class, &[2, 2], &names).unwrap();
        assert!((report.weighted_f1 - (0.5 * (2.0 / 3.0) + 0.5 * 0.8)).abs() < 1e-15);
        assert!((report.weighted_f1 - 0.7333333333333334).abs() < 1e-12);
    }

    #[test]
    fn single_class_weighted_equals_class_metric() {
        let per_class = [ClassMetrics { precision: 0.25, recall: 0.75, f1: 0.375 }];
        let report = weighted_report(&per_class, &[9], &["only".to_string()]).unwrap();
        assert_eq!(report.weighted_precision, 0.25);
        assert_eq!(report.weighted_recall, 0.75);
        assert_eq!(report.weighted_f1, 0.375);
    }

    #[test]
    fn zero_support_class_carries_no_weight() {
        let per_class = [
            ClassMetrics { precision: 1.0, recall: 1.0, f1: 1.0 },
            ClassMetrics { precision: 1.0, recall: 1.0, f1: 1.0 },
        ];
        let names = ["a".to_string(), "b".to_string()];
        let report = weighted_report(&per_class, &[4, 0], &names).unwrap();
        assert_eq!(report.weighted_f1, 1.0);

        assert!(matches!(
            weighted_report(&per_class, &[0, 0], &names),
            Err(MetricsError::EmptyEvaluation)
        ));
    }

    #[test]
    fn weighted_recall_equals_accuracy() {
        let y_true = [0usize, 0, 1, 2, 2, 2, 1, 0, 2, 1];
        let y_pred = [0usize, 1, 1, 2, 0, 2, 1, 0, 2, 0];
        let names = ["a".to_string(), "b".to_string(), "c".to_string()];
        let report = evaluate(&y_true, &y_pred, &names).unwrap();
        let accuracy = y_true
            .iter()
            .zip(&y_pred)
            .filter(|(t, p)| t == p)
            .count() as f64
            / y_true.len() as f64;
        assert!((report.weighted_recall - accuracy).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_ids_rejected() {
        assert!(matches!(
            confusion(&[0, 3], &[0, 0], 2),
            Err(MetricsError::ClassOutOfRange { id: 3, classes: 2 })
        ));
        assert!(matches!(
            confusion(&[0], &[0, 1], 2),
            Err(MetricsError::LengthMismatch { .. })
        ));
    }
}
