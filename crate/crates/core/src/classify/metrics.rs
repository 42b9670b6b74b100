//! Confusion-matrix bookkeeping and the derived scores.
//!
//! Zero-denominator conventions: a precision or recall of 0/0 is 0, and an F
//! score with p + r = 0 is 0. Accuracy is the trace over the total, which
//! equals the label-weighted mean of recalls.

use crate::error::{Error, Result};
use crate::model::AnomalyLabel;

/// 3x3 counts indexed by (true label, predicted label).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, truth: AnomalyLabel, predicted: AnomalyLabel) {
        self.counts[truth.index()][predicted.index()] += 1;
    }

    pub fn count(&self, truth: AnomalyLabel, predicted: AnomalyLabel) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_total(&self, truth: AnomalyLabel) -> u64 {
        self.counts[truth.index()].iter().sum()
    }

    pub fn column_total(&self, predicted: AnomalyLabel) -> u64 {
        self.counts.iter().map(|row| row[predicted.index()]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for t in 0..3 {
            for p in 0..3 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }

    /// Fraction of true anomaly items (leak or shutdown) predicted as any
    /// anomaly class. 0/0 is 0.
    pub fn anomaly_recall(&self) -> f64 {
        let anomalies = [AnomalyLabel::MemoryLeak, AnomalyLabel::Shutdown];
        let mut hits = 0u64;
        let mut total = 0u64;
        for t in anomalies {
            total += self.row_total(t);
            for p in anomalies {
                hits += self.count(t, p);
            }
        }
        ratio(hits, total)
    }
}

/// Precision, recall, and their harmonic mean for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

/// Scores of one evaluation, possibly averaged over repeated runs. The
/// confusion matrix holds the raw counts summed over all runs.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Indexed by [`AnomalyLabel::index`].
    pub per_class: [ClassMetrics; 3],
    pub accuracy: f64,
    /// Unweighted mean of the per-class F scores.
    pub macro_f: f64,
    /// Instance-weighted mean of the per-class F scores.
    pub weighted_macro_f: f64,
    pub repeats: usize,
    pub confusion: ConfusionMatrix,
}

impl EvalReport {
    pub fn class(&self, label: AnomalyLabel) -> &ClassMetrics {
        &self.per_class[label.index()]
    }
}

fn ratio(num: u64, denom: u64) -> f64 {
    if denom == 0 {
        0.0
    } else {
        num as f64 / denom as f64
    }
}

/// Scores of a single confusion matrix.
pub fn metrics(cm: &ConfusionMatrix) -> Result<EvalReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidConfig("empty confusion matrix".into()));
    }
    let mut per_class = [ClassMetrics::default(); 3];
    let mut f_sum = 0.0;
    let mut weighted_f_sum = 0.0;
    let mut diagonal = 0u64;
    for label in AnomalyLabel::ALL {
        let tp = cm.count(label, label);
        diagonal += tp;
        let precision = ratio(tp, cm.column_total(label));
        let recall = ratio(tp, cm.row_total(label));
        let f_score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class[label.index()] = ClassMetrics {
            precision,
            recall,
            f_score,
        };
        f_sum += f_score;
        weighted_f_sum += cm.row_total(label) as f64 * f_score;
    }
    Ok(EvalReport {
        per_class,
        accuracy: diagonal as f64 / total as f64,
        macro_f: f_sum / 3.0,
        weighted_macro_f: weighted_f_sum / total as f64,
        repeats: 1,
        confusion: *cm,
    })
}

/// Field-wise mean of several reports (one per repeated run); confusion
/// counts are summed.
pub fn average_reports(reports: &[EvalReport]) -> Result<EvalReport> {
    if reports.is_empty() {
        return Err(Error::InvalidConfig("no reports to average".into()));
    }
    let k = reports.len() as f64;
    let mut out = EvalReport {
        per_class: [ClassMetrics::default(); 3],
        accuracy: 0.0,
        macro_f: 0.0,
        weighted_macro_f: 0.0,
        repeats: reports.len(),
        confusion: ConfusionMatrix::new(),
    };
    for r in reports {
        for i in 0..3 {
            out.per_class[i].precision += r.per_class[i].precision / k;
            out.per_class[i].recall += r.per_class[i].recall / k;
            out.per_class[i].f_score += r.per_class[i].f_score / k;
        }
        out.accuracy += r.accuracy / k;
        out.macro_f += r.macro_f / k;
        out.weighted_macro_f += r.weighted_macro_f / k;
        out.confusion.merge(&r.confusion);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AnomalyLabel::{MemoryLeak, Normal, Shutdown};

    #[test]
    fn perfect_classifier_scores_one() {
        let mut cm = ConfusionMatrix::new();
        for label in AnomalyLabel::ALL {
            for _ in 0..10 {
                cm.record(label, label);
            }
        }
        let r = metrics(&cm).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f, 1.0);
        assert_eq!(r.weighted_macro_f, 1.0);
        for c in &r.per_class {
            assert_eq!(c.precision, 1.0);
            assert_eq!(c.recall, 1.0);
            assert_eq!(c.f_score, 1.0);
        }
    }

    #[test]
    fn direct_formulae() {
        // Normal: TP=8, FP=2 (leaks predicted normal), FN=2 (normals
        // predicted leak).
        let mut cm = ConfusionMatrix::new();
        for _ in 0..8 {
            cm.record(Normal, Normal);
        }
        for _ in 0..2 {
            cm.record(MemoryLeak, Normal);
        }
        for _ in 0..2 {
            cm.record(Normal, MemoryLeak);
        }
        for _ in 0..5 {
            cm.record(Shutdown, Shutdown);
        }
        let r = metrics(&cm).unwrap();
        let n = r.class(Normal);
        assert_eq!(n.precision, 0.8);
        assert_eq!(n.recall, 0.8);
        assert!((n.f_score - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_over_zero_is_zero() {
        let mut cm = ConfusionMatrix::new();
        cm.record(Normal, Normal);
        let r = metrics(&cm).unwrap();
        assert_eq!(r.class(MemoryLeak).precision, 0.0);
        assert_eq!(r.class(MemoryLeak).recall, 0.0);
        assert_eq!(r.class(MemoryLeak).f_score, 0.0);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn recall_is_diagonal_over_row_and_accuracy_is_weighted_recall() {
        let mut cm = ConfusionMatrix::new();
        let fill = [
            (Normal, Normal, 12),
            (Normal, MemoryLeak, 3),
            (MemoryLeak, MemoryLeak, 7),
            (MemoryLeak, Shutdown, 2),
            (Shutdown, Shutdown, 9),
            (Shutdown, Normal, 1),
        ];
        for (t, p, n) in fill {
            for _ in 0..n {
                cm.record(t, p);
            }
        }
        let r = metrics(&cm).unwrap();
        let mut weighted_recall = 0.0;
        for label in AnomalyLabel::ALL {
            let expect = cm.count(label, label) as f64 / cm.row_total(label) as f64;
            assert_eq!(r.class(label).recall, expect);
            weighted_recall += cm.row_total(label) as f64 * expect;
        }
        assert!((r.accuracy - weighted_recall / cm.total() as f64).abs() < 1e-12);
    }

    #[test]
    fn macro_f_is_unweighted_mean() {
        // Middle class imperfect (F = 6/7), outer classes perfect: the
        // unweighted mean lands at 0.952.
        let mut cm = ConfusionMatrix::new();
        for _ in 0..50 {
            cm.record(Normal, Normal);
            cm.record(Shutdown, Shutdown);
        }
        for _ in 0..6 {
            cm.record(MemoryLeak, MemoryLeak);
        }
        cm.record(MemoryLeak, Normal);
        cm.record(Normal, MemoryLeak);
        let r = metrics(&cm).unwrap();
        let expect =
            (r.class(Normal).f_score + r.class(MemoryLeak).f_score + r.class(Shutdown).f_score)
                / 3.0;
        assert_eq!(r.macro_f, expect);
        assert!((r.macro_f - 0.95).abs() < 0.005);
        assert!(r.weighted_macro_f > r.macro_f); // big classes are perfect
    }

    #[test]
    fn anomaly_recall_uses_the_two_by_two_block() {
        let mut cm = ConfusionMatrix::new();
        for _ in 0..8 {
            cm.record(MemoryLeak, MemoryLeak);
        }
        cm.record(MemoryLeak, Shutdown); // anomaly confused with anomaly: a hit
        cm.record(MemoryLeak, Normal); // missed anomaly
        for _ in 0..10 {
            cm.record(Shutdown, Shutdown);
        }
        for _ in 0..30 {
            cm.record(Normal, Normal);
        }
        assert_eq!(cm.anomaly_recall(), 19.0 / 20.0);
    }

    #[test]
    fn averaging_sums_counts_and_means_scores() {
        let mut a = ConfusionMatrix::new();
        let mut b = ConfusionMatrix::new();
        for label in AnomalyLabel::ALL {
            a.record(label, label);
            b.record(label, label);
        }
        b.record(Normal, Shutdown);
        let ra = metrics(&a).unwrap();
        let rb = metrics(&b).unwrap();
        let avg = average_reports(&[ra.clone(), rb.clone()]).unwrap();
        assert_eq!(avg.repeats, 2);
        assert_eq!(avg.accuracy, (ra.accuracy + rb.accuracy) / 2.0);
        assert_eq!(avg.confusion.total(), a.total() + b.total());
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(metrics(&ConfusionMatrix::new()).is_err());
    }
}
