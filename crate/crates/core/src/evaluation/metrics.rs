use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Recall, precision and F1 of one class treated as positive.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub support: usize,
}

impl ClassMetrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        Self {
            recall,
            precision,
            f1: f1(precision, recall),
            support: tp + fn_,
        }
    }
}

/// Harmonic mean, 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Per-class metrics and accuracy of one prediction run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub causal: ClassMetrics,
    pub not_causal: ClassMetrics,
    pub accuracy: f64,
}

impl Metrics {
    pub fn macro_recall(&self) -> f64 {
        (self.causal.recall + self.not_causal.recall) / 2.0
    }

    pub fn macro_precision(&self) -> f64 {
        (self.causal.precision + self.not_causal.precision) / 2.0
    }

    pub fn macro_f1(&self) -> f64 {
        (self.causal.f1 + self.not_causal.f1) / 2.0
    }

    /// Field-wise mean; supports are averaged and rounded.
    pub fn mean(runs: &[Metrics]) -> Metrics {
        let n = runs.len().max(1) as f64;
        let avg = |f: &dyn Fn(&Metrics) -> f64| runs.iter().map(f).sum::<f64>() / n;
        let class = |pick: &dyn Fn(&Metrics) -> ClassMetrics| ClassMetrics {
            recall: avg(&|m| pick(m).recall),
            precision: avg(&|m| pick(m).precision),
            f1: avg(&|m| pick(m).f1),
            support: (avg(&|m| pick(m).support as f64)).round() as usize,
        };
        Metrics {
            causal: class(&|m| m.causal),
            not_causal: class(&|m| m.not_causal),
            accuracy: avg(&|m| m.accuracy),
        }
    }
}

/// Labels are 1 (causal) and 0 (not causal).
pub fn compute_metrics(pred: &[u8], gold: &[u8]) -> Result<Metrics, EvaluationError> {
    if pred.len() != gold.len() {
        return Err(EvaluationError::LengthMismatch {
            predictions: pred.len(),
            gold: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut c = [[0usize; 2]; 2];
    for (&p, &g) in pred.iter().zip(gold) {
        if p > 1 || g > 1 {
            return Err(EvaluationError::BadLabel(p.max(g)));
        }
        c[g as usize][p as usize] += 1;
    }
    Ok(Metrics {
        causal: ClassMetrics::from_counts(c[1][1], c[0][1], c[1][0]),
        not_causal: ClassMetrics::from_counts(c[0][0], c[1][0], c[0][1]),
        accuracy: (c[0][0] + c[1][1]) as f64 / gold.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn hand_evaluated_example() {
        let m = compute_metrics(&[1, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert_eq!(m.causal.precision, 1.0);
        assert_eq!(m.causal.recall, 0.5);
        assert!((m.causal.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.not_causal.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.not_causal.recall, 1.0);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!((m.causal.support, m.not_causal.support), (2, 2));
    }

    #[test]
    fn identity_and_complement() {
        let gold = [1, 0, 1, 1, 0];
        let m = compute_metrics(&gold, &gold).unwrap();
        assert_eq!(
            (m.accuracy, m.causal.f1, m.not_causal.f1, m.macro_recall()),
            (1.0, 1.0, 1.0, 1.0)
        );
        let anti: Vec<u8> = gold.iter().map(|g| 1 - g).collect();
        let m = compute_metrics(&anti, &gold).unwrap();
        assert_eq!((m.accuracy, m.causal.f1, m.not_causal.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn input_errors() {
        assert!(matches!(
            compute_metrics(&[1], &[1, 0]),
            Err(EvaluationError::LengthMismatch { .. })
        ));
        assert!(matches!(
            compute_metrics(&[], &[]),
            Err(EvaluationError::Empty)
        ));
        assert!(matches!(
            compute_metrics(&[2], &[1]),
            Err(EvaluationError::BadLabel(2))
        ));
    }

    #[test]
    fn mean_of_runs() {
        let a = compute_metrics(&[1, 1], &[1, 0]).unwrap();
        let b = compute_metrics(&[1, 0], &[1, 0]).unwrap();
        let m = Metrics::mean(&[a, b]);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.causal.recall, 1.0);
        assert_eq!(m.causal.precision, 0.75);
    }

    proptest! {
        #[test]
        fn ratios_bounded_and_macro_f1_between(pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..200)) {
            let (pred, gold): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let m = compute_metrics(&pred, &gold).unwrap();
            for v in [m.accuracy, m.causal.recall, m.causal.precision, m.causal.f1, m.not_causal.recall, m.not_causal.precision, m.not_causal.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let lo = m.causal.f1.min(m.not_causal.f1);
            let hi = m.causal.f1.max(m.not_causal.f1);
            prop_assert!(m.macro_f1() >= lo - 1e-12 && m.macro_f1() <= hi + 1e-12);
            if m.causal.support == m.not_causal.support {
                prop_assert!((m.accuracy - m.macro_recall()).abs() < 1e-12);
            }
        }
    }
}
