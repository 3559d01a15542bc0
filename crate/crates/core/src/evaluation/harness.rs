use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, ClassMetrics, Metrics};
use super::systems::{CausalitySystem, Family};
use super::EvaluationError;
use crate::corpus::Dataset;

/// Protocol parameters: one stratified hold-out test set plus `folds`
/// validation folds, redrawn for each repetition with seed `seed + r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationConfig {
    pub test_fraction: f64,
    pub folds: usize,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            test_fraction: 0.1,
            folds: 10,
            repetitions: 5,
            seed: 0,
        }
    }
}

impl EvaluationConfig {
    pub fn repetition_seed(&self, repetition: usize) -> u64 {
        self.seed.wrapping_add(repetition as u64)
    }
}

/// One system's metrics averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub system: String,
    pub family: Family,
    /// Selected configuration per repetition, deduplicated, joined by ` | `.
    pub hyperparameters: String,
    pub causal: ClassMetrics,
    pub not_causal: ClassMetrics,
    pub accuracy: f64,
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
}

impl ReportRow {
    pub fn from_metrics(
        system: impl Into<String>,
        family: Family,
        hyperparameters: impl Into<String>,
        m: &Metrics,
    ) -> Self {
        Self {
            system: system.into(),
            family,
            hyperparameters: hyperparameters.into(),
            causal: m.causal,
            not_causal: m.not_causal,
            accuracy: m.accuracy,
            macro_recall: m.macro_recall(),
            macro_precision: m.macro_precision(),
            macro_f1: m.macro_f1(),
        }
    }

    /// The seven reported ratios in table order.
    pub fn columns(&self) -> [f64; 7] {
        [
            self.causal.recall,
            self.causal.precision,
            self.causal.f1,
            self.not_causal.recall,
            self.not_causal.precision,
            self.not_causal.f1,
            self.accuracy,
        ]
    }
}

/// Runs the protocol for one system: per repetition a fresh stratified
/// split of `dataset`, fit (selection on the validation folds), and
/// scoring on the held-out test set.
pub fn cross_validate(
    system: &dyn CausalitySystem,
    dataset: &Dataset,
    config: &EvaluationConfig,
) -> Result<(ReportRow, Vec<Metrics>), EvaluationError> {
    if config.repetitions == 0 {
        return Err(EvaluationError::Config(
            "repetitions must be at least 1".into(),
        ));
    }
    let mut runs = Vec::with_capacity(config.repetitions);
    let mut chosen: Vec<String> = Vec::new();
    for r in 0..config.repetitions {
        let seed = config.repetition_seed(r);
        let annotate = |e: EvaluationError| EvaluationError::Run {
            system: system.id(),
            repetition: r,
            source: Box::new(e),
        };
        let plan = dataset
            .split(config.test_fraction, config.folds, seed)
            .map_err(|e| annotate(e.into()))?;
        let fitted = system.fit(&plan, seed).map_err(annotate)?;
        let gold = plan
            .test
            .causality_labels()
            .map_err(|e| annotate(e.into()))?;
        let pred = fitted
            .classifier
            .predict(&plan.test.texts())
            .map_err(annotate)?;
        runs.push(compute_metrics(&pred, &gold).map_err(annotate)?);
        if !chosen.contains(&fitted.hyperparameters) {
            chosen.push(fitted.hyperparameters);
        }
    }
    let mean = Metrics::mean(&runs);
    Ok((
        ReportRow::from_metrics(system.id(), system.family(), chosen.join(" | "), &mean),
        runs,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub repetitions: usize,
    pub folds: usize,
    pub test_fraction: f64,
}

pub const REPORT_HEADER: [&str; 9] = [
    "system",
    "hyperparameters",
    "causal_recall",
    "causal_precision",
    "causal_f1",
    "not_causal_recall",
    "not_causal_precision",
    "not_causal_f1",
    "accuracy",
];

impl EvaluationReport {
    /// Evaluates every system in order with the same protocol.
    pub fn run(
        systems: &[&dyn CausalitySystem],
        dataset: &Dataset,
        config: &EvaluationConfig,
    ) -> Result<Self, EvaluationError> {
        let rows = systems
            .iter()
            .map(|s| cross_validate(*s, dataset, config).map(|(row, _)| row))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            rows,
            repetitions: config.repetitions,
            folds: config.folds,
            test_fraction: config.test_fraction,
        })
    }

    /// Ratios to four decimals.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(REPORT_HEADER).expect("in-memory write");
        for row in &self.rows {
            let mut rec = vec![row.system.clone(), row.hyperparameters.clone()];
            rec.extend(row.columns().iter().map(|v| format!("{v:.4}")));
            wtr.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

/// Reference gain over another row: `reference - row` for each macro metric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta {
    pub system: String,
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    /// Ordered by family (rule, shallow, transformer, other), stable within.
    pub rows: Vec<ReportRow>,
    pub reference: String,
    pub deltas: Vec<Delta>,
    /// For each of the seven ratio columns, the systems holding the maximum.
    pub best: Vec<Vec<String>>,
    /// Reference minus the mean over all rule and shallow rows, when any exist.
    pub average_gain: Option<Delta>,
}

/// Compares report rows against `reference` (default: the row with the
/// highest accuracy, first on ties).
pub fn compare(rows: &[ReportRow], reference: Option<&str>) -> Result<Comparison, EvaluationError> {
    if rows.len() < 2 {
        return Err(EvaluationError::Config(
            "comparison needs at least two rows".into(),
        ));
    }
    let mut seen = HashSet::new();
    for r in rows {
        if !seen.insert(r.system.as_str()) {
            return Err(EvaluationError::DuplicateSystem(r.system.clone()));
        }
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by_key(|r| r.family);
    let reference_row = match reference {
        Some(id) => sorted
            .iter()
            .find(|r| r.system == id)
            .ok_or_else(|| EvaluationError::UnknownSystem(id.to_string()))?,
        None => sorted
            .iter()
            .fold(None::<&ReportRow>, |b, r| match b {
                Some(b) if b.accuracy >= r.accuracy => Some(b),
                _ => Some(r),
            })
            .expect("non-empty"),
    }
    .clone();
    let gain = |system: String, recall: f64, precision: f64, f1: f64, acc: f64| Delta {
        system,
        macro_recall: reference_row.macro_recall - recall,
        macro_precision: reference_row.macro_precision - precision,
        macro_f1: reference_row.macro_f1 - f1,
        accuracy: reference_row.accuracy - acc,
    };
    let deltas = sorted
        .iter()
        .map(|r| {
            gain(
                r.system.clone(),
                r.macro_recall,
                r.macro_precision,
                r.macro_f1,
                r.accuracy,
            )
        })
        .collect();
    let baselines: Vec<&ReportRow> = sorted
        .iter()
        .filter(|r| {
            matches!(r.family, Family::Rule | Family::Shallow) && r.system != reference_row.system
        })
        .collect();
    let average_gain = (!baselines.is_empty()).then(|| {
        let n = baselines.len() as f64;
        let mean = |f: fn(&ReportRow) -> f64| baselines.iter().map(|r| f(r)).sum::<f64>() / n;
        gain(
            "rule+shallow mean".into(),
            mean(|r| r.macro_recall),
            mean(|r| r.macro_precision),
            mean(|r| r.macro_f1),
            mean(|r| r.accuracy),
        )
    });
    let best = (0..7)
        .map(|c| {
            let max = sorted
                .iter()
                .map(|r| r.columns()[c])
                .fold(f64::NEG_INFINITY, f64::max);
            sorted
                .iter()
                .filter(|r| r.columns()[c] == max)
                .map(|r| r.system.clone())
                .collect()
        })
        .collect();
    Ok(Comparison {
        rows: sorted,
        reference: reference_row.system,
        deltas,
        best,
        average_gain,
    })
}

impl Comparison {
    /// Table in report column order with column maxima marked `*`, followed
    /// by the deltas section.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<22} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "", "causal", "", "", "not", "causal", "", ""
        );
        let _ = writeln!(
            out,
            "{:<22} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}  hyperparameters",
            "system", "Recall", "Prec.", "F1", "Recall", "Prec.", "F1", "Accuracy"
        );
        for row in &self.rows {
            let _ = write!(out, "{:<22}", row.system);
            for (c, v) in row.columns().iter().enumerate() {
                let mark = if self.best[c].contains(&row.system) {
                    "*"
                } else {
                    " "
                };
                let _ = write!(out, " {:>7}{mark}", format!("{v:.2}"));
            }
            let _ = writeln!(out, "  {}", row.hyperparameters);
        }
        let _ = writeln!(
            out,
            "\ndeltas: gain of `{}` over each system (reference - system)",
            self.reference
        );
        let _ = writeln!(
            out,
            "{:<22} {:>12} {:>12} {:>12} {:>12}",
            "system", "macro_recall", "macro_prec.", "macro_f1", "accuracy"
        );
        for d in self.deltas.iter().chain(&self.average_gain) {
            let _ = writeln!(
                out,
                "{:<22} {:>+12.4} {:>+12.4} {:>+12.4} {:>+12.4}",
                d.system, d.macro_recall, d.macro_precision, d.macro_f1, d.accuracy
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(
        system: &str,
        family: Family,
        causal: [f64; 3],
        not_causal: [f64; 3],
        accuracy: f64,
    ) -> ReportRow {
        let cm = |v: [f64; 3]| ClassMetrics {
            recall: v[0],
            precision: v[1],
            f1: v[2],
            support: 0,
        };
        let m = Metrics {
            causal: cm(causal),
            not_causal: cm(not_causal),
            accuracy,
        };
        ReportRow::from_metrics(system, family, "-", &m)
    }

    #[test]
    fn identical_rows_have_zero_deltas() {
        let a = row(
            "a",
            Family::Shallow,
            [0.5, 0.6, 0.55],
            [0.7, 0.6, 0.65],
            0.6,
        );
        let mut b = a.clone();
        b.system = "b".into();
        let c = compare(&[a, b], Some("a")).unwrap();
        assert!(c
            .deltas
            .iter()
            .all(|d| d.macro_recall == 0.0 && d.macro_precision == 0.0 && d.accuracy == 0.0));
        assert_eq!(c.best[0], vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn family_order_winners_and_errors() {
        let rows = vec![
            row(
                "dep",
                Family::Transformer,
                [0.9, 0.8, 0.85],
                [0.8, 0.9, 0.85],
                0.85,
            ),
            row(
                "rule",
                Family::Rule,
                [0.6, 0.7, 0.65],
                [0.7, 0.6, 0.65],
                0.65,
            ),
            row(
                "svm",
                Family::Shallow,
                [0.7, 0.9, 0.79],
                [0.9, 0.7, 0.79],
                0.8,
            ),
        ];
        let c = compare(&rows, None).unwrap();
        let order: Vec<&str> = c.rows.iter().map(|r| r.system.as_str()).collect();
        assert_eq!(order, ["rule", "svm", "dep"]);
        assert_eq!(c.reference, "dep");
        for col in 0..7 {
            let max = rows
                .iter()
                .map(|r| r.columns()[col])
                .fold(f64::MIN, f64::max);
            for r in &rows {
                assert_eq!(c.best[col].contains(&r.system), r.columns()[col] == max);
            }
        }
        let text = c.render();
        assert!(text.contains("deltas"));
        assert!(compare(&rows[..1], None).is_err());
        let dup = vec![rows[0].clone(), rows[0].clone()];
        assert!(matches!(
            compare(&dup, None),
            Err(EvaluationError::DuplicateSystem(_))
        ));
        assert!(matches!(
            compare(&rows, Some("knn")),
            Err(EvaluationError::UnknownSystem(_))
        ));
    }
}
