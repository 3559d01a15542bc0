//! Pairwise inter-annotator agreement.
//!
//! Overlapping annotations are tallied into a q×q contingency table per
//! category; all annotator pairs are pooled into one table. From a table we
//! compute raw percent agreement, Cohen's kappa (marginal-product chance
//! agreement) and Gwet's AC1 (prevalence-based chance agreement, which stays
//! stable under skewed prevalence where kappa collapses).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use crate::corpus::{AnnotationRecord, Category};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgreementError {
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("contingency table must be square with at least two categories")]
    BadShape,
    #[error("raters `{rater_a}` and `{rater_b}` have no overlap on {category}")]
    NoOverlap {
        category: Category,
        rater_a: String,
        rater_b: String,
    },
    #[error("chance agreement is 1 but observed agreement is {observed}; coefficient undefined")]
    Degenerate { observed: f64 },
    #[error("no category has overlapping annotations")]
    NothingToReport,
}

/// counts[i][j] = items rater A labeled `categories[i]` and rater B `categories[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContingencyTable {
    pub categories: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(categories: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self, AgreementError> {
        let q = categories.len();
        if q < 2 || counts.len() != q || counts.iter().any(|r| r.len() != q) {
            return Err(AgreementError::BadShape);
        }
        Ok(Self { categories, counts })
    }

    /// A binary table with labels `0` and `1`.
    pub fn binary(counts: [[u64; 2]; 2]) -> Self {
        Self {
            categories: vec!["0".into(), "1".into()],
            counts: counts.iter().map(|r| r.to_vec()).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.categories.len()
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    fn trace(&self) -> u64 {
        (0..self.q()).map(|i| self.counts[i][i]).sum()
    }

    fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_totals(&self) -> Vec<u64> {
        (0..self.q())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    fn observed(&self) -> Result<f64, AgreementError> {
        let n = self.n();
        if n == 0 {
            return Err(AgreementError::EmptyTable);
        }
        Ok(self.trace() as f64 / n as f64)
    }

    pub fn add(&mut self, other: &ContingencyTable) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }
}

pub fn percent_agreement(t: &ContingencyTable) -> Result<f64, AgreementError> {
    t.observed()
}

fn chance_corrected(observed: f64, chance: f64) -> Result<f64, AgreementError> {
    if (1.0 - chance).abs() < 1e-15 {
        return if (observed - 1.0).abs() < 1e-15 {
            Ok(1.0)
        } else {
            Err(AgreementError::Degenerate { observed })
        };
    }
    Ok((observed - chance) / (1.0 - chance))
}

pub fn cohens_kappa(t: &ContingencyTable) -> Result<f64, AgreementError> {
    let p_o = t.observed()?;
    let n = t.n() as f64;
    let p_e = t
        .row_totals()
        .iter()
        .zip(t.col_totals())
        .map(|(&r, c)| r as f64 * c as f64)
        .sum::<f64>()
        / (n * n);
    chance_corrected(p_o, p_e)
}

pub fn gwets_ac1(t: &ContingencyTable) -> Result<f64, AgreementError> {
    let p_o = t.observed()?;
    let n = t.n() as f64;
    let q = t.q() as f64;
    let p_e = t
        .row_totals()
        .iter()
        .zip(t.col_totals())
        .map(|(&r, c)| {
            let pi = (r + c) as f64 / (2.0 * n);
            pi * (1.0 - pi)
        })
        .sum::<f64>()
        / (q - 1.0);
    chance_corrected(p_o, p_e)
}

/// Landis–Koch qualitative band of an agreement coefficient.
pub fn landis_koch_band(coefficient: f64) -> &'static str {
    match coefficient {
        c if c < 0.0 => "poor",
        c if c <= 0.20 => "slight",
        c if c <= 0.40 => "fair",
        c if c <= 0.60 => "moderate",
        c if c <= 0.80 => "substantial",
        _ => "almost perfect",
    }
}

/// Tally of the sentences both raters labeled for `category`.
pub fn table_from_annotations(
    records: &[AnnotationRecord],
    category: Category,
    rater_a: &str,
    rater_b: &str,
) -> Result<ContingencyTable, AgreementError> {
    let labels_of = |rater: &str| -> BTreeMap<&str, usize> {
        records
            .iter()
            .filter(|r| r.annotator_id == rater)
            .filter_map(|r| {
                let value = r.labels.get(category)?;
                let idx = category
                    .value_names()
                    .iter()
                    .position(|v| *v == value.as_str())?;
                Some((r.sentence_id.as_str(), idx))
            })
            .collect()
    };
    let a = labels_of(rater_a);
    let b = labels_of(rater_b);
    let q = category.value_names().len();
    let mut counts = vec![vec![0u64; q]; q];
    let mut overlap = 0;
    for (sentence, &i) in &a {
        if let Some(&j) = b.get(sentence) {
            counts[i][j] += 1;
            overlap += 1;
        }
    }
    if overlap == 0 {
        return Err(AgreementError::NoOverlap {
            category,
            rater_a: rater_a.to_string(),
            rater_b: rater_b.to_string(),
        });
    }
    ContingencyTable::new(
        category
            .value_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        counts,
    )
}

/// Sum of the pairwise tables over every unordered annotator pair, with the
/// lexicographically smaller annotator as rater A.
pub fn pooled_table(
    records: &[AnnotationRecord],
    category: Category,
) -> Result<ContingencyTable, AgreementError> {
    let annotators: BTreeSet<&str> = records.iter().map(|r| r.annotator_id.as_str()).collect();
    let annotators: Vec<&str> = annotators.into_iter().collect();
    let q = category.value_names().len();
    let mut pooled = ContingencyTable::new(
        category
            .value_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        vec![vec![0; q]; q],
    )?;
    for (i, a) in annotators.iter().enumerate() {
        for b in &annotators[i + 1..] {
            match table_from_annotations(records, category, a, b) {
                Ok(t) => pooled.add(&t),
                Err(AgreementError::NoOverlap { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if pooled.n() == 0 {
        return Err(AgreementError::NoOverlap {
            category,
            rater_a: "*".into(),
            rater_b: "*".into(),
        });
    }
    Ok(pooled)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub category: String,
    pub matrix: ContingencyTable,
    pub agreement: f64,
    pub kappa: f64,
    pub ac1: f64,
    /// Landis–Koch band of the AC1 coefficient.
    pub band: String,
}

impl AgreementRow {
    pub fn from_table(
        category: impl Into<String>,
        matrix: ContingencyTable,
    ) -> Result<Self, AgreementError> {
        let ac1 = gwets_ac1(&matrix)?;
        Ok(Self {
            category: category.into(),
            agreement: percent_agreement(&matrix)?,
            kappa: cohens_kappa(&matrix)?,
            ac1,
            band: landis_koch_band(ac1).to_string(),
            matrix,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementAverages {
    pub agreement: f64,
    pub kappa: f64,
    pub ac1: f64,
}

/// Per-category agreement with unweighted averages over the rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub rows: Vec<AgreementRow>,
    pub average: AgreementAverages,
}

impl AgreementReport {
    pub fn from_rows(rows: Vec<AgreementRow>) -> Result<Self, AgreementError> {
        if rows.is_empty() {
            return Err(AgreementError::NothingToReport);
        }
        let n = rows.len() as f64;
        let average = AgreementAverages {
            agreement: rows.iter().map(|r| r.agreement).sum::<f64>() / n,
            kappa: rows.iter().map(|r| r.kappa).sum::<f64>() / n,
            ac1: rows.iter().map(|r| r.ac1).sum::<f64>() / n,
        };
        Ok(Self { rows, average })
    }

    /// CSV with one row per category, percentages to one decimal and
    /// coefficients to three.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("category,n00,n01,n10,n11,agreement_pct,cohens_kappa,gwets_ac1,band\n");
        for r in &self.rows {
            let cells: Vec<String> = r
                .matrix
                .counts
                .iter()
                .flatten()
                .map(u64::to_string)
                .collect();
            let _ = writeln!(
                out,
                "{},{},{:.1},{:.3},{:.3},{}",
                r.category,
                cells.join(","),
                r.agreement * 100.0,
                r.kappa,
                r.ac1,
                r.band
            );
        }
        let _ = writeln!(
            out,
            "avg.,,,,,{:.1},{:.3},{:.3},{}",
            self.average.agreement * 100.0,
            self.average.kappa,
            self.average.ac1,
            landis_koch_band(self.average.ac1)
        );
        out
    }

    /// Text table: one column per category plus the average column.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let width = 16;
        let _ = write!(out, "{:<16}", "");
        for r in &self.rows {
            let _ = write!(out, "{:>width$}", r.category);
        }
        let _ = writeln!(out, "{:>width$}", "avg.");
        for i in 0..2 {
            let _ = write!(
                out,
                "{:<16}",
                if i == 0 { "Confusion 0" } else { "Matrix    1" }
            );
            for r in &self.rows {
                let cells = r
                    .matrix
                    .counts
                    .get(i)
                    .map(|row| row.iter().map(u64::to_string).collect::<Vec<_>>().join(" "));
                let _ = write!(out, "{:>width$}", cells.unwrap_or_default());
            }
            let _ = writeln!(out);
        }
        type Line<'a> = (&'a str, Box<dyn Fn(&AgreementRow) -> String>, String);
        let lines: [Line; 3] = [
            (
                "Agreement",
                Box::new(|r| format!("{:.1} %", r.agreement * 100.0)),
                format!("{:.1} %", self.average.agreement * 100.0),
            ),
            (
                "Cohen's Kappa",
                Box::new(|r| format!("{:.3}", r.kappa)),
                format!("{:.3}", self.average.kappa),
            ),
            (
                "Gwet's AC1",
                Box::new(|r| format!("{:.3}", r.ac1)),
                format!("{:.3}", self.average.ac1),
            ),
        ];
        for (name, cell, avg) in lines {
            let _ = write!(out, "{name:<16}");
            for r in &self.rows {
                let _ = write!(out, "{:>width$}", cell(r));
            }
            let _ = writeln!(out, "{avg:>width$}");
        }
        out
    }
}

/// Pooled agreement for every binary category that has overlap.
/// Relationship and Temporality are not assessed.
pub fn agreement_report(records: &[AnnotationRecord]) -> Result<AgreementReport, AgreementError> {
    let mut rows = Vec::new();
    for category in Category::BINARY {
        match pooled_table(records, category) {
            Ok(table) => rows.push(AgreementRow::from_table(category.name(), table)?),
            Err(AgreementError::NoOverlap { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    AgreementReport::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use chrono::TimeZone;
    use proptest::prelude::*;

    use super::*;
    use crate::corpus::LabelSet;

    #[test]
    fn causal_and_marked_rows() {
        let causal = ContingencyTable::binary([[2034, 193], [274, 499]]);
        assert!((percent_agreement(&causal).unwrap() - 0.8443).abs() < 1e-4);
        assert!((cohens_kappa(&causal).unwrap() - 0.579).abs() < 1e-3);
        assert!((gwets_ac1(&causal).unwrap() - 0.753).abs() < 1e-3);
        let marked = ContingencyTable::binary([[1, 22], [12, 464]]);
        assert!((cohens_kappa(&marked).unwrap() - 0.023).abs() < 1e-3);
        assert!((gwets_ac1(&marked).unwrap() - 0.926).abs() < 1e-3);
    }

    #[test]
    fn perfect_and_inverse_agreement() {
        let diag = ContingencyTable::binary([[5, 0], [0, 5]]);
        assert_eq!(percent_agreement(&diag).unwrap(), 1.0);
        assert_eq!(cohens_kappa(&diag).unwrap(), 1.0);
        assert_eq!(gwets_ac1(&diag).unwrap(), 1.0);
        let anti = ContingencyTable::binary([[0, 3], [4, 0]]);
        assert_eq!(percent_agreement(&anti).unwrap(), 0.0);
    }

    #[test]
    fn single_cell_tables() {
        let all_zero_zero = ContingencyTable::binary([[7, 0], [0, 0]]);
        assert_eq!(cohens_kappa(&all_zero_zero).unwrap(), 1.0);
        assert_eq!(gwets_ac1(&all_zero_zero).unwrap(), 1.0);
        let empty = ContingencyTable::binary([[0, 0], [0, 0]]);
        assert_eq!(percent_agreement(&empty), Err(AgreementError::EmptyTable));
        assert_eq!(cohens_kappa(&empty), Err(AgreementError::EmptyTable));
    }

    #[test]
    fn shape_is_checked() {
        assert_eq!(
            ContingencyTable::new(vec!["0".into()], vec![vec![1]]),
            Err(AgreementError::BadShape)
        );
        assert_eq!(
            ContingencyTable::new(vec!["0".into(), "1".into()], vec![vec![1, 2]]),
            Err(AgreementError::BadShape)
        );
    }

    fn rec(sentence: &str, annotator: &str, causal: bool) -> AnnotationRecord {
        AnnotationRecord {
            sentence_id: sentence.into(),
            annotator_id: annotator.into(),
            labels: LabelSet::causal(causal),
            cue_phrases: vec![],
            timestamp: chrono::Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    #[test]
    fn tally_from_records() {
        let records = vec![
            rec("1", "a", true),
            rec("1", "b", true),
            rec("2", "a", false),
            rec("2", "b", false),
            rec("3", "a", true),
            rec("3", "b", false),
            rec("4", "a", false),
            rec("4", "b", false),
            rec("5", "a", true),
        ];
        let t = table_from_annotations(&records, Category::Causality, "a", "b").unwrap();
        // rows: rater a, columns: rater b
        assert_eq!(t.counts, vec![vec![2, 0], vec![1, 1]]);
        let disjoint = vec![rec("1", "a", true), rec("2", "b", true)];
        assert!(matches!(
            table_from_annotations(&disjoint, Category::Causality, "a", "b"),
            Err(AgreementError::NoOverlap { .. })
        ));
    }

    #[test]
    fn single_category_report_average_equals_row() {
        let records = vec![
            rec("1", "a", true),
            rec("1", "b", true),
            rec("2", "a", false),
            rec("2", "b", true),
        ];
        let report = agreement_report(&records).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert_eq!(report.average.agreement, report.rows[0].agreement);
        assert_eq!(report.average.ac1, report.rows[0].ac1);
        assert!(report.to_csv().lines().count() == 3);
    }

    #[test]
    fn bands() {
        assert_eq!(landis_koch_band(0.91), "almost perfect");
        assert_eq!(landis_koch_band(0.753), "substantial");
        assert_eq!(landis_koch_band(0.5), "moderate");
        assert_eq!(landis_koch_band(0.3), "fair");
        assert_eq!(landis_koch_band(0.023), "slight");
        assert_eq!(landis_koch_band(-0.1), "poor");
    }

    // Direct evaluation of the definitions on a 2x2 table, written without
    // the marginal helpers above.
    fn reference(a: u64, b: u64, c: u64, d: u64) -> (f64, Option<f64>, Option<f64>) {
        let n = (a + b + c + d) as f64;
        let po = (a + d) as f64 / n;
        let pa1 = (c + d) as f64 / n;
        let pb1 = (b + d) as f64 / n;
        let pe = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1);
        let pi1 = (pa1 + pb1) / 2.0;
        let pe_gwet = 2.0 * pi1 * (1.0 - pi1);
        let coef = |pe: f64| {
            if pe < 1.0 - 1e-15 {
                Some((po - pe) / (1.0 - pe))
            } else {
                None
            }
        };
        (po, coef(pe), coef(pe_gwet))
    }

    proptest! {
        #[test]
        fn matches_definitions(a in 0u64..6, b in 0u64..6, c in 0u64..5, d in 0u64..5) {
            prop_assume!(a + b + c + d >= 1);
            let t = ContingencyTable::binary([[a, b], [c, d]]);
            let (po, kappa, ac1) = reference(a, b, c, d);
            prop_assert!((percent_agreement(&t).unwrap() - po).abs() < 1e-12);
            if let Some(k) = kappa {
                prop_assert!((cohens_kappa(&t).unwrap() - k).abs() < 1e-9);
            }
            if let Some(g) = ac1 {
                prop_assert!((gwets_ac1(&t).unwrap() - g).abs() < 1e-9);
            }
        }

        #[test]
        fn bounded_and_scale_invariant(a in 0u64..50, b in 0u64..50, c in 0u64..50, d in 0u64..50, s in 1u64..20) {
            prop_assume!(a + b + c + d >= 1);
            let t = ContingencyTable::binary([[a, b], [c, d]]);
            let scaled = ContingencyTable::binary([[a * s, b * s], [c * s, d * s]]);
            if let (Ok(k), Ok(g)) = (cohens_kappa(&t), gwets_ac1(&t)) {
                prop_assert!(k <= 1.0 + 1e-12 && g <= 1.0 + 1e-12);
                prop_assert!((cohens_kappa(&scaled).unwrap() - k).abs() < 1e-9);
                prop_assert!((gwets_ac1(&scaled).unwrap() - g).abs() < 1e-9);
            }
            prop_assert!((percent_agreement(&scaled).unwrap() - percent_agreement(&t).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn permutation_invariant(cells in proptest::collection::vec(0u64..30, 9)) {
            prop_assume!(cells.iter().sum::<u64>() >= 1);
            let names = vec!["x".to_string(), "y".to_string(), "z".to_string()];
            let m: Vec<Vec<u64>> = cells.chunks(3).map(|r| r.to_vec()).collect();
            let perm = [2usize, 0, 1];
            let pm: Vec<Vec<u64>> = perm.iter().map(|&i| perm.iter().map(|&j| m[i][j]).collect()).collect();
            let t = ContingencyTable::new(names.clone(), m).unwrap();
            let p = ContingencyTable::new(names, pm).unwrap();
            prop_assert!((percent_agreement(&t).unwrap() - percent_agreement(&p).unwrap()).abs() < 1e-12);
            if let (Ok(a), Ok(b)) = (cohens_kappa(&t), cohens_kappa(&p)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            if let (Ok(a), Ok(b)) = (gwets_ac1(&t), gwets_ac1(&p)) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
