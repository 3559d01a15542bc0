use std::fmt::Write as _;

use serde::Serialize;

use super::{CuePhraseEntry, Lexicon};
use crate::corpus::Dataset;

/// Threshold above which a phrase counts as non-ambiguous, applied to the
/// ambiguity factor rounded to two decimals.
pub const NON_AMBIGUOUS_AF: f64 = 0.8;

/// Sentence counts for one phrase, split by gold causality label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmbiguityStat {
    pub entry: CuePhraseEntry,
    pub causal_count: u64,
    pub non_causal_count: u64,
}

impl AmbiguityStat {
    pub fn from_counts(entry: CuePhraseEntry, causal_count: u64, non_causal_count: u64) -> Self {
        Self {
            entry,
            causal_count,
            non_causal_count,
        }
    }

    pub fn total(&self) -> u64 {
        self.causal_count + self.non_causal_count
    }

    /// Pr(causal | phrase present); `None` when the phrase never occurs.
    pub fn af(&self) -> Option<f64> {
        (self.total() > 0).then(|| self.causal_count as f64 / self.total() as f64)
    }

    pub fn is_undefined(&self) -> bool {
        self.total() == 0
    }

    /// AF at the two-decimal precision reports use is at least 0.8.
    pub fn is_non_ambiguous(&self) -> bool {
        self.af()
            .is_some_and(|af| (af * 100.0).round() / 100.0 >= NON_AMBIGUOUS_AF - 1e-12)
    }
}

impl Lexicon {
    /// Counts the labeled sentences that contain `entry` (presence, not
    /// occurrences). Sentences without a causality label are skipped.
    pub fn ambiguity_factor(&self, entry: &CuePhraseEntry, dataset: &Dataset) -> AmbiguityStat {
        let single = Lexicon::new(vec![entry.clone()]);
        let mut stat = AmbiguityStat::from_counts(entry.clone(), 0, 0);
        for s in dataset.sentences() {
            let Some(causal) = dataset.causality(&s.id) else {
                continue;
            };
            if single.entries_present(&s.text)[0] {
                if causal {
                    stat.causal_count += 1;
                } else {
                    stat.non_causal_count += 1;
                }
            }
        }
        stat
    }

    /// Ambiguity statistics for every entry, grouped by grammatical type
    /// (verbs further by relation group) and ordered by descending sentence
    /// count within a group.
    pub fn af_table(&self, dataset: &Dataset) -> AfTable {
        let mut causal = vec![0u64; self.len()];
        let mut non_causal = vec![0u64; self.len()];
        for s in dataset.sentences() {
            let Some(label) = dataset.causality(&s.id) else {
                continue;
            };
            let counts = if label { &mut causal } else { &mut non_causal };
            for (i, present) in self.entries_present(&s.text).into_iter().enumerate() {
                if present {
                    counts[i] += 1;
                }
            }
        }
        let rows = self
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| AmbiguityStat::from_counts(e.clone(), causal[i], non_causal[i]))
            .collect();
        AfTable::new(rows)
    }
}

/// Ambiguity report in lexicon layout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfTable {
    pub rows: Vec<AmbiguityStat>,
}

impl AfTable {
    /// Orders `rows`; the sort is stable so ties keep their input order.
    pub fn new(mut rows: Vec<AmbiguityStat>) -> Self {
        rows.sort_by(|a, b| {
            (a.entry.grammatical_type, a.entry.relation_group)
                .cmp(&(b.entry.grammatical_type, b.entry.relation_group))
                .then(b.total().cmp(&a.total()))
        });
        Self { rows }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "grammatical_type,relation_group,phrase,causal,not_causal,af,non_ambiguous\n",
        );
        let mut wtr = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for r in &self.rows {
            wtr.write_record([
                r.entry.grammatical_type.as_str().to_string(),
                r.entry
                    .relation_group
                    .map(|g| g.as_str().to_string())
                    .unwrap_or_default(),
                r.entry.phrase.clone(),
                r.causal_count.to_string(),
                r.non_causal_count.to_string(),
                r.af()
                    .map(|af| format!("{af:.2}"))
                    .unwrap_or_else(|| "undefined".into()),
                r.is_non_ambiguous().to_string(),
            ])
            .expect("in-memory write");
        }
        out.push_str(
            &String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("utf-8"),
        );
        out
    }

    /// Plain-text rendering; non-ambiguous rows are marked with `*`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<8} {:<20} {:>7} {:>10} {:>6}",
            "type", "group", "phrase", "causal", "not causal", "AF"
        );
        for r in &self.rows {
            let af = match r.af() {
                Some(af) => format!("{af:.2}{}", if r.is_non_ambiguous() { "*" } else { " " }),
                None => "n/a ".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<12} {:<8} {:<20} {:>7} {:>10} {:>6}",
                r.entry.grammatical_type.as_str(),
                r.entry.relation_group.map(|g| g.as_str()).unwrap_or("-"),
                r.entry.phrase,
                r.causal_count,
                r.non_causal_count,
                af
            );
        }
        out
    }
}
