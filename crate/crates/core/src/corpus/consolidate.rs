//! Gold-label consolidation of overlapping annotations.
//!
//! Per category the majority value wins. A tie is resolved by the
//! adjudicator's record when one exists; otherwise the sentence (for
//! Causality) or the category (for dependent categories) is left out.

use std::collections::BTreeMap;

use super::{AnnotationRecord, Category, LabelSet, LabelValue};

#[derive(Debug, Clone, PartialEq)]
pub struct Consolidated {
    pub labels: LabelSet,
    pub cue_phrases: Vec<String>,
}

/// Consolidates the current records of every sentence.
///
/// Expects at most one record per (annotator, sentence); the caller passes
/// the latest version of each.
pub fn consolidate(
    records: &[AnnotationRecord],
    adjudicator: Option<&str>,
) -> BTreeMap<String, Consolidated> {
    let mut by_sentence: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for record in records {
        by_sentence
            .entry(record.sentence_id.as_str())
            .or_default()
            .push(record);
    }
    let mut out = BTreeMap::new();
    for (sentence_id, mut group) in by_sentence {
        group.sort_by(|a, b| a.annotator_id.cmp(&b.annotator_id));
        let referee = adjudicator.and_then(|a| group.iter().find(|r| r.annotator_id == a).copied());

        let Some(causal) = vote(group.iter().copied(), Category::Causality, referee) else {
            continue;
        };
        let mut labels = LabelSet::new();
        labels
            .insert(Category::Causality, causal)
            .expect("causality vote yields a binary value");
        let agreeing: Vec<&AnnotationRecord> = group
            .iter()
            .copied()
            .filter(|r| r.labels.get(Category::Causality) == Some(causal))
            .collect();
        if causal == LabelValue::Binary(true) {
            let referee = referee.filter(|r| r.labels.causality() == Some(true));
            for category in Category::ALL.into_iter().filter(|c| c.is_dependent()) {
                if let Some(value) = vote(agreeing.iter().copied(), category, referee) {
                    labels
                        .insert(category, value)
                        .expect("vote preserves value kind");
                }
            }
        }
        let mut cue_phrases: Vec<String> = Vec::new();
        for record in &agreeing {
            for cue in &record.cue_phrases {
                if !cue_phrases.contains(cue) {
                    cue_phrases.push(cue.clone());
                }
            }
        }
        out.insert(
            sentence_id.to_string(),
            Consolidated {
                labels,
                cue_phrases,
            },
        );
    }
    out
}

fn vote<'a>(
    records: impl Iterator<Item = &'a AnnotationRecord>,
    category: Category,
    referee: Option<&AnnotationRecord>,
) -> Option<LabelValue> {
    let mut tally: BTreeMap<LabelValue, usize> = BTreeMap::new();
    for record in records {
        if let Some(v) = record.labels.get(category) {
            *tally.entry(v).or_default() += 1;
        }
    }
    let best = *tally.values().max()?;
    let leaders: Vec<LabelValue> = tally
        .iter()
        .filter(|(_, &c)| c == best)
        .map(|(v, _)| *v)
        .collect();
    match leaders.as_slice() {
        [single] => Some(*single),
        _ => referee
            .and_then(|r| r.labels.get(category))
            .filter(|v| leaders.contains(v)),
    }
}
