//! Deterministic generator of requirement-like corpora with exact class
//! counts, for tests, demos and load experiments.

use std::collections::BTreeMap;

use chrono::TimeZone;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    AnnotationRecord, Category, Dataset, LabelSet, LabelValue, Relationship, Sentence, Temporality,
};
use crate::util::{derive_seed, rng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    /// Exact number of causal sentences.
    pub causal: usize,
    pub sentences_per_doc: usize,
    /// Share of non-causal sentences that contain an ambiguous cue phrase.
    pub ambiguous_share: f64,
    /// Share of causal sentences with no cue phrase at all.
    pub implicit_share: f64,
}

impl SyntheticConfig {
    /// `n` sentences of which `round(n * causal_share)` are causal.
    pub fn small(n: usize, causal_share: f64) -> Self {
        Self {
            sentences: n,
            causal: ((n as f64) * causal_share.clamp(0.0, 1.0)).round() as usize,
            sentences_per_doc: 10,
            ambiguous_share: 0.2,
            implicit_share: 0.1,
        }
    }

    /// Size and class balance of the annotated study corpus.
    pub fn study_scale() -> Self {
        Self {
            sentences: 14_983,
            causal: 4_215,
            ..Self::small(0, 0.0)
        }
    }
}

const SUBJECTS: &[&str] = &[
    "system",
    "application",
    "server",
    "controller",
    "user interface",
    "database",
    "scheduler",
    "gateway",
    "sensor unit",
    "billing module",
    "mobile client",
    "report engine",
];
const ACTIONS: &[&str] = &[
    "log the event",
    "notify the operator",
    "restart the service",
    "lock the account",
    "display a warning",
    "store the record",
    "send a confirmation email",
    "reject the request",
    "close the session",
    "update the dashboard",
    "archive the file",
    "retry the transfer",
    "switch to backup mode",
    "raise an alarm",
    "discard the cache",
];
const CONDITIONS: &[&str] = &[
    "the connection is lost",
    "the user enters an invalid password",
    "the battery level drops below ten percent",
    "a payment is declined",
    "the disk is full",
    "the timer expires",
    "a new order arrives",
    "the sensor reports a fault",
    "the operator cancels the job",
    "the file cannot be parsed",
    "the temperature exceeds the limit",
    "the license is revoked",
];
const GOALS: &[&str] = &[
    "protect personal data",
    "keep response times low",
    "meet the audit requirements",
    "avoid data loss",
    "reduce manual work",
    "keep the inventory consistent",
];
const EVENTS: &[&str] = &[
    "a network outage",
    "a failed login",
    "an expired certificate",
    "a power failure",
    "a duplicate entry",
    "a corrupted message",
];
const EFFECTS: &[&str] = &[
    "a system shutdown",
    "an error report",
    "a delayed delivery",
    "an account lock",
    "a full resynchronisation",
    "a rollback of the transaction",
];
const PROPERTIES: &[&str] = &[
    "be available around the clock",
    "support at least 500 concurrent users",
    "be written in Java",
    "use the corporate colour scheme",
    "comply with the accessibility guidelines",
    "run on Linux and Windows",
    "provide an English and a German interface",
    "be maintainable by the operations team",
    "keep a version history of all documents",
    "export reports in PDF format",
];
const NOUNS: &[&str] = &[
    "invoices",
    "customer records",
    "log files",
    "user profiles",
    "sensor readings",
    "orders",
];

fn pick<'a>(r: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[r.gen_range(0..items.len())]
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Generated {
    text: String,
    labels: LabelSet,
    cues: Vec<String>,
}

fn causal_labels(
    marked: bool,
    relationship: Relationship,
    temporality: Temporality,
    r: &mut ChaCha8Rng,
) -> LabelSet {
    let b = LabelValue::Binary;
    LabelSet::causal(true)
        .with(Category::Explicit, b(true))
        .and_then(|l| l.with(Category::Marked, b(marked)))
        .and_then(|l| l.with(Category::SingleSentence, b(true)))
        .and_then(|l| l.with(Category::SingleCause, b(r.gen_bool(0.8))))
        .and_then(|l| l.with(Category::SingleEffect, b(r.gen_bool(0.8))))
        .and_then(|l| l.with(Category::EventChain, b(r.gen_bool(0.05))))
        .and_then(|l| {
            l.with(
                Category::Relationship,
                LabelValue::Relationship(relationship),
            )
        })
        .and_then(|l| l.with(Category::Temporality, LabelValue::Temporality(temporality)))
        .expect("generator emits schema-valid labels")
}

fn causal_sentence(r: &mut ChaCha8Rng, implicit: bool) -> Generated {
    let subj = pick(r, SUBJECTS);
    let act = pick(r, ACTIONS);
    let cond = pick(r, CONDITIONS);
    if implicit {
        let event = pick(r, EVENTS);
        let text = match r.gen_range(0..2) {
            0 => format!("On {event}, the {subj} shall {act}."),
            _ => format!("{}: the {subj} shall {act}.", capitalize(event)),
        };
        return Generated {
            text,
            labels: causal_labels(false, Relationship::Cause, Temporality::Before, r),
            cues: Vec::new(),
        };
    }
    let (text, cue, rel, temp) = match r.gen_range(0..9) {
        0 => (
            format!("If {cond}, the {subj} shall {act}."),
            "if",
            Relationship::Cause,
            Temporality::Before,
        ),
        1 => (
            format!("When {cond}, the {subj} shall {act}."),
            "when",
            Relationship::Cause,
            Temporality::Before,
        ),
        2 => (
            format!("The {subj} shall {act} because {cond}."),
            "because",
            Relationship::Cause,
            Temporality::Before,
        ),
        3 => (
            format!("The {subj} shall {act} unless {cond}."),
            "unless",
            Relationship::Prevent,
            Temporality::Overlap,
        ),
        4 => (
            format!("The {subj} shall {act} in order to {}.", pick(r, GOALS)),
            "in order to",
            Relationship::Enable,
            Temporality::Before,
        ),
        5 => (
            format!(
                "{} leads to {}.",
                capitalize(pick(r, EVENTS)),
                pick(r, EFFECTS)
            ),
            "lead(s) to",
            Relationship::Cause,
            Temporality::Before,
        ),
        6 => (
            format!(
                "In the event of {}, the {subj} shall {act}.",
                pick(r, EVENTS)
            ),
            "in the event of",
            Relationship::Cause,
            Temporality::Before,
        ),
        7 => (
            format!("The {subj} shall {act} to prevent {}.", pick(r, EFFECTS)),
            "prevent(s/ed)",
            Relationship::Prevent,
            Temporality::Before,
        ),
        _ => (
            format!("Whenever {cond}, the {subj} shall {act}."),
            "whenever",
            Relationship::Cause,
            Temporality::Before,
        ),
    };
    Generated {
        text,
        labels: causal_labels(true, rel, temp, r),
        cues: vec![cue.to_string()],
    }
}

fn non_causal_sentence(r: &mut ChaCha8Rng, ambiguous: bool) -> Generated {
    let subj = pick(r, SUBJECTS);
    let text = if ambiguous {
        match r.gen_range(0..5) {
            0 => format!(
                "The {subj} shall store {} for {} years.",
                pick(r, NOUNS),
                r.gen_range(2..11)
            ),
            1 => format!(
                "Since release {}, the {subj} shall {}.",
                r.gen_range(2..9),
                pick(r, PROPERTIES)
            ),
            2 => format!(
                "The {subj} shall show the time when the {} were last updated.",
                pick(r, NOUNS)
            ),
            3 => format!("The {subj} shall be delivered as a container image."),
            _ => format!("The {subj} shall support the import of {}.", pick(r, NOUNS)),
        }
    } else {
        match r.gen_range(0..4) {
            0 => format!("The {subj} shall {}.", pick(r, PROPERTIES)),
            1 => format!("All {} shall be encrypted at rest.", pick(r, NOUNS)),
            2 => format!("The {subj} shall list all {} in a table.", pick(r, NOUNS)),
            _ => format!("The {subj} must {}.", pick(r, PROPERTIES)),
        }
    };
    Generated {
        text,
        labels: LabelSet::causal(false),
        cues: Vec::new(),
    }
}

/// Generates `config.sentences` sentences, exactly `config.causal` of them
/// causal, grouped into documents. Identical inputs give identical output.
///
/// # Panics
///
/// If `config.causal > config.sentences` or `sentences_per_doc` is zero.
pub fn generate(config: &SyntheticConfig, seed: u64) -> Dataset {
    assert!(
        config.causal <= config.sentences,
        "more causal sentences than sentences"
    );
    assert!(
        config.sentences_per_doc > 0,
        "sentences_per_doc must be positive"
    );
    let mut r = rng(seed);
    let mut is_causal = vec![false; config.sentences];
    is_causal[..config.causal]
        .iter_mut()
        .for_each(|c| *c = true);
    is_causal.shuffle(&mut r);

    let domains = [
        "automotive",
        "healthcare",
        "finance",
        "telecom",
        "public sector",
    ];
    let mut sentences = Vec::with_capacity(config.sentences);
    let mut gold = BTreeMap::new();
    let mut cues = BTreeMap::new();
    for (i, &causal) in is_causal.iter().enumerate() {
        let doc = i / config.sentences_per_doc;
        let doc_id = format!("syn{doc:05}");
        let index = (i % config.sentences_per_doc) as u32;
        let g = if causal {
            let implicit = r.gen_bool(config.implicit_share.clamp(0.0, 1.0));
            causal_sentence(&mut r, implicit)
        } else {
            let ambiguous = r.gen_bool(config.ambiguous_share.clamp(0.0, 1.0));
            non_causal_sentence(&mut r, ambiguous)
        };
        let id = Sentence::canonical_id(&doc_id, index);
        gold.insert(id.clone(), g.labels);
        if !g.cues.is_empty() {
            cues.insert(id.clone(), g.cues);
        }
        sentences.push(Sentence {
            id,
            text: g.text,
            doc_id,
            index_in_doc: index,
            domain: domains[doc % domains.len()].to_string(),
            year: Some(2000 + (doc % 20) as i32),
        });
    }
    Dataset::new(sentences, gold, cues)
        .expect("generator output is a valid dataset")
        .with_provenance("generator", format!("synthetic seed={seed}"))
}

/// Simulated annotations of every sentence by each of `annotators`: each
/// rater copies the gold labels and flips the causality decision with
/// probability `flip_rate` (dropping dependent labels when flipping to
/// non-causal).
pub fn simulate_annotations(
    dataset: &Dataset,
    annotators: &[&str],
    flip_rate: f64,
    seed: u64,
) -> Vec<AnnotationRecord> {
    let mut out = Vec::new();
    for (a, annotator) in annotators.iter().enumerate() {
        let mut r = rng(derive_seed(seed, a as u64));
        for s in dataset.sentences() {
            let Some(gold) = dataset.labels(&s.id) else {
                continue;
            };
            let causal = gold.causality().unwrap_or(false);
            let flip = r.gen_bool(flip_rate.clamp(0.0, 1.0));
            let labels = match (causal, flip) {
                (_, false) => gold.clone(),
                (true, true) => LabelSet::causal(false),
                (false, true) => {
                    causal_labels(true, Relationship::Cause, Temporality::Before, &mut r)
                }
            };
            let cue_phrases = if labels.causality() == Some(true) {
                dataset.cue_phrases(&s.id).to_vec()
            } else {
                Vec::new()
            };
            out.push(AnnotationRecord {
                sentence_id: s.id.clone(),
                annotator_id: annotator.to_string(),
                labels,
                cue_phrases,
                timestamp: chrono::Utc
                    .timestamp_opt(1_600_000_000 + out.len() as i64, 0)
                    .unwrap(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::Lexicon;

    #[test]
    fn exact_counts_and_determinism() {
        let cfg = SyntheticConfig::small(503, 0.3);
        let a = generate(&cfg, 9);
        assert_eq!(a.len(), 503);
        let labels = a.causality_labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), cfg.causal);
        assert_eq!(a, generate(&cfg, 9));
        assert_ne!(a.texts(), generate(&cfg, 10).texts());
    }

    #[test]
    fn study_scale_balances_to_twice_the_minority() {
        let ds = generate(&SyntheticConfig::study_scale(), 1);
        assert_eq!(ds.len(), 14_983);
        assert_eq!(ds.undersample(1).unwrap().len(), 8_430);
    }

    #[test]
    fn annotated_cues_are_lexicon_phrases() {
        let lex = Lexicon::default_lexicon();
        let ds = generate(&SyntheticConfig::small(300, 0.5), 2);
        for s in ds.sentences() {
            for cue in ds.cue_phrases(&s.id) {
                assert!(lex.find(cue).is_some(), "{cue}");
                assert!(
                    lex.match_phrases(&s.text).iter().any(|m| &m.phrase == cue),
                    "{}",
                    s.text
                );
            }
        }
    }

    #[test]
    fn simulated_raters_without_noise_agree_with_gold() {
        let ds = generate(&SyntheticConfig::small(50, 0.5), 3);
        let recs = simulate_annotations(&ds, &["a", "b"], 0.0, 0);
        assert_eq!(recs.len(), 100);
        assert!(recs
            .iter()
            .all(|r| ds.labels(&r.sentence_id) == Some(&r.labels)));
        assert!(recs.iter().all(|r| r.labels.validate(true).is_ok()));
    }
}
