//! Documents, sentences, labels and dataset operations.
//!
//! A [`Dataset`] is immutable once built: every operation (balancing,
//! splitting, subsetting) returns a new value, so datasets can be shared
//! freely between threads.

mod consolidate;
mod io;
mod ops;
mod schema;

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use consolidate::{consolidate, Consolidated};
pub use io::{load_corpus, read_corpus, save_corpus, write_corpus, CorpusFormat, CorpusRow};
pub use ops::{Fold, LabelShare, SplitPlan};
pub use schema::{
    label_from_json, Category, LabelSet, LabelValue, Relationship, SchemaViolation, Temporality,
};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate id `{id}`, line {line}")]
    DuplicateId { id: String, line: usize },
    #[error("document `{doc_id}` has two sentences at index {index}")]
    DuplicateIndex { doc_id: String, index: u32 },
    #[error("sentence `{0}` has empty text")]
    EmptyText(String),
    #[error("unknown sentence id `{0}`")]
    UnknownSentence(String),
    #[error("sentence `{id}` has no {category} label")]
    MissingLabel { id: String, category: Category },
    #[error("dataset contains no {0} sentences")]
    EmptyClass(&'static str),
    #[error("dataset is empty")]
    Empty,
    #[error("no sentence carries a {0} label")]
    NoLabels(Category),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("sentence `{id}`: {violation}")]
    Schema {
        id: String,
        violation: SchemaViolation,
    },
}

/// One sentence of a requirements document.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub doc_id: String,
    pub index_in_doc: u32,
    pub domain: String,
    pub year: Option<i32>,
}

impl Sentence {
    /// The canonical sentence id, `doc_id#index_in_doc`.
    pub fn canonical_id(doc_id: &str, index_in_doc: u32) -> String {
        format!("{doc_id}#{index_in_doc}")
    }
}

/// One annotator's labels for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sentence_id: String,
    pub annotator_id: String,
    pub labels: LabelSet,
    #[serde(default)]
    pub cue_phrases: Vec<String>,
    pub timestamp: DateTime<Utc>,
}

impl AnnotationRecord {
    /// Checks the record is complete and obeys the causality dependency rule.
    pub fn validate(&self) -> Result<(), SchemaViolation> {
        self.labels.validate(true)?;
        if self.cue_phrases.iter().any(|c| c.trim().is_empty()) {
            return Err(SchemaViolation::EmptyCuePhrase);
        }
        Ok(())
    }
}

/// An ordered sentence collection with consolidated gold labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    sentences: Vec<Sentence>,
    gold: BTreeMap<String, LabelSet>,
    cue_phrases: BTreeMap<String, Vec<String>>,
    provenance: BTreeMap<String, String>,
    by_id: HashMap<String, usize>,
    // positions of each document's sentences, sorted by index_in_doc
    by_doc: HashMap<String, Vec<usize>>,
}

impl PartialEq for Dataset {
    /// Provenance is metadata and does not take part in equality.
    fn eq(&self, other: &Self) -> bool {
        self.sentences == other.sentences
            && self.gold == other.gold
            && self.cue_phrases == other.cue_phrases
    }
}

impl Dataset {
    pub fn new(
        sentences: Vec<Sentence>,
        gold: BTreeMap<String, LabelSet>,
        cue_phrases: BTreeMap<String, Vec<String>>,
    ) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(sentences.len());
        let mut by_doc: HashMap<String, Vec<usize>> = HashMap::new();
        for (pos, s) in sentences.iter().enumerate() {
            if s.text.trim().is_empty() {
                return Err(CorpusError::EmptyText(s.id.clone()));
            }
            if by_id.insert(s.id.clone(), pos).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: s.id.clone(),
                    line: pos + 1,
                });
            }
            by_doc.entry(s.doc_id.clone()).or_default().push(pos);
        }
        for positions in by_doc.values_mut() {
            positions.sort_by_key(|&p| sentences[p].index_in_doc);
            if let Some(w) = positions
                .windows(2)
                .find(|w| sentences[w[0]].index_in_doc == sentences[w[1]].index_in_doc)
            {
                let s = &sentences[w[1]];
                return Err(CorpusError::DuplicateIndex {
                    doc_id: s.doc_id.clone(),
                    index: s.index_in_doc,
                });
            }
        }
        for (id, labels) in &gold {
            if !by_id.contains_key(id) {
                return Err(CorpusError::UnknownSentence(id.clone()));
            }
            labels
                .validate(false)
                .map_err(|violation| CorpusError::Schema {
                    id: id.clone(),
                    violation,
                })?;
        }
        if let Some(id) = cue_phrases.keys().find(|id| !by_id.contains_key(*id)) {
            return Err(CorpusError::UnknownSentence(id.clone()));
        }
        Ok(Self {
            sentences,
            gold: gold.into_iter().filter(|(_, l)| !l.is_empty()).collect(),
            cue_phrases: cue_phrases
                .into_iter()
                .filter(|(_, c)| !c.is_empty())
                .collect(),
            provenance: BTreeMap::new(),
            by_id,
            by_doc,
        })
    }

    /// Builds an unlabeled dataset from plain texts, one document per text.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self, CorpusError> {
        let sentences = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let doc_id = format!("doc{i}");
                Sentence {
                    id: Sentence::canonical_id(&doc_id, 0),
                    text: t.as_ref().to_string(),
                    doc_id,
                    index_in_doc: 0,
                    domain: String::new(),
                    year: None,
                }
            })
            .collect();
        Self::new(sentences, BTreeMap::new(), BTreeMap::new())
    }

    pub fn with_provenance(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.provenance.insert(key.into(), value.into());
        self
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Sentence> {
        self.by_id.get(id).map(|&p| &self.sentences[p])
    }

    pub fn gold_labels(&self) -> &BTreeMap<String, LabelSet> {
        &self.gold
    }

    pub fn labels(&self, id: &str) -> Option<&LabelSet> {
        self.gold.get(id)
    }

    pub fn cue_phrases(&self, id: &str) -> &[String] {
        self.cue_phrases.get(id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn provenance(&self) -> &BTreeMap<String, String> {
        &self.provenance
    }

    pub fn causality(&self, id: &str) -> Option<bool> {
        self.gold.get(id).and_then(LabelSet::causality)
    }

    /// Gold causality labels (1 = causal) in sentence order.
    pub fn causality_labels(&self) -> Result<Vec<u8>, CorpusError> {
        self.sentences
            .iter()
            .map(|s| {
                self.causality(&s.id)
                    .map(u8::from)
                    .ok_or_else(|| CorpusError::MissingLabel {
                        id: s.id.clone(),
                        category: Category::Causality,
                    })
            })
            .collect()
    }

    pub fn texts(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.text.clone()).collect()
    }

    /// Sentences whose ids satisfy `keep`, in the original order.
    pub fn filter(&self, keep: impl Fn(&Sentence) -> bool) -> Dataset {
        let sentences: Vec<Sentence> = self.sentences.iter().filter(|s| keep(s)).cloned().collect();
        let gold = sentences
            .iter()
            .filter_map(|s| self.gold.get(&s.id).map(|l| (s.id.clone(), l.clone())))
            .collect();
        let cues = sentences
            .iter()
            .filter_map(|s| {
                self.cue_phrases
                    .get(&s.id)
                    .map(|c| (s.id.clone(), c.clone()))
            })
            .collect();
        let mut out =
            Dataset::new(sentences, gold, cues).expect("subset of a valid dataset is valid");
        out.provenance = self.provenance.clone();
        out
    }

    /// Fingerprint over ids, texts and labels, used by run manifests.
    pub fn fingerprint(&self) -> String {
        let mut buf = Vec::new();
        io::write_corpus(self, CorpusFormat::Jsonl, &mut buf)
            .expect("writing to memory cannot fail");
        crate::util::sha256_hex(&buf)
    }
}
