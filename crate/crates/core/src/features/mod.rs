//! Model inputs: sparse bag-of-words / TF-IDF vectors for the shallow
//! classifiers, tag-enriched text and fixed-length subword encodings for the
//! transformer.

mod sparse;
mod subword;
mod tagging;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use sparse::SparseVec;
pub use subword::{
    encode_for_transformer, token_length_coverage, EncodedSequence, WordPieceTokenizer,
    BASE_MAX_LEN, ENRICHED_MAX_LEN,
};
pub use tagging::{
    enrich, render_enriched, tagger_from_spec, CommandTagger, FixedTagger, RuleTagger, TagMode,
    TaggedToken, Tagger, TaggerError, DEP_LABELS, UNIVERSAL_POS,
};

use crate::corpus::Dataset;
use crate::lexicon::tokenize;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("unsupported max_len {0}; expected 128 or 384")]
    MaxLen(usize),
    #[error("vocabulary file {path}: {message}")]
    VocabFile { path: String, message: String },
    #[error("unknown embedding `{0}`; expected bow or tfidf")]
    UnknownEmbedding(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Lowercased word tokens; punctuation is dropped.
pub fn word_tokens(text: &str) -> impl Iterator<Item = String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.text.chars().any(char::is_alphanumeric))
        .map(|t| t.text)
}

/// Unigram vocabulary with document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    document_frequencies: Vec<u64>,
    corpus_size: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    corpus_size: u64,
    terms: Vec<(String, u64)>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let (terms, document_frequencies): (Vec<String>, Vec<u64>) = r.terms.into_iter().unzip();
        Self::from_parts(terms, document_frequencies, r.corpus_size)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        Self {
            corpus_size: v.corpus_size,
            terms: v.terms.into_iter().zip(v.document_frequencies).collect(),
        }
    }
}

impl Vocabulary {
    fn from_parts(terms: Vec<String>, document_frequencies: Vec<u64>, corpus_size: u64) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self {
            terms,
            index,
            document_frequencies,
            corpus_size,
        }
    }

    /// Terms are indexed in lexicographic order.
    pub fn fit<S: AsRef<str>>(texts: &[S]) -> Result<Self, FeatureError> {
        if texts.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for text in texts {
            let mut seen: Vec<String> = word_tokens(text.as_ref()).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *df.entry(term).or_default() += 1;
            }
        }
        let (terms, freqs) = df.into_iter().unzip();
        Ok(Self::from_parts(terms, freqs, texts.len() as u64))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn document_frequency(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.document_frequencies[i])
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        let n = self.corpus_size as f64;
        let df = self.document_frequencies[index] as f64;
        ((1.0 + n) / (1.0 + df)).ln() + 1.0
    }

    pub fn bow_vector(&self, text: &str) -> SparseVec {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in word_tokens(text) {
            if let Some(i) = self.index_of(&term) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        SparseVec::from_sorted(self.len(), counts.into_iter().collect())
    }

    /// Raw term counts times idf, L2-normalized.
    pub fn tfidf_vector(&self, text: &str) -> SparseVec {
        let mut v = self.bow_vector(text);
        v.map_entries(|i, x| x * self.idf(i));
        v.l2_normalize();
        v
    }
}

/// Vocabulary over the texts of `corpus`, which should be the training split.
pub fn fit_vocabulary(corpus: &Dataset) -> Result<Vocabulary, FeatureError> {
    Vocabulary::fit(&corpus.texts())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Bow,
    Tfidf,
}

impl Embedding {
    pub const ALL: [Embedding; 2] = [Embedding::Bow, Embedding::Tfidf];

    pub fn as_str(self) -> &'static str {
        match self {
            Embedding::Bow => "bow",
            Embedding::Tfidf => "tfidf",
        }
    }
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Embedding {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "bow" => Ok(Embedding::Bow),
            "tfidf" => Ok(Embedding::Tfidf),
            _ => Err(FeatureError::UnknownEmbedding(s.to_string())),
        }
    }
}

/// A frozen vocabulary together with the weighting applied to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpace {
    pub embedding: Embedding,
    pub vocabulary: Vocabulary,
}

impl FeatureSpace {
    pub fn fit<S: AsRef<str>>(embedding: Embedding, texts: &[S]) -> Result<Self, FeatureError> {
        Ok(Self {
            embedding,
            vocabulary: Vocabulary::fit(texts)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn transform(&self, text: &str) -> SparseVec {
        match self.embedding {
            Embedding::Bow => self.vocabulary.bow_vector(text),
            Embedding::Tfidf => self.vocabulary.tfidf_vector(text),
        }
    }

    pub fn transform_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseVec> {
        texts.iter().map(|t| self.transform(t.as_ref())).collect()
    }
}
