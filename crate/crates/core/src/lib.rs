//! Core library of the CiRA causality-detection workbench.
//!
//! The crate is organised by concern:
//!
//! * [`corpus`]: sentences, label schema, annotation records and dataset
//!   operations (loading, balancing, stratified splitting, analytics).
//! * [`lexicon`]: the cue-phrase lexicon, ambiguity factors and the
//!   rule-based baseline classifier.
//! * [`agreement`]: percent agreement, Cohen's kappa and Gwet's AC1.
//! * [`features`]: bag-of-words / TF-IDF vectors, linguistic enrichment and
//!   subword encoding for transformer models.
//! * [`shallow`]: the seven classical classifiers and grid search.
//! * [`evaluation`]: metrics, cross-validation and comparison reports.
//! * [`synthetic`]: deterministic generator of requirement-like corpora.

pub mod agreement;
pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod lexicon;
pub mod shallow;
pub mod synthetic;

mod util;

pub use corpus::{
    AnnotationRecord, Category, Dataset, LabelSet, LabelValue, Relationship, Sentence, Temporality,
};
pub use evaluation::{CausalitySystem, ClassMetrics, EvaluationReport, Metrics, TextClassifier};
pub use lexicon::{CuePhraseEntry, Lexicon};
