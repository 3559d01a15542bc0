//! Metrics, the repeated hold-out / k-fold evaluation protocol and
//! comparison reports across classifier families.

mod harness;
mod manifest;
mod metrics;
mod systems;

pub use harness::{
    compare, cross_validate, Comparison, Delta, EvaluationConfig, EvaluationReport, ReportRow,
    REPORT_HEADER,
};
pub use manifest::RunManifest;
pub use metrics::{compute_metrics, f1, ClassMetrics, Metrics};
pub use systems::{
    CausalitySystem, ConstantSystem, Family, FittedSystem, RuleSystem, ShallowSystem,
    TextClassifier,
};

#[derive(Debug, thiserror::Error)]
pub enum EvaluationError {
    #[error("{predictions} predictions for {gold} gold labels")]
    LengthMismatch { predictions: usize, gold: usize },
    #[error("no labels to score")]
    Empty,
    #[error("labels must be 0 or 1, found {0}")]
    BadLabel(u8),
    #[error("duplicate system id `{0}`")]
    DuplicateSystem(String),
    #[error("no system with id `{0}`")]
    UnknownSystem(String),
    #[error("{0}")]
    Config(String),
    #[error("{system}, repetition {repetition}: {source}")]
    Run {
        system: String,
        repetition: usize,
        #[source]
        source: Box<EvaluationError>,
    },
    #[error("model error: {0}")]
    Model(String),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Shallow(#[from] crate::shallow::ShallowError),
}
