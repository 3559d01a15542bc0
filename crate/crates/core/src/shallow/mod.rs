//! Classical binary classifiers over sparse feature vectors, their
//! hyperparameter schemas and exhaustive grid search.
//!
//! Labels are `0` (not causal) and `1` (causal). Every model exposes
//! `P(causal)`; the predicted label is `1` only when that probability
//! exceeds 0.5, so exact ties go to not causal.

mod boost;
mod grid;
mod knn;
mod logistic;
mod naive_bayes;
mod params;
mod svm;
mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::features::{Embedding, FeatureSpace, SparseVec};

pub use grid::{
    combinations, default_grid, grid_search, read_grid_file, CombinationScore, GridSearchResult,
    ParamGrid, Scoring,
};
pub use params::{schema, Hyperparameters, ParamKind, ParamSpec};

#[derive(Debug, thiserror::Error)]
pub enum ShallowError {
    #[error("unknown algorithm `{0}`; valid names: naive_bayes, svm, random_forest, decision_tree, logistic_regression, ada_boost, k_nearest_neighbor")]
    UnknownAlgorithm(String),
    #[error("{algorithm} has no hyperparameter `{name}`; valid names: {valid}")]
    UnknownParam {
        algorithm: Algorithm,
        name: String,
        valid: String,
    },
    #[error("{algorithm}: invalid value {value} for `{name}`: {expected}")]
    InvalidParam {
        algorithm: Algorithm,
        name: String,
        value: Value,
        expected: String,
    },
    #[error("training needs at least two samples with both classes present")]
    SingleClass,
    #[error("{features} feature vectors but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("labels must be 0 or 1, found {0}")]
    BadLabel(u8),
    #[error("feature dimension {found} does not match the trained dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("grid axis `{0}` has no values")]
    EmptyAxis(String),
    #[error("grid search needs at least one fold")]
    NoFolds,
    #[error("grid file: {0}")]
    GridFile(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    Svm,
    RandomForest,
    DecisionTree,
    LogisticRegression,
    AdaBoost,
    KNearestNeighbor,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::NaiveBayes,
        Algorithm::Svm,
        Algorithm::RandomForest,
        Algorithm::DecisionTree,
        Algorithm::LogisticRegression,
        Algorithm::AdaBoost,
        Algorithm::KNearestNeighbor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::Svm => "svm",
            Algorithm::RandomForest => "random_forest",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::LogisticRegression => "logistic_regression",
            Algorithm::AdaBoost => "ada_boost",
            Algorithm::KNearestNeighbor => "k_nearest_neighbor",
        }
    }

    /// Short label used in comparison tables.
    pub fn abbreviation(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "NB",
            Algorithm::Svm => "SVM",
            Algorithm::RandomForest => "RF",
            Algorithm::DecisionTree => "DT",
            Algorithm::LogisticRegression => "LR",
            Algorithm::AdaBoost => "AB",
            Algorithm::KNearestNeighbor => "KNN",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ShallowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == key || a.abbreviation().eq_ignore_ascii_case(&key))
            .ok_or_else(|| ShallowError::UnknownAlgorithm(s.to_string()))
    }
}

/// Algorithm, feature weighting and hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShallowModelSpec {
    pub algorithm: Algorithm,
    pub embedding: Embedding,
    pub hyperparameters: Hyperparameters,
}

impl ShallowModelSpec {
    /// Validates names and values against the algorithm's schema.
    pub fn new(
        algorithm: Algorithm,
        embedding: Embedding,
        hyperparameters: Hyperparameters,
    ) -> Result<Self, ShallowError> {
        params::validate(algorithm, &hyperparameters)?;
        Ok(Self {
            algorithm,
            embedding,
            hyperparameters,
        })
    }

    /// Schema defaults for every hyperparameter.
    pub fn defaults(algorithm: Algorithm, embedding: Embedding) -> Self {
        Self {
            algorithm,
            embedding,
            hyperparameters: Hyperparameters::new(),
        }
    }

    /// The hyperparameters with schema defaults filled in.
    pub fn resolved(&self) -> Hyperparameters {
        params::resolve(self.algorithm, &self.hyperparameters)
    }

    /// `name: value` pairs in name order followed by the embedding.
    pub fn describe(&self) -> String {
        let mut parts: Vec<String> = self
            .hyperparameters
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}: {s}"),
                other => format!("{k}: {other}"),
            })
            .collect();
        parts.push(format!("embed: {}", self.embedding));
        parts.join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Fitted {
    NaiveBayes(naive_bayes::NaiveBayes),
    Svm(svm::Svm),
    Forest(tree::Forest),
    Tree(tree::Tree),
    Logistic(logistic::Logistic),
    Boost(boost::AdaBoost),
    Knn(knn::Knn),
}

/// A fitted classifier; predictions are a pure function of the stored parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedShallowModel {
    pub spec: ShallowModelSpec,
    dim: usize,
    fitted: Fitted,
}

fn check_training(features: &[SparseVec], labels: &[u8]) -> Result<(), ShallowError> {
    if features.len() != labels.len() {
        return Err(ShallowError::LengthMismatch {
            features: features.len(),
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(ShallowError::BadLabel(bad));
    }
    if labels.len() < 2 || !labels.contains(&0) || !labels.contains(&1) {
        return Err(ShallowError::SingleClass);
    }
    Ok(())
}

pub fn train(
    spec: &ShallowModelSpec,
    features: &[SparseVec],
    labels: &[u8],
    seed: u64,
) -> Result<TrainedShallowModel, ShallowError> {
    params::validate(spec.algorithm, &spec.hyperparameters)?;
    check_training(features, labels)?;
    let dim = features[0].dim();
    if let Some(bad) = features.iter().find(|x| x.dim() != dim) {
        return Err(ShallowError::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let p = params::Params::new(spec.algorithm, spec.resolved());
    let fitted = match spec.algorithm {
        Algorithm::NaiveBayes => {
            Fitted::NaiveBayes(naive_bayes::NaiveBayes::fit(&p, features, labels))
        }
        Algorithm::Svm => Fitted::Svm(svm::Svm::fit(&p, features, labels)),
        Algorithm::RandomForest => Fitted::Forest(tree::Forest::fit(&p, features, labels, seed)),
        Algorithm::DecisionTree => {
            Fitted::Tree(tree::Tree::fit_classifier(&p, features, labels, seed))
        }
        Algorithm::LogisticRegression => {
            Fitted::Logistic(logistic::Logistic::fit(&p, features, labels))
        }
        Algorithm::AdaBoost => Fitted::Boost(boost::AdaBoost::fit(&p, features, labels, seed)),
        Algorithm::KNearestNeighbor => Fitted::Knn(knn::Knn::fit(&p, features, labels)),
    };
    Ok(TrainedShallowModel {
        spec: spec.clone(),
        dim,
        fitted,
    })
}

impl TrainedShallowModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_dims(&self, features: &[SparseVec]) -> Result<(), ShallowError> {
        match features.iter().find(|x| x.dim() != self.dim) {
            Some(bad) => Err(ShallowError::DimensionMismatch {
                expected: self.dim,
                found: bad.dim(),
            }),
            None => Ok(()),
        }
    }

    /// `P(causal)` per input. For the SVM this is a logistic squashing of
    /// the decision value, monotone but not calibrated.
    pub fn predict_proba(&self, features: &[SparseVec]) -> Result<Vec<f64>, ShallowError> {
        self.check_dims(features)?;
        Ok(match &self.fitted {
            Fitted::NaiveBayes(m) => m.proba(features),
            Fitted::Svm(m) => m.proba(features),
            Fitted::Forest(m) => m.proba(features),
            Fitted::Tree(m) => features.iter().map(|x| m.proba_one(x)).collect(),
            Fitted::Logistic(m) => m.proba(features),
            Fitted::Boost(m) => m.proba(features),
            Fitted::Knn(m) => m.proba(features),
        })
    }

    pub fn predict(&self, features: &[SparseVec]) -> Result<Vec<u8>, ShallowError> {
        Ok(self
            .predict_proba(features)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }
}

/// Feature space plus model: classifies raw text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShallowPipeline {
    pub space: FeatureSpace,
    pub model: TrainedShallowModel,
}

impl ShallowPipeline {
    /// Fits the vocabulary on `texts` and trains on their vectors.
    pub fn fit<S: AsRef<str>>(
        spec: &ShallowModelSpec,
        texts: &[S],
        labels: &[u8],
        seed: u64,
    ) -> Result<Self, ShallowError> {
        let space = FeatureSpace::fit(spec.embedding, texts)?;
        let x = space.transform_all(texts);
        let model = train(spec, &x, labels, seed)?;
        Ok(Self { space, model })
    }

    pub fn predict_proba<S: AsRef<str>>(&self, texts: &[S]) -> Vec<f64> {
        self.model
            .predict_proba(&self.space.transform_all(texts))
            .expect("vectors come from the fitted space")
    }

    pub fn predict<S: AsRef<str>>(&self, texts: &[S]) -> Vec<u8> {
        self.predict_proba(texts)
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect()
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use rand::Rng;

    use crate::features::SparseVec;
    use crate::util;

    /// Two Gaussian-ish blobs in `dim` non-negative dimensions.
    pub fn blobs(n: usize, dim: usize, seed: u64) -> (Vec<SparseVec>, Vec<u8>) {
        let mut rng = util::rng(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let y = (i % 2) as u8;
            let dense: Vec<f64> = (0..dim)
                .map(|d| {
                    let centre = if (d % 2 == 0) == (y == 1) { 2.0 } else { 0.0 };
                    let v: f64 = centre + rng.gen_range(-0.5..0.5);
                    if v < 0.3 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect();
            xs.push(SparseVec::from_dense(&dense));
            ys.push(y);
        }
        (xs, ys)
    }

    pub fn accuracy(pred: &[u8], gold: &[u8]) -> f64 {
        pred.iter().zip(gold).filter(|(a, b)| a == b).count() as f64 / gold.len() as f64
    }
}
