use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{train, Algorithm, Hyperparameters, ShallowError, ShallowModelSpec};
use crate::corpus::Fold;
use crate::evaluation::compute_metrics;
use crate::features::{Embedding, FeatureSpace, SparseVec};
use crate::util;

/// Axis name that selects the feature weighting.
pub const EMBED_AXIS: &str = "embed";

/// Model-selection metric, averaged over validation folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    #[default]
    Accuracy,
    MacroF1,
    MacroRecall,
    MacroPrecision,
}

impl Scoring {
    pub fn name(self) -> &'static str {
        match self {
            Scoring::Accuracy => "accuracy",
            Scoring::MacroF1 => "macro_f1",
            Scoring::MacroRecall => "macro_recall",
            Scoring::MacroPrecision => "macro_precision",
        }
    }

    pub fn score(self, pred: &[u8], gold: &[u8]) -> f64 {
        let m = compute_metrics(pred, gold).expect("equal-length non-empty vectors");
        match self {
            Scoring::Accuracy => m.accuracy,
            Scoring::MacroF1 => m.macro_f1(),
            Scoring::MacroRecall => m.macro_recall(),
            Scoring::MacroPrecision => m.macro_precision(),
        }
    }
}

impl fmt::Display for Scoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scoring {
    type Err = ShallowError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Scoring::Accuracy,
            Scoring::MacroF1,
            Scoring::MacroRecall,
            Scoring::MacroPrecision,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| ShallowError::GridFile(format!("unknown scoring `{s}`")))
    }
}

/// Named value lists per hyperparameter, plus the optional `embed` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub algorithm: Algorithm,
    pub axes: BTreeMap<String, Vec<Value>>,
}

impl ParamGrid {
    pub fn new(
        algorithm: Algorithm,
        axes: BTreeMap<String, Vec<Value>>,
    ) -> Result<Self, ShallowError> {
        let grid = Self { algorithm, axes };
        for (name, values) in &grid.axes {
            if values.is_empty() {
                return Err(ShallowError::EmptyAxis(name.clone()));
            }
        }
        grid.combinations()?;
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.axes.values().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical enumeration: axes in name order, the last axis varying
    /// fastest. A grid without an `embed` axis uses bag-of-words.
    pub fn combinations(&self) -> Result<Vec<ShallowModelSpec>, ShallowError> {
        combinations(self)
    }
}

pub fn combinations(grid: &ParamGrid) -> Result<Vec<ShallowModelSpec>, ShallowError> {
    let axes: Vec<(&String, &Vec<Value>)> = grid.axes.iter().collect();
    if let Some((name, _)) = axes.iter().find(|(_, v)| v.is_empty()) {
        return Err(ShallowError::EmptyAxis(name.to_string()));
    }
    let total: usize = axes.iter().map(|(_, v)| v.len()).product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; axes.len()];
    for _ in 0..total {
        let mut embedding = Embedding::Bow;
        let mut hp = Hyperparameters::new();
        for (&(name, values), &d) in axes.iter().zip(&digits) {
            if name == EMBED_AXIS {
                let s = values[d].as_str().unwrap_or_default();
                embedding = s.parse()?;
            } else {
                hp.insert(name.clone(), values[d].clone());
            }
        }
        out.push(ShallowModelSpec::new(grid.algorithm, embedding, hp)?);
        for pos in (0..digits.len()).rev() {
            digits[pos] += 1;
            if digits[pos] < axes[pos].1.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
    Ok(out)
}

/// Default search space per algorithm. Each contains the configuration
/// that won in the reference study and at least two values per axis.
pub fn default_grid(algorithm: Algorithm) -> ParamGrid {
    let axes = match algorithm {
        Algorithm::NaiveBayes => json!({
            "alpha": [0.1, 0.5, 1.0], "fit_prior": [true, false], "embed": ["bow", "tfidf"]
        }),
        Algorithm::Svm => json!({
            "C": [1.0, 10.0, 50.0], "gamma": [0.001, 0.01, "scale"], "kernel": ["linear", "rbf"],
            "embed": ["bow", "tfidf"]
        }),
        Algorithm::RandomForest => json!({
            "criterion": ["gini", "entropy"], "max_features": ["auto", "log2"],
            "n_estimators": [100, 200, 500], "embed": ["bow", "tfidf"]
        }),
        Algorithm::DecisionTree => json!({
            "criterion": ["gini", "entropy"], "max_features": ["auto", "log2", null],
            "splitter": ["best", "random"], "embed": ["bow", "tfidf"]
        }),
        Algorithm::LogisticRegression => json!({
            "C": [0.1, 1.0, 10.0], "solver": ["liblinear", "lbfgs"], "embed": ["bow", "tfidf"]
        }),
        Algorithm::AdaBoost => json!({
            "algorithm": ["SAMME", "SAMME.R"], "n_estimators": [50, 100, 200], "embed": ["bow", "tfidf"]
        }),
        Algorithm::KNearestNeighbor => json!({
            "algorithm": ["ball_tree", "kd_tree", "brute"], "n_neighbors": [5, 10, 20],
            "weights": ["uniform", "distance"], "embed": ["bow", "tfidf"]
        }),
    };
    let axes = serde_json::from_value(axes).expect("static grid");
    ParamGrid::new(algorithm, axes).expect("static grid is valid")
}

/// Parses `{"algorithm": {"axis": [values, ...]}, ...}`.
pub fn read_grid_file(json_text: &str) -> Result<Vec<ParamGrid>, ShallowError> {
    let raw: BTreeMap<String, BTreeMap<String, Vec<Value>>> =
        serde_json::from_str(json_text).map_err(|e| ShallowError::GridFile(e.to_string()))?;
    raw.into_iter()
        .map(|(name, axes)| ParamGrid::new(name.parse()?, axes))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinationScore {
    pub spec: ShallowModelSpec,
    pub fold_scores: Vec<f64>,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub scoring: Scoring,
    pub best: ShallowModelSpec,
    pub best_score: f64,
    /// In canonical combination order.
    pub scores: Vec<CombinationScore>,
}

impl GridSearchResult {
    /// `combination,fold_1,...,fold_k,mean`.
    pub fn to_csv(&self) -> String {
        let k = self.scores.first().map_or(0, |s| s.fold_scores.len());
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["combination".to_string()];
        header.extend((1..=k).map(|i| format!("fold_{i}")));
        header.push("mean".into());
        wtr.write_record(&header).expect("in-memory write");
        for s in &self.scores {
            let mut row = vec![s.spec.describe()];
            row.extend(s.fold_scores.iter().map(|v| format!("{v:.6}")));
            row.push(format!("{:.6}", s.mean));
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory write")).expect("utf-8")
    }
}

struct FoldData {
    train_x: Vec<SparseVec>,
    train_y: Vec<u8>,
    val_x: Vec<SparseVec>,
    val_y: Vec<u8>,
}

/// Scores every combination on every fold and returns the best by mean
/// validation score. Ties keep the earliest combination in canonical order.
/// Combinations are evaluated in parallel; results do not depend on the
/// thread count. Fold `f` is trained with a seed derived from `(seed, f)`.
pub fn grid_search(
    grid: &ParamGrid,
    folds: &[Fold],
    scoring: Scoring,
    seed: u64,
) -> Result<GridSearchResult, ShallowError> {
    if folds.is_empty() {
        return Err(ShallowError::NoFolds);
    }
    let specs = grid.combinations()?;
    let mut data: BTreeMap<Embedding, Vec<FoldData>> = BTreeMap::new();
    for embedding in specs.iter().map(|s| s.embedding) {
        if data.contains_key(&embedding) {
            continue;
        }
        let per_fold = folds
            .par_iter()
            .map(|fold| -> Result<FoldData, ShallowError> {
                let texts = fold.train.texts();
                let space = FeatureSpace::fit(embedding, &texts)?;
                Ok(FoldData {
                    train_x: space.transform_all(&texts),
                    train_y: fold.train.causality_labels()?,
                    val_x: space.transform_all(&fold.validation.texts()),
                    val_y: fold.validation.causality_labels()?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        data.insert(embedding, per_fold);
    }
    let jobs: Vec<(usize, usize)> = (0..specs.len())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(c, f)| -> Result<f64, ShallowError> {
            let spec = &specs[c];
            let d = &data[&spec.embedding][f];
            let model = train(
                spec,
                &d.train_x,
                &d.train_y,
                util::derive_seed(seed, f as u64),
            )?;
            Ok(scoring.score(&model.predict(&d.val_x)?, &d.val_y))
        })
        .collect::<Result<_, _>>()?;
    let scores: Vec<CombinationScore> = specs
        .into_iter()
        .enumerate()
        .map(|(c, spec)| {
            let fold_scores = results[c * folds.len()..(c + 1) * folds.len()].to_vec();
            let mean = fold_scores.iter().sum::<f64>() / fold_scores.len() as f64;
            CombinationScore {
                spec,
                fold_scores,
                mean,
            }
        })
        .collect();
    let best = scores
        .iter()
        .fold(None::<&CombinationScore>, |b, s| match b {
            Some(b) if b.mean >= s.mean => Some(b),
            _ => Some(s),
        })
        .expect("at least one combination");
    Ok(GridSearchResult {
        scoring,
        best: best.spec.clone(),
        best_score: best.mean,
        scores,
    })
}
