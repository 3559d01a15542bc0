use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::SplitPlan;
use crate::lexicon::Lexicon;
use crate::shallow::{grid_search, ParamGrid, Scoring, ShallowModelSpec, ShallowPipeline};

/// Maps raw sentences to `P(causal)`.
pub trait TextClassifier: Send + Sync {
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<f64>, EvaluationError>;

    /// Label 1 when `P(causal) > 0.5`.
    fn predict(&self, texts: &[String]) -> Result<Vec<u8>, EvaluationError> {
        Ok(self
            .predict_proba(texts)?
            .into_iter()
            .map(|p| u8::from(p > 0.5))
            .collect())
    }
}

/// Grouping used to order comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Rule,
    Shallow,
    Transformer,
    Other,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Rule => "rule",
            Family::Shallow => "shallow",
            Family::Transformer => "transformer",
            Family::Other => "other",
        })
    }
}

pub struct FittedSystem {
    pub classifier: Box<dyn TextClassifier>,
    /// Human-readable description of the selected configuration.
    pub hyperparameters: String,
}

/// A trainable classifier family evaluated by the harness.
pub trait CausalitySystem: Send + Sync {
    fn id(&self) -> String;

    fn family(&self) -> Family;

    /// Serializable description for run manifests.
    fn describe(&self) -> serde_json::Value;

    /// Selects and trains on the non-test part of `plan`. Implementations
    /// must not look at `plan.test`.
    fn fit(&self, plan: &SplitPlan, seed: u64) -> Result<FittedSystem, EvaluationError>;
}

impl TextClassifier for Lexicon {
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<f64>, EvaluationError> {
        Ok(texts
            .iter()
            .map(|t| if self.rule_classify(t) { 1.0 } else { 0.0 })
            .collect())
    }
}

/// Causal whenever any cue phrase of the lexicon occurs.
pub struct RuleSystem {
    pub lexicon: Lexicon,
}

impl CausalitySystem for RuleSystem {
    fn id(&self) -> String {
        "rule".into()
    }

    fn family(&self) -> Family {
        Family::Rule
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({"system": "rule", "lexicon_entries": self.lexicon.len()})
    }

    fn fit(&self, _plan: &SplitPlan, _seed: u64) -> Result<FittedSystem, EvaluationError> {
        Ok(FittedSystem {
            classifier: Box::new(self.lexicon.clone()),
            hyperparameters: "-".into(),
        })
    }
}

struct Constant(u8);

impl TextClassifier for Constant {
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<f64>, EvaluationError> {
        Ok(vec![f64::from(self.0); texts.len()])
    }
}

/// Always predicts the same label.
pub struct ConstantSystem {
    pub label: u8,
}

impl CausalitySystem for ConstantSystem {
    fn id(&self) -> String {
        format!("constant_{}", self.label)
    }

    fn family(&self) -> Family {
        Family::Other
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({"system": "constant", "label": self.label})
    }

    fn fit(&self, _plan: &SplitPlan, _seed: u64) -> Result<FittedSystem, EvaluationError> {
        Ok(FittedSystem {
            classifier: Box::new(Constant(self.label)),
            hyperparameters: format!("label: {}", self.label),
        })
    }
}

impl TextClassifier for ShallowPipeline {
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<f64>, EvaluationError> {
        Ok(ShallowPipeline::predict_proba(self, texts))
    }
}

/// Grid search on the validation folds, then a refit of the winner on all
/// non-test data.
pub struct ShallowSystem {
    pub grid: ParamGrid,
    pub scoring: Scoring,
}

impl ShallowSystem {
    pub fn best_spec(
        &self,
        plan: &SplitPlan,
        seed: u64,
    ) -> Result<ShallowModelSpec, EvaluationError> {
        Ok(grid_search(&self.grid, &plan.folds, self.scoring, seed)?.best)
    }
}

impl CausalitySystem for ShallowSystem {
    fn id(&self) -> String {
        self.grid.algorithm.name().into()
    }

    fn family(&self) -> Family {
        Family::Shallow
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({"system": self.id(), "grid": self.grid.axes, "scoring": self.scoring})
    }

    fn fit(&self, plan: &SplitPlan, seed: u64) -> Result<FittedSystem, EvaluationError> {
        let spec = if self.grid.len() == 1 {
            self.grid.combinations()?.remove(0)
        } else {
            self.best_spec(plan, seed)?
        };
        let texts = plan.remainder.texts();
        let labels = plan.remainder.causality_labels()?;
        let pipeline = ShallowPipeline::fit(&spec, &texts, &labels, seed)?;
        Ok(FittedSystem {
            classifier: Box::new(pipeline),
            hyperparameters: spec.describe(),
        })
    }
}
