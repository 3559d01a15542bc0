use std::sync::Arc;

use cira_core::corpus::SplitPlan;
use cira_core::evaluation::{
    CausalitySystem, EvaluationError, Family, FittedSystem, TextClassifier,
};
use cira_core::features::Tagger;

use crate::{CausalityModel, EncoderSource, VariantConfig};

impl TextClassifier for CausalityModel {
    fn predict_proba(&self, texts: &[String]) -> Result<Vec<f64>, EvaluationError> {
        CausalityModel::predict_proba(self, texts)
            .map(|ps| ps.iter().map(|p| p.p_causal).collect())
            .map_err(|e| EvaluationError::Model(e.to_string()))
    }

    fn predict(&self, texts: &[String]) -> Result<Vec<u8>, EvaluationError> {
        CausalityModel::predict(self, texts).map_err(|e| EvaluationError::Model(e.to_string()))
    }
}

/// Fine-tunes on the first fold's training part, selects the epoch on its
/// validation part, and is scored on the held-out test set.
pub struct TransformerSystem {
    pub config: VariantConfig,
    pub encoder: EncoderSource,
    pub tagger: Option<Arc<dyn Tagger>>,
}

impl CausalitySystem for TransformerSystem {
    fn id(&self) -> String {
        format!("transformer_{}", self.config.variant)
    }

    fn family(&self) -> Family {
        Family::Transformer
    }

    fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "system": self.id(),
            "variant": self.config.variant,
            "max_len": self.config.max_len,
            "hyperparameters": self.config.training,
            "tagger": self.tagger.as_ref().map(|t| t.spec()),
        })
    }

    fn fit(&self, plan: &SplitPlan, seed: u64) -> Result<FittedSystem, EvaluationError> {
        let fold = plan
            .folds
            .first()
            .ok_or_else(|| EvaluationError::Config("split plan has no folds".into()))?;
        let model_err = |e: crate::TransformerError| EvaluationError::Model(e.to_string());
        let mut model = CausalityModel::from_source(
            self.config,
            &self.encoder,
            self.tagger.clone(),
            &fold.train.texts(),
            seed,
        )
        .map_err(model_err)?;
        model
            .fine_tune(&fold.train, &fold.validation, seed)
            .map_err(model_err)?;
        Ok(FittedSystem {
            classifier: Box::new(model),
            hyperparameters: self.config.training.describe(),
        })
    }
}
