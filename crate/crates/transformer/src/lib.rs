//! Fine-tuned transformer-encoder classifier for causal sentences.
//!
//! Three input variants share one architecture: `base` feeds the raw
//! sentence, `pos` and `dep` feed the sentence with every token suffixed by
//! its part-of-speech or dependency tag. The classification-token
//! representation goes through the encoder's pooler and a single linear
//! layer with softmax over {not causal, causal}.

mod bert;
mod encoder;
mod handle;
mod head;
mod model;
mod system;

use std::fmt;
use std::str::FromStr;

use cira_core::features::{TagMode, BASE_MAX_LEN, ENRICHED_MAX_LEN};
use serde::{Deserialize, Serialize};

pub use encoder::{EncoderConfig, EncoderSource};
pub use handle::ModelHandle;
pub use head::{head_gradient_check, ClassificationHead};
pub use model::{CausalityModel, CheckpointManifest, EpochLog, Prediction, TrainingLog};
pub use system::TransformerSystem;

#[derive(Debug, thiserror::Error)]
pub enum TransformerError {
    #[error(transparent)]
    Candle(#[from] candle_core::Error),
    #[error(transparent)]
    Feature(#[from] cira_core::features::FeatureError),
    #[error(transparent)]
    Tagger(#[from] cira_core::features::TaggerError),
    #[error(transparent)]
    Corpus(#[from] cira_core::corpus::CorpusError),
    #[error("the {0} variant needs a tagger")]
    TaggerUnavailable(Variant),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("checkpoint holds a `{found}` model, expected variant `{expected}`")]
    VariantMismatch { expected: Variant, found: Variant },
    #[error("{path}: {message}")]
    Checkpoint { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Base,
    Pos,
    Dep,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Base, Variant::Pos, Variant::Dep];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Base => "base",
            Variant::Pos => "pos",
            Variant::Dep => "dep",
        }
    }

    pub fn max_len(self) -> usize {
        match self {
            Variant::Base => BASE_MAX_LEN,
            Variant::Pos | Variant::Dep => ENRICHED_MAX_LEN,
        }
    }

    pub fn tag_mode(self) -> Option<TagMode> {
        match self {
            Variant::Base => None,
            Variant::Pos => Some(TagMode::Pos),
            Variant::Dep => Some(TagMode::Dep),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "base" => Ok(Variant::Base),
            "pos" => Ok(Variant::Pos),
            "dep" => Ok(Variant::Dep),
            other => Err(format!(
                "unknown variant `{other}` (expected base, pos or dep)"
            )),
        }
    }
}

/// Optimisation settings. The optimizer is always AdamW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            learning_rate: 2e-5,
            weight_decay: 0.01,
            epochs: 4,
        }
    }
}

impl TrainingConfig {
    pub fn describe(&self) -> String {
        format!(
            "batch_size: {}, learning_rate: {:e}, weight_decay: {}, optimizer: AdamW, epochs: {}",
            self.batch_size, self.learning_rate, self.weight_decay, self.epochs
        )
    }

    fn validate(&self) -> Result<(), TransformerError> {
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(TransformerError::Config(
                "batch_size and epochs must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || self.weight_decay < 0.0
        {
            return Err(TransformerError::Config(
                "learning rate must be positive, weight decay non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// A variant with its bound sequence length and training settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: Variant,
    pub max_len: usize,
    pub training: TrainingConfig,
}

impl VariantConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            max_len: variant.max_len(),
            training: TrainingConfig::default(),
        }
    }

    pub fn with_training(mut self, training: TrainingConfig) -> Self {
        self.training = training;
        self
    }

    pub fn validate(&self) -> Result<(), TransformerError> {
        if self.max_len != self.variant.max_len() {
            return Err(TransformerError::Config(format!(
                "variant {} uses max_len {}, got {}",
                self.variant,
                self.variant.max_len(),
                self.max_len
            )));
        }
        self.training.validate()
    }
}
