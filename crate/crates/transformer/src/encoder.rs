use std::collections::HashMap;
use std::path::{Path, PathBuf};

use candle_core::{DType, Device, Module, Tensor};

use candle_nn::{Linear, VarBuilder, VarMap};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bert::Bert;
use crate::TransformerError;

/// Encoder hyperparameters, using the field names of a BERT `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_hidden_layers: usize,
    pub num_attention_heads: usize,
    pub intermediate_size: usize,
    #[serde(default = "default_act")]
    pub hidden_act: String,
    #[serde(default)]
    pub hidden_dropout_prob: f64,
    pub max_position_embeddings: usize,
    #[serde(default = "default_type_vocab")]
    pub type_vocab_size: usize,
    #[serde(default = "default_init_range")]
    pub initializer_range: f64,
    #[serde(default = "default_eps")]
    pub layer_norm_eps: f64,
    #[serde(default)]
    pub pad_token_id: usize,
}

fn default_act() -> String {
    "gelu".into()
}
fn default_type_vocab() -> usize {
    2
}
fn default_init_range() -> f64 {
    0.02
}
fn default_eps() -> f64 {
    1e-12
}

impl EncoderConfig {
    /// The 12-layer, 768-wide base architecture.
    pub fn base(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            hidden_size: 768,
            num_hidden_layers: 12,
            num_attention_heads: 12,
            intermediate_size: 3072,
            hidden_act: default_act(),
            hidden_dropout_prob: 0.1,
            max_position_embeddings: 512,
            type_vocab_size: 2,
            initializer_range: 0.02,
            layer_norm_eps: 1e-12,
            pad_token_id: 0,
        }
    }

    /// A two-layer, 64-wide encoder for tests and quick experiments.
    pub fn tiny(vocab_size: usize) -> Self {
        Self {
            hidden_size: 64,
            num_hidden_layers: 2,
            num_attention_heads: 4,
            intermediate_size: 128,
            ..Self::base(vocab_size)
        }
    }
}

/// Where encoder weights and vocabulary come from.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderSource {
    /// A directory with `config.json`, `vocab.txt` and `model.safetensors`
    /// of a published pretrained BERT-family encoder.
    Pretrained(PathBuf),
    /// Randomly initialised encoder with a vocabulary of at most `vocab_size`
    /// subwords learned from the training texts.
    Scratch {
        config: EncoderConfig,
        vocab_size: usize,
    },
}

/// BERT encoder plus the pooler (dense + tanh over the classification token).
pub(crate) struct Encoder {
    bert: Bert,
    pooler: Linear,
    pub(crate) config: EncoderConfig,
}

impl Encoder {
    pub(crate) fn build(vb: VarBuilder, config: &EncoderConfig) -> Result<Self, TransformerError> {
        let bert = Bert::load(vb.clone(), config)?;
        let pooler = candle_nn::linear(
            config.hidden_size,
            config.hidden_size,
            vb.pp("pooler").pp("dense"),
        )?;
        Ok(Self {
            bert,
            pooler,
            config: config.clone(),
        })
    }

    /// `ids` and `mask` are `[batch, len]` u32 tensors; returns `[batch, hidden]`.
    pub(crate) fn pooled(&self, ids: &Tensor, mask: &Tensor) -> Result<Tensor, TransformerError> {
        let hidden = self.bert.forward(ids, mask)?;
        let cls = hidden.narrow(1, 0, 1)?.squeeze(1)?;
        Ok(self.pooler.forward(&cls)?.tanh()?)
    }
}

/// Overwrites every variable with a seeded draw: layer-norm scales 1, biases
/// 0, everything else N(0, initializer_range).
pub(crate) fn seeded_init(
    varmap: &VarMap,
    initializer_range: f64,
    seed: u64,
) -> Result<(), TransformerError> {
    let data = varmap.data().lock().expect("varmap lock");
    let mut names: Vec<&String> = data.keys().collect();
    names.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0f32, initializer_range as f32)
        .map_err(|e| TransformerError::Config(e.to_string()))?;
    for name in names {
        let var = &data[name];
        let shape = var.as_tensor().shape().clone();
        let n = shape.elem_count();
        let values: Vec<f32> = if name.ends_with("LayerNorm.weight") {
            vec![1.0; n]
        } else if name.ends_with("bias") {
            vec![0.0; n]
        } else {
            (0..n).map(|_| normal.sample(&mut rng)).collect()
        };
        var.set(&Tensor::from_vec(values, shape, var.as_tensor().device())?)?;
    }
    Ok(())
}

/// Maps published parameter names onto ours: drops a leading `bert.` and
/// renames legacy `gamma`/`beta` layer-norm parameters.
fn normalize_name(name: &str) -> String {
    let name = name.strip_prefix("bert.").unwrap_or(name);
    if let Some(stem) = name.strip_suffix("LayerNorm.gamma") {
        format!("{stem}LayerNorm.weight")
    } else if let Some(stem) = name.strip_suffix("LayerNorm.beta") {
        format!("{stem}LayerNorm.bias")
    } else {
        name.to_string()
    }
}

/// Copies tensors from a safetensors file into matching variables.
/// Returns the variables under `required_prefix` that the file did not
/// provide; extra tensors in the file are ignored.
pub(crate) fn load_into(
    varmap: &VarMap,
    path: &Path,
    required_prefix: &str,
) -> Result<Vec<String>, TransformerError> {
    if !path.exists() {
        return Err(TransformerError::Checkpoint {
            path: path.display().to_string(),
            message: "file not found".into(),
        });
    }
    let tensors: HashMap<String, Tensor> = candle_core::safetensors::load(path, &Device::Cpu)?
        .into_iter()
        .map(|(k, v)| (normalize_name(&k), v))
        .collect();
    let data = varmap.data().lock().expect("varmap lock");
    let mut missing = Vec::new();
    for (name, var) in data.iter() {
        if !name.starts_with(required_prefix) {
            continue;
        }
        match tensors.get(name) {
            Some(t) if t.shape() == var.as_tensor().shape() => var.set(&t.to_dtype(DType::F32)?)?,
            Some(t) => {
                return Err(TransformerError::Checkpoint {
                    path: path.display().to_string(),
                    message: format!(
                        "{name} has shape {:?}, expected {:?}",
                        t.shape(),
                        var.as_tensor().shape()
                    ),
                })
            }
            None => missing.push(name.clone()),
        }
    }
    missing.sort();
    Ok(missing)
}

/// Writes the variables whose names start with `prefix`.
pub(crate) fn save_prefixed(
    varmap: &VarMap,
    path: &Path,
    keep: impl Fn(&str) -> bool,
) -> Result<(), TransformerError> {
    let data = varmap.data().lock().expect("varmap lock");
    let tensors: HashMap<String, Tensor> = data
        .iter()
        .filter(|(k, _)| keep(k))
        .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
        .collect();
    candle_core::safetensors::save(&tensors, path)?;
    Ok(())
}
