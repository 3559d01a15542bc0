use std::path::Path;
use std::sync::Arc;

use candle_core::{DType, Device, Tensor};
use candle_nn::{AdamW, Optimizer, ParamsAdamW, VarBuilder, VarMap};
use cira_core::corpus::Dataset;
use cira_core::evaluation::compute_metrics;
use cira_core::features::{
    encode_for_transformer, render_enriched, tagger_from_spec, EncodedSequence, Tagger,
    WordPieceTokenizer,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{
    load_into, save_prefixed, seeded_init, Encoder, EncoderConfig, EncoderSource,
};
use crate::head::ClassificationHead;
use crate::{TrainingConfig, TransformerError, Variant, VariantConfig};

const INFERENCE_BATCH: usize = 32;
const MANIFEST: &str = "manifest.json";
const ENCODER_WEIGHTS: &str = "encoder.safetensors";
const HEAD_WEIGHTS: &str = "head.safetensors";
const VOCAB: &str = "vocab.txt";
const HEAD_PREFIX: &str = "classifier";

/// Class probabilities for one sentence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub p_causal: f64,
    pub p_not_causal: f64,
}

impl Prediction {
    fn from_logits(not_causal: f32, causal: f32) -> Self {
        let d = f64::from(causal) - f64::from(not_causal);
        let p_causal = 1.0 / (1.0 + (-d).exp());
        Self {
            p_causal,
            p_not_causal: 1.0 / (1.0 + d.exp()),
        }
    }

    /// Argmax; an exact tie counts as not causal.
    pub fn is_causal(&self) -> bool {
        self.p_causal > self.p_not_causal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_macro_f1: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
}

/// `manifest.json` of a checkpoint directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub variant: Variant,
    pub max_len: usize,
    pub hyperparameters: TrainingConfig,
    pub training_fingerprint: Option<String>,
    pub tagger: Option<String>,
    pub encoder: EncoderConfig,
    pub best_epoch: Option<usize>,
    pub validation_macro_f1: Option<f64>,
}

pub struct CausalityModel {
    config: VariantConfig,
    tokenizer: WordPieceTokenizer,
    tagger: Option<Arc<dyn Tagger>>,
    varmap: VarMap,
    encoder: Encoder,
    head: ClassificationHead,
    training_fingerprint: Option<String>,
    best_epoch: Option<usize>,
    validation_macro_f1: Option<f64>,
}

impl std::fmt::Debug for CausalityModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CausalityModel")
            .field("config", &self.config)
            .field("encoder", &self.encoder.config)
            .field("tagger", &self.tagger.as_ref().map(|t| t.spec()))
            .finish_non_exhaustive()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TransformerError + '_ {
    move |source| TransformerError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn check_tagger(
    variant: Variant,
    tagger: &Option<Arc<dyn Tagger>>,
) -> Result<(), TransformerError> {
    if variant.tag_mode().is_some() && tagger.is_none() {
        return Err(TransformerError::TaggerUnavailable(variant));
    }
    Ok(())
}

impl CausalityModel {
    /// Randomly initialised model around an existing tokenizer.
    pub fn new(
        config: VariantConfig,
        tokenizer: WordPieceTokenizer,
        encoder_config: EncoderConfig,
        tagger: Option<Arc<dyn Tagger>>,
        seed: u64,
    ) -> Result<Self, TransformerError> {
        config.validate()?;
        check_tagger(config.variant, &tagger)?;
        if encoder_config.vocab_size < tokenizer.vocab_size() {
            return Err(TransformerError::Config(format!(
                "encoder vocabulary ({}) is smaller than the tokenizer's ({})",
                encoder_config.vocab_size,
                tokenizer.vocab_size()
            )));
        }
        if encoder_config.max_position_embeddings < config.max_len {
            return Err(TransformerError::Config(format!(
                "encoder supports {} positions, variant {} needs {}",
                encoder_config.max_position_embeddings, config.variant, config.max_len
            )));
        }
        let varmap = VarMap::new();
        let vb = VarBuilder::from_varmap(&varmap, DType::F32, &Device::Cpu);
        let encoder = Encoder::build(vb.clone(), &encoder_config)?;
        let head = ClassificationHead::load(vb.pp(HEAD_PREFIX), encoder_config.hidden_size)?;
        seeded_init(&varmap, encoder_config.initializer_range, seed)?;
        Ok(Self {
            config,
            tokenizer,
            tagger,
            varmap,
            encoder,
            head,
            training_fingerprint: None,
            best_epoch: None,
            validation_macro_f1: None,
        })
    }

    /// Builds an untrained classifier from `source`. For a scratch encoder the
    /// vocabulary is learned from `vocab_texts` after enrichment.
    pub fn from_source(
        config: VariantConfig,
        source: &EncoderSource,
        tagger: Option<Arc<dyn Tagger>>,
        vocab_texts: &[String],
        seed: u64,
    ) -> Result<Self, TransformerError> {
        check_tagger(config.variant, &tagger)?;
        match source {
            EncoderSource::Scratch {
                config: enc,
                vocab_size,
            } => {
                let prepared = prepare_texts(config.variant, tagger.as_deref(), vocab_texts)?;
                let tokenizer = WordPieceTokenizer::train(&prepared, *vocab_size);
                let enc = EncoderConfig {
                    vocab_size: tokenizer.vocab_size(),
                    ..enc.clone()
                };
                Self::new(config, tokenizer, enc, tagger, seed)
            }
            EncoderSource::Pretrained(dir) => {
                let config_path = dir.join("config.json");
                let text = std::fs::read_to_string(&config_path).map_err(io_err(&config_path))?;
                let enc: EncoderConfig =
                    serde_json::from_str(&text).map_err(|e| TransformerError::Checkpoint {
                        path: config_path.display().to_string(),
                        message: e.to_string(),
                    })?;
                let tokenizer = WordPieceTokenizer::from_vocab_file(&dir.join(VOCAB), true)?;
                let model = Self::new(config, tokenizer, enc, tagger, seed)?;
                let weights = dir.join("model.safetensors");
                let missing: Vec<String> = load_into(&model.varmap, &weights, "")?
                    .into_iter()
                    .filter(|n| !n.starts_with(HEAD_PREFIX) && !n.starts_with("pooler."))
                    .collect();
                if !missing.is_empty() {
                    return Err(TransformerError::Checkpoint {
                        path: weights.display().to_string(),
                        message: format!("missing encoder parameters: {}", missing.join(", ")),
                    });
                }
                Ok(model)
            }
        }
    }

    pub fn config(&self) -> &VariantConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn tokenizer(&self) -> &WordPieceTokenizer {
        &self.tokenizer
    }

    pub fn encoder_config(&self) -> &EncoderConfig {
        &self.encoder.config
    }

    /// The exact strings fed to the tokenizer: raw text for `base`,
    /// tag-enriched text otherwise.
    pub fn prepare(&self, texts: &[String]) -> Result<Vec<String>, TransformerError> {
        prepare_texts(self.config.variant, self.tagger.as_deref(), texts)
    }

    fn encode(&self, prepared: &[String]) -> Result<Vec<EncodedSequence>, TransformerError> {
        prepared
            .iter()
            .map(|t| {
                Ok(encode_for_transformer(
                    t,
                    self.config.max_len,
                    &self.tokenizer,
                )?)
            })
            .collect()
    }

    /// Stacks sequences into `[batch, len]` tensors, trimming padding columns
    /// that are inactive for every row.
    fn batch_tensors(seqs: &[&EncodedSequence]) -> Result<(Tensor, Tensor), TransformerError> {
        let len = seqs
            .iter()
            .map(|s| s.active_len())
            .max()
            .unwrap_or(1)
            .max(1);
        let mut ids = Vec::with_capacity(seqs.len() * len);
        let mut mask = Vec::with_capacity(seqs.len() * len);
        for s in seqs {
            ids.extend_from_slice(&s.token_ids[..len]);
            mask.extend(s.attention_mask[..len].iter().map(|&m| u32::from(m)));
        }
        let shape = (seqs.len(), len);
        Ok((
            Tensor::from_vec(ids, shape, &Device::Cpu)?,
            Tensor::from_vec(mask, shape, &Device::Cpu)?,
        ))
    }

    fn logits(&self, seqs: &[&EncodedSequence]) -> Result<Tensor, TransformerError> {
        let (ids, mask) = Self::batch_tensors(seqs)?;
        let pooled = self.encoder.pooled(&ids, &mask)?;
        self.head.logits(&pooled)
    }

    fn predict_encoded(
        &self,
        encoded: &[EncodedSequence],
    ) -> Result<Vec<Prediction>, TransformerError> {
        let mut out = Vec::with_capacity(encoded.len());
        for chunk in encoded.chunks(INFERENCE_BATCH) {
            let refs: Vec<&EncodedSequence> = chunk.iter().collect();
            let logits: Vec<Vec<f32>> = self.logits(&refs)?.to_vec2()?;
            out.extend(logits.iter().map(|l| Prediction::from_logits(l[0], l[1])));
        }
        Ok(out)
    }

    /// Probabilities in input order; enrichment is applied per variant.
    pub fn predict_proba(&self, texts: &[String]) -> Result<Vec<Prediction>, TransformerError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let encoded = self.encode(&self.prepare(texts)?)?;
        self.predict_encoded(&encoded)
    }

    pub fn predict(&self, texts: &[String]) -> Result<Vec<u8>, TransformerError> {
        Ok(self
            .predict_proba(texts)?
            .iter()
            .map(|p| u8::from(p.is_causal()))
            .collect())
    }

    fn snapshot(&self) -> Result<Vec<(String, Tensor)>, TransformerError> {
        let data = self.varmap.data().lock().expect("varmap lock");
        data.iter()
            .map(|(k, v)| Ok((k.clone(), v.as_tensor().copy()?)))
            .collect()
    }

    fn restore(&self, snapshot: &[(String, Tensor)]) -> Result<(), TransformerError> {
        let data = self.varmap.data().lock().expect("varmap lock");
        for (k, t) in snapshot {
            data[k].set(t)?;
        }
        Ok(())
    }

    /// Fine-tunes encoder and head with AdamW and two-class cross-entropy,
    /// keeping the epoch with the best validation macro-F1 (the last epoch
    /// when `validation` is empty; the earlier epoch on ties).
    pub fn fine_tune(
        &mut self,
        train: &Dataset,
        validation: &Dataset,
        seed: u64,
    ) -> Result<TrainingLog, TransformerError> {
        let labels = train.causality_labels()?;
        if labels.is_empty() {
            return Err(TransformerError::EmptyTrainingSet);
        }
        let t = self.config.training;
        let encoded = self.encode(&self.prepare(&train.texts())?)?;
        let val_gold = validation.causality_labels()?;
        let val_encoded = self.encode(&self.prepare(&validation.texts())?)?;

        let mut opt = AdamW::new(
            self.varmap.all_vars(),
            ParamsAdamW {
                lr: t.learning_rate,
                weight_decay: t.weight_decay,
                ..Default::default()
            },
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut log = TrainingLog {
            epochs: Vec::new(),
            best_epoch: 0,
        };
        let mut best: Option<(f64, Vec<(String, Tensor)>)> = None;
        for epoch in 1..=t.epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for batch in order.chunks(t.batch_size) {
                let seqs: Vec<&EncodedSequence> = batch.iter().map(|&i| &encoded[i]).collect();
                let y: Vec<u32> = batch.iter().map(|&i| u32::from(labels[i])).collect();
                let y = Tensor::from_vec(y, batch.len(), &Device::Cpu)?;
                let loss = candle_nn::loss::cross_entropy(&self.logits(&seqs)?, &y)?;
                opt.backward_step(&loss)?;
                loss_sum += f64::from(loss.to_scalar::<f32>()?) * batch.len() as f64;
            }
            let mut entry = EpochLog {
                epoch,
                train_loss: loss_sum / encoded.len() as f64,
                validation_macro_f1: None,
                validation_accuracy: None,
            };
            let score = if val_gold.is_empty() {
                f64::INFINITY
            } else {
                let pred: Vec<u8> = self
                    .predict_encoded(&val_encoded)?
                    .iter()
                    .map(|p| u8::from(p.is_causal()))
                    .collect();
                let m = compute_metrics(&pred, &val_gold)
                    .map_err(|e| TransformerError::Config(e.to_string()))?;
                entry.validation_macro_f1 = Some(m.macro_f1());
                entry.validation_accuracy = Some(m.accuracy);
                m.macro_f1()
            };
            tracing::info!(
                epoch,
                train_loss = entry.train_loss,
                validation_macro_f1 = ?entry.validation_macro_f1,
                "epoch finished"
            );
            log.epochs.push(entry);
            let improved = match &best {
                None => true,
                Some((b, _)) => score > *b || score.is_infinite(),
            };
            if improved {
                best = Some((score, self.snapshot()?));
                log.best_epoch = epoch;
            }
        }
        if let Some((_, weights)) = &best {
            self.restore(weights)?;
        }
        self.training_fingerprint = Some(train.fingerprint());
        self.best_epoch = Some(log.best_epoch);
        self.validation_macro_f1 = log.epochs[log.best_epoch - 1].validation_macro_f1;
        Ok(log)
    }

    pub fn manifest(&self) -> CheckpointManifest {
        CheckpointManifest {
            format_version: 1,
            variant: self.config.variant,
            max_len: self.config.max_len,
            hyperparameters: self.config.training,
            training_fingerprint: self.training_fingerprint.clone(),
            tagger: self.tagger.as_ref().map(|t| t.spec()),
            encoder: self.encoder.config.clone(),
            best_epoch: self.best_epoch,
            validation_macro_f1: self.validation_macro_f1,
        }
    }

    /// Writes `manifest.json`, `config.json`, `vocab.txt`,
    /// `encoder.safetensors` and `head.safetensors` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), TransformerError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        save_prefixed(&self.varmap, &dir.join(ENCODER_WEIGHTS), |n| {
            !n.starts_with(HEAD_PREFIX)
        })?;
        save_prefixed(&self.varmap, &dir.join(HEAD_WEIGHTS), |n| {
            n.starts_with(HEAD_PREFIX)
        })?;
        self.tokenizer.save_vocab(&dir.join(VOCAB))?;
        let config_path = dir.join("config.json");
        let config_json =
            serde_json::to_string_pretty(&self.encoder.config).expect("config serializes");
        std::fs::write(&config_path, config_json).map_err(io_err(&config_path))?;
        let path = dir.join(MANIFEST);
        let manifest = serde_json::to_string_pretty(&self.manifest()).expect("manifest serializes");
        std::fs::write(&path, manifest).map_err(io_err(&path))
    }

    pub fn read_manifest(dir: &Path) -> Result<CheckpointManifest, TransformerError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Err(TransformerError::Checkpoint {
                path: path.display().to_string(),
                message: "no checkpoint manifest".into(),
            });
        }
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| TransformerError::Checkpoint {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(dir: &Path) -> Result<Self, TransformerError> {
        let manifest = Self::read_manifest(dir)?;
        let mut config =
            VariantConfig::new(manifest.variant).with_training(manifest.hyperparameters);
        config.max_len = manifest.max_len;
        let tagger: Option<Arc<dyn Tagger>> = match &manifest.tagger {
            Some(spec) => Some(Arc::from(tagger_from_spec(spec)?)),
            None => None,
        };
        let tokenizer = WordPieceTokenizer::from_vocab_file(&dir.join(VOCAB), true)?;
        let mut model = Self::new(config, tokenizer, manifest.encoder.clone(), tagger, 0)?;
        let encoder_path = dir.join(ENCODER_WEIGHTS);
        let missing: Vec<String> = load_into(&model.varmap, &encoder_path, "")?
            .into_iter()
            .filter(|n| !n.starts_with(HEAD_PREFIX))
            .collect();
        let head_path = dir.join(HEAD_WEIGHTS);
        let head_missing = load_into(&model.varmap, &head_path, HEAD_PREFIX)?;
        if let Some(name) = missing.first().or(head_missing.first()) {
            return Err(TransformerError::Checkpoint {
                path: dir.display().to_string(),
                message: format!("missing parameter {name}"),
            });
        }
        model.training_fingerprint = manifest.training_fingerprint;
        model.best_epoch = manifest.best_epoch;
        model.validation_macro_f1 = manifest.validation_macro_f1;
        Ok(model)
    }

    /// Loads a checkpoint and fails unless it holds `expected`.
    pub fn load_expecting(dir: &Path, expected: Variant) -> Result<Self, TransformerError> {
        let found = Self::read_manifest(dir)?.variant;
        if found != expected {
            return Err(TransformerError::VariantMismatch { expected, found });
        }
        Self::load(dir)
    }
}

fn prepare_texts(
    variant: Variant,
    tagger: Option<&dyn Tagger>,
    texts: &[String],
) -> Result<Vec<String>, TransformerError> {
    let Some(mode) = variant.tag_mode() else {
        return Ok(texts.to_vec());
    };
    let tagger = tagger.ok_or(TransformerError::TaggerUnavailable(variant))?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    Ok(tagger
        .tag_batch(&refs)?
        .iter()
        .map(|tokens| render_enriched(tokens, mode))
        .collect())
}
