use std::sync::Arc;

use cira_core::features::{enrich, RuleTagger, TagMode, Tagger};
use cira_core::synthetic::{generate, SyntheticConfig};
use cira_core::Dataset;
use cira_transformer::{
    CausalityModel, EncoderConfig, EncoderSource, TrainingConfig, TransformerError, Variant,
    VariantConfig,
};
use proptest::prelude::*;

fn scratch() -> EncoderSource {
    EncoderSource::Scratch {
        config: EncoderConfig::tiny(0),
        vocab_size: 400,
    }
}

fn quick_training(epochs: usize) -> TrainingConfig {
    TrainingConfig {
        batch_size: 8,
        learning_rate: 1e-3,
        weight_decay: 0.01,
        epochs,
    }
}

fn model(variant: Variant, texts: &[String], seed: u64) -> CausalityModel {
    let tagger: Option<Arc<dyn Tagger>> = variant
        .tag_mode()
        .map(|_| Arc::new(RuleTagger) as Arc<dyn Tagger>);
    let config = VariantConfig::new(variant).with_training(quick_training(10));
    CausalityModel::from_source(config, &scratch(), tagger, texts, seed).unwrap()
}

fn accuracy(m: &CausalityModel, ds: &Dataset) -> f64 {
    let pred = m.predict(&ds.texts()).unwrap();
    let gold = ds.causality_labels().unwrap();
    pred.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / gold.len() as f64
}

#[test]
fn memorizes_fifty_sentences() {
    let ds = generate(&SyntheticConfig::small(50, 0.5), 11);
    let mut m = model(Variant::Base, &ds.texts(), 1);
    let empty = ds.filter(|_| false);
    let log = m.fine_tune(&ds, &empty, 1).unwrap();
    assert!(log.epochs.len() <= 10);
    let acc = accuracy(&m, &ds);
    assert!(acc >= 0.95, "training accuracy {acc}, log {log:?}");
}

#[test]
fn keeps_best_validation_epoch_and_is_deterministic() {
    let ds = generate(&SyntheticConfig::small(80, 0.5), 3);
    let plan = ds.split(0.25, 2, 3).unwrap();
    let run = || {
        let mut m = model(Variant::Base, &plan.folds[0].train.texts(), 5);
        let mut cfg = *m.config();
        cfg.training.epochs = 3;
        let log = m
            .fine_tune(&plan.folds[0].train, &plan.folds[0].validation, 5)
            .unwrap();
        (log, m.predict_proba(&plan.test.texts()).unwrap(), cfg)
    };
    let (log_a, probs_a, _) = run();
    let (log_b, probs_b, _) = run();
    assert_eq!(log_a, log_b);
    assert_eq!(probs_a, probs_b);
    let best = log_a.epochs[log_a.best_epoch - 1]
        .validation_macro_f1
        .unwrap();
    assert!(log_a
        .epochs
        .iter()
        .all(|e| e.validation_macro_f1.unwrap() <= best));
}

#[test]
fn checkpoint_round_trip_and_variant_check() {
    let ds = generate(&SyntheticConfig::small(40, 0.5), 4);
    let mut m = model(Variant::Dep, &ds.texts(), 2);
    let mut short = ds.filter(|_| true);
    short = short.filter(|s| s.index_in_doc < 5);
    m.fine_tune(&short, &ds.filter(|_| false), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    m.save(dir.path()).unwrap();
    for file in [
        "manifest.json",
        "encoder.safetensors",
        "head.safetensors",
        "vocab.txt",
        "config.json",
    ] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
    let manifest = CausalityModel::read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.variant, Variant::Dep);
    assert_eq!(manifest.max_len, 384);
    assert_eq!(manifest.tagger.as_deref(), Some("rule"));
    assert_eq!(manifest.training_fingerprint, Some(short.fingerprint()));

    let loaded = CausalityModel::load_expecting(dir.path(), Variant::Dep).unwrap();
    let before = m.predict_proba(&ds.texts()).unwrap();
    let after = loaded.predict_proba(&ds.texts()).unwrap();
    for (a, b) in before.iter().zip(&after) {
        assert!((a.p_causal - b.p_causal).abs() < 1e-6);
    }
    let err = CausalityModel::load_expecting(dir.path(), Variant::Pos).unwrap_err();
    assert!(matches!(err, TransformerError::VariantMismatch { .. }));
    assert!(err.to_string().contains("expected variant `pos`"), "{err}");
    let missing = CausalityModel::load(&dir.path().join("nope")).unwrap_err();
    assert!(missing.to_string().contains("manifest"), "{missing}");
}

#[test]
fn enriched_variants_need_a_tagger_and_feed_enriched_text() {
    let texts = vec!["If the button is pressed, the system shall stop.".to_string()];
    let err = CausalityModel::from_source(
        VariantConfig::new(Variant::Pos),
        &scratch(),
        None,
        &texts,
        0,
    )
    .unwrap_err();
    assert!(matches!(
        err,
        TransformerError::TaggerUnavailable(Variant::Pos)
    ));
    let m = model(Variant::Pos, &texts, 0);
    assert_eq!(
        m.prepare(&texts).unwrap()[0],
        enrich(&texts[0], TagMode::Pos, &RuleTagger).unwrap()
    );
    let base = model(Variant::Base, &texts, 0);
    assert_eq!(base.prepare(&texts).unwrap(), texts);
}

#[test]
fn empty_training_set_is_rejected() {
    let ds = generate(&SyntheticConfig::small(10, 0.5), 0);
    let mut m = model(Variant::Base, &ds.texts(), 0);
    let empty = ds.filter(|_| false);
    assert!(matches!(
        m.fine_tune(&empty, &empty, 0),
        Err(TransformerError::EmptyTrainingSet)
    ));
    assert!(m.predict_proba(&[]).unwrap().is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn probabilities_are_normalized(texts in proptest::collection::vec(".{0,200}", 1..12)) {
        thread_local! {
            static MODEL: CausalityModel = model(Variant::Base, &["seed text".to_string()], 9);
        }
        MODEL.with(|m| {
            let mut input = texts.clone();
            input.push(texts[0].clone());
            let probs = m.predict_proba(&input).unwrap();
            assert_eq!(probs.len(), input.len());
            for p in &probs {
                assert!(p.p_causal.is_finite() && p.p_not_causal.is_finite());
                assert!((p.p_causal + p.p_not_causal - 1.0).abs() <= 1e-6);
            }
            assert_eq!(probs[0], probs[probs.len() - 1]);
        });
    }
}
