//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Optional checks against the real study data run when `CIRA_STUDY_CORPUS`
//! points at the consolidated corpus (JSONL or CSV); the full transformer run
//! additionally needs `CIRA_PRETRAINED_ENCODER`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cira_core::agreement::{AgreementRow, ContingencyTable};
use cira_core::corpus::{load_corpus, CorpusFormat};
use cira_core::evaluation::{
    compute_metrics, CausalitySystem, EvaluationConfig, EvaluationReport, RuleSystem,
};
use cira_core::features::{enrich, FixedTagger, RuleTagger, TagMode, TaggedToken, Tagger};
use cira_core::lexicon::{AmbiguityStat, CuePhraseEntry, GrammaticalType};
use cira_core::synthetic::{generate, SyntheticConfig};
use cira_core::{Dataset, Lexicon};
use cira_transformer::{
    head_gradient_check, CausalityModel, EncoderConfig, EncoderSource, TrainingConfig,
    TransformerSystem, Variant, VariantConfig,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

type AgreementRef = (&'static str, [[u64; 2]; 2], f64, f64, f64);

const AGREEMENT: [AgreementRef; 7] = [
    ("Causality", [[2034, 193], [274, 499]], 84.4, 0.579, 0.753),
    ("Explicit", [[24, 25], [39, 411]], 87.2, 0.358, 0.84),
    ("Marked", [[1, 22], [12, 464]], 93.1, 0.023, 0.926),
    ("SingleSentence", [[12, 8], [17, 462]], 95.0, 0.464, 0.945),
    ("SingleCause", [[41, 77], [43, 338]], 76.0, 0.261, 0.645),
    ("SingleEffect", [[63, 72], [46, 318]], 76.4, 0.362, 0.625),
    ("EventChain", [[450, 27], [13, 9]], 92.0, 0.27, 0.91),
];

fn agreement_table() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for (category, matrix, pct, kappa, ac1) in AGREEMENT {
        let row = AgreementRow::from_table(category, ContingencyTable::binary(matrix))
            .map_err(|e| e.to_string())?;
        let d_pct = (row.agreement * 100.0 - pct).abs();
        let d_coef = (row.kappa - kappa).abs().max((row.ac1 - ac1).abs());
        ensure(d_pct <= 0.1 + 1e-9, || {
            format!("{category}: agreement {:.3} %", row.agreement * 100.0)
        })?;
        ensure(d_coef <= 0.001 + 1e-9, || {
            format!("{category}: kappa {:.4}, AC1 {:.4}", row.kappa, row.ac1)
        })?;
        worst = (worst.0.max(d_pct), worst.1.max(d_coef));
    }
    let marked =
        AgreementRow::from_table("Marked", ContingencyTable::binary(AGREEMENT[2].1)).unwrap();
    ensure(marked.kappa < 0.05 && marked.ac1 > 0.9, || {
        "kappa paradox pair not reproduced".into()
    })?;
    Ok(format!(
        "7 rows, max deviation {:.3} pp / {:.4}",
        worst.0, worst.1
    ))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn af_table() -> Outcome {
    let text =
        std::fs::read_to_string(fixture("cue_phrase_counts.csv")).map_err(|e| e.to_string())?;
    let mut rows = 0;
    for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        let [phrase, causal, non_causal, printed, bold] = f[..] else {
            return Err(format!("bad fixture line `{line}`"));
        };
        let entry = CuePhraseEntry::new(phrase, GrammaticalType::Adverb, None)?;
        let stat =
            AmbiguityStat::from_counts(entry, causal.parse().unwrap(), non_causal.parse().unwrap());
        let af = stat.af().ok_or_else(|| format!("{phrase}: undefined AF"))?;
        let printed: f64 = printed.parse().unwrap();
        ensure((af - printed).abs() <= 0.005 + 1e-9, || {
            format!("{phrase}: AF {af:.4} vs {printed}")
        })?;
        ensure(stat.is_non_ambiguous() == (bold == "true"), || {
            format!("{phrase}: flag mismatch")
        })?;
        rows += 1;
    }
    ensure(rows > 0, || "empty fixture".into())?;
    Ok(format!("{rows} rows"))
}

fn balancing() -> Outcome {
    let ds = generate(&SyntheticConfig::study_scale(), 42);
    let causal_before: Vec<String> = ds
        .sentences()
        .iter()
        .filter(|s| ds.causality(&s.id) == Some(true))
        .map(|s| s.id.clone())
        .collect();
    ensure(ds.len() == 14_983 && causal_before.len() == 4_215, || {
        "generator sizes".into()
    })?;
    let balanced = ds.undersample(7).map_err(|e| e.to_string())?;
    let labels = balanced.causality_labels().map_err(|e| e.to_string())?;
    let causal = labels.iter().filter(|&&l| l == 1).count();
    ensure(balanced.len() == 8_430 && causal == 4_215, || {
        format!("{} sentences, {causal} causal", balanced.len())
    })?;
    ensure(
        causal_before.iter().all(|id| balanced.get(id).is_some()),
        || "a causal sentence was dropped".into(),
    )?;
    Ok("14,983 -> 8,430 (4,215 / 4,215)".into())
}

fn brute_force(pred: &[u8], gold: &[u8]) -> [f64; 7] {
    let count = |p: u8, g: u8| {
        pred.iter()
            .zip(gold)
            .filter(|&(&a, &b)| a == p && b == g)
            .count() as f64
    };
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    let f1 = |r: f64, p: f64| {
        if r + p == 0.0 {
            0.0
        } else {
            2.0 * r * p / (r + p)
        }
    };
    let (tp, fp, fn_, tn) = (count(1, 1), count(1, 0), count(0, 1), count(0, 0));
    let (rc, pc) = (ratio(tp, tp + fn_), ratio(tp, tp + fp));
    let (rn, pn) = (ratio(tn, tn + fp), ratio(tn, tn + fn_));
    [
        rc,
        pc,
        f1(rc, pc),
        rn,
        pn,
        f1(rn, pn),
        (tp + tn) / gold.len() as f64,
    ]
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..1000 {
        let n = rng.gen_range(1..300);
        let bias = rng.gen_range(0.0..1.0);
        let gold: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(bias))).collect();
        let pred: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let m = compute_metrics(&pred, &gold).map_err(|e| e.to_string())?;
        let got = [
            m.causal.recall,
            m.causal.precision,
            m.causal.f1,
            m.not_causal.recall,
            m.not_causal.precision,
            m.not_causal.f1,
            m.accuracy,
        ];
        ensure(got == brute_force(&pred, &gold), || {
            format!("vector {i}: {got:?}")
        })?;
    }
    Ok("1,000 vectors, exact".into())
}

const FIG3: &str = "If the process fails, an error message is shown.";
const FIG3_POS: &str =
    "If_SCONJ the_DET process_NOUN fails_VERB ,_PUNCT an_DET error_NOUN message_NOUN is_AUX shown_VERB ._PUNCT";
const FIG3_DEP: &str = "If_mark the_det process_nsubj fails_advcl ,_punct an_det error_compound message_nsubjpass is_auxpass shown_ROOT ._punct";

fn strip_tags(enriched: &str) -> Vec<String> {
    enriched
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| t.rsplit_once('_').map_or(t, |(s, _)| s).to_string())
        .collect()
}

fn random_sentence(rng: &mut ChaCha8Rng, words: &[&str]) -> String {
    let n = rng.gen_range(1..25);
    let mut s: Vec<String> = (0..n)
        .map(|_| {
            let w = words.choose(rng).unwrap();
            match rng.gen_range(0..10) {
                0 => format!("{w},"),
                1 => w.to_uppercase(),
                2 => format!("{w}-{}", words.choose(rng).unwrap()),
                _ => w.to_string(),
            }
        })
        .collect();
    if rng.gen_bool(0.7) {
        s.last_mut().unwrap().push('.');
    }
    s.join(" ")
}

fn vocabulary() -> Vec<&'static str> {
    vec![
        "if",
        "the",
        "system",
        "shall",
        "when",
        "because",
        "of",
        "user",
        "data",
        "is",
        "stored",
        "then",
        "as",
        "long",
        "so",
        "that",
        "due",
        "to",
        "an",
        "error",
        "message",
        "shown",
        "process",
        "fails",
        "result",
        "results",
        "in",
        "therefore",
        "since",
        "unless",
        "after",
        "before",
        "while",
        "lead",
        "leads",
        "cause",
        "causes",
        "enable",
        "prevents",
        "given",
        "provided",
        "whenever",
        "order",
        "hence",
        "thus",
        "42",
        "über",
        "request",
        "and",
        "or",
    ]
}

fn enrichment() -> Outcome {
    let tokens = |pairs: &[(&str, &str, &str)]| -> Vec<TaggedToken> {
        pairs
            .iter()
            .map(|(s, p, d)| TaggedToken::new(*s, p, d).unwrap())
            .collect()
    };
    let fig3 = tokens(&[
        ("If", "SCONJ", "mark"),
        ("the", "DET", "det"),
        ("process", "NOUN", "nsubj"),
        ("fails", "VERB", "advcl"),
        (",", "PUNCT", "punct"),
        ("an", "DET", "det"),
        ("error", "NOUN", "compound"),
        ("message", "NOUN", "nsubjpass"),
        ("is", "AUX", "auxpass"),
        ("shown", "VERB", "ROOT"),
        (".", "PUNCT", "punct"),
    ]);
    let fixed = FixedTagger::new().with(FIG3, fig3);
    for tagger in [&fixed as &dyn Tagger, &RuleTagger] {
        let pos = enrich(FIG3, TagMode::Pos, tagger).map_err(|e| e.to_string())?;
        let dep = enrich(FIG3, TagMode::Dep, tagger).map_err(|e| e.to_string())?;
        ensure(pos == FIG3_POS, || {
            format!("{}: pos `{pos}`", tagger.spec())
        })?;
        ensure(dep == FIG3_DEP, || {
            format!("{}: dep `{dep}`", tagger.spec())
        })?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = vocabulary();
    for _ in 0..1000 {
        let s = random_sentence(&mut rng, &words);
        let surfaces: Vec<String> = RuleTagger
            .tag(&s)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|t| t.surface)
            .collect();
        for mode in [TagMode::Pos, TagMode::Dep] {
            let enriched = enrich(&s, mode, &RuleTagger).map_err(|e| e.to_string())?;
            ensure(strip_tags(&enriched) == surfaces, || {
                format!("`{s}` -> `{enriched}`")
            })?;
        }
    }
    Ok("both strings exact; 1,000 fuzzed sentences round-trip".into())
}

fn study_corpus() -> Option<Result<Dataset, String>> {
    let path = PathBuf::from(std::env::var_os("CIRA_STUDY_CORPUS")?);
    Some(load_corpus(&path, CorpusFormat::from_path(&path)).map_err(|e| e.to_string()))
}

fn rule_baseline() -> Outcome {
    let lexicon = Lexicon::default_lexicon();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let words = vocabulary();
    let mut causal = 0;
    for _ in 0..1000 {
        let s = random_sentence(&mut rng, &words);
        let decision = lexicon.rule_classify(&s);
        ensure(decision == !lexicon.match_phrases(&s).is_empty(), || {
            format!("`{s}`")
        })?;
        causal += usize::from(decision);
    }
    let mut detail = format!("equivalence on 1,000 fuzzed sentences ({causal} matched)");
    match study_corpus() {
        None => detail.push_str("; study accuracy SKIPPED (CIRA_STUDY_CORPUS unset)"),
        Some(ds) => {
            let ds = ds?.undersample(0).map_err(|e| e.to_string())?;
            let rule = RuleSystem { lexicon };
            let report = EvaluationReport::run(
                &[&rule as &dyn CausalitySystem],
                &ds,
                &EvaluationConfig::default(),
            )
            .map_err(|e| e.to_string())?;
            let acc = report.rows[0].accuracy;
            ensure((acc - 0.65).abs() <= 0.03, || {
                format!("study accuracy {acc:.3} outside 0.65 +- 0.03")
            })?;
            detail.push_str(&format!("; study accuracy {acc:.3}"));
        }
    }
    Ok(detail)
}

fn transformer() -> Outcome {
    // (a) overfit
    let ds = generate(&SyntheticConfig::small(50, 0.5), 11);
    let config = VariantConfig::new(Variant::Base).with_training(TrainingConfig {
        batch_size: 8,
        learning_rate: 1e-3,
        weight_decay: 0.01,
        epochs: 10,
    });
    let scratch = EncoderSource::Scratch {
        config: EncoderConfig::tiny(0),
        vocab_size: 400,
    };
    let mut model = CausalityModel::from_source(config, &scratch, None, &ds.texts(), 1)
        .map_err(|e| e.to_string())?;
    let log = model
        .fine_tune(&ds, &ds.filter(|_| false), 1)
        .map_err(|e| e.to_string())?;
    let pred = model.predict(&ds.texts()).map_err(|e| e.to_string())?;
    let gold = ds.causality_labels().unwrap();
    let acc = pred.iter().zip(&gold).filter(|(p, g)| p == g).count() as f64 / gold.len() as f64;
    ensure(acc >= 0.95 && log.epochs.len() <= 10, || {
        format!("overfit accuracy {acc:.2}")
    })?;

    // (b) normalization
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let words = vocabulary();
    let inputs: Vec<String> = (0..1000)
        .map(|i| {
            if i % 100 == 0 {
                String::new()
            } else {
                random_sentence(&mut rng, &words)
            }
        })
        .collect();
    let probs = model.predict_proba(&inputs).map_err(|e| e.to_string())?;
    ensure(probs.len() == inputs.len(), || "prediction count".into())?;
    for p in &probs {
        let ok = (0.0..=1.0).contains(&p.p_causal)
            && (0.0..=1.0).contains(&p.p_not_causal)
            && (p.p_causal + p.p_not_causal - 1.0).abs() < 1e-6;
        ensure(ok, || format!("{p:?}"))?;
    }

    // (c) head gradients
    let rel = head_gradient_check(16, 4, 3).map_err(|e| e.to_string())?;
    ensure(rel < 1e-4, || format!("gradient relative error {rel:e}"))?;

    let mut detail = format!(
        "overfit {acc:.2} in {} epochs; 1,000 normalized; grad error {rel:.1e}",
        log.epochs.len()
    );
    // (d) optional full run
    match (study_corpus(), std::env::var_os("CIRA_PRETRAINED_ENCODER")) {
        (Some(ds), Some(encoder)) => {
            let ds = ds?.undersample(0).map_err(|e| e.to_string())?;
            let system = TransformerSystem {
                config: VariantConfig::new(Variant::Dep),
                encoder: EncoderSource::Pretrained(encoder.into()),
                tagger: Some(Arc::new(RuleTagger)),
            };
            let cfg = EvaluationConfig {
                repetitions: 1,
                ..EvaluationConfig::default()
            };
            let report = EvaluationReport::run(&[&system as &dyn CausalitySystem], &ds, &cfg)
                .map_err(|e| e.to_string())?;
            let row = &report.rows[0];
            ensure(
                (row.accuracy - 0.82).abs() <= 0.03 && (row.macro_f1 - 0.82).abs() <= 0.03,
                || {
                    format!(
                        "dep accuracy {:.3}, macro-F1 {:.3}",
                        row.accuracy, row.macro_f1
                    )
                },
            )?;
            detail.push_str(&format!(
                "; dep accuracy {:.3}, macro-F1 {:.3}",
                row.accuracy, row.macro_f1
            ));
        }
        _ => detail
            .push_str("; full dep run SKIPPED (CIRA_STUDY_CORPUS / CIRA_PRETRAINED_ENCODER unset)"),
    }
    Ok(detail)
}

fn pipeline_smoke() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_cira");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.success(), || {
            format!(
                "`cira {}` failed: {}",
                args.join(" "),
                String::from_utf8_lossy(&out.stderr)
            )
        })
    };
    let syn = dir.path().join("syn");
    run(&[
        "synth",
        "--sentences",
        "1000",
        "--seed",
        "8",
        "--out-dir",
        syn.to_str().unwrap(),
    ])?;
    let eval = dir.path().join("eval");
    let start = Instant::now();
    run(&[
        "evaluate",
        "--corpus",
        syn.join("corpus.jsonl").to_str().unwrap(),
        "--system",
        "rule",
        "--system",
        "logistic_regression",
        "--balance",
        "--out-dir",
        eval.to_str().unwrap(),
    ])?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), || {
        format!("took {elapsed:?}")
    })?;
    let csv = std::fs::read_to_string(eval.join("evaluation.csv")).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let expected = [
        "causal_recall",
        "causal_precision",
        "causal_f1",
        "not_causal_recall",
        "not_causal_precision",
        "not_causal_f1",
        "accuracy",
    ];
    ensure(header.len() == 9 && header[2..] == expected, || {
        format!("header {header:?}")
    })?;
    let mut rows = 0;
    for line in lines {
        let values: Vec<f64> = line
            .rsplitn(8, ',')
            .take(7)
            .map(|v| v.parse().unwrap_or(f64::NAN))
            .collect();
        ensure(values.iter().all(|v| (0.0..=1.0).contains(v)), || {
            format!("row `{line}`")
        })?;
        rows += 1;
    }
    ensure(rows == 2, || format!("{rows} rows"))?;
    ensure(
        eval.join("comparison.txt").exists() && eval.join("manifest.json").exists(),
        || "missing outputs".into(),
    )?;
    Ok(format!("rule + LR in {:.1} s", elapsed.as_secs_f64()))
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 8] = [
        ("agreement reproduction", agreement_table),
        ("AF reproduction", af_table),
        ("balancing arithmetic", balancing),
        ("metric oracle", metric_oracle),
        ("enrichment fidelity", enrichment),
        ("rule baseline behavior", rule_baseline),
        ("transformer sanity", transformer),
        ("pipeline end-to-end smoke", pipeline_smoke),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let tag = (b'a' + i as u8) as char;
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS ({tag}) {name}: {detail} [{secs:.1} s]"),
            Err(reason) => {
                failed += 1;
                println!("FAIL ({tag}) {name}: {reason} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
