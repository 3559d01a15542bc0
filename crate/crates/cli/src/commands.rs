use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use cira_core::corpus::{load_corpus, save_corpus, CorpusFormat};
use cira_core::evaluation::{
    compare, compute_metrics, EvaluationConfig, EvaluationReport, Metrics, RunManifest,
    ShallowSystem,
};
use cira_core::features::{
    token_length_coverage, WordPieceTokenizer, BASE_MAX_LEN, ENRICHED_MAX_LEN,
};
use cira_core::shallow::{default_grid, Scoring, ShallowPipeline};
use cira_core::synthetic::{generate, SyntheticConfig};
use cira_core::{Category, Dataset, Lexicon, TextClassifier};
use cira_service::ServiceConfig;
use cira_transformer::{CausalityModel, TrainingConfig, VariantConfig};
use serde::Serialize;

use crate::error::{missing, CliError};
use crate::systems::{self, SystemSpec, TransformerOptions};
use crate::{
    AnalyzeArgs, ClassifyArgs, Command, CorpusArgs, EvaluateArgs, ReplayArgs, ServeArgs, SynthArgs,
    TrainArgs, TransformerArgs,
};

pub const DISTRIBUTION_CSV: &str = "distribution.csv";
pub const AF_TABLE_CSV: &str = "af_table.csv";
pub const EVALUATION_CSV: &str = "evaluation.csv";
pub const COMPARISON_TXT: &str = "comparison.txt";
pub const TRAIN_REPORT: &str = "train_report.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const MODEL_DIR: &str = "model";
const SHALLOW_MODEL: &str = "shallow.json";
const LEXICON_CSV: &str = "lexicon.csv";

pub fn dispatch(command: Command, arguments: Vec<String>) -> Result<(), CliError> {
    match command {
        Command::Analyze(a) => analyze(a, arguments),
        Command::Train(a) => train(a, arguments),
        Command::Evaluate(a) => evaluate(a, arguments),
        Command::Classify(a) => classify(a),
        Command::Serve(a) => serve(a),
        Command::Synth(a) => synth(a, arguments),
        Command::Replay(a) => replay(a),
    }
}

fn load(args: &CorpusArgs) -> Result<Dataset, CliError> {
    if !args.corpus.exists() {
        return Err(missing(args.corpus.clone()));
    }
    let format = args
        .format
        .map(CorpusFormat::from)
        .unwrap_or_else(|| CorpusFormat::from_path(&args.corpus));
    let ds = load_corpus(&args.corpus, format)?;
    if ds.is_empty() {
        return Err(CliError::Data(format!(
            "{}: corpus is empty",
            args.corpus.display()
        )));
    }
    Ok(ds)
}

/// Writes files under one directory and records their fingerprints.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn new(dir: &Path, command: &str, arguments: Vec<String>) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest::start(command, arguments),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::write(&path, e))?;
        self.manifest.record_output(name, contents);
        Ok(path)
    }

    fn input(&mut self, name: &str, ds: &Dataset) {
        self.manifest.inputs.insert(name.into(), ds.fingerprint());
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.manifest.finish();
        let path = self.dir.join(MANIFEST_JSON);
        fs::write(&path, self.manifest.to_json()).map_err(|e| CliError::write(&path, e))
    }
}

#[derive(Debug, Serialize)]
struct DistributionRow<'a> {
    category: &'a str,
    label: String,
    count: usize,
    proportion: f64,
}

fn analyze(args: AnalyzeArgs, arguments: Vec<String>) -> Result<(), CliError> {
    let ds = load(&args.corpus)?;
    let mut out = Outputs::new(&args.out_dir, "analyze", arguments)?;
    out.input("corpus", &ds);
    out.manifest.seeds.insert("seed".into(), args.seed);

    let mut rows = Vec::new();
    for category in Category::ALL {
        match ds.category_distribution(category) {
            Ok(shares) => rows.extend(shares.into_iter().map(|s| DistributionRow {
                category: category.name(),
                label: s.label,
                count: s.count,
                proportion: s.proportion,
            })),
            Err(cira_core::corpus::CorpusError::NoLabels(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let texts = ds.texts();
    let tokenizer = match &args.vocab {
        Some(path) => WordPieceTokenizer::from_vocab_file(path, true)
            .map_err(|e| CliError::Data(e.to_string()))?,
        None => WordPieceTokenizer::train(&texts, 30_522),
    };
    for max_len in [BASE_MAX_LEN, ENRICHED_MAX_LEN] {
        let share = token_length_coverage(&texts, &tokenizer, max_len)
            .map_err(|e| CliError::Data(e.to_string()))?;
        rows.push(DistributionRow {
            category: "TokenLength",
            label: format!("<={max_len}"),
            count: (share * texts.len() as f64).round() as usize,
            proportion: share,
        });
    }
    let mut csv = String::from("category,label,count,proportion\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.4}\n",
            r.category, r.label, r.count, r.proportion
        ));
    }
    out.write(DISTRIBUTION_CSV, csv.as_bytes())?;

    let lexicon = Lexicon::default_lexicon();
    let table = lexicon.af_table(&ds);
    out.write(AF_TABLE_CSV, table.to_csv().as_bytes())?;

    if let Some(causal) = rows
        .iter()
        .find(|r| r.category == "Causality" && r.label == "1")
    {
        println!(
            "{} sentences, {} causal ({:.1} %)",
            ds.len(),
            causal.count,
            causal.proportion * 100.0
        );
    }
    println!("reports written to {}", args.out_dir.display());
    out.finish()
}

fn training_config(t: &TransformerArgs) -> TrainingConfig {
    TrainingConfig {
        batch_size: t.batch_size,
        learning_rate: t.learning_rate,
        weight_decay: t.weight_decay,
        epochs: t.epochs,
    }
}

fn transformer_options(t: &TransformerArgs) -> TransformerOptions {
    TransformerOptions {
        encoder: t.encoder.clone(),
        tiny: t.tiny,
        vocab_size: t.vocab_size,
        tagger: t.tagger.clone(),
        training: training_config(t),
    }
}

fn balanced(ds: Dataset, balance: bool, seed: u64) -> Result<Dataset, CliError> {
    let labels = ds.causality_labels()?;
    let causal = labels.iter().filter(|&&l| l == 1).count();
    let other = labels.len() - causal;
    if causal == other {
        return Ok(ds);
    }
    if !balance {
        return Err(CliError::Data(format!(
            "corpus is unbalanced ({causal} causal, {other} not causal); pass --balance to undersample"
        )));
    }
    Ok(ds.undersample(seed)?)
}

#[derive(Debug, Serialize)]
struct TrainReport {
    system: String,
    hyperparameters: String,
    train_sentences: usize,
    test_sentences: usize,
    test: Metrics,
}

fn train(args: TrainArgs, arguments: Vec<String>) -> Result<(), CliError> {
    let spec: SystemSpec = args.system.parse()?;
    let grids = systems::load_grids(args.protocol.grid.as_ref())?;
    let p = &args.protocol;
    let ds = balanced(load(&args.corpus)?, p.balance, p.seed)?;
    let plan = ds.split(p.test_fraction, p.folds, p.seed)?;
    let mut out = Outputs::new(&args.out_dir, "train", arguments)?;
    out.input("corpus", &ds);
    out.manifest.seeds.insert("seed".into(), p.seed);
    let model_dir = args.out_dir.join(MODEL_DIR);
    fs::create_dir_all(&model_dir).map_err(|e| CliError::write(&model_dir, e))?;

    let (id, classifier, hyperparameters): (String, Box<dyn TextClassifier>, String) = match spec {
        SystemSpec::Rule | SystemSpec::Constant(_) => {
            let system = systems::build(spec, &grids, &transformer_options(&args.transformer))?;
            out.manifest.systems.push(system.describe());
            let fitted = system.fit(&plan, p.seed)?;
            if spec == SystemSpec::Rule {
                let path = model_dir.join(LEXICON_CSV);
                fs::write(&path, Lexicon::default_lexicon().to_csv())
                    .map_err(|e| CliError::write(&path, e))?;
            }
            (system.id(), fitted.classifier, fitted.hyperparameters)
        }
        SystemSpec::Shallow(algorithm) => {
            let system = ShallowSystem {
                grid: grids
                    .iter()
                    .find(|g| g.algorithm == algorithm)
                    .cloned()
                    .unwrap_or_else(|| default_grid(algorithm)),
                scoring: Scoring::default(),
            };
            out.manifest
                .systems
                .push(serde_json::json!({"system": algorithm.name(), "grid": system.grid.axes}));
            let best = if system.grid.len() == 1 {
                system.grid.combinations()?.remove(0)
            } else {
                system.best_spec(&plan, p.seed)?
            };
            let texts = plan.remainder.texts();
            let labels = plan.remainder.causality_labels()?;
            let pipeline = ShallowPipeline::fit(&best, &texts, &labels, p.seed)?;
            let path = model_dir.join(SHALLOW_MODEL);
            let json =
                serde_json::to_vec(&pipeline).map_err(|e| CliError::Internal(e.to_string()))?;
            fs::write(&path, json).map_err(|e| CliError::write(&path, e))?;
            (
                algorithm.name().to_string(),
                Box::new(pipeline),
                best.describe(),
            )
        }
        SystemSpec::Transformer(variant) => {
            let opts = transformer_options(&args.transformer);
            let config = VariantConfig::new(variant).with_training(opts.training);
            config.validate()?;
            let fold = plan
                .folds
                .first()
                .ok_or_else(|| CliError::Usage("at least one fold is required".into()))?;
            let mut model = CausalityModel::from_source(
                config,
                &opts.source(),
                opts.tagger(variant)?,
                &fold.train.texts(),
                p.seed,
            )?;
            let log = model.fine_tune(&fold.train, &fold.validation, p.seed)?;
            model.save(&model_dir)?;
            out.manifest
                .systems
                .push(serde_json::to_value(model.manifest()).expect("manifest serializes"));
            tracing::info!(best_epoch = ?log.best_epoch, "fine-tuning finished");
            (
                format!("transformer_{variant}"),
                Box::new(model),
                config.training.describe(),
            )
        }
    };
    let test_texts = plan.test.texts();
    let gold = plan.test.causality_labels()?;
    let pred = classifier.predict(&test_texts)?;
    let report = TrainReport {
        system: id,
        hyperparameters,
        train_sentences: plan.remainder.len(),
        test_sentences: plan.test.len(),
        test: compute_metrics(&pred, &gold)?,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    out.write(TRAIN_REPORT, json.as_bytes())?;
    println!(
        "{}: test accuracy {:.3}, model written to {}",
        report.system,
        report.test.accuracy,
        model_dir.display()
    );
    out.finish()
}

fn evaluate(args: EvaluateArgs, arguments: Vec<String>) -> Result<(), CliError> {
    let specs = systems::parse_specs(&args.system)?;
    if specs.is_empty() {
        return Err(CliError::Usage("no system given".into()));
    }
    let grids = systems::load_grids(args.protocol.grid.as_ref())?;
    let opts = transformer_options(&args.transformer);
    let built = specs
        .iter()
        .map(|s| systems::build(*s, &grids, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let p = &args.protocol;
    let ds = load(&args.corpus)?;
    let ds = if p.balance {
        balanced(ds, true, p.seed)?
    } else {
        ds
    };
    let config = EvaluationConfig {
        test_fraction: p.test_fraction,
        folds: p.folds,
        repetitions: args.repetitions,
        seed: p.seed,
    };
    if config.repetitions == 0 {
        return Err(CliError::Usage("--repetitions must be at least 1".into()));
    }
    let mut out = Outputs::new(&args.out_dir, "evaluate", arguments)?;
    out.input("corpus", &ds);
    out.manifest.seeds.insert("seed".into(), p.seed);
    out.manifest.systems = built.iter().map(|s| s.describe()).collect();

    let refs: Vec<&dyn cira_core::CausalitySystem> = built.iter().map(|b| b.as_ref()).collect();
    let report = EvaluationReport::run(&refs, &ds, &config)?;
    out.write(EVALUATION_CSV, report.to_csv().as_bytes())?;
    if report.rows.len() >= 2 {
        let comparison = compare(&report.rows, args.reference.as_deref())?;
        let text = comparison.render();
        out.write(COMPARISON_TXT, text.as_bytes())?;
        print!("{text}");
    } else {
        print!("{}", report.to_csv());
    }
    out.finish()
}

fn load_classifier(path: &Path) -> Result<Box<dyn TextClassifier>, CliError> {
    if !path.exists() {
        return Err(missing(path.to_path_buf()));
    }
    let read = |p: &Path| fs::read(p).map_err(|e| CliError::read(p, e));
    if path.is_file() {
        let bytes = read(path)?;
        let pipeline: ShallowPipeline = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        return Ok(Box::new(pipeline));
    }
    if path.join(MANIFEST_JSON).exists() {
        return Ok(Box::new(CausalityModel::load(path)?));
    }
    if path.join(SHALLOW_MODEL).exists() {
        return load_classifier(&path.join(SHALLOW_MODEL));
    }
    if path.join(LEXICON_CSV).exists() {
        let bytes = read(&path.join(LEXICON_CSV))?;
        let lexicon =
            Lexicon::from_csv(bytes.as_slice()).map_err(|e| CliError::Data(e.to_string()))?;
        return Ok(Box::new(lexicon));
    }
    Err(CliError::Data(format!(
        "{} holds no model artifact",
        path.display()
    )))
}

#[derive(Debug, Serialize)]
struct Classified<'a> {
    text: &'a str,
    label: &'static str,
    p_causal: f64,
    cues: Vec<String>,
}

fn classify(args: ClassifyArgs) -> Result<(), CliError> {
    let model = load_classifier(&args.model)?;
    let reader: Box<dyn BufRead> = match &args.input {
        Some(p) => Box::new(BufReader::new(
            fs::File::open(p).map_err(|e| CliError::read(p, e))?,
        )),
        None => Box::new(BufReader::new(std::io::stdin())),
    };
    let mut texts = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| CliError::Data(format!("reading input: {e}")))?;
        if !line.trim().is_empty() {
            texts.push(line);
        }
    }
    let lexicon = Lexicon::default_lexicon();
    let stdout = std::io::stdout();
    let mut w = std::io::BufWriter::new(stdout.lock());
    for chunk in texts.chunks(256) {
        let probs = model.predict_proba(chunk)?;
        for (text, p) in chunk.iter().zip(probs) {
            let row = Classified {
                text,
                label: if p > 0.5 { "causal" } else { "not_causal" },
                p_causal: p,
                cues: lexicon
                    .match_phrases(text)
                    .into_iter()
                    .map(|m| m.phrase)
                    .collect(),
            };
            serde_json::to_writer(&mut w, &row).map_err(|e| CliError::Internal(e.to_string()))?;
            writeln!(w).map_err(|e| CliError::Internal(e.to_string()))?;
        }
    }
    w.flush().map_err(|e| CliError::Internal(e.to_string()))
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    let mut config = ServiceConfig::load(&args.config)?;
    if let Some(port) = args.port {
        config.port = port;
    }
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(cira_service::serve(config))?;
    Ok(())
}

fn synth(args: SynthArgs, arguments: Vec<String>) -> Result<(), CliError> {
    let mut config = SyntheticConfig::small(args.sentences, 0.28);
    if let Some(causal) = args.causal {
        if causal > args.sentences {
            return Err(CliError::Usage(format!(
                "--causal {causal} exceeds --sentences {}",
                args.sentences
            )));
        }
        config.causal = causal;
    }
    if args.sentences == 0 {
        return Err(CliError::Usage("--sentences must be positive".into()));
    }
    let ds = generate(&config, args.seed);
    let format = CorpusFormat::from(args.format);
    let name = match format {
        CorpusFormat::Jsonl => "corpus.jsonl",
        CorpusFormat::Csv => "corpus.csv",
    };
    let mut out = Outputs::new(&args.out_dir, "synth", arguments)?;
    out.manifest.seeds.insert("seed".into(), args.seed);
    let path = args.out_dir.join(name);
    save_corpus(&ds, &path, format)?;
    let bytes = fs::read(&path).map_err(|e| CliError::read(&path, e))?;
    out.manifest.record_output(name, &bytes);
    println!(
        "{} sentences ({} causal) written to {}",
        ds.len(),
        config.causal,
        path.display()
    );
    out.finish()
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.manifest).map_err(|e| CliError::read(&args.manifest, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.manifest.display())))?;
    if manifest.command == "replay"
        || manifest.arguments.first().map(String::as_str) != Some(manifest.command.as_str())
    {
        return Err(CliError::Data(format!(
            "{}: manifest does not record a replayable command",
            args.manifest.display()
        )));
    }
    let mut argv = vec!["cira".to_string()];
    if args.out_dir.is_some() {
        argv.extend(without_out_dir(manifest.arguments));
    } else {
        argv.extend(manifest.arguments);
    }
    if let Some(dir) = args.out_dir {
        argv.push("--out-dir".into());
        argv.push(dir.display().to_string());
    }
    crate::run(&argv)
}

fn without_out_dir(arguments: Vec<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(arguments.len());
    let mut iter = arguments.into_iter();
    while let Some(a) = iter.next() {
        if a == "--out-dir" {
            iter.next();
        } else if !a.starts_with("--out-dir=") {
            out.push(a);
        }
    }
    out
}
