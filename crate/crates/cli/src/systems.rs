//! Parsing of `--system` specifications.

use std::path::PathBuf;
use std::sync::Arc;

use cira_core::evaluation::{CausalitySystem, ConstantSystem, RuleSystem, ShallowSystem};
use cira_core::features::{tagger_from_spec, Tagger};
use cira_core::shallow::{default_grid, read_grid_file, Algorithm, ParamGrid, Scoring};
use cira_core::Lexicon;
use cira_transformer::{
    EncoderConfig, EncoderSource, TrainingConfig, TransformerSystem, Variant, VariantConfig,
};

use crate::error::CliError;

/// A parsed `--system` value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemSpec {
    Rule,
    Constant(u8),
    Shallow(Algorithm),
    Transformer(Variant),
}

pub fn valid_names() -> String {
    let mut names = vec!["rule".to_string(), "constant:0".into(), "constant:1".into()];
    names.extend(Algorithm::ALL.iter().map(|a| a.name().to_string()));
    names.extend(Variant::ALL.iter().map(|v| format!("transformer:{v}")));
    names.join(", ")
}

impl std::str::FromStr for SystemSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        let unknown = || {
            CliError::Usage(format!(
                "unknown system `{s}`; valid names: {}",
                valid_names()
            ))
        };
        if key == "rule" {
            return Ok(SystemSpec::Rule);
        }
        if let Some(label) = key.strip_prefix("constant:") {
            return match label {
                "0" => Ok(SystemSpec::Constant(0)),
                "1" => Ok(SystemSpec::Constant(1)),
                _ => Err(unknown()),
            };
        }
        if let Some(variant) = key.strip_prefix("transformer:") {
            return variant
                .parse()
                .map(SystemSpec::Transformer)
                .map_err(|_| unknown());
        }
        key.parse().map(SystemSpec::Shallow).map_err(|_| unknown())
    }
}

/// Splits comma-separated values and parses each.
pub fn parse_specs(raw: &[String]) -> Result<Vec<SystemSpec>, CliError> {
    raw.iter()
        .flat_map(|r| r.split(','))
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Settings shared by the transformer systems.
#[derive(Debug, Clone)]
pub struct TransformerOptions {
    pub encoder: Option<PathBuf>,
    pub tiny: bool,
    pub vocab_size: usize,
    pub tagger: Option<String>,
    pub training: TrainingConfig,
}

impl TransformerOptions {
    pub fn source(&self) -> EncoderSource {
        match &self.encoder {
            Some(dir) => EncoderSource::Pretrained(dir.clone()),
            None => EncoderSource::Scratch {
                config: if self.tiny {
                    EncoderConfig::tiny(self.vocab_size)
                } else {
                    EncoderConfig::base(self.vocab_size)
                },
                vocab_size: self.vocab_size,
            },
        }
    }

    pub fn tagger(&self, variant: Variant) -> Result<Option<Arc<dyn Tagger>>, CliError> {
        if variant.tag_mode().is_none() {
            return Ok(None);
        }
        let spec = self.tagger.as_deref().unwrap_or("rule");
        let tagger = tagger_from_spec(spec).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Some(Arc::from(tagger)))
    }
}

/// Grid overrides from a `--grid` file, keyed by algorithm.
pub fn load_grids(path: Option<&PathBuf>) -> Result<Vec<ParamGrid>, CliError> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    Ok(read_grid_file(&text)?)
}

pub fn build(
    spec: SystemSpec,
    grids: &[ParamGrid],
    transformer: &TransformerOptions,
) -> Result<Box<dyn CausalitySystem>, CliError> {
    Ok(match spec {
        SystemSpec::Rule => Box::new(RuleSystem {
            lexicon: Lexicon::default_lexicon(),
        }),
        SystemSpec::Constant(label) => Box::new(ConstantSystem { label }),
        SystemSpec::Shallow(algorithm) => Box::new(ShallowSystem {
            grid: grids
                .iter()
                .find(|g| g.algorithm == algorithm)
                .cloned()
                .unwrap_or_else(|| default_grid(algorithm)),
            scoring: Scoring::default(),
        }),
        SystemSpec::Transformer(variant) => {
            let config = VariantConfig::new(variant).with_training(transformer.training);
            config.validate()?;
            Box::new(TransformerSystem {
                config,
                encoder: transformer.source(),
                tagger: transformer.tagger(variant)?,
            })
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_specs() {
        let specs = parse_specs(&[
            "rule,NB".into(),
            "transformer:dep".into(),
            "constant:1".into(),
        ])
        .unwrap();
        assert_eq!(
            specs,
            [
                SystemSpec::Rule,
                SystemSpec::Shallow(Algorithm::NaiveBayes),
                SystemSpec::Transformer(Variant::Dep),
                SystemSpec::Constant(1)
            ]
        );
    }

    #[test]
    fn unknown_name_lists_valid_ones() {
        let err = "perceptron".parse::<SystemSpec>().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let msg = err.to_string();
        assert!(
            msg.contains("perceptron")
                && msg.contains("naive_bayes")
                && msg.contains("transformer:dep")
        );
        assert!("transformer:large".parse::<SystemSpec>().is_err());
        assert!("constant:2".parse::<SystemSpec>().is_err());
    }
}
