use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const DEFAULT_BATCH_CAP: usize = 256;

/// Task assignment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignmentConfig {
    pub unique_per_annotator: usize,
    pub overlap_per_annotator: usize,
    pub seed: u64,
}

impl Default for AssignmentConfig {
    fn default() -> Self {
        Self {
            unique_per_annotator: 2500,
            overlap_per_annotator: 500,
            seed: 0,
        }
    }
}

/// Service settings, read from a TOML file. `model_checkpoint`,
/// `store_path` and `port` can be overridden by `CIRA_MODEL_CHECKPOINT`,
/// `CIRA_STORE_PATH` and `CIRA_PORT`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub model_checkpoint: Option<PathBuf>,
    pub store_path: PathBuf,
    pub host: String,
    pub port: u16,
    pub classify_enabled: bool,
    pub batch_cap: usize,
    /// Corpus whose sentences are handed out as annotation tasks.
    pub corpus_path: Option<PathBuf>,
    /// Annotator id to access token.
    pub annotators: BTreeMap<String, String>,
    /// Annotator whose vote settles ties when exporting a corpus.
    pub adjudicator: Option<String>,
    pub assignment: AssignmentConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            model_checkpoint: None,
            store_path: PathBuf::from("cira.sqlite"),
            host: "127.0.0.1".into(),
            port: 8080,
            classify_enabled: true,
            batch_cap: DEFAULT_BATCH_CAP,
            corpus_path: None,
            annotators: BTreeMap::new(),
            adjudicator: None,
            assignment: AssignmentConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads `path` (relative paths inside resolve against its directory)
    /// and applies environment overrides.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|source| ServiceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        if let Some(base) = path.parent() {
            config.resolve_relative(base);
        }
        config.apply_env(|k| std::env::var(k).ok())?;
        config.validate()?;
        Ok(config)
    }

    fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.store_path);
        if let Some(p) = self.model_checkpoint.as_mut() {
            fix(p);
        }
        if let Some(p) = self.corpus_path.as_mut() {
            fix(p);
        }
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(v) = var("CIRA_MODEL_CHECKPOINT") {
            self.model_checkpoint = (!v.is_empty()).then(|| PathBuf::from(v));
        }
        if let Some(v) = var("CIRA_STORE_PATH") {
            self.store_path = PathBuf::from(v);
        }
        if let Some(v) = var("CIRA_PORT") {
            self.port = v.parse().map_err(|_| {
                ServiceError::Config(format!("CIRA_PORT: `{v}` is not a port number"))
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.batch_cap == 0 {
            return Err(ServiceError::Config("batch_cap must be positive".into()));
        }
        let mut tokens: Vec<&String> = self.annotators.values().collect();
        tokens.sort();
        if tokens.windows(2).any(|w| w[0] == w[1]) {
            return Err(ServiceError::Config(
                "annotator tokens must be distinct".into(),
            ));
        }
        if tokens.iter().any(|t| t.is_empty()) {
            return Err(ServiceError::Config(
                "annotator tokens must not be empty".into(),
            ));
        }
        if let Some(a) = &self.adjudicator {
            if !self.annotators.contains_key(a) {
                return Err(ServiceError::Config(format!(
                    "adjudicator `{a}` is not an annotator"
                )));
            }
        }
        Ok(())
    }

    pub fn annotator_for_token(&self, token: &str) -> Option<&str> {
        self.annotators
            .iter()
            .find(|(_, t)| t.as_str() == token)
            .map(|(a, _)| a.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        model_checkpoint = "model"
        store_path = "store.sqlite"
        port = 9000
        corpus_path = "corpus.jsonl"

        [annotators]
        alice = "t-alice"
        bob = "t-bob"

        [assignment]
        unique_per_annotator = 10
        overlap_per_annotator = 5
        seed = 7
    "#;

    #[test]
    fn parses_and_overrides() {
        let mut c = ServiceConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.batch_cap, DEFAULT_BATCH_CAP);
        assert_eq!(c.assignment.overlap_per_annotator, 5);
        c.resolve_relative(Path::new("/srv"));
        assert_eq!(c.store_path, PathBuf::from("/srv/store.sqlite"));
        c.apply_env(|k| match k {
            "CIRA_PORT" => Some("9100".into()),
            "CIRA_STORE_PATH" => Some("/tmp/x.sqlite".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.port, 9100);
        assert_eq!(c.store_path, PathBuf::from("/tmp/x.sqlite"));
        assert_eq!(c.model_checkpoint, Some(PathBuf::from("/srv/model")));
        assert_eq!(c.annotator_for_token("t-bob"), Some("bob"));
        assert_eq!(c.annotator_for_token("bob"), None);
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = ServiceConfig::default();
        assert!(c.apply_env(|_| Some("http".into())).is_err());
        assert!(ServiceConfig::from_toml("prot = 1").is_err());
        c.annotators.insert("a".into(), "same".into());
        c.annotators.insert("b".into(), "same".into());
        assert!(c.validate().is_err());
    }
}
