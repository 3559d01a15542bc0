//! Annotation and classification HTTP service.
//!
//! Routes:
//!
//! | method | path | purpose |
//! |---|---|---|
//! | POST | `/classify` | `{"texts": [...]}` to `[{label, p_causal, cues}]` |
//! | GET | `/tasks/next?annotator=ID` | next open annotation task |
//! | POST | `/annotations` | submit labels; identity from `X-Annotator-Token` |
//! | GET | `/agreement` | agreement table over the overlap sentences |
//! | GET | `/export` | JSONL export (`kind=corpus` or `kind=records`, `scope=all` or `scope=overlap`) |
//! | GET | `/lexicon` | cue-phrase lexicon entries |
//! | GET | `/health` | liveness and model status |

mod api;
pub mod assign;
pub mod config;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use cira_core::corpus::{load_corpus, CorpusError, CorpusFormat};
use cira_core::{Dataset, Lexicon, TextClassifier};
use cira_transformer::{CausalityModel, ModelHandle, TransformerError};

pub use api::{router, ANNOTATOR_TOKEN_HEADER};
pub use assign::{assign_tasks, AssignError, TaskPlan};
pub use config::{AssignmentConfig, ServiceConfig};
pub use store::{Ack, Progress, Scope, Store, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("task assignment: {0}")]
    Assign(#[from] AssignError),
    #[error("model: {0}")]
    Model(#[from] TransformerError),
    #[error("classification is enabled but no model checkpoint is configured")]
    ModelRequired,
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

/// Shared request state. Cloning is cheap.
#[derive(Clone)]
pub struct AppState {
    pub(crate) config: Arc<ServiceConfig>,
    pub(crate) corpus: Option<Arc<Dataset>>,
    pub(crate) plan: Option<Arc<TaskPlan>>,
    pub(crate) store: Arc<Store>,
    pub(crate) model: Arc<ModelHandle<dyn TextClassifier>>,
    pub(crate) lexicon: Arc<Lexicon>,
}

impl AppState {
    /// Assembles the state and installs the task plan when both a corpus
    /// and annotators are present.
    pub fn new(
        config: ServiceConfig,
        corpus: Option<Dataset>,
        store: Store,
        model: Option<Arc<dyn TextClassifier>>,
    ) -> Result<Self, ServiceError> {
        config.validate()?;
        let plan = match &corpus {
            Some(ds) if !config.annotators.is_empty() => {
                let annotators: Vec<String> = config.annotators.keys().cloned().collect();
                let a = &config.assignment;
                let plan = assign_tasks(
                    ds,
                    &annotators,
                    a.unique_per_annotator,
                    a.overlap_per_annotator,
                    a.seed,
                )?;
                store.install_plan(&plan)?;
                Some(Arc::new(plan))
            }
            _ => None,
        };
        let handle = match model {
            Some(m) => ModelHandle::new(m),
            None => ModelHandle::empty(),
        };
        Ok(Self {
            config: Arc::new(config),
            corpus: corpus.map(Arc::new),
            plan,
            store: Arc::new(store),
            model: Arc::new(handle),
            lexicon: Arc::new(Lexicon::default_lexicon()),
        })
    }

    /// Loads corpus, store and model as configured.
    pub fn from_config(config: ServiceConfig) -> Result<Self, ServiceError> {
        let model: Option<Arc<dyn TextClassifier>> =
            match (&config.model_checkpoint, config.classify_enabled) {
                (Some(dir), true) => Some(Arc::new(CausalityModel::load(dir)?)),
                (None, true) => return Err(ServiceError::ModelRequired),
                (_, false) => None,
            };
        let corpus = config
            .corpus_path
            .as_ref()
            .map(|p| load_corpus(p, CorpusFormat::from_path(p)))
            .transpose()?;
        let store = Store::open(&config.store_path)?;
        Self::new(config, corpus, store, model)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn plan(&self) -> Option<&TaskPlan> {
        self.plan.as_deref()
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Handle for swapping the classification model at runtime.
    pub fn model(&self) -> &ModelHandle<dyn TextClassifier> {
        &self.model
    }
}

/// Binds the configured address and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr = format!("{}:{}", config.host, config.port);
    let state = AppState::from_config(config)?;
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: addr.clone(),
            source,
        })?;
    serve_on(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Serves `state` on an already bound listener until `shutdown` resolves.
pub async fn serve_on(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let local: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?local, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: local.map(|a| a.to_string()).unwrap_or_default(),
            source,
        })
}
