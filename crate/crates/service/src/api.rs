use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use cira_core::agreement::{agreement_report, AgreementError};
use cira_core::corpus::{consolidate, write_corpus, CorpusFormat, SchemaViolation};
use cira_core::lexicon::CueMatch;
use cira_core::{AnnotationRecord, Category, Dataset, LabelSet};
use serde::{Deserialize, Serialize};

use crate::store::{Progress, Scope, StoreError, TaskStatus};
use crate::AppState;

pub const ANNOTATOR_TOKEN_HEADER: &str = "x-annotator-token";

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/classify", post(classify))
        .route("/tasks/next", get(next_task))
        .route("/annotations", post(submit))
        .route("/agreement", get(agreement))
        .route("/export", get(export))
        .route("/lexicon", get(lexicon))
        .route("/health", get(health))
        .with_state(state)
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    rule: Option<&'static str>,
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error: message.into(),
                rule: None,
            },
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn rule_code(v: &SchemaViolation) -> &'static str {
    match v {
        SchemaViolation::WrongValueKind { .. } => "wrong_value_kind",
        SchemaViolation::DependentOnNonCausal { .. } => "dependent_on_non_causal",
        SchemaViolation::DependentWithoutCausality { .. } => "dependent_without_causality",
        SchemaViolation::MissingCausality => "missing_causality",
        SchemaViolation::EmptyCuePhrase => "empty_cue_phrase",
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match &e {
            StoreError::Invalid(v) => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                body: ErrorBody {
                    error: e.to_string(),
                    rule: Some(rule_code(v)),
                },
            },
            StoreError::NoTask { .. } => Self::new(StatusCode::NOT_FOUND, e.to_string()),
            _ => Self::internal(e),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
struct ClassifyRequest {
    texts: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ClassifyItem {
    label: &'static str,
    p_causal: f64,
    cues: Vec<CueMatch>,
}

async fn classify(
    State(state): State<AppState>,
    body: Result<Json<ClassifyRequest>, JsonRejection>,
) -> ApiResult<Json<Vec<ClassifyItem>>> {
    if !state.config.classify_enabled {
        return Err(ApiError::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "classification is disabled",
        ));
    }
    let Json(req) = body.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.body_text()))?;
    let cap = state.config.batch_cap;
    if req.texts.len() > cap {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("{} texts exceed the batch cap of {cap}", req.texts.len()),
        ));
    }
    let model = state
        .model
        .get()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no model loaded"))?;
    if req.texts.is_empty() {
        return Ok(Json(Vec::new()));
    }
    let texts = req.texts;
    let lexicon = state.lexicon.clone();
    let items = tokio::task::spawn_blocking(move || -> ApiResult<Vec<ClassifyItem>> {
        let probs = model.predict_proba(&texts).map_err(ApiError::internal)?;
        Ok(texts
            .iter()
            .zip(probs)
            .map(|(t, p)| ClassifyItem {
                label: if p > 0.5 { "causal" } else { "not_causal" },
                p_causal: p,
                cues: lexicon.match_phrases(t),
            })
            .collect())
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(Json(items))
}

#[derive(Debug, Serialize)]
struct CategorySchema {
    category: &'static str,
    values: &'static [&'static str],
    requires_causality: bool,
}

fn schema() -> Vec<CategorySchema> {
    Category::ALL
        .into_iter()
        .map(|c| CategorySchema {
            category: c.name(),
            values: c.value_names(),
            requires_causality: c.is_dependent(),
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct TaskContext {
    predecessor: Option<String>,
    successor: Option<String>,
}

#[derive(Debug, Serialize)]
struct AnnotationTask {
    annotator_id: String,
    sentence_id: String,
    text: String,
    context: TaskContext,
    schema: Vec<CategorySchema>,
    status: TaskStatus,
    progress: Progress,
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    annotator: String,
}

async fn next_task(
    State(state): State<AppState>,
    Query(q): Query<NextQuery>,
) -> ApiResult<Response> {
    let corpus = state
        .corpus
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no corpus configured"))?;
    if !state.store.has_tasks(&q.annotator)? {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            format!("annotator `{}` has no tasks", q.annotator),
        ));
    }
    let Some(task) = state.store.next_task(&q.annotator)? else {
        return Ok(StatusCode::NO_CONTENT.into_response());
    };
    let (pred, sentence, succ) = corpus
        .sentence_context(&task.sentence_id)
        .map_err(ApiError::internal)?;
    Ok(Json(AnnotationTask {
        annotator_id: q.annotator.clone(),
        sentence_id: task.sentence_id,
        text: sentence.text.clone(),
        context: TaskContext {
            predecessor: pred.map(|s| s.text.clone()),
            successor: succ.map(|s| s.text.clone()),
        },
        schema: schema(),
        status: task.status,
        progress: state.store.progress(&q.annotator)?,
    })
    .into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Submission {
    sentence_id: String,
    labels: LabelSet,
    #[serde(default)]
    cue_phrases: Vec<String>,
}

async fn submit(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<Submission>, JsonRejection>,
) -> ApiResult<Response> {
    let token = headers
        .get(ANNOTATOR_TOKEN_HEADER)
        .and_then(|v| v.to_str().ok())
        .ok_or_else(|| {
            ApiError::new(StatusCode::UNAUTHORIZED, "missing X-Annotator-Token header")
        })?;
    let annotator = state
        .config
        .annotator_for_token(token)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "unknown annotator token"))?
        .to_string();
    let Json(sub) =
        body.map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.body_text()))?;
    let record = AnnotationRecord {
        sentence_id: sub.sentence_id,
        annotator_id: annotator,
        labels: sub.labels,
        cue_phrases: sub
            .cue_phrases
            .into_iter()
            .map(|c| c.trim().to_string())
            .collect(),
        timestamp: Utc::now(),
    };
    let store = state.store.clone();
    let ack = tokio::task::spawn_blocking(move || store.submit(&record))
        .await
        .map_err(ApiError::internal)??;
    Ok((StatusCode::CREATED, Json(ack)).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScopeParam {
    All,
    #[default]
    Overlap,
}

#[derive(Debug, Default, Deserialize)]
struct AgreementQuery {
    #[serde(default)]
    scope: ScopeParam,
}

impl From<ScopeParam> for Scope {
    fn from(s: ScopeParam) -> Self {
        match s {
            ScopeParam::All => Scope::All,
            ScopeParam::Overlap => Scope::Overlap,
        }
    }
}

async fn agreement(
    State(state): State<AppState>,
    Query(q): Query<AgreementQuery>,
) -> ApiResult<Response> {
    let records = state.store.current_records(q.scope.into())?;
    match agreement_report(&records) {
        Ok(report) => Ok(Json(report).into_response()),
        Err(AgreementError::NothingToReport) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "no sentence has been labeled by two annotators yet",
        )),
        Err(e) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            e.to_string(),
        )),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ExportKind {
    #[default]
    Corpus,
    Records,
}

#[derive(Debug, Default, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    kind: ExportKind,
    #[serde(default)]
    scope: Option<ScopeParam>,
}

const EMPTY_EXPORT_WARNING: &str = "299 cira \"no submitted annotations\"";

async fn export(
    State(state): State<AppState>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let scope = q.scope.map(Scope::from).unwrap_or(Scope::All);
    let records = state.store.current_records(scope)?;
    let mut body = Vec::new();
    match q.kind {
        ExportKind::Records => {
            for r in &records {
                serde_json::to_writer(&mut body, r).map_err(ApiError::internal)?;
                body.push(b'\n');
            }
        }
        ExportKind::Corpus if !records.is_empty() => {
            let corpus = state.corpus.as_ref().ok_or_else(|| {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no corpus configured")
            })?;
            let gold = consolidate(&records, state.config.adjudicator.as_deref());
            let sentences = corpus
                .sentences()
                .iter()
                .filter(|s| gold.contains_key(&s.id))
                .cloned()
                .collect();
            let cues = gold
                .iter()
                .map(|(id, c)| (id.clone(), c.cue_phrases.clone()))
                .collect();
            let labels = gold.into_iter().map(|(id, c)| (id, c.labels)).collect();
            let ds = Dataset::new(sentences, labels, cues).map_err(ApiError::internal)?;
            write_corpus(&ds, CorpusFormat::Jsonl, &mut body).map_err(ApiError::internal)?;
        }
        ExportKind::Corpus => {}
    }
    let mut response = (
        [(
            header::CONTENT_TYPE,
            HeaderValue::from_static("application/x-ndjson"),
        )],
        body,
    )
        .into_response();
    if records.is_empty() {
        response.headers_mut().insert(
            header::WARNING,
            HeaderValue::from_static(EMPTY_EXPORT_WARNING),
        );
    }
    Ok(response)
}

async fn lexicon(State(state): State<AppState>) -> Json<Vec<cira_core::CuePhraseEntry>> {
    Json(state.lexicon.entries().to_vec())
}

#[derive(Debug, Serialize)]
struct Health {
    model_loaded: bool,
    classify_enabled: bool,
    annotators: usize,
}

async fn health(State(state): State<AppState>) -> Json<Health> {
    Json(Health {
        model_loaded: state.model.is_loaded(),
        classify_enabled: state.config.classify_enabled,
        annotators: state.plan.as_ref().map_or(0, |p| p.queues.len()),
    })
}
