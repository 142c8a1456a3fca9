//! HTTP service.
//!
//! All bodies are JSON except uploads (multipart) and exports (CSV or
//! JSON lines). Errors are `{"error": "..."}` with a 4xx or 5xx status.
//!
//! | method | path | purpose |
//! |---|---|---|
//! | POST | `/api/classify` | classify one paper |
//! | POST | `/api/batch` | upload files, get a column mapping proposal |
//! | POST | `/api/batch/{id}/run` | classify with the confirmed mapping |
//! | GET | `/api/batch/{id}/export?format=csv` | download results |
//! | GET | `/api/batch/{id}/summary?format=csv&top_n=k` | per-goal frequencies |
//! | GET | `/api/meta` | library and build metadata |

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use sdgmap_core::analytics::{self, CorpusSummary, ExportFormat};
use sdgmap_core::export::{self, ResultFormat};
use sdgmap_core::ingest::{read_table, Batch, ColumnMapping, Diagnostics, MappingRequest, PaperRecord, Role, Table};
use sdgmap_core::{ClassificationResult, CompiledLibrary, SdgId, TopN};

use crate::config::ServiceConfig;
use crate::pipeline;

const PREVIEW_ROWS: usize = 10;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }

    fn unknown_batch(id: u64) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown batch id {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Run {
    top_n: TopN,
    batch: Batch,
    results: Vec<ClassificationResult>,
}

struct StoredBatch {
    tables: Vec<Table>,
    run: Option<Arc<Run>>,
}

pub struct AppState {
    lib: Arc<CompiledLibrary>,
    default_top_n: TopN,
    pool: Arc<ThreadPool>,
    batches: Mutex<HashMap<u64, StoredBatch>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(lib: CompiledLibrary, default_top_n: TopN, workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(AppState {
            lib: Arc::new(lib),
            default_top_n,
            pool: Arc::new(pipeline::thread_pool(workers)?),
            batches: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }
}

pub fn router(state: Arc<AppState>, max_upload: usize) -> Router {
    Router::new()
        .route("/api/classify", post(classify_single))
        .route("/api/batch", post(upload))
        .route("/api/batch/{id}/run", post(run_batch))
        .route("/api/batch/{id}/export", get(export_batch))
        .route("/api/batch/{id}/summary", get(batch_summary))
        .route("/api/meta", get(meta))
        .layer(DefaultBodyLimit::max(max_upload))
        .with_state(state)
}

/// Binds `config.listen` and serves until interrupted.
pub async fn serve(config: ServiceConfig, lib: CompiledLibrary) -> anyhow::Result<()> {
    log::info!(
        "library {} with {} sub-queries",
        lib.library().provenance(),
        lib.library().len()
    );
    let state = Arc::new(AppState::new(lib, config.top_n, config.workers)?);
    let app = router(state, config.max_upload);
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn top_n_or(requested: Option<i64>, default: TopN) -> ApiResult<TopN> {
    match requested {
        None => Ok(default),
        Some(n) => TopN::new(n).map_err(|e| ApiError::bad_request(e.to_string())),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRequest {
    #[serde(default)]
    title: Option<String>,
    #[serde(default, rename = "abstract")]
    abstract_text: Option<String>,
    #[serde(default)]
    author_keywords: Option<String>,
    #[serde(default)]
    index_keywords: Option<String>,
    #[serde(default)]
    top_n: Option<i64>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct MatchedSubQuery {
    pub id: String,
    pub label: String,
    pub query: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DetailedSdg {
    pub sdg: SdgId,
    pub name: String,
    pub score: f64,
    /// Same value as `score`; the service has no other confidence measure.
    pub confidence: f64,
    pub matched: u32,
    pub total: u32,
    pub matched_subqueries: Vec<MatchedSubQuery>,
}

/// Single-paper response: the ranked result with each matched
/// sub-query's label and query text.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ClassifyResponse {
    pub library_version: String,
    pub top_n: TopN,
    pub no_recognition: bool,
    pub ranked: Vec<DetailedSdg>,
}

fn detailed(lib: &CompiledLibrary, result: ClassificationResult) -> ClassifyResponse {
    let ranked = result
        .ranked
        .into_iter()
        .map(|r| DetailedSdg {
            sdg: r.sdg,
            name: r.sdg.name().to_string(),
            score: r.score,
            confidence: r.score,
            matched: r.matched,
            total: r.total,
            matched_subqueries: r
                .matched_subqueries
                .iter()
                .map(|id| {
                    let sq = lib.library().get(id).expect("matched ids come from the library");
                    MatchedSubQuery {
                        id: id.clone(),
                        label: sq.label.clone(),
                        query: sq.raw.clone(),
                    }
                })
                .collect(),
        })
        .collect();
    ClassifyResponse {
        library_version: result.library_version,
        top_n: result.top_n,
        no_recognition: result.no_recognition,
        ranked,
    }
}

async fn classify_single(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<ClassifyResponse>> {
    let req: ClassifyRequest = parse_json(&body)?;
    let top_n = top_n_or(req.top_n, state.default_top_n)?;
    let record = PaperRecord::from_fields(req.title, req.abstract_text, req.author_keywords, req.index_keywords);
    if !record.is_classifiable() {
        return Err(ApiError::bad_request(
            "at least one of title, abstract, author_keywords, index_keywords must be non-empty",
        ));
    }
    let result = pipeline::classify_record(&state.lib, &record, top_n);
    Ok(Json(detailed(&state.lib, result)))
}

#[derive(Serialize)]
struct FileInfo<'a> {
    name: &'a str,
    rows: usize,
    header: &'a [String],
    mapping: &'a ColumnMapping,
}

#[derive(Serialize)]
struct PreviewRow<'a> {
    row_index: usize,
    source_file: &'a str,
    source_row: usize,
    classifiable: bool,
    title: Option<&'a str>,
    #[serde(rename = "abstract")]
    abstract_text: Option<&'a str>,
    author_keywords: Option<&'a str>,
    index_keywords: Option<&'a str>,
}

fn preview(batch: &Batch) -> Vec<PreviewRow<'_>> {
    batch
        .records
        .iter()
        .take(PREVIEW_ROWS)
        .map(|r| PreviewRow {
            row_index: r.index,
            source_file: &batch.sources[r.source].name,
            source_row: r.source_row + 1,
            classifiable: r.is_classifiable(),
            title: r.field(Role::Title),
            abstract_text: r.field(Role::Abstract),
            author_keywords: r.field(Role::AuthorKeywords),
            index_keywords: r.field(Role::IndexKeywords),
        })
        .collect()
}

async fn upload(State(state): State<Arc<AppState>>, mut multipart: Multipart) -> ApiResult<Response> {
    let mut tables = Vec::new();
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => return Err(ApiError::new(e.status(), e.body_text())),
        };
        let Some(name) = field.file_name().map(str::to_string) else {
            continue;
        };
        let bytes = field
            .bytes()
            .await
            .map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        let table = read_table(&name, &bytes, None).map_err(|e| ApiError::unprocessable(e.to_string()))?;
        tables.push(table);
    }
    if tables.is_empty() {
        return Err(ApiError::bad_request("no files in upload"));
    }
    let batch = Batch::from_tables(tables.clone(), &MappingRequest::Auto)
        .map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let body = serde_json::json!({
        "batch_id": id,
        "files": batch.sources.iter().map(|s| FileInfo {
            name: &s.name,
            rows: s.rows,
            header: &s.header,
            mapping: &s.mapping,
        }).collect::<Vec<_>>(),
        "header": batch.output_header(),
        "mapping": batch.mapping,
        "rows": batch.records.len(),
        "diagnostics": batch.diagnostics,
        "preview": preview(&batch),
    });
    state
        .batches
        .lock()
        .expect("batch store poisoned")
        .insert(id, StoredBatch { tables, run: None });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunRequest {
    /// Role key to column name, or `null` to leave the role unbound.
    #[serde(default)]
    mapping: Option<BTreeMap<String, Option<String>>>,
    #[serde(default)]
    top_n: Option<i64>,
}

#[derive(Serialize)]
struct ResultRow<'a> {
    row_index: usize,
    source_file: &'a str,
    source_row: usize,
    classifiable: bool,
    result: &'a ClassificationResult,
}

#[derive(Serialize)]
struct RunResponse<'a> {
    batch_id: u64,
    top_n: TopN,
    mapping: &'a ColumnMapping,
    rows: usize,
    diagnostics: &'a Diagnostics,
    results: Vec<ResultRow<'a>>,
    /// `null` when the batch has no rows.
    summary: Option<CorpusSummary>,
}

async fn run_batch(State(state): State<Arc<AppState>>, Path(id): Path<u64>, body: Bytes) -> ApiResult<Response> {
    let req: RunRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RunRequest::default()
    } else {
        parse_json(&body)?
    };
    let top_n = top_n_or(req.top_n, state.default_top_n)?;
    let request = match req.mapping {
        None => MappingRequest::Auto,
        Some(m) => {
            let mut roles = BTreeMap::new();
            for (key, column) in m {
                let role: Role = key.parse().map_err(ApiError::bad_request)?;
                roles.insert(role, column);
            }
            MappingRequest::Manual(roles)
        }
    };
    let tables = {
        let store = state.batches.lock().expect("batch store poisoned");
        store.get(&id).ok_or(ApiError::unknown_batch(id))?.tables.clone()
    };
    let batch = Batch::from_tables(tables, &request).map_err(|e| ApiError::unprocessable(e.to_string()))?;

    let lib = state.lib.clone();
    let pool = state.pool.clone();
    let run = tokio::task::spawn_blocking(move || {
        let results = pipeline::classify_all(&lib, &batch.records, top_n, &pool);
        Run { top_n, batch, results }
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let run = Arc::new(run);

    if let Some(stored) = state.batches.lock().expect("batch store poisoned").get_mut(&id) {
        stored.run = Some(run.clone());
    }
    let body = RunResponse {
        batch_id: id,
        top_n: run.top_n,
        mapping: &run.batch.mapping,
        rows: run.results.len(),
        diagnostics: &run.batch.diagnostics,
        results: run
            .batch
            .records
            .iter()
            .zip(&run.results)
            .map(|(r, result)| ResultRow {
                row_index: r.index,
                source_file: &run.batch.sources[r.source].name,
                source_row: r.source_row + 1,
                classifiable: r.is_classifiable(),
                result,
            })
            .collect(),
        summary: analytics::summarize(&run.results).ok(),
    };
    Ok(Json(body).into_response())
}

fn last_run(state: &AppState, id: u64) -> ApiResult<Arc<Run>> {
    let store = state.batches.lock().expect("batch store poisoned");
    let stored = store.get(&id).ok_or(ApiError::unknown_batch(id))?;
    stored
        .run
        .clone()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, format!("batch {id} has not been run")))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export_batch(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format: ResultFormat = q
        .format
        .as_deref()
        .unwrap_or("csv")
        .parse()
        .map_err(ApiError::bad_request)?;
    let run = last_run(&state, id)?;
    let mut buf = Vec::new();
    export::write_results(format, &run.batch, &run.results, run.top_n, &mut buf)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    let (mime, file) = match format {
        ResultFormat::Csv => ("text/csv; charset=utf-8", "sdg_results.csv"),
        ResultFormat::JsonLines => ("application/x-ndjson", "sdg_results.jsonl"),
    };
    Ok((
        [
            (header::CONTENT_TYPE, mime.to_string()),
            (header::CONTENT_DISPOSITION, format!("attachment; filename=\"{file}\"")),
        ],
        buf,
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct SummaryQuery {
    format: Option<String>,
    top_n: Option<i64>,
}

async fn batch_summary(
    State(state): State<Arc<AppState>>,
    Path(id): Path<u64>,
    Query(q): Query<SummaryQuery>,
) -> ApiResult<Response> {
    let run = last_run(&state, id)?;
    let k = top_n_or(q.top_n, run.top_n)?;
    let summary = analytics::summarize_at(&run.results, k).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    let (format, mime) = match q.format.as_deref().unwrap_or("json") {
        "csv" => (ExportFormat::Csv, "text/csv; charset=utf-8"),
        "json" => (ExportFormat::Structured, "application/json"),
        other => {
            return Err(ApiError::bad_request(format!(
                "unknown format `{other}` (expected csv or json)"
            )))
        }
    };
    let text = analytics::export_summary(&summary, format).map_err(|e| ApiError::unprocessable(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, mime)], text).into_response())
}

#[derive(Serialize)]
struct SdgMeta {
    sdg: SdgId,
    name: &'static str,
    total: usize,
    /// Set when the goal has no sub-queries and can never be assigned.
    warning: bool,
}

async fn meta(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let lib = state.lib.library();
    let totals = lib.totals();
    let sdgs: Vec<SdgMeta> = SdgId::all()
        .map(|sdg| SdgMeta {
            sdg,
            name: sdg.name(),
            total: totals[sdg.index()],
            warning: totals[sdg.index()] == 0,
        })
        .collect();
    Json(serde_json::json!({
        "library": {
            "name": lib.name(),
            "version": lib.version(),
            "provenance": lib.provenance(),
            "subqueries": lib.len(),
        },
        "sdgs": sdgs,
        "warnings": lib.warnings().iter().map(ToString::to_string).collect::<Vec<_>>(),
        "default_top_n": state.default_top_n,
        "max_top_n": TopN::MAX,
        "build_version": env!("CARGO_PKG_VERSION"),
    }))
}
