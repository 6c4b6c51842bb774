//! HTTP JSON API over a pair of indexes: recommendations, a judging queue
//! backed by an append-only ratings file, and training jobs that replace the
//! active weight config atomically.
//!
//! All routes live under `/api`; anything else is served from the static
//! directory when one is configured.

mod error;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tower_http::services::ServeDir;

use hetmatch::eval::{aggregate_labels, append_ratings, judging_pairs, read_ratings, JudgeRating};
use hetmatch::index::DocType;
use hetmatch::train::{run_job, LabeledPair, TrainJob, TrainMode};
use hetmatch::{Document, Index, Matcher64, Ranked64, TrainReport64, WeightConfig64};

pub use error::ApiError;

pub type ApiResult<T> = Result<T, ApiError>;

/// Where the service reads and writes its state.
#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub index_a: PathBuf,
    pub index_b: PathBuf,
    /// Active config; created with uniform unit weights if absent.
    pub weights: PathBuf,
    pub labels: PathBuf,
    pub static_dir: Option<PathBuf>,
    /// Seed for the random control pair in the judging queue.
    pub judging_seed: u64,
}

struct Active {
    config: WeightConfig64,
    queue: Vec<(String, String)>,
}

struct LabelLog {
    path: PathBuf,
    ratings: Vec<JudgeRating>,
    last_ts: i64,
}

pub struct AppState {
    a: Index,
    b: Index,
    active: RwLock<Arc<Active>>,
    labels: Mutex<LabelLog>,
    training: AtomicBool,
    weights_path: PathBuf,
    judging_seed: u64,
    static_dir: Option<PathBuf>,
}

impl AppState {
    pub fn open(opts: &ServiceOptions) -> hetmatch::Result<Self> {
        let a = Index::load_typed(&opts.index_a, DocType::A)?;
        let b = Index::load_typed(&opts.index_b, DocType::B)?;
        let config = if opts.weights.exists() {
            WeightConfig64::load(&opts.weights)?
        } else {
            let cfg = WeightConfig64::uniform(a.fields(), b.fields(), 1.0)?;
            write_atomic(&opts.weights, cfg.to_json_pretty().as_bytes())?;
            cfg
        };
        let ratings = read_ratings(&opts.labels)?;
        let last_ts = ratings.iter().map(|r| r.timestamp).max().unwrap_or(0);
        let state = AppState {
            a,
            b,
            active: RwLock::new(Arc::new(Active {
                config: config.clone(),
                queue: Vec::new(),
            })),
            labels: Mutex::new(LabelLog {
                path: opts.labels.clone(),
                ratings,
                last_ts,
            }),
            training: AtomicBool::new(false),
            weights_path: opts.weights.clone(),
            judging_seed: opts.judging_seed,
            static_dir: opts.static_dir.clone(),
        };
        let queue = judging_pairs(&state.matcher(), &config, state.judging_seed)?;
        *state.active.write().expect("lock") = Arc::new(Active { config, queue });
        Ok(state)
    }

    pub fn matcher(&self) -> Matcher64<'_> {
        Matcher64::new(&self.a, &self.b)
    }

    fn snapshot(&self) -> Arc<Active> {
        Arc::clone(&self.active.read().expect("config lock poisoned"))
    }

    pub fn active_config(&self) -> WeightConfig64 {
        self.snapshot().config.clone()
    }

    pub fn recommend(&self, a_id: &str, k: usize) -> ApiResult<Vec<Ranked64>> {
        let active = self.snapshot();
        Ok(self.matcher().rank(a_id, &active.config, k)?)
    }

    /// First queued pair this judge has not rated.
    pub fn next_pair(&self, judge: &str) -> ApiResult<Option<PairAssignment>> {
        let active = self.snapshot();
        let done: BTreeSet<(String, String)> = {
            let log = self.labels.lock().expect("labels lock poisoned");
            log.ratings
                .iter()
                .filter(|r| r.judge_id == judge)
                .map(|r| (r.a_id.clone(), r.b_id.clone()))
                .collect()
        };
        let Some((a_id, b_id)) = active.queue.iter().find(|p| !done.contains(*p)) else {
            return Ok(None);
        };
        let score = self.matcher().score(a_id, b_id, &active.config)?.score;
        let doc = |index: &Index, id: &str| {
            index
                .document(id)
                .map(|d| d.components.clone())
                .unwrap_or_default()
        };
        Ok(Some(PairAssignment {
            a_id: a_id.clone(),
            b_id: b_id.clone(),
            a_components: doc(&self.a, a_id),
            b_components: doc(&self.b, b_id),
            score,
        }))
    }

    /// Appends one rating durably, stamped with a server time that is
    /// strictly increasing within this process.
    pub fn submit(
        &self,
        judge: &str,
        a_id: &str,
        b_id: &str,
        rating: bool,
    ) -> ApiResult<JudgeRating> {
        if judge.is_empty() {
            return Err(ApiError::BadRequest("judge must be non-empty".into()));
        }
        if !self.a.contains(a_id) || !self.b.contains(b_id) {
            return Err(ApiError::NotFound(format!(
                "pair ({a_id}, {b_id}) not found"
            )));
        }
        let mut log = self.labels.lock().expect("labels lock poisoned");
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as i64)
            .unwrap_or(0);
        let record = JudgeRating {
            a_id: a_id.to_string(),
            b_id: b_id.to_string(),
            judge_id: judge.to_string(),
            rating,
            timestamp: now.max(log.last_ts + 1),
        };
        append_ratings(&log.path, std::slice::from_ref(&record))?;
        log.last_ts = record.timestamp;
        log.ratings.push(record.clone());
        Ok(record)
    }

    /// Raw contents of the ratings file.
    pub fn labels_file(&self) -> ApiResult<Vec<u8>> {
        let log = self.labels.lock().expect("labels lock poisoned");
        match std::fs::read(&log.path) {
            Ok(bytes) => Ok(bytes),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(e) => Err(ApiError::Internal(format!("{}: {e}", log.path.display()))),
        }
    }

    pub fn aggregated_pairs(&self) -> Vec<LabeledPair> {
        let log = self.labels.lock().expect("labels lock poisoned");
        aggregate_labels(&log.ratings)
            .iter()
            .map(LabeledPair::from)
            .collect()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.a.document(id).or_else(|| self.b.document(id))
    }

    /// Runs a job on the current labels and activates its best config.
    /// Only one job runs at a time; a second caller gets [`ApiError::Busy`].
    pub fn train(&self, job: &TrainJob<f64>) -> ApiResult<TrainReport64> {
        if self
            .training
            .compare_exchange(false, true, Ordering::AcqRel, Ordering::Acquire)
            .is_err()
        {
            return Err(ApiError::Busy);
        }
        let _guard = ResetOnDrop(&self.training);
        let pairs = self.aggregated_pairs();
        let init = self.active_config();
        let report = run_job(&self.matcher(), &pairs, &init, job)?;
        self.activate(report.best.clone())?;
        log::info!(
            "activated {:?} result: accuracy {:.1}%, loss {:.5}",
            report.mode,
            report.best_accuracy,
            report.best_loss
        );
        Ok(report)
    }

    /// Replaces the active config: history copy first, then an atomic
    /// rename over the weights file, then the in-memory swap.
    pub fn activate(&self, config: WeightConfig64) -> ApiResult<()> {
        let queue = judging_pairs(&self.matcher(), &config, self.judging_seed)?;
        let json = config.to_json_pretty();
        let history = history_dir(&self.weights_path);
        std::fs::create_dir_all(&history)
            .map_err(|e| ApiError::Internal(format!("{}: {e}", history.display())))?;
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0);
        write_atomic(&history.join(format!("{stamp}.json")), json.as_bytes())?;
        write_atomic(&self.weights_path, json.as_bytes())?;
        *self.active.write().expect("config lock poisoned") = Arc::new(Active { config, queue });
        Ok(())
    }
}

struct ResetOnDrop<'a>(&'a AtomicBool);

impl Drop for ResetOnDrop<'_> {
    fn drop(&mut self) {
        self.0.store(false, Ordering::Release);
    }
}

fn history_dir(weights: &Path) -> PathBuf {
    let stem = weights
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    weights.with_file_name(format!("{stem}.history"))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> hetmatch::Result<()> {
    let io = |e| hetmatch::Error::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let tmp = path.with_extension("tmp");
    let mut f = std::fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAssignment {
    pub a_id: String,
    pub b_id: String,
    pub a_components: BTreeMap<String, String>,
    pub b_components: BTreeMap<String, String>,
    pub score: f64,
}

#[derive(Deserialize)]
struct MatchQuery {
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    3
}

#[derive(Deserialize)]
struct JudgeQuery {
    #[serde(default)]
    judge: String,
}

#[derive(Deserialize)]
struct LabelRequest {
    judge: String,
    a_id: String,
    b_id: String,
    rating: Value,
}

#[derive(Deserialize)]
struct TrainRequest {
    mode: TrainMode,
    #[serde(default)]
    params: Value,
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    let api = Router::new()
        .route("/match/{a_id}", get(match_handler))
        .route("/pairs/next", get(next_pair_handler))
        .route("/labels", post(post_label).get(get_labels))
        .route("/config", get(get_config))
        .route("/train", post(train_handler))
        .route("/docs/{id}", get(get_doc));
    let app = Router::new().nest("/api", api);
    let app = match &state.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(placeholder)),
    };
    app.with_state(state)
}

async fn placeholder() -> Html<&'static str> {
    Html("<!doctype html><title>hetmatch</title><p>No judge UI bundle configured. The JSON API is under <code>/api</code>.</p>")
}

async fn match_handler(
    State(state): State<Shared>,
    UrlPath(a_id): UrlPath<String>,
    Query(q): Query<MatchQuery>,
) -> ApiResult<Json<Vec<Ranked64>>> {
    Ok(Json(state.recommend(&a_id, q.k)?))
}

async fn next_pair_handler(
    State(state): State<Shared>,
    Query(q): Query<JudgeQuery>,
) -> ApiResult<Response> {
    if q.judge.is_empty() {
        return Err(ApiError::BadRequest(
            "query parameter `judge` is required".into(),
        ));
    }
    Ok(match state.next_pair(&q.judge)? {
        Some(p) => Json(p).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn post_label(
    State(state): State<Shared>,
    Json(req): Json<LabelRequest>,
) -> ApiResult<Response> {
    let rating = match req.rating.as_i64() {
        Some(0) => false,
        Some(1) => true,
        _ => {
            return Err(ApiError::BadRequest(format!(
                "rating must be 0 or 1, got {}",
                req.rating
            )))
        }
    };
    let record =
        tokio::task::spawn_blocking(move || state.submit(&req.judge, &req.a_id, &req.b_id, rating))
            .await
            .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(record)).into_response())
}

async fn get_labels(State(state): State<Shared>) -> ApiResult<Response> {
    let body = state.labels_file()?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

async fn get_config(State(state): State<Shared>) -> Json<WeightConfig64> {
    Json(state.active_config())
}

async fn train_handler(
    State(state): State<Shared>,
    Json(req): Json<TrainRequest>,
) -> ApiResult<Json<TrainReport64>> {
    let job = TrainJob::from_params(req.mode, req.params)?;
    let report = tokio::task::spawn_blocking(move || state.train(&job))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok(Json(report))
}

async fn get_doc(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<Document>> {
    state
        .document(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("document `{id}` not found")))
}

/// Serves until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}

#[cfg(test)]
mod tests {
    use super::*;
    use hetmatch::eval::{synth_corpus, SynthParams};
    use hetmatch::textpipe::Pipeline;

    #[test]
    fn second_job_is_rejected_while_one_runs() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = synth_corpus(&SynthParams {
            n_a: 3,
            n_b: 3,
            planted_pairs: 2,
            ..SynthParams::default()
        })
        .unwrap();
        let a = Index::from_documents(DocType::A, Pipeline::default(), corpus.articles).unwrap();
        let b = Index::from_documents(DocType::B, Pipeline::default(), corpus.videos).unwrap();
        a.save(&dir.path().join("a")).unwrap();
        b.save(&dir.path().join("b")).unwrap();
        let state = AppState::open(&ServiceOptions {
            index_a: dir.path().to_path_buf(),
            index_b: dir.path().to_path_buf(),
            weights: dir.path().join("w.json"),
            labels: dir.path().join("l.jsonl"),
            static_dir: None,
            judging_seed: 0,
        })
        .unwrap();
        state.submit("j", "a000", "b000", true).unwrap();
        let job = TrainJob::from_params(TrainMode::Sgd, Value::Null).unwrap();

        state.training.store(true, Ordering::SeqCst);
        let err = state.train(&job).unwrap_err();
        assert_eq!(err.status(), StatusCode::CONFLICT);

        state.training.store(false, Ordering::SeqCst);
        state.train(&job).unwrap();
        assert!(!state.training.load(Ordering::SeqCst));
    }
}
