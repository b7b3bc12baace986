//! HTTP API over cached pipeline results. Every GET is a read of the cache
//! and the session; only `POST /selection/export` writes.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use corrobe_core::corruption::{enumerate_corruptions, CorruptionKind, CorruptionSpec, CLEAN_KEY};
use corrobe_core::metrics::{Metric, MetricReport, PerformanceCurve};
use corrobe_core::patterns::{export_selection, DensityGrid, NOISE};
use corrobe_core::sg::{canonicalize, categorize, SceneGraph, SgTuple, TaskCategory};
use corrobe_core::tasks::{DatasetTaskSummary, TaskMetricsRecord};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tower_http::services::ServeDir;

use crate::error::{Result, ServiceError};
use crate::session::{Session, EXPORT_DIR};
use crate::stages::{load_evaluation, load_patterns, load_tasks, Stage};

/// Reference values from a large-scale captioning study, kept only so the
/// dashboard can be exercised with realistic magnitudes. Never recomputed.
const DISPLAY_FIXTURE: &str = include_str!("../fixtures/display.json");

pub struct AppState {
    pub session: Session,
    /// Serializes writes of selection exports.
    export_lock: Mutex<()>,
}

impl AppState {
    pub fn new(session: Session) -> Arc<Self> {
        Arc::new(Self {
            session,
            export_lock: Mutex::new(()),
        })
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/corruptions", get(corruptions))
        .route("/curves", get(curves))
        .route("/tasks", get(tasks))
        .route("/projection", get(projection))
        .route("/instance", get(instance))
        .route("/images/{key}/{id}", get(image))
        .route("/selection/export", post(export))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Bind `addr` and serve until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let app = router(state, static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) | ServiceError::MissingStage { .. } => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) | ServiceError::Core(corrobe_core::Error::Input(_)) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServiceError>;

fn required<'a>(v: &'a Option<String>, name: &str) -> Result<&'a str> {
    v.as_deref()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ServiceError::BadRequest(format!("missing query parameter `{name}`")))
}

fn parse_key(key: &str) -> Result<CorruptionSpec> {
    key.parse()
        .map_err(|_| ServiceError::NotFound(format!("unknown corruption key {key:?}")))
}

fn parse_task(task: &str) -> Result<TaskCategory> {
    task.parse().map_err(|_| ServiceError::NotFound(format!("unknown task {task:?}")))
}

fn display_fixture(section: &str) -> Value {
    let v: Value = serde_json::from_str(DISPLAY_FIXTURE).expect("display fixture is valid JSON");
    json!({
        "reproducible": v["reproducible"],
        "note": v["note"],
        section: v[section],
    })
}

// ---- /corruptions ---------------------------------------------------------

#[derive(Serialize)]
struct CorruptionEntry {
    key: String,
    kind: Option<CorruptionKind>,
    severity: u8,
    /// Every instance has a caption under this key.
    available: bool,
    evaluated: bool,
    tasks_analyzed: bool,
}

#[derive(Serialize)]
struct CorruptionsPayload {
    config_hash: String,
    count: usize,
    entries: Vec<CorruptionEntry>,
}

async fn corruptions(State(st): State<Arc<AppState>>) -> ApiResult<CorruptionsPayload> {
    let s = &st.session;
    let captions: HashSet<String> = s.manifest.complete_keys().into_iter().collect();
    let evaluated: HashSet<String> = s.cache.keys(Stage::Evaluate.cache_name(), &s.config_hash)?.into_iter().collect();
    let analyzed: HashSet<String> = s.cache.keys(Stage::AnalyzeTasks.cache_name(), &s.config_hash)?.into_iter().collect();
    let entries: Vec<CorruptionEntry> = enumerate_corruptions()
        .into_iter()
        .map(|spec| {
            let key = spec.key();
            CorruptionEntry {
                kind: spec.kind(),
                severity: spec.severity(),
                available: captions.contains(&key),
                evaluated: evaluated.contains(&key),
                tasks_analyzed: analyzed.contains(&key),
                key,
            }
        })
        .collect();
    Ok(Json(CorruptionsPayload {
        config_hash: s.config_hash.clone(),
        count: entries.len(),
        entries,
    }))
}

// ---- /curves --------------------------------------------------------------

#[derive(Deserialize)]
struct CurvesQuery {
    kind: Option<String>,
    fixture: Option<String>,
}

#[derive(Serialize)]
struct CurvesPayload {
    kind: CorruptionKind,
    severities: Vec<u8>,
    /// Keys whose metrics are cached; other points are null.
    computed: Vec<String>,
    meteor_variant: &'static str,
    curve: PerformanceCurve,
}

async fn curves(State(st): State<Arc<AppState>>, Query(q): Query<CurvesQuery>) -> Result<Response> {
    let kind_str = required(&q.kind, "kind")?;
    let kind: CorruptionKind = kind_str
        .parse()
        .map_err(|_| ServiceError::NotFound(format!("unknown corruption kind {kind_str:?}")))?;
    if q.fixture.as_deref() == Some("display") {
        return Ok(Json(display_fixture("curves")).into_response());
    }
    let mut corpus: BTreeMap<String, MetricReport> = BTreeMap::new();
    for severity in 0..=corrobe_core::corruption::MAX_SEVERITY {
        let key = CorruptionSpec::new(kind, severity)?.key();
        if let Some(e) = load_evaluation(&st.session, &key)? {
            corpus.insert(key, e.corpus);
        }
    }
    Ok(Json(CurvesPayload {
        kind,
        severities: (0..=corrobe_core::corruption::MAX_SEVERITY).collect(),
        computed: corpus.keys().cloned().collect(),
        meteor_variant: "lite",
        curve: PerformanceCurve::assemble(kind, &corpus),
    })
    .into_response())
}

// ---- /tasks ---------------------------------------------------------------

#[derive(Deserialize)]
struct KeyQuery {
    key: Option<String>,
    fixture: Option<String>,
}

#[derive(Serialize)]
struct TaskPair {
    task: TaskCategory,
    corrupted: DatasetTaskSummary,
    clean: DatasetTaskSummary,
}

async fn tasks(State(st): State<Arc<AppState>>, Query(q): Query<KeyQuery>) -> Result<Response> {
    let key = required(&q.key, "key")?;
    parse_key(key)?;
    if q.fixture.as_deref() == Some("display") {
        return Ok(Json(display_fixture("tasks")).into_response());
    }
    let corrupted = load_tasks(&st.session, key)?;
    let clean = load_tasks(&st.session, CLEAN_KEY)?;
    let (Some(corrupted), Some(clean)) = (corrupted.as_ref(), clean.as_ref()) else {
        let missing: Vec<&str> = [(key, &corrupted), (CLEAN_KEY, &clean)]
            .into_iter()
            .filter(|(_, a)| a.is_none())
            .map(|(k, _)| k)
            .collect();
        return Ok(Json(json!({
            "status": "not_computed",
            "key": key,
            "missing": missing,
            "stage": Stage::AnalyzeTasks.command(),
        }))
        .into_response());
    };
    let find = |summaries: &[DatasetTaskSummary], t: TaskCategory| summaries.iter().find(|s| s.task == t).cloned();
    let pairs: Vec<TaskPair> = TaskCategory::ALL
        .into_iter()
        .filter_map(|t| {
            Some(TaskPair {
                task: t,
                corrupted: find(&corrupted.summaries, t)?,
                clean: find(&clean.summaries, t)?,
            })
        })
        .collect();
    Ok(Json(json!({
        "status": "ok",
        "key": key,
        "clean_key": CLEAN_KEY,
        "tasks": pairs,
    }))
    .into_response())
}

// ---- /projection ----------------------------------------------------------

#[derive(Deserialize)]
struct ProjectionQuery {
    key: Option<String>,
    task: Option<String>,
}

/// One scatterplot point with its tooltip fields.
#[derive(Serialize)]
struct ProjectionPoint {
    image_id: String,
    x: f64,
    y: f64,
    label: i32,
    outlier: bool,
    error_rate: Option<f64>,
    shifting_rate: Option<f64>,
    sensitivity: f64,
}

#[derive(Serialize)]
struct ProjectionCluster {
    label: i32,
    size: usize,
    centroid_label: Option<String>,
    grid: DensityGrid,
}

async fn projection(State(st): State<Arc<AppState>>, Query(q): Query<ProjectionQuery>) -> Result<Response> {
    let key = required(&q.key, "key")?;
    parse_key(key)?;
    let task = parse_task(required(&q.task, "task")?)?;
    let Some(record) = load_patterns(&st.session, key, task)? else {
        return Ok(Json(json!({
            "status": "not_computed",
            "key": key,
            "task": task,
            "stage": Stage::Discover.command(),
        }))
        .into_response());
    };
    let Some(model) = record.model else {
        return Ok(Json(json!({
            "status": "empty",
            "key": key,
            "task": task,
            "message": "no instance attempted this task",
            "points": [],
            "clusters": [],
        }))
        .into_response());
    };
    let analysis = load_tasks(&st.session, key)?.ok_or_else(|| ServiceError::missing(Stage::AnalyzeTasks, key))?;
    let by_id: BTreeMap<&str, &TaskMetricsRecord> = analysis
        .records
        .iter()
        .filter(|r| r.task == task)
        .map(|r| (r.image_id.as_str(), r))
        .collect();
    let points: Vec<ProjectionPoint> = model
        .ids
        .iter()
        .zip(&model.coords)
        .zip(&model.labels)
        .map(|((id, c), &label)| {
            let r = by_id.get(id.as_str());
            ProjectionPoint {
                image_id: id.clone(),
                x: c[0],
                y: c[1],
                label,
                outlier: label == NOISE,
                error_rate: r.and_then(|r| r.err),
                shifting_rate: r.and_then(|r| r.sf),
                sensitivity: r.map_or(0.0, |r| r.sen),
            }
        })
        .collect();
    let clusters: Vec<ProjectionCluster> = model
        .clusters
        .into_iter()
        .map(|c| ProjectionCluster {
            label: c.label,
            size: c.size,
            centroid_label: c.centroid_label,
            grid: c.grid,
        })
        .collect();
    Ok(Json(json!({
        "status": "ok",
        "key": key,
        "task": task,
        "alpha": model.alpha,
        "params": model.params,
        "coords_source": model.coords_source,
        "noise_label": NOISE,
        "zero_vector_terms": model.zero_vector_terms,
        "points": points,
        "clusters": clusters,
    }))
    .into_response())
}

// ---- /instance ------------------------------------------------------------

#[derive(Deserialize)]
struct InstanceQuery {
    id: Option<String>,
    key: Option<String>,
}

#[derive(Serialize)]
struct ImageRef {
    url: String,
    available: bool,
}

#[derive(Serialize)]
struct AxisElement {
    tuple: SgTuple,
    text: String,
    tasks: BTreeSet<TaskCategory>,
    /// Share of ground truths containing this element (drives tag colour).
    gt_frequency: f64,
    matched: bool,
}

#[derive(Serialize)]
struct GtCard {
    index: usize,
    text: String,
    elements: Vec<AxisElement>,
}

#[derive(Serialize)]
struct LinkEdge {
    layer: &'static str,
    element: usize,
    gt: usize,
}

#[derive(Serialize)]
struct TaskValues {
    task: TaskCategory,
    corrupted: Option<InstanceTaskValues>,
    clean: Option<InstanceTaskValues>,
}

#[derive(Serialize)]
struct InstanceTaskValues {
    attempted: bool,
    error_rate: Option<f64>,
    shifting_rate: Option<f64>,
    sensitivity: f64,
}

#[derive(Serialize)]
struct RadarPair {
    metric: Metric,
    corrupted: f64,
    clean: f64,
}

fn elements_of(g: &SceneGraph, refs: &[SceneGraph], st: &AppState) -> Vec<AxisElement> {
    g.iter()
        .map(|t| {
            let hits = refs.iter().filter(|r| r.contains(t)).count();
            AxisElement {
                tuple: t.clone(),
                text: t.parts().join(" "),
                tasks: categorize(t, &st.session.vocab),
                gt_frequency: if refs.is_empty() { 0.0 } else { hits as f64 / refs.len() as f64 },
                matched: hits > 0,
            }
        })
        .collect()
}

fn links(layer: &'static str, g: &SceneGraph, refs: &[SceneGraph]) -> Vec<LinkEdge> {
    g.iter()
        .enumerate()
        .flat_map(|(i, t)| {
            refs.iter()
                .enumerate()
                .filter(move |(_, r)| r.contains(t))
                .map(move |(j, _)| LinkEdge { layer, element: i, gt: j })
        })
        .collect()
}

fn image_available(st: &AppState, key: &str, id: &str) -> bool {
    image_path(st, key, id).is_ok_and(|p| p.is_file())
}

fn image_path(st: &AppState, key: &str, id: &str) -> Result<PathBuf> {
    let s = &st.session;
    let inst = s
        .manifest
        .get(id)
        .ok_or_else(|| ServiceError::NotFound(format!("unknown instance {id:?}")))?;
    if key == CLEAN_KEY {
        return Ok(inst.image_path.clone());
    }
    parse_key(key)?;
    let dir = s
        .file
        .corrupted_images
        .as_ref()
        .ok_or_else(|| ServiceError::NotFound("no corrupted images registered; run `corrobe corrupt`".into()))?;
    Ok(s.path(dir).join(key).join(format!("{id}.png")))
}

async fn instance(State(st): State<Arc<AppState>>, Query(q): Query<InstanceQuery>) -> Result<Response> {
    let id = required(&q.id, "id")?;
    let key = required(&q.key, "key")?;
    parse_key(key)?;
    let s = &st.session;
    let inst = s
        .manifest
        .get(id)
        .ok_or_else(|| ServiceError::NotFound(format!("unknown instance {id:?}")))?;
    if inst.caption(key).is_none() && !matches!(s.graphs, corrobe_core::graphs::GraphProvider::Files(_)) {
        return Err(ServiceError::NotFound(format!("instance {id} has no caption for {key}")));
    }

    let canon = |g: SceneGraph| canonicalize(&g, &s.lexicon);
    let refs: Vec<SceneGraph> = s.graphs.references(inst)?.into_iter().map(canon).collect();
    let corrupted = canon(s.graphs.candidate(key, inst)?);
    let clean = canon(s.graphs.candidate(CLEAN_KEY, inst)?);

    let gt_cards: Vec<GtCard> = refs
        .iter()
        .enumerate()
        .map(|(j, g)| GtCard {
            index: j,
            text: inst.ground_truths.get(j).cloned().unwrap_or_default(),
            elements: elements_of(g, &refs, &st),
        })
        .collect();
    let mut edges = links("corrupted", &corrupted, &refs);
    edges.extend(links("clean", &clean, &refs));

    let task_records = |k: &str| -> Result<Option<Vec<TaskMetricsRecord>>> {
        Ok(load_tasks(s, k)?.map(|a| a.records.into_iter().filter(|r| r.image_id == id).collect()))
    };
    let (rec_key, rec_clean) = (task_records(key)?, task_records(CLEAN_KEY)?);
    let values = |recs: &Option<Vec<TaskMetricsRecord>>, t: TaskCategory| {
        recs.as_ref()?.iter().find(|r| r.task == t).map(|r| InstanceTaskValues {
            attempted: r.attempted(),
            error_rate: r.err,
            shifting_rate: r.sf,
            sensitivity: r.sen,
        })
    };
    let task_values: Vec<TaskValues> = TaskCategory::ALL
        .into_iter()
        .map(|t| TaskValues {
            task: t,
            corrupted: values(&rec_key, t),
            clean: values(&rec_clean, t),
        })
        .collect();

    let instance_report = |k: &str| -> Result<Option<MetricReport>> {
        Ok(load_evaluation(s, k)?
            .and_then(|e| e.instances.into_iter().find(|r| r.image_id.as_deref() == Some(id))))
    };
    let radar: Option<Vec<RadarPair>> = match (instance_report(key)?, instance_report(CLEAN_KEY)?) {
        (Some(c), Some(k)) => Some(
            Metric::ALL
                .into_iter()
                .map(|m| RadarPair {
                    metric: m,
                    corrupted: c.get(m),
                    clean: k.get(m),
                })
                .collect(),
        ),
        _ => None,
    };

    Ok(Json(json!({
        "image_id": id,
        "key": key,
        "images": {
            "clean": ImageRef { url: format!("/images/{CLEAN_KEY}/{id}"), available: image_available(&st, CLEAN_KEY, id) },
            "corrupted": ImageRef { url: format!("/images/{key}/{id}"), available: image_available(&st, key, id) },
        },
        "captions": { "corrupted": inst.caption(key), "clean": inst.caption(CLEAN_KEY) },
        "axis": {
            "corrupted": elements_of(&corrupted, &refs, &st),
            "ground_truths": gt_cards,
            "clean": elements_of(&clean, &refs, &st),
            "links": edges,
        },
        "tasks": task_values,
        "radar": radar,
    }))
    .into_response())
}

async fn image(State(st): State<Arc<AppState>>, UrlPath((key, id)): UrlPath<(String, String)>) -> Result<Response> {
    let id = id.strip_suffix(".png").unwrap_or(&id);
    let path = image_path(&st, &key, id)?;
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|_| ServiceError::NotFound(format!("image {} is not available", path.display())))?;
    let mime = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "image/png",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

// ---- /selection/export ----------------------------------------------------

#[derive(Deserialize)]
pub struct ExportRequest {
    pub ids: Vec<String>,
    pub key: String,
    pub task: String,
}

#[derive(Serialize, Deserialize)]
pub struct ExportResponse {
    pub path: PathBuf,
    pub count: usize,
    pub duplicates: Vec<String>,
}

/// File name derived from the selection, so re-exporting the same ids
/// overwrites rather than accumulates.
fn export_file_name(key: &str, task: TaskCategory, ids: &[String]) -> String {
    let mut sorted: Vec<&str> = ids.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.dedup();
    let digest = Sha256::new().chain_update(sorted.join("\n").as_bytes()).finalize();
    format!("{key}-{task}-{}.jsonl", &hex::encode(digest)[..12])
}

async fn export(State(st): State<Arc<AppState>>, Json(req): Json<ExportRequest>) -> ApiResult<ExportResponse> {
    parse_key(&req.key)?;
    let task = parse_task(&req.task)?;
    if req.ids.is_empty() {
        return Err(ServiceError::BadRequest("selection is empty".into()));
    }
    let s = &st.session;
    let record = load_patterns(s, &req.key, task)?.ok_or_else(|| ServiceError::missing(Stage::Discover, &req.key))?;
    let model = record
        .model
        .ok_or_else(|| ServiceError::BadRequest(format!("no instance attempted {task} under {}", req.key)))?;
    let path = s.data_dir.join(EXPORT_DIR).join(export_file_name(&req.key, task, &req.ids));
    let manifest = {
        let _guard = st.export_lock.lock().unwrap_or_else(|e| e.into_inner());
        export_selection(&model, &req.ids, &s.config_hash, &path)?
    };
    log::info!("exported {} ids to {}", manifest.entries.len(), path.display());
    Ok(Json(ExportResponse {
        path,
        count: manifest.entries.len(),
        duplicates: manifest.duplicates,
    }))
}
