#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use corrobe_core::synthetic::{fixture_cluster_params, SyntheticDataset, SEEDED_KEY};
use corrobe_service::api::{router, AppState};
use corrobe_service::session::{Session, SessionFile};
use corrobe_service::stages::{self, Embeddings};
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const SEED: u64 = 7;

/// Write the synthetic dataset under `root` and a session in `root/data`.
pub fn synth_session(root: &Path) -> (SyntheticDataset, Session) {
    let d = SyntheticDataset::generate(SEED).unwrap();
    let paths = d.write(&root.join("ds")).unwrap();
    let mut file = SessionFile::new(paths.manifest, paths.image_embeddings, paths.text_embeddings, paths.probe_embeddings);
    file.clustering = fixture_cluster_params();
    let data = root.join("data");
    file.write(&data).unwrap();
    (d, Session::open(&data).unwrap())
}

/// Run every stage for `clean` and the seeded key.
pub fn run_stages(session: &Session) {
    let emb = Embeddings::load(session).unwrap();
    for key in ["clean", SEEDED_KEY] {
        stages::run_evaluate(session, key).unwrap();
        stages::run_analyze(session, key, &emb).unwrap();
    }
    for task in corrobe_core::sg::TaskCategory::ALL {
        stages::run_discover(session, SEEDED_KEY, task, &emb).unwrap();
    }
}

pub fn app(session: Session) -> (Arc<AppState>, Router) {
    let state = AppState::new(session);
    (state.clone(), router(state, None))
}

pub async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, serde_json::Value) {
    let (status, bytes) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}

pub async fn post_json(app: &Router, uri: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
    let req = Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let (status, bytes) = send(app, req).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(serde_json::Value::Null))
}
