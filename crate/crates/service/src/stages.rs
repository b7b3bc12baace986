//! Pipeline stages. Each stage reads its inputs from the session (and from
//! upstream stages through the results cache) and writes its result to the
//! cache under the session's config hash.

use std::fmt;

use corrobe_core::judgment::threshold_warning;
use corrobe_core::metrics::{evaluate, Evaluation};
use corrobe_core::patterns::{discover, embedding_triple, load_external_coords, DiscoveryItem, DiscoveryParams, PatternModel};
use corrobe_core::sg::TaskCategory;
use corrobe_core::store::EmbeddingTable;
use corrobe_core::tasks::{analyze_tasks, JudgmentSetup, TaskAnalysis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::session::Session;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Evaluate,
    AnalyzeTasks,
    Discover,
}

impl Stage {
    /// Directory name inside the results cache.
    pub fn cache_name(self) -> &'static str {
        match self {
            Stage::Evaluate => "metrics",
            Stage::AnalyzeTasks => "tasks",
            Stage::Discover => "patterns",
        }
    }

    /// The CLI command that produces this stage.
    pub fn command(self) -> &'static str {
        match self {
            Stage::Evaluate => "evaluate",
            Stage::AnalyzeTasks => "analyze-tasks",
            Stage::Discover => "discover",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.command())
    }
}

/// Outcome of discovery for one (key, task). `model` is `None` when no
/// instance attempted the task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternRecord {
    pub task: TaskCategory,
    pub corruption_key: String,
    pub model: Option<PatternModel>,
}

/// Pooled embedding tables used by judgment and discovery.
pub struct Embeddings {
    pub images: EmbeddingTable,
    pub texts: EmbeddingTable,
    pub probes: EmbeddingTable,
}

impl Embeddings {
    pub fn load(session: &Session) -> Result<Self> {
        Ok(Self {
            images: session.image_embeddings()?,
            texts: session.text_embeddings()?,
            probes: session.probe_embeddings()?,
        })
    }
}

/// `all` expands to every key with a caption for each instance; otherwise a
/// comma-separated list.
pub fn resolve_keys(session: &Session, spec: &str) -> Result<Vec<String>> {
    if spec.trim() == "all" {
        return Ok(session.manifest.complete_keys());
    }
    let keys: Vec<String> = spec.split(',').map(str::trim).filter(|k| !k.is_empty()).map(str::to_owned).collect();
    if keys.is_empty() {
        return Err(ServiceError::BadRequest("no corruption keys given".into()));
    }
    Ok(keys)
}

pub fn resolve_tasks(spec: &str) -> Result<Vec<TaskCategory>> {
    if spec.trim() == "all" {
        return Ok(TaskCategory::ALL.to_vec());
    }
    spec.split(',').map(|t| Ok(t.trim().parse()?)).collect()
}

pub fn pattern_cache_key(key: &str, task: TaskCategory) -> String {
    format!("{key}.{task}")
}

fn load_one<T: serde::de::DeserializeOwned>(session: &Session, stage: Stage, key: &str) -> Result<Option<T>> {
    let records = session.cache.get_records::<T>(stage.cache_name(), key, &session.config_hash)?;
    Ok(records.and_then(|r| r.into_iter().next()))
}

fn store_one<T: Serialize>(session: &Session, stage: Stage, key: &str, value: &T) -> Result<()> {
    Ok(session
        .cache
        .put_records(stage.cache_name(), key, &session.config_hash, std::slice::from_ref(value))?)
}

pub fn run_evaluate(session: &Session, key: &str) -> Result<Evaluation> {
    let eval = evaluate(&session.manifest, key, &session.graphs, &session.lexicon, &session.config.metrics)?;
    store_one(session, Stage::Evaluate, key, &eval)?;
    Ok(eval)
}

pub fn load_evaluation(session: &Session, key: &str) -> Result<Option<Evaluation>> {
    load_one(session, Stage::Evaluate, key)
}

pub fn run_analyze(session: &Session, key: &str, emb: &Embeddings) -> Result<TaskAnalysis> {
    if let Some(w) = threshold_warning(session.config.threshold) {
        log::warn!("{w}");
    }
    let setup = JudgmentSetup {
        image_embeddings: &emb.images,
        probes: &emb.probes,
        threshold: session.config.threshold,
        policy: session.config.missing_probe,
    };
    let analysis = analyze_tasks(&session.manifest, key, &session.graphs, &session.lexicon, &session.vocab, &setup)?;
    store_one(session, Stage::AnalyzeTasks, key, &analysis)?;
    Ok(analysis)
}

pub fn load_tasks(session: &Session, key: &str) -> Result<Option<TaskAnalysis>> {
    load_one(session, Stage::AnalyzeTasks, key)
}

pub fn require_tasks(session: &Session, key: &str) -> Result<TaskAnalysis> {
    load_tasks(session, key)?.ok_or_else(|| ServiceError::missing(Stage::AnalyzeTasks, key))
}

/// Cluster the instances that attempted `task` under `key`. Needs the task
/// stage for `key` to have run.
pub fn run_discover(session: &Session, key: &str, task: TaskCategory, emb: &Embeddings) -> Result<PatternRecord> {
    let analysis = require_tasks(session, key)?;
    let external = match &session.file.external_layout {
        Some(p) => Some(load_external_coords(&session.path(p))?),
        None => None,
    };
    let items = analysis
        .records
        .iter()
        .filter(|r| r.task == task && r.attempted())
        .map(|r| {
            let inst = session
                .manifest
                .get(&r.image_id)
                .ok_or_else(|| ServiceError::NotFound(format!("instance {} is not in the manifest", r.image_id)))?;
            Ok(DiscoveryItem {
                triple: embedding_triple(&r.image_id, key, inst.ground_truths.len(), &emb.images, &emb.texts)?,
                graph: session.graphs.candidate(key, inst)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let model = if items.is_empty() {
        None
    } else {
        let params = DiscoveryParams {
            alpha: session.config.alpha,
            clustering: session.config.clustering,
            vocab: &session.vocab,
            external_coords: external.as_ref(),
        };
        Some(discover(task, key, &items, &params)?)
    };
    let record = PatternRecord {
        task,
        corruption_key: key.to_owned(),
        model,
    };
    store_one(session, Stage::Discover, &pattern_cache_key(key, task), &record)?;
    Ok(record)
}

pub fn load_patterns(session: &Session, key: &str, task: TaskCategory) -> Result<Option<PatternRecord>> {
    load_one(session, Stage::Discover, &pattern_cache_key(key, task))
}
