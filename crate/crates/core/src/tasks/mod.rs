//! Per-instance and dataset-level task behaviour: attempt, error rate,
//! attention-shifting rate and sensitivity.

mod density;

pub(crate) use density::silverman;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use density::{metric_density, DENSITY_POINTS, MIN_BANDWIDTH};

use crate::error::{Error, Result};
use crate::graphs::GraphProvider;
use crate::judgment::{judge, JudgedMatchResult, MissingProbePolicy, ProbeLookup};
use crate::sg::{match_graphs, SgTuple, SynonymLexicon, TaskCategory, TaskVocab};
use crate::store::{DatasetManifest, EmbeddingTable};

/// Intermediate values for one ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerGtMetrics {
    pub err: f64,
    pub sf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskMetricsRecord {
    pub image_id: String,
    pub corruption_key: String,
    pub task: TaskCategory,
    /// 1 when the caption contains at least one tuple of this task.
    pub atm: u8,
    #[serde(default)]
    pub err: Option<f64>,
    #[serde(default)]
    pub sf: Option<f64>,
    pub sen: f64,
    /// Per ground truth, only when attempted.
    #[serde(default)]
    pub per_gt: Vec<PerGtMetrics>,
    /// Size of the AC set pooled over all ground truths (audit only).
    pub ac_union: usize,
}

impl TaskMetricsRecord {
    pub fn attempted(&self) -> bool {
        self.atm == 1
    }
}

/// Task metrics of one instance from its judged matches (one per ground truth).
///
/// The attempt flag does not depend on the ground truth, since TP ∪ FP_raw is
/// always the caption's own tuple set, so per-GT values are averaged plainly.
pub fn instance_task_metrics(
    image_id: &str,
    corruption_key: &str,
    judged: &[JudgedMatchResult],
) -> Result<Vec<TaskMetricsRecord>> {
    let first = judged
        .first()
        .ok_or_else(|| Error::input(format!("instance {image_id} has no judged ground truths")))?;
    let total = first.candidate_total;
    Ok(TaskCategory::ALL
        .into_iter()
        .map(|task| {
            let c0 = first.get(task);
            let attempted_count = c0.tp.len() + c0.fp_raw.len();
            let atm = attempted_count > 0;
            let sen = if total == 0 {
                0.0
            } else {
                attempted_count as f64 / total as f64
            };
            let per_gt: Vec<PerGtMetrics> = if atm {
                judged
                    .iter()
                    .map(|j| {
                        let c = j.get(task);
                        let err = c.fp_new.len() as f64 / (c.tp.len() + c.fp_raw.len()) as f64;
                        let denom = c.ac.len() + c.fn_.len();
                        let sf = if denom == 0 {
                            0.0
                        } else {
                            c.ac.len() as f64 / denom as f64
                        };
                        PerGtMetrics { err, sf }
                    })
                    .collect()
            } else {
                Vec::new()
            };
            let m = per_gt.len() as f64;
            let ac_union = judged
                .iter()
                .flat_map(|j| j.get(task).ac.iter())
                .collect::<BTreeSet<&SgTuple>>()
                .len();
            TaskMetricsRecord {
                image_id: image_id.to_owned(),
                corruption_key: corruption_key.to_owned(),
                task,
                atm: u8::from(atm),
                err: atm.then(|| per_gt.iter().map(|p| p.err).sum::<f64>() / m),
                sf: atm.then(|| per_gt.iter().map(|p| p.sf).sum::<f64>() / m),
                sen,
                per_gt,
                ac_union,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Densities {
    pub err: Option<Vec<f64>>,
    pub sf: Option<Vec<f64>>,
    pub sen: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetTaskSummary {
    pub task: TaskCategory,
    pub corruption_key: String,
    /// Total instances.
    pub n: usize,
    pub cnt: usize,
    /// Mean over attempting instances; absent when none attempt.
    pub err: Option<f64>,
    pub sf: Option<f64>,
    /// Sum over attempting instances divided by `n`.
    pub sen: f64,
    pub density: Densities,
}

/// Aggregate per-instance records of one corruption key. `n` is the number of
/// distinct instances in `records`.
pub fn dataset_summary(corruption_key: &str, records: &[TaskMetricsRecord]) -> Vec<DatasetTaskSummary> {
    let n = records
        .iter()
        .map(|r| r.image_id.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    TaskCategory::ALL
        .into_iter()
        .map(|task| {
            let att: Vec<&TaskMetricsRecord> = records
                .iter()
                .filter(|r| r.task == task && r.attempted())
                .collect();
            let cnt = att.len();
            let errs: Vec<f64> = att.iter().filter_map(|r| r.err).collect();
            let sfs: Vec<f64> = att.iter().filter_map(|r| r.sf).collect();
            let sens: Vec<f64> = att.iter().map(|r| r.sen).collect();
            let mean = |v: &[f64]| (cnt > 0).then(|| v.iter().sum::<f64>() / cnt as f64);
            DatasetTaskSummary {
                task,
                corruption_key: corruption_key.to_owned(),
                n,
                cnt,
                err: mean(&errs),
                sf: mean(&sfs),
                sen: if n == 0 { 0.0 } else { sens.iter().sum::<f64>() / n as f64 },
                density: Densities {
                    err: metric_density(&errs),
                    sf: metric_density(&sfs),
                    sen: metric_density(&sens),
                },
            }
        })
        .collect()
}

/// Everything the task stage produces for one corruption key.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskAnalysis {
    pub corruption_key: String,
    pub records: Vec<TaskMetricsRecord>,
    pub summaries: Vec<DatasetTaskSummary>,
    /// Judged matches per instance, one per ground truth.
    pub judged: BTreeMap<String, Vec<JudgedMatchResult>>,
}

pub struct JudgmentSetup<'a, P: ProbeLookup + Sync + ?Sized> {
    pub image_embeddings: &'a EmbeddingTable,
    pub probes: &'a P,
    pub threshold: f64,
    pub policy: MissingProbePolicy,
}

/// Match, judge and score every instance's caption under `key`. Judgment
/// always compares against the clean image's embedding (row `image_id`).
pub fn analyze_tasks<P: ProbeLookup + Sync + ?Sized>(
    manifest: &DatasetManifest,
    key: &str,
    graphs: &GraphProvider,
    lex: &SynonymLexicon,
    vocab: &TaskVocab,
    setup: &JudgmentSetup<'_, P>,
) -> Result<TaskAnalysis> {
    let per_instance: Vec<(String, Vec<JudgedMatchResult>, Vec<TaskMetricsRecord>)> = manifest
        .instances()
        .par_iter()
        .map(|inst| {
            let cand = graphs.candidate(key, inst)?;
            let image_vec = setup.image_embeddings.vector(&inst.image_id)?;
            let judged = graphs
                .references(inst)?
                .iter()
                .map(|r| {
                    let m = match_graphs(&cand, r, lex, vocab);
                    judge(&m, image_vec, setup.probes, setup.threshold, setup.policy)
                })
                .collect::<Result<Vec<_>>>()?;
            let records = instance_task_metrics(&inst.image_id, key, &judged)?;
            Ok((inst.image_id.clone(), judged, records))
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut judged = BTreeMap::new();
    for (id, j, r) in per_instance {
        judged.insert(id, j);
        records.extend(r);
    }
    let summaries = dataset_summary(key, &records);
    Ok(TaskAnalysis {
        corruption_key: key.to_owned(),
        records,
        summaries,
        judged,
    })
}
