use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{check_header, header_line, read_text};
use crate::error::{Error, Result};
use crate::sg::{GraphSource, SceneGraph, SgTuple};

const FORMAT: &str = "corrobe-scene-graphs";
const VERSION: u32 = 1;

/// `corruption_key` value that marks a ground-truth graph; `gt_index` then
/// says which ground truth.
pub const GT_KEY: &str = "gt";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneGraphRecord {
    pub id: String,
    pub corruption_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt_index: Option<usize>,
    pub tuples: Vec<SgTuple>,
}

/// Candidate graphs per (corruption key, instance) and reference graphs per
/// (instance, ground-truth index).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SceneGraphStore {
    candidates: BTreeMap<(String, String), SceneGraph>,
    references: BTreeMap<String, BTreeMap<usize, SceneGraph>>,
}

impl SceneGraphStore {
    pub fn insert_candidate(&mut self, key: &str, id: &str, graph: SceneGraph) {
        let graph = SceneGraph {
            source: GraphSource::Candidate,
            ..graph
        };
        self.candidates.insert((key.to_owned(), id.to_owned()), graph);
    }

    pub fn insert_reference(&mut self, id: &str, gt_index: usize, graph: SceneGraph) {
        let graph = SceneGraph {
            source: GraphSource::Reference,
            ..graph
        };
        self.references
            .entry(id.to_owned())
            .or_default()
            .insert(gt_index, graph);
    }

    pub fn candidate(&self, key: &str, id: &str) -> Option<&SceneGraph> {
        self.candidates.get(&(key.to_owned(), id.to_owned()))
    }

    /// Reference graphs ordered by ground-truth index.
    pub fn references(&self, id: &str) -> Option<Vec<&SceneGraph>> {
        self.references.get(id).map(|m| m.values().collect())
    }

    pub fn keys(&self) -> BTreeSet<&str> {
        self.candidates.keys().map(|(k, _)| k.as_str()).collect()
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut lines = text.lines();
        check_header(path, lines.next(), FORMAT, VERSION)?;
        let mut store = Self::default();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: n + 2,
                message,
            };
            let rec: SceneGraphRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            let source = if rec.corruption_key == GT_KEY {
                GraphSource::Reference
            } else {
                GraphSource::Candidate
            };
            let graph = SceneGraph::from_tuples(source, rec.tuples);
            match (source, rec.gt_index) {
                (GraphSource::Reference, Some(j)) => store.insert_reference(&rec.id, j, graph),
                (GraphSource::Reference, None) => {
                    return Err(err("ground-truth graph needs gt_index".into()))
                }
                (GraphSource::Candidate, None) => {
                    store.insert_candidate(&rec.corruption_key, &rec.id, graph)
                }
                (GraphSource::Candidate, Some(_)) => {
                    return Err(err("gt_index is only valid with corruption_key \"gt\"".into()))
                }
            }
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(path, &read_text(path)?)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = header_line(FORMAT, VERSION);
        out.push('\n');
        let mut push = |rec: SceneGraphRecord| {
            out.push_str(&serde_json::to_string(&rec).expect("record serialises"));
            out.push('\n');
        };
        for (id, gts) in &self.references {
            for (j, g) in gts {
                push(SceneGraphRecord {
                    id: id.clone(),
                    corruption_key: GT_KEY.to_owned(),
                    gt_index: Some(*j),
                    tuples: g.tuples.iter().cloned().collect(),
                });
            }
        }
        for ((key, id), g) in &self.candidates {
            push(SceneGraphRecord {
                id: id.clone(),
                corruption_key: key.clone(),
                gt_index: None,
                tuples: g.tuples.iter().cloned().collect(),
            });
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }
}
