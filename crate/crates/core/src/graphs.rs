//! Where scene graphs come from: ingested files or the template parser.

use crate::error::{Error, Result};
use crate::sg::{GraphSource, SceneGraph, TemplateParser};
use crate::store::{Instance, SceneGraphStore};

#[derive(Clone, Debug)]
pub enum GraphProvider {
    /// Parse captions and ground truths with the rule-based template grammar.
    Template(TemplateParser),
    /// Look graphs up in an ingested scene-graph file.
    Files(SceneGraphStore),
}

impl Default for GraphProvider {
    fn default() -> Self {
        GraphProvider::Template(TemplateParser::builtin())
    }
}

impl GraphProvider {
    pub fn candidate(&self, key: &str, inst: &Instance) -> Result<SceneGraph> {
        match self {
            GraphProvider::Template(p) => {
                let text = inst.caption(key).ok_or_else(|| {
                    Error::input(format!("instance {} has no caption for key {key}", inst.image_id))
                })?;
                Ok(p.parse(text))
            }
            GraphProvider::Files(store) => store.candidate(key, &inst.image_id).cloned().ok_or_else(|| {
                Error::input(format!(
                    "scene-graph file has no candidate graph for key {key}, instance {}",
                    inst.image_id
                ))
            }),
        }
    }

    /// One reference graph per ground truth, in ground-truth order.
    pub fn references(&self, inst: &Instance) -> Result<Vec<SceneGraph>> {
        match self {
            GraphProvider::Template(p) => Ok(inst
                .ground_truths
                .iter()
                .map(|gt| SceneGraph {
                    source: GraphSource::Reference,
                    ..p.parse(gt)
                })
                .collect()),
            GraphProvider::Files(store) => {
                let refs = store.references(&inst.image_id).unwrap_or_default();
                if refs.is_empty() {
                    return Err(Error::input(format!(
                        "scene-graph file has no reference graphs for instance {}",
                        inst.image_id
                    )));
                }
                Ok(refs.into_iter().cloned().collect())
            }
        }
    }
}
