//! Error-aware pattern discovery for one task: pairwise distances, density
//! clustering, a 2-D layout, per-cluster density grids and labels, and export
//! of analyst selections.

mod density;
mod distance;
mod export;
mod hdbscan;
mod labels;
mod mds;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use density::{density_grid, DensityGrid, GRID_SIZE};
pub use distance::{
    cosine_distance, distance_matrix, pair_distance, pair_terms, quality_delta, DistanceMatrix, DistanceTerms,
    EmbeddingTriple,
};
pub use export::{
    build_selection, export_selection, AugmentationEntry, AugmentationHeader, AugmentationManifest,
    AUGMENTATION_FORMAT, AUGMENTATION_VERSION,
};
pub use hdbscan::{cluster, ClusterParams, NOISE};
pub use labels::{centroid_label, task_element};
pub use mds::{layout_correlation, project_2d};

use crate::error::{Error, Result};
use crate::sg::{SceneGraph, TaskCategory, TaskVocab};
use crate::store::{read_text, EmbeddingTable, GT_KEY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub label: i32,
    pub size: usize,
    pub centroid_label: Option<String>,
    pub grid: DensityGrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordsSource {
    Mds,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternModel {
    pub task: TaskCategory,
    pub corruption_key: String,
    pub alpha: f64,
    pub params: ClusterParams,
    /// Attempting instances, in manifest order.
    pub ids: Vec<String>,
    pub distances: DistanceMatrix,
    pub labels: Vec<i32>,
    pub coords: Vec<[f64; 2]>,
    pub coords_source: CoordsSource,
    pub clusters: Vec<ClusterSummary>,
    /// Distance terms that fell back to maximal dissimilarity.
    pub zero_vector_terms: usize,
}

impl PatternModel {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn members(&self, label: i32) -> impl Iterator<Item = &str> {
        self.ids
            .iter()
            .zip(&self.labels)
            .filter(move |(_, &l)| l == label)
            .map(|(id, _)| id.as_str())
    }
}

/// One attempting instance: its embeddings and its caption's scene graph.
#[derive(Clone, Debug)]
pub struct DiscoveryItem {
    pub triple: EmbeddingTriple,
    pub graph: SceneGraph,
}

pub struct DiscoveryParams<'a> {
    pub alpha: f64,
    pub clustering: ClusterParams,
    pub vocab: &'a TaskVocab,
    /// Layout computed elsewhere (e.g. UMAP), used verbatim when given.
    pub external_coords: Option<&'a BTreeMap<String, [f64; 2]>>,
}

pub fn discover(task: TaskCategory, key: &str, items: &[DiscoveryItem], p: &DiscoveryParams<'_>) -> Result<PatternModel> {
    let triples: Vec<EmbeddingTriple> = items.iter().map(|i| i.triple.clone()).collect();
    let (distances, zero_vector_terms) = distance_matrix(&triples, p.alpha)?;
    if zero_vector_terms > 0 {
        log::warn!("{zero_vector_terms} distance term(s) involved zero embeddings");
    }
    let labels = cluster(&distances, &p.clustering)?;
    let ids: Vec<String> = triples.iter().map(|t| t.id.clone()).collect();

    let (coords, coords_source) = match p.external_coords {
        Some(ext) => {
            let missing: Vec<&str> = ids.iter().filter(|id| !ext.contains_key(*id)).map(String::as_str).collect();
            if !missing.is_empty() {
                return Err(Error::input(format!("external layout lacks ids: {}", missing.join(", "))));
            }
            (ids.iter().map(|id| ext[id]).collect(), CoordsSource::External)
        }
        None => (project_2d(&distances), CoordsSource::Mds),
    };

    let max_label = labels.iter().copied().max().unwrap_or(NOISE);
    let clusters = (0..=max_label)
        .map(|label| {
            let idx: Vec<usize> = (0..ids.len()).filter(|&i| labels[i] == label).collect();
            let pts: Vec<[f64; 2]> = idx.iter().map(|&i| coords[i]).collect();
            ClusterSummary {
                label,
                size: idx.len(),
                centroid_label: centroid_label(idx.iter().map(|&i| &items[i].graph), task, p.vocab),
                grid: density_grid(&pts).expect("clusters are non-empty"),
            }
        })
        .collect();

    Ok(PatternModel {
        task,
        corruption_key: key.to_owned(),
        alpha: p.alpha,
        params: p.clustering,
        ids,
        distances,
        labels,
        coords,
        coords_source,
        clusters,
        zero_vector_terms,
    })
}

/// Row id of a caption embedding.
pub fn caption_embedding_id(key: &str, image_id: &str) -> String {
    format!("{key}/{image_id}")
}

/// Row id of a ground-truth embedding.
pub fn gt_embedding_id(image_id: &str, j: usize) -> String {
    format!("{GT_KEY}/{image_id}/{j}")
}

/// Gather an instance's pooled embeddings. The image row `{key}/{id}` is
/// preferred, falling back to the clean image row `{id}`.
pub fn embedding_triple(
    image_id: &str,
    key: &str,
    ground_truths: usize,
    images: &EmbeddingTable,
    texts: &EmbeddingTable,
) -> Result<EmbeddingTriple> {
    let image = images
        .get(&caption_embedding_id(key, image_id))
        .or_else(|| images.get(image_id))
        .ok_or_else(|| Error::input(format!("no image embedding for {image_id}")))?;
    let caption = texts.vector(&caption_embedding_id(key, image_id))?;
    let gts = (0..ground_truths)
        .map(|j| texts.vector(&gt_embedding_id(image_id, j)).map(<[f32]>::to_vec))
        .collect::<Result<_>>()?;
    Ok(EmbeddingTriple {
        id: image_id.to_owned(),
        image: image.to_vec(),
        caption: caption.to_vec(),
        ground_truths: gts,
    })
}

#[derive(Deserialize)]
struct CoordRecord {
    id: String,
    x: f64,
    y: f64,
}

/// Externally computed layout: one `{id, x, y}` record per line.
pub fn load_external_coords(path: &Path) -> Result<BTreeMap<String, [f64; 2]>> {
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: CoordRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: n + 1,
            message: e.to_string(),
        })?;
        if !(r.x.is_finite() && r.y.is_finite()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: n + 1,
                message: "coordinates must be finite".into(),
            });
        }
        out.insert(r.id, [r.x, r.y]);
    }
    Ok(out)
}
