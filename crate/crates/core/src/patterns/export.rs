use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PatternModel;
use crate::error::{Error, Result};
use crate::sg::TaskCategory;

pub const AUGMENTATION_FORMAT: &str = "corrobe-augmentation";
pub const AUGMENTATION_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationHeader {
    pub format: String,
    pub version: u32,
    pub task: TaskCategory,
    pub corruption_key: String,
    pub alpha: f64,
    pub config_hash: String,
    pub count: usize,
    /// Selected instances per cluster label.
    pub cluster_counts: BTreeMap<i32, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationEntry {
    pub image_id: String,
    pub corruption_key: String,
    pub task: TaskCategory,
    pub cluster_label: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationManifest {
    pub header: AugmentationHeader,
    pub entries: Vec<AugmentationEntry>,
    /// Ids that appeared more than once in the request.
    #[serde(skip)]
    pub duplicates: Vec<String>,
}

impl AugmentationManifest {
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialises");
        out.push('\n');
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("entry serialises"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: AugmentationHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::input("augmentation manifest is empty"))?,
        )?;
        if header.format != AUGMENTATION_FORMAT || header.version != AUGMENTATION_VERSION {
            return Err(Error::input(format!(
                "unsupported augmentation manifest {} v{}",
                header.format, header.version
            )));
        }
        let entries = lines.map(serde_json::from_str).collect::<Result<_, _>>()?;
        Ok(Self {
            header,
            entries,
            duplicates: Vec::new(),
        })
    }
}

/// Build the manifest for analyst-selected ids. Duplicates are dropped
/// (first occurrence wins, reported in `duplicates`); ids outside the model
/// are an error.
pub fn build_selection(model: &PatternModel, ids: &[String], config_hash: &str) -> Result<AugmentationManifest> {
    if ids.is_empty() {
        return Err(Error::input("selection is empty"));
    }
    let unknown: Vec<&str> = ids
        .iter()
        .filter(|id| model.index_of(id).is_none())
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if !unknown.is_empty() {
        return Err(Error::input(format!(
            "ids not in the pattern model for {}/{}: {}",
            model.corruption_key,
            model.task,
            unknown.join(", ")
        )));
    }
    let mut seen = BTreeSet::new();
    let mut duplicates = BTreeSet::new();
    let mut entries = Vec::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            duplicates.insert(id.clone());
            continue;
        }
        let i = model.index_of(id).expect("checked above");
        entries.push(AugmentationEntry {
            image_id: id.clone(),
            corruption_key: model.corruption_key.clone(),
            task: model.task,
            cluster_label: model.labels[i],
        });
    }
    if !duplicates.is_empty() {
        log::warn!("dropped duplicate ids from selection: {duplicates:?}");
    }
    let mut cluster_counts = BTreeMap::new();
    for e in &entries {
        *cluster_counts.entry(e.cluster_label).or_default() += 1;
    }
    Ok(AugmentationManifest {
        header: AugmentationHeader {
            format: AUGMENTATION_FORMAT.into(),
            version: AUGMENTATION_VERSION,
            task: model.task,
            corruption_key: model.corruption_key.clone(),
            alpha: model.alpha,
            config_hash: config_hash.to_owned(),
            count: entries.len(),
            cluster_counts,
        },
        entries,
        duplicates: duplicates.into_iter().collect(),
    })
}

/// [`build_selection`] and write the result to `out_path` atomically.
pub fn export_selection(
    model: &PatternModel,
    ids: &[String],
    config_hash: &str,
    out_path: &Path,
) -> Result<AugmentationManifest> {
    let manifest = build_selection(model, ids, config_hash)?;
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = out_path.with_extension("jsonl.tmp");
    let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(manifest.to_jsonl().as_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, out_path).map_err(|e| Error::io(out_path, e))?;
    Ok(manifest)
}
