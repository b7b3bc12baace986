//! Loading and validation of every on-disk input, plus the results cache.
//!
//! Line-delimited formats open with a header record
//! `{"format": "<name>", "version": <n>}`.

mod cache;
mod config;
mod embeddings;
mod manifest;
mod scene_graphs;

pub use cache::ResultsCache;
pub use config::PipelineConfig;
pub use embeddings::{pool_max, EmbeddingTable};
pub use manifest::{DatasetManifest, Instance};
pub use scene_graphs::{SceneGraphRecord, SceneGraphStore, GT_KEY};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
}

pub(crate) fn header_line(format: &str, version: u32) -> String {
    serde_json::to_string(&Header {
        format: format.to_owned(),
        version,
    })
    .expect("header serialises")
}

pub(crate) fn check_header(path: &Path, line: Option<&str>, format: &str, version: u32) -> Result<()> {
    let line = line.ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        line: 1,
        message: "file is empty; expected a header record".into(),
    })?;
    let header: Header = serde_json::from_str(line).map_err(|e| Error::Parse {
        path: path.to_owned(),
        line: 1,
        message: format!("bad header record: {e}"),
    })?;
    if header.format != format || header.version != version {
        return Err(Error::Parse {
            path: path.to_owned(),
            line: 1,
            message: format!(
                "expected {format} v{version}, found {} v{}",
                header.format, header.version
            ),
        });
    }
    Ok(())
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
