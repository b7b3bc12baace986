use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Corruptor, CorruptionSpec, RgbImage};
use crate::error::{Error, Result};
use crate::store::DatasetManifest;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub image_id: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CorruptionRunReport {
    pub images: usize,
    pub specs: usize,
    pub files_written: usize,
    pub failures: Vec<ItemFailure>,
    pub wall_time_secs: f64,
}

/// `{output_dir}/{spec key}/{image_id}.png`
pub fn corrupted_image_path(output_dir: &Path, spec: &CorruptionSpec, image_id: &str) -> PathBuf {
    output_dir.join(spec.key()).join(format!("{image_id}.png"))
}

/// Write every (image, spec) pair under `output_dir`. Unreadable inputs are
/// recorded as failures and skipped; failing to write output aborts the run.
pub fn corrupt_dataset(
    corruptor: &Corruptor,
    manifest: &DatasetManifest,
    specs: &[CorruptionSpec],
    seed: u64,
    output_dir: &Path,
) -> Result<CorruptionRunReport> {
    let started = Instant::now();
    for spec in specs {
        let dir = output_dir.join(spec.key());
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }

    let outcomes: Vec<Result<std::result::Result<usize, ItemFailure>>> = manifest
        .instances()
        .par_iter()
        .map(|inst| {
            let image = match RgbImage::load(&inst.image_path) {
                Ok(img) if !img.is_empty() => img,
                Ok(_) => {
                    return Ok(Err(ItemFailure {
                        image_id: inst.image_id.clone(),
                        message: "image has zero size".into(),
                    }))
                }
                Err(e) => {
                    return Ok(Err(ItemFailure {
                        image_id: inst.image_id.clone(),
                        message: e.to_string(),
                    }))
                }
            };
            let mut written = 0;
            for spec in specs {
                let out = corruptor.corrupt(&image, spec, seed, &inst.image_id)?;
                out.save_png(&corrupted_image_path(output_dir, spec, &inst.image_id))?;
                written += 1;
            }
            Ok(Ok(written))
        })
        .collect();

    let mut files_written = 0;
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome? {
            Ok(n) => files_written += n,
            Err(f) => failures.push(f),
        }
    }
    failures.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    for f in &failures {
        log::warn!("skipping {}: {}", f.image_id, f.message);
    }

    Ok(CorruptionRunReport {
        images: manifest.len(),
        specs: specs.len(),
        files_written,
        failures,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
