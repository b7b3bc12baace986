use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{check_header, header_line, read_text};
use crate::corruption::{CorruptionSpec, CLEAN_KEY};
use crate::error::{Error, Result};

const FORMAT: &str = "corrobe-manifest";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    image_id: String,
    image_path: String,
    ground_truths: Vec<String>,
    captions: BTreeMap<String, String>,
}

/// One image with its references and the model's captions per corruption key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub image_id: String,
    /// Path as written in the manifest.
    pub image_path_raw: String,
    /// Resolved against the manifest's directory.
    pub image_path: PathBuf,
    pub ground_truths: Vec<String>,
    pub captions: BTreeMap<String, String>,
}

impl Instance {
    pub fn caption(&self, key: &str) -> Option<&str> {
        self.captions.get(key).map(String::as_str)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    instances: Vec<Instance>,
    index: HashMap<String, usize>,
    warnings: Vec<String>,
}

impl DatasetManifest {
    /// Validate instances: unique ids, at least one ground truth, a `clean` caption.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let mut index = HashMap::new();
        let mut dups = Vec::new();
        for (i, inst) in instances.iter().enumerate() {
            validate_instance(inst).map_err(Error::Input)?;
            if index.insert(inst.image_id.clone(), i).is_some() {
                dups.push(inst.image_id.clone());
            }
        }
        if !dups.is_empty() {
            return Err(Error::input(format!("duplicate image ids: {}", dups.join(", "))));
        }
        let warnings = unknown_key_warnings(&instances);
        Ok(Self {
            instances,
            index,
            warnings,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut lines = text.lines();
        check_header(path, lines.next(), FORMAT, VERSION)?;

        let mut instances = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        let mut dups: Vec<String> = Vec::new();
        for (n, line) in lines.enumerate() {
            let line_no = n + 2;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_owned(),
                line: line_no,
                message,
            };
            let rec: Record = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let inst = Instance {
                image_path: base.join(&rec.image_path),
                image_id: rec.image_id,
                image_path_raw: rec.image_path,
                ground_truths: rec.ground_truths,
                captions: rec.captions,
            };
            validate_instance(&inst).map_err(parse_err)?;
            if seen.insert(inst.image_id.clone(), line_no).is_some() {
                dups.push(inst.image_id.clone());
            }
            instances.push(inst);
        }
        if !dups.is_empty() {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: 0,
                message: format!("duplicate image ids: {}", dups.join(", ")),
            });
        }
        let manifest = Self::new(instances)?;
        for w in &manifest.warnings {
            log::warn!("{}: {w}", path.display());
        }
        Ok(manifest)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = header_line(FORMAT, VERSION);
        out.push('\n');
        for inst in &self.instances {
            let rec = Record {
                image_id: inst.image_id.clone(),
                image_path: inst.image_path_raw.clone(),
                ground_truths: inst.ground_truths.clone(),
                captions: inst.captions.clone(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("record serialises"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_jsonl()).map_err(|e| Error::io(path, e))
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn get(&self, image_id: &str) -> Option<&Instance> {
        self.index.get(image_id).map(|&i| &self.instances[i])
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Non-fatal findings, e.g. caption keys that are not known corruption keys.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Corruption keys that have a caption for every instance.
    pub fn complete_keys(&self) -> Vec<String> {
        let Some(first) = self.instances.first() else {
            return Vec::new();
        };
        first
            .captions
            .keys()
            .filter(|k| self.instances.iter().all(|i| i.captions.contains_key(*k)))
            .cloned()
            .collect()
    }
}

fn validate_instance(inst: &Instance) -> std::result::Result<(), String> {
    if inst.image_id.trim().is_empty() {
        return Err("image_id is empty".into());
    }
    if inst.image_id.contains(['/', '\\']) {
        return Err(format!("image_id {:?} contains a path separator", inst.image_id));
    }
    if inst.ground_truths.iter().all(|g| g.trim().is_empty()) {
        return Err(format!("instance {:?} has no ground truths", inst.image_id));
    }
    if !inst.captions.contains_key(CLEAN_KEY) {
        return Err(format!("instance {:?} lacks a {CLEAN_KEY:?} caption", inst.image_id));
    }
    Ok(())
}

fn unknown_key_warnings(instances: &[Instance]) -> Vec<String> {
    let mut unknown: Vec<&str> = instances
        .iter()
        .flat_map(|i| i.captions.keys())
        .filter(|k| k.parse::<CorruptionSpec>().is_err())
        .map(String::as_str)
        .collect::<HashSet<_>>()
        .into_iter()
        .collect();
    unknown.sort_unstable();
    unknown
        .into_iter()
        .map(|k| format!("caption key {k:?} is not a known corruption key; retained"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, body: &str) -> PathBuf {
        let p = dir.join("manifest.jsonl");
        std::fs::write(&p, format!("{}\n{body}", header_line(FORMAT, VERSION))).unwrap();
        p
    }

    fn record(id: &str) -> String {
        format!(
            r#"{{"image_id":"{id}","image_path":"img/{id}.png","ground_truths":["a cat"],"captions":{{"clean":"a cat"}}}}"#
        )
    }

    #[test]
    fn loads_twenty_records() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..20).map(|i| record(&format!("im{i:02}")) + "\n").collect();
        let m = DatasetManifest::load(&write(dir.path(), &body)).unwrap();
        assert_eq!(m.len(), 20);
        assert_eq!(m.get("im03").unwrap().image_path, dir.path().join("img/im03.png"));
    }

    #[test]
    fn missing_ground_truths_reported_at_line() {
        let dir = tempfile::tempdir().unwrap();
        let bad = r#"{"image_id":"x","image_path":"x.png","captions":{"clean":"a"}}"#;
        let body = format!("{}\n{bad}\n", record("ok"));
        match DatasetManifest::load(&write(dir.path(), &body)).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let empty = r#"{"image_id":"x","image_path":"x.png","ground_truths":[],"captions":{"clean":"a"}}"#;
        match DatasetManifest::load(&write(dir.path(), &format!("{empty}\n"))).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("no ground truths"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn duplicate_ids_listed() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{}\n{}\n{}\n", record("a"), record("b"), record("a"));
        let err = DatasetManifest::load(&write(dir.path(), &body)).unwrap_err();
        assert!(err.to_string().contains("duplicate image ids: a"), "{err}");
    }

    #[test]
    fn unknown_caption_key_is_warning() {
        let dir = tempfile::tempdir().unwrap();
        let rec = r#"{"image_id":"x","image_path":"x.png","ground_truths":["a"],"captions":{"clean":"a","hail_2":"b"}}"#;
        let m = DatasetManifest::load(&write(dir.path(), &format!("{rec}\n"))).unwrap();
        assert_eq!(m.warnings().len(), 1);
        assert_eq!(m.get("x").unwrap().caption("hail_2"), Some("b"));
    }

    #[test]
    fn malformed_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let body = format!("{}\n{{not json\n", record("a"));
        match DatasetManifest::load(&write(dir.path(), &body)).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn write_read_round_trip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let body: String = (0..3).map(|i| record(&format!("r{i}")) + "\n").collect();
        let path = write(dir.path(), &body);
        let original = std::fs::read_to_string(&path).unwrap();
        let m = DatasetManifest::load(&path).unwrap();
        assert_eq!(m.to_jsonl(), original);
    }
}
