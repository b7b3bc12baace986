//! Content-addressed results cache. Entries live at
//! `{root}/{stage}/{corruption_key}/{config_hash}.jsonl`, written through a
//! temporary file and an atomic rename so readers never see partial data.

use std::path::{Path, PathBuf};

use std::sync::Mutex;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FORMAT: &str = "corrobe-cache";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct EntryHeader {
    format: String,
    version: u32,
    stage: String,
    corruption_key: String,
    config_hash: String,
}

#[derive(Debug)]
pub struct ResultsCache {
    root: PathBuf,
    writer: Mutex<()>,
}

impl ResultsCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self {
            root,
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, stage: &str, key: &str, hash: &str) -> PathBuf {
        self.root.join(stage).join(key).join(format!("{hash}.jsonl"))
    }

    pub fn put(&self, stage: &str, key: &str, hash: &str, payload: &[u8]) -> Result<()> {
        for part in [stage, key, hash] {
            if part.is_empty() || part.contains(['/', '\\']) || part.starts_with('.') {
                return Err(Error::input(format!("invalid cache key component {part:?}")));
            }
        }
        let path = self.entry_path(stage, key, hash);
        let dir = path.parent().expect("entry has a parent");
        let header = EntryHeader {
            format: FORMAT.into(),
            version: VERSION,
            stage: stage.into(),
            corruption_key: key.into(),
            config_hash: hash.into(),
        };
        let mut bytes = serde_json::to_vec(&header)?;
        bytes.push(b'\n');
        bytes.extend_from_slice(payload);

        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let tmp = dir.join(format!(".{hash}.tmp"));
        std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    /// Payload bytes, or `None` when absent or written under another config hash.
    pub fn get(&self, stage: &str, key: &str, hash: &str) -> Result<Option<Vec<u8>>> {
        let path = self.entry_path(stage, key, hash);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        let Some(split) = bytes.iter().position(|&b| b == b'\n') else {
            return Ok(None);
        };
        let expected = EntryHeader {
            format: FORMAT.into(),
            version: VERSION,
            stage: stage.into(),
            corruption_key: key.into(),
            config_hash: hash.into(),
        };
        match serde_json::from_slice::<EntryHeader>(&bytes[..split]) {
            Ok(h) if h == expected => Ok(Some(bytes[split + 1..].to_vec())),
            _ => {
                log::warn!("ignoring stale cache entry {}", path.display());
                Ok(None)
            }
        }
    }

    pub fn put_records<T: Serialize>(&self, stage: &str, key: &str, hash: &str, records: &[T]) -> Result<()> {
        let mut payload = Vec::new();
        for r in records {
            serde_json::to_writer(&mut payload, r)?;
            payload.push(b'\n');
        }
        self.put(stage, key, hash, &payload)
    }

    pub fn get_records<T: DeserializeOwned>(&self, stage: &str, key: &str, hash: &str) -> Result<Option<Vec<T>>> {
        let Some(payload) = self.get(stage, key, hash)? else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for line in payload.split(|&b| b == b'\n').filter(|l| !l.is_empty()) {
            out.push(serde_json::from_slice(line)?);
        }
        Ok(Some(out))
    }

    /// Corruption keys that have an entry for `stage` under `hash`.
    pub fn keys(&self, stage: &str, hash: &str) -> Result<Vec<String>> {
        let dir = self.root.join(stage);
        let entries = match std::fs::read_dir(&dir) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Error::io(&dir, e)),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let key = entry.file_name().to_string_lossy().into_owned();
            if entry.path().join(format!("{hash}.jsonl")).is_file() {
                keys.push(key);
            }
        }
        keys.sort();
        Ok(keys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn put_then_get_returns_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultsCache::open(dir.path()).unwrap();
        let payload = b"{\"a\":1}\n{\"b\":2}\n";
        cache.put("tasks", "snow_4", "abc", payload).unwrap();
        assert_eq!(cache.get("tasks", "snow_4", "abc").unwrap().unwrap(), payload);
        assert_eq!(cache.keys("tasks", "abc").unwrap(), vec!["snow_4".to_string()]);
    }

    #[test]
    fn different_hash_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultsCache::open(dir.path()).unwrap();
        cache.put("tasks", "clean", "h1", b"x\n").unwrap();
        assert!(cache.get("tasks", "clean", "h2").unwrap().is_none());
    }

    #[test]
    fn tampered_header_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultsCache::open(dir.path()).unwrap();
        cache.put("tasks", "clean", "h1", b"x\n").unwrap();
        let path = dir.path().join("tasks/clean/h1.jsonl");
        let text = std::fs::read_to_string(&path).unwrap().replace("\"h1\"", "\"h0\"");
        std::fs::write(&path, text).unwrap();
        assert!(cache.get("tasks", "clean", "h1").unwrap().is_none());
    }

    #[test]
    fn rejects_path_traversal() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResultsCache::open(dir.path()).unwrap();
        assert!(cache.put("../x", "clean", "h", b"").is_err());
    }

    #[test]
    fn concurrent_readers_see_whole_entries() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Arc::new(ResultsCache::open(dir.path()).unwrap());
        let a = vec![b'a'; 100_000];
        let b = vec![b'b'; 100_000];
        cache.put("s", "k", "h", &a).unwrap();
        let readers: Vec<_> = (0..4)
            .map(|_| {
                let cache = Arc::clone(&cache);
                let (a, b) = (a.clone(), b.clone());
                std::thread::spawn(move || {
                    for _ in 0..50 {
                        let got = cache.get("s", "k", "h").unwrap().unwrap();
                        assert!(got == a || got == b);
                    }
                })
            })
            .collect();
        for i in 0..20 {
            cache.put("s", "k", "h", if i % 2 == 0 { &b } else { &a }).unwrap();
        }
        for r in readers {
            r.join().unwrap();
        }
    }
}
