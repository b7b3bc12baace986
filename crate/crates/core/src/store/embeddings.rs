//! Binary embedding tables: a `.emb` flat little-endian f32 matrix and a
//! `.idx` sidecar listing one id per row.
//!
//! `.emb` header (24 bytes): magic `CRBEMB`, version u16, dimension u32,
//! row count u64, dtype u8 (1 = f32), endianness u8 (0 = little), 2 reserved
//! zero bytes. Rows follow immediately.
//!
//! An id may own several consecutive rows (a token-level matrix); such tables
//! are reduced to one row per id with [`EmbeddingTable::pooled`].

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::read_text;
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"CRBEMB";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 24;
const DTYPE_F32: u8 = 1;
const LITTLE_ENDIAN: u8 = 0;
const IDX_HEADER: &str = "corrobe-idx 1";

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    /// id -> (first row, row count)
    index: HashMap<String, (usize, usize)>,
}

impl EmbeddingTable {
    pub fn new(dim: usize, ids: Vec<String>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("embedding dimension must be positive"));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::input(format!(
                "embedding matrix has {} values, expected {} rows x {dim}",
                data.len(),
                ids.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite embedding value in row {} ({:?})",
                pos / dim,
                ids[pos / dim]
            )));
        }
        let mut index: HashMap<String, (usize, usize)> = HashMap::new();
        for (row, id) in ids.iter().enumerate() {
            match index.get_mut(id) {
                Some((start, count)) if *start + *count == row => *count += 1,
                Some(_) => {
                    return Err(Error::input(format!(
                        "rows for id {id:?} are not contiguous"
                    )))
                }
                None => {
                    index.insert(id.clone(), (row, 1));
                }
            }
        }
        Ok(Self {
            dim,
            ids,
            data,
            index,
        })
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: Into<String>,
    {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for (id, row) in rows {
            let id = id.into();
            if row.len() != dim {
                return Err(Error::input(format!(
                    "row {id:?} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            ids.push(id);
            data.extend(row);
        }
        Self::new(dim, ids, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.ids.len()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        let mut seen = std::collections::HashSet::new();
        self.ids.iter().map(String::as_str).filter(move |id| seen.insert(*id))
    }

    /// The single row for `id`. Token-level ids (several rows) are an error.
    pub fn vector(&self, id: &str) -> Result<&[f32]> {
        let (start, count) = *self
            .index
            .get(id)
            .ok_or_else(|| Error::input(format!("no embedding for id {id:?}")))?;
        if count != 1 {
            return Err(Error::input(format!(
                "id {id:?} has {count} token rows; pool the table first"
            )));
        }
        Ok(&self.data[start * self.dim..(start + 1) * self.dim])
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.vector(id).ok()
    }

    /// All rows for `id` as a flat `T x dim` slice.
    pub fn token_matrix(&self, id: &str) -> Option<&[f32]> {
        let &(start, count) = self.index.get(id)?;
        Some(&self.data[start * self.dim..(start + count) * self.dim])
    }

    /// One row per id: element-wise max over each id's token rows.
    pub fn pooled(&self) -> Result<Self> {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for id in self.ids() {
            let matrix = self.token_matrix(id).expect("id is indexed");
            data.extend(pool_max(matrix, self.dim)?);
            ids.push(id.to_owned());
        }
        Self::new(self.dim, ids, data)
    }

    pub fn to_bytes(&self) -> (Vec<u8>, String) {
        let mut emb = Vec::with_capacity(HEADER_LEN + self.data.len() * 4);
        emb.extend_from_slice(MAGIC);
        emb.extend_from_slice(&VERSION.to_le_bytes());
        emb.extend_from_slice(&(self.dim as u32).to_le_bytes());
        emb.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        emb.push(DTYPE_F32);
        emb.push(LITTLE_ENDIAN);
        emb.extend_from_slice(&[0, 0]);
        for v in &self.data {
            emb.extend_from_slice(&v.to_le_bytes());
        }
        let mut idx = String::from(IDX_HEADER);
        idx.push('\n');
        for id in &self.ids {
            idx.push_str(id);
            idx.push('\n');
        }
        (emb, idx)
    }

    pub fn from_bytes(emb: &[u8], idx: &str) -> Result<Self> {
        if emb.len() < HEADER_LEN || &emb[..6] != MAGIC {
            return Err(Error::input("embedding file lacks the CRBEMB header"));
        }
        let u16_at = |o: usize| u16::from_le_bytes([emb[o], emb[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes(emb[o..o + 4].try_into().expect("4 bytes"));
        let version = u16_at(6);
        if version != VERSION {
            return Err(Error::input(format!("unsupported embedding file version {version}")));
        }
        let dim = u32_at(8) as usize;
        let count = u64::from_le_bytes(emb[12..20].try_into().expect("8 bytes")) as usize;
        if emb[20] != DTYPE_F32 || emb[21] != LITTLE_ENDIAN {
            return Err(Error::input("embedding file must be little-endian f32"));
        }
        let body = &emb[HEADER_LEN..];
        if body.len() != count * dim * 4 {
            return Err(Error::input(format!(
                "embedding body has {} bytes, header declares {count} x {dim} f32",
                body.len()
            )));
        }
        let data = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();

        let mut lines = idx.lines();
        if lines.next() != Some(IDX_HEADER) {
            return Err(Error::input(format!("index file must start with {IDX_HEADER:?}")));
        }
        let ids: Vec<String> = lines.map(str::to_owned).collect();
        if ids.len() != count {
            return Err(Error::input(format!(
                "index lists {} ids but the matrix has {count} rows",
                ids.len()
            )));
        }
        Self::new(dim, ids, data)
    }

    /// Load `<stem>.emb` and `<stem>.idx`; `path` may name either file or the stem.
    pub fn load(path: &Path) -> Result<Self> {
        let (emb_path, idx_path) = sidecar_paths(path);
        let emb = std::fs::read(&emb_path).map_err(|e| Error::io(&emb_path, e))?;
        let idx = read_text(&idx_path)?;
        Self::from_bytes(&emb, &idx)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let (emb_path, idx_path) = sidecar_paths(path);
        let (emb, idx) = self.to_bytes();
        std::fs::write(&emb_path, emb).map_err(|e| Error::io(&emb_path, e))?;
        std::fs::write(&idx_path, idx).map_err(|e| Error::io(&idx_path, e))
    }
}

fn sidecar_paths(path: &Path) -> (PathBuf, PathBuf) {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("emb") | Some("idx") => path.with_extension(""),
        _ => path.to_owned(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with("emb"), with("idx"))
}

/// Element-wise max over the token axis of a flat `T x dim` matrix.
pub fn pool_max(matrix: &[f32], dim: usize) -> Result<Vec<f32>> {
    if dim == 0 || matrix.is_empty() || matrix.len() % dim != 0 {
        return Err(Error::input(format!(
            "cannot pool a {}-value matrix with dimension {dim}",
            matrix.len()
        )));
    }
    let mut out = matrix[..dim].to_vec();
    for row in matrix.chunks_exact(dim).skip(1) {
        for (o, v) in out.iter_mut().zip(row) {
            *o = o.max(*v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pool_examples() {
        assert_eq!(pool_max(&[1.0, 0.0, 0.0, 2.0], 2).unwrap(), vec![1.0, 2.0]);
        assert_eq!(pool_max(&[3.0, -1.0], 2).unwrap(), vec![3.0, -1.0]);
        assert_eq!(pool_max(&[0.5, 0.5, 0.5, 0.5], 2).unwrap(), vec![0.5, 0.5]);
        assert!(pool_max(&[], 2).is_err());
    }

    #[test]
    fn token_table_pools_per_id() {
        let t = EmbeddingTable::from_rows(
            2,
            [("a", vec![1.0, 0.0]), ("a", vec![0.0, 2.0]), ("b", vec![5.0, 5.0])],
        )
        .unwrap();
        assert!(t.vector("a").is_err());
        let p = t.pooled().unwrap();
        assert_eq!(p.vector("a").unwrap(), &[1.0, 2.0]);
        assert_eq!(p.vector("b").unwrap(), &[5.0, 5.0]);
    }

    #[test]
    fn rejects_non_contiguous_and_non_finite() {
        let rows = [("a", vec![1.0]), ("b", vec![1.0]), ("a", vec![1.0])];
        assert!(EmbeddingTable::from_rows(1, rows).is_err());
        assert!(EmbeddingTable::from_rows(1, [("a", vec![f32::NAN])]).is_err());
    }

    #[test]
    fn header_mismatch_detected() {
        let t = EmbeddingTable::from_rows(2, [("a", vec![1.0, 2.0])]).unwrap();
        let (mut emb, idx) = t.to_bytes();
        emb.truncate(emb.len() - 4);
        assert!(EmbeddingTable::from_bytes(&emb, &idx).is_err());
        let (emb, _) = t.to_bytes();
        assert!(EmbeddingTable::from_bytes(&emb, "corrobe-idx 1\na\nb\n").is_err());
    }

    #[test]
    fn save_load_by_stem_or_extension() {
        let dir = tempfile::tempdir().unwrap();
        let t = EmbeddingTable::from_rows(3, [("x", vec![0.1, 0.2, 0.3])]).unwrap();
        t.save(&dir.path().join("img")).unwrap();
        assert_eq!(EmbeddingTable::load(&dir.path().join("img.emb")).unwrap(), t);
        assert_eq!(EmbeddingTable::load(&dir.path().join("img")).unwrap(), t);
    }

    proptest! {
        #[test]
        fn bytes_round_trip(rows in proptest::collection::vec(proptest::collection::vec(-1e6f32..1e6, 4), 1..20)) {
            let t = EmbeddingTable::from_rows(4, rows.into_iter().enumerate().map(|(i, r)| (format!("id{i}"), r))).unwrap();
            let (emb, idx) = t.to_bytes();
            let back = EmbeddingTable::from_bytes(&emb, &idx).unwrap();
            prop_assert_eq!(back.to_bytes(), (emb, idx));
        }
    }
}
