//! Procedurally generated fixture dataset with stand-in embeddings.
//!
//! Twenty small scenes in three families (street, park, harbour). Ten street
//! scenes are "seeded": under the corrupted key their captions name the wrong
//! car colour. Embeddings come from hash-seeded concept vectors, one per probe
//! sentence; an image embedding is the normalised sum of the concept vectors
//! of the tuples truly present in the scene, so judgment rescues true
//! mentions and rejects invented ones.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::corruption::{RgbImage, CLEAN_KEY};
use crate::error::{Error, Result};
use crate::judgment::probe_sentence;
use crate::patterns::{caption_embedding_id, gt_embedding_id, ClusterParams};
use crate::sg::{canonicalize, SceneGraph, SynonymLexicon, TaskCategory, TemplateParser};
use crate::store::{DatasetManifest, EmbeddingTable, Instance};

pub const SYNTHETIC_DIM: usize = 256;
pub const SYNTHETIC_SIZE: u32 = 64;
/// Corrupted key the seeded captions are filed under.
pub const SEEDED_KEY: &str = "snow_4";
pub const SEEDED_TASK: TaskCategory = TaskCategory::Color;
/// Colour the seeded captions wrongly report.
pub const INJECTED_COLOR: &str = "white";

/// Clustering parameters scaled to a twenty-instance dataset.
pub fn fixture_cluster_params() -> ClusterParams {
    ClusterParams {
        min_cluster_size: 4,
        min_samples: 3,
    }
}

/// Deterministic unit vector for a piece of text.
pub fn concept_vector(text: &str, dim: usize) -> Vec<f32> {
    let digest = Sha256::new()
        .chain_update(b"corrobe/synthetic/v1\0")
        .chain_update(text.as_bytes())
        .finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(seed);
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    normalise(&v)
}

fn normalise(v: &[f64]) -> Vec<f32> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

fn sum_of_concepts<'a>(sentences: impl IntoIterator<Item = &'a String>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0f64; dim];
    for s in sentences {
        for (a, c) in acc.iter_mut().zip(concept_vector(s, dim)) {
            *a += c as f64;
        }
    }
    acc
}

fn graph_embedding(g: &SceneGraph, dim: usize) -> Vec<f32> {
    let sentences: Vec<String> = g.iter().map(probe_sentence).collect();
    if sentences.is_empty() {
        return vec![0.0; dim];
    }
    normalise(&sum_of_concepts(&sentences, dim))
}

fn rgb_of(color: &str) -> [u8; 3] {
    match color {
        "red" => [200, 30, 30],
        "blue" => [30, 60, 200],
        "black" => [20, 20, 20],
        "green" => [30, 160, 60],
        "yellow" => [230, 210, 40],
        "silver" => [190, 190, 200],
        "orange" => [240, 130, 20],
        "brown" => [120, 70, 30],
        "gray" => [128, 128, 128],
        "purple" => [120, 40, 150],
        "white" => [245, 245, 245],
        _ => [100, 100, 100],
    }
}

struct Scene {
    id: String,
    family: &'static str,
    color: &'static str,
    ground_truths: [String; 2],
    clean: String,
    corrupted: String,
    /// Caption describing everything truly visible.
    truth: String,
    seeded: bool,
}

fn scenes() -> Vec<Scene> {
    const CAR_COLORS: [&str; 10] = ["red", "blue", "black", "green", "yellow", "silver", "orange", "brown", "gray", "purple"];
    const DOG_COLORS: [&str; 5] = ["brown", "black", "gray", "golden", "orange"];
    const BOAT_COLORS: [&str; 5] = ["red", "blue", "yellow", "green", "orange"];
    let mut out = Vec::new();
    for c in CAR_COLORS {
        out.push(Scene {
            id: format!("img{:02}", out.len()),
            family: "street",
            color: c,
            ground_truths: [
                format!("a {c} car on a street near a tall building"),
                format!("a {c} car parked on a road"),
            ],
            clean: format!("a {c} car on a street near a building"),
            corrupted: format!("a {INJECTED_COLOR} car on a street near a building"),
            truth: format!("a {c} car on a street near a tall building"),
            seeded: true,
        });
    }
    for c in DOG_COLORS {
        out.push(Scene {
            id: format!("img{:02}", out.len()),
            family: "park",
            color: c,
            ground_truths: [format!("a {c} dog on the grass near a tree"), format!("a {c} dog in a park")],
            clean: format!("a {c} dog on the grass"),
            corrupted: format!("a {c} dog on the grass"),
            truth: format!("a {c} dog on the grass near a tree in a park"),
            seeded: false,
        });
    }
    for c in BOAT_COLORS {
        out.push(Scene {
            id: format!("img{:02}", out.len()),
            family: "harbour",
            color: c,
            ground_truths: [format!("a {c} boat on the water under a bridge"), format!("a small {c} boat on the water")],
            clean: format!("a {c} boat on the water near a bridge"),
            corrupted: format!("a {c} boat on the water near a bridge"),
            truth: format!("a small {c} boat on the water under a bridge near a bridge"),
            seeded: false,
        });
    }
    out
}

fn render(scene: &Scene, rng: &mut ChaCha8Rng) -> RgbImage {
    let bg: [f32; 3] = match scene.family {
        "street" => [90.0, 90.0, 95.0],
        "park" => [60.0, 150.0, 60.0],
        _ => [40.0, 90.0, 170.0],
    };
    let obj = rgb_of(scene.color);
    let s = SYNTHETIC_SIZE;
    let (x0, y0) = (rng.random_range(8..24), rng.random_range(20..36));
    let (w, h) = (rng.random_range(20..32), rng.random_range(10..20));
    let texture: Vec<f32> = (0..(s * s)).map(|_| rng.random_range(-12.0..12.0)).collect();
    RgbImage::from_fn(s, s, |x, y| {
        let inside = x >= x0 && x < x0 + w && y >= y0 && y < y0 + h;
        let shade = 0.6 + 0.4 * y as f32 / s as f32;
        let t = texture[(y * s + x) as usize];
        let px = |c: usize| {
            let base = if inside { obj[c] as f32 } else { bg[c] * shade };
            (base + t).clamp(0.0, 255.0).round() as u8
        };
        [px(0), px(1), px(2)]
    })
}

/// Ten varied 64×64 test images: gradients, edges, textures and flat areas.
pub fn test_images() -> Vec<(String, RgbImage)> {
    let s = SYNTHETIC_SIZE;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let noise: Vec<u8> = (0..s * s * 3).map(|_| rng.random()).collect();
    let f = |x: u32| x as f32 / (s - 1) as f32;
    let q = |v: f32| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut out: Vec<(String, RgbImage)> = Vec::new();
    out.push(("gradient".into(), RgbImage::from_fn(s, s, |x, y| [q(f(x)), q(f(y)), q(0.5)])));
    out.push(("checker".into(), RgbImage::from_fn(s, s, |x, y| if (x / 11 + y / 11) % 2 == 0 { [230, 230, 230] } else { [25, 25, 25] })));
    out.push(("stripes".into(), RgbImage::from_fn(s, s, |x, _| if (x / 4) % 2 == 0 { [200, 40, 40] } else { [40, 40, 200] })));
    out.push(("disk".into(), RgbImage::from_fn(s, s, |x, y| {
        let (dx, dy) = (x as f32 - 32.0, y as f32 - 32.0);
        if dx * dx + dy * dy < 400.0 { [240, 200, 30] } else { [30, 90, 40] }
    })));
    out.push(("noise".into(), RgbImage::from_fn(s, s, |x, y| {
        let i = ((y * s + x) * 3) as usize;
        [noise[i], noise[i + 1], noise[i + 2]]
    })));
    out.push(("rings".into(), RgbImage::from_fn(s, s, |x, y| {
        let r = ((x as f32 - 20.0).powi(2) + (y as f32 - 40.0).powi(2)).sqrt();
        let v = 0.5 + 0.5 * (r / 3.0).sin();
        [q(v), q(1.0 - v), q(0.3)]
    })));
    out.push(("dark".into(), RgbImage::from_fn(s, s, |x, y| [q(0.1 + 0.1 * f(x)), q(0.08), q(0.05 + 0.1 * f(y))])));
    out.push(("bright".into(), RgbImage::from_fn(s, s, |x, y| [q(0.85 + 0.1 * f(y)), q(0.9), q(0.8 + 0.15 * f(x))])));
    out.push(("blocks".into(), RgbImage::from_fn(s, s, |x, y| {
        let k = (x / 16 + 4 * (y / 16)) as usize;
        [noise[k * 3], noise[k * 3 + 1], noise[k * 3 + 2]]
    })));
    out.push(("scene".into(), {
        let sc = &scenes()[0];
        render(sc, &mut ChaCha8Rng::seed_from_u64(1))
    }));
    out
}

/// The generated dataset, held in memory.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub manifest: DatasetManifest,
    pub images: Vec<(String, RgbImage)>,
    pub image_embeddings: EmbeddingTable,
    pub text_embeddings: EmbeddingTable,
    pub probe_embeddings: EmbeddingTable,
    pub seeded_ids: Vec<String>,
}

/// Where [`SyntheticDataset::write`] put each artefact.
#[derive(Clone, Debug)]
pub struct SyntheticPaths {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub image_embeddings: PathBuf,
    pub text_embeddings: PathBuf,
    pub probe_embeddings: PathBuf,
}

impl SyntheticPaths {
    pub fn under(root: &Path) -> Self {
        Self {
            root: root.to_owned(),
            manifest: root.join("manifest.jsonl"),
            image_embeddings: root.join("embeddings/images.emb"),
            text_embeddings: root.join("embeddings/texts.emb"),
            probe_embeddings: root.join("embeddings/probes.emb"),
        }
    }
}

impl SyntheticDataset {
    pub fn generate(seed: u64) -> Result<Self> {
        let lex = SynonymLexicon::builtin();
        let parser = TemplateParser::builtin();
        let parse = |text: &str| canonicalize(&parser.parse(text), &lex);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = SYNTHETIC_DIM;
        let scenes = scenes();

        let mut instances = Vec::new();
        let mut images = Vec::new();
        let mut image_rows = Vec::new();
        let mut text_rows = Vec::new();
        let mut probe_sentences = std::collections::BTreeSet::new();

        for sc in &scenes {
            let path = format!("images/{}.png", sc.id);
            instances.push(Instance {
                image_id: sc.id.clone(),
                image_path_raw: path.clone(),
                image_path: path.into(),
                ground_truths: sc.ground_truths.to_vec(),
                captions: [
                    (CLEAN_KEY.to_owned(), sc.clean.clone()),
                    (SEEDED_KEY.to_owned(), sc.corrupted.clone()),
                ]
                .into(),
            });
            images.push((sc.id.clone(), render(sc, &mut rng)));

            let truth: Vec<String> = parse(&sc.truth).iter().map(probe_sentence).collect();
            let mut img = sum_of_concepts(&truth, dim);
            let norm = img.iter().map(|x| x * x).sum::<f64>().sqrt();
            let jitter = concept_vector(&format!("jitter/{seed}/{}", sc.id), dim);
            for (a, j) in img.iter_mut().zip(jitter) {
                *a = *a / norm + 0.05 * j as f64;
            }
            image_rows.push((sc.id.clone(), normalise(&img)));

            let mut graphs = Vec::new();
            for (key, text) in [(CLEAN_KEY, &sc.clean), (SEEDED_KEY, &sc.corrupted)] {
                let g = parse(text);
                text_rows.push((caption_embedding_id(key, &sc.id), graph_embedding(&g, dim)));
                graphs.push(g);
            }
            for (j, gt) in sc.ground_truths.iter().enumerate() {
                let g = parse(gt);
                text_rows.push((gt_embedding_id(&sc.id, j), graph_embedding(&g, dim)));
                graphs.push(g);
            }
            probe_sentences.extend(graphs.iter().flat_map(|g| g.iter().map(probe_sentence)));
        }

        let probe_rows: Vec<(String, Vec<f32>)> = probe_sentences
            .into_iter()
            .map(|s| {
                let v = concept_vector(&s, dim);
                (s, v)
            })
            .collect();
        Ok(Self {
            manifest: DatasetManifest::new(instances)?,
            images,
            image_embeddings: EmbeddingTable::from_rows(dim, image_rows)?,
            text_embeddings: EmbeddingTable::from_rows(dim, text_rows)?,
            probe_embeddings: EmbeddingTable::from_rows(dim, probe_rows)?,
            seeded_ids: scenes.iter().filter(|s| s.seeded).map(|s| s.id.clone()).collect(),
        })
    }

    /// Write images, manifest and embedding tables under `root`.
    pub fn write(&self, root: &Path) -> Result<SyntheticPaths> {
        let paths = SyntheticPaths::under(root);
        for dir in [root.join("images"), root.join("embeddings")] {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        for (id, img) in &self.images {
            img.save_png(&root.join(format!("images/{id}.png")))?;
        }
        self.manifest.save(&paths.manifest)?;
        self.image_embeddings.save(&paths.image_embeddings)?;
        self.text_embeddings.save(&paths.text_embeddings)?;
        self.probe_embeddings.save(&paths.probe_embeddings)?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judgment::cosine;

    #[test]
    fn generation_is_deterministic() {
        let a = SyntheticDataset::generate(7).unwrap();
        let b = SyntheticDataset::generate(7).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(a.image_embeddings, b.image_embeddings);
        assert_eq!(a.images[3].1, b.images[3].1);
        assert_eq!(a.manifest.len(), 20);
        assert_eq!(a.seeded_ids.len(), 10);
    }

    #[test]
    fn true_mentions_are_close_and_injected_ones_are_not() {
        let d = SyntheticDataset::generate(7).unwrap();
        let img = d.image_embeddings.vector("img00").unwrap();
        let real = d.probe_embeddings.vector("a photo of a red auto").unwrap();
        let fake = d.probe_embeddings.vector("a photo of a white auto").unwrap();
        assert!(cosine(img, real).unwrap() > 0.25);
        assert!(cosine(img, fake).unwrap() < 0.25);
    }

    #[test]
    fn writes_loadable_files() {
        let dir = tempfile::tempdir().unwrap();
        let d = SyntheticDataset::generate(1).unwrap();
        let p = d.write(dir.path()).unwrap();
        let m = DatasetManifest::load(&p.manifest).unwrap();
        assert_eq!(m.len(), 20);
        assert!(m.instances()[0].image_path.is_file());
        assert_eq!(EmbeddingTable::load(&p.text_embeddings).unwrap(), d.text_embeddings);
    }
}
