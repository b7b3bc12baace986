use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pooled embeddings of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTriple {
    pub id: String,
    pub image: Vec<f32>,
    pub caption: Vec<f32>,
    pub ground_truths: Vec<Vec<f32>>,
}

impl EmbeddingTriple {
    pub fn delta(&self) -> Result<Vec<f64>> {
        quality_delta(&self.caption, &self.ground_truths)
    }
}

/// Caption embedding minus the mean ground-truth embedding.
pub fn quality_delta(caption: &[f32], ground_truths: &[Vec<f32>]) -> Result<Vec<f64>> {
    if ground_truths.is_empty() {
        return Err(Error::input("quality delta needs at least one ground-truth embedding"));
    }
    if let Some(bad) = ground_truths.iter().find(|g| g.len() != caption.len()) {
        return Err(Error::input(format!(
            "ground-truth embedding has dimension {}, caption has {}",
            bad.len(),
            caption.len()
        )));
    }
    let m = ground_truths.len() as f64;
    Ok(caption
        .iter()
        .enumerate()
        .map(|(k, &c)| c as f64 - ground_truths.iter().map(|g| g[k] as f64).sum::<f64>() / m)
        .collect())
}

/// `1 − cos(a, b)`. Bit-identical inputs give exactly 0; otherwise a zero
/// vector gives 1 and sets the flag.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<(f64, bool)> {
    if a.len() != b.len() {
        return Err(Error::input(format!("cannot compare vectors of dimension {} and {}", a.len(), b.len())));
    }
    if a == b {
        return Ok((0.0, false));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok((1.0, true));
    }
    Ok(((1.0 - dot / (na * nb).sqrt()).clamp(0.0, 2.0), false))
}

/// The three dissimilarity terms between two instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceTerms {
    pub image: f64,
    pub caption: f64,
    pub quality: f64,
    /// How many terms hit a zero vector.
    pub zero_vectors: u8,
}

impl DistanceTerms {
    pub fn combine(&self, alpha: f64) -> f64 {
        (self.image + self.caption) / 2.0 * (1.0 - alpha) + self.quality * alpha
    }
}

fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}

struct Prepared {
    image: Vec<f64>,
    caption: Vec<f64>,
    delta: Vec<f64>,
}

impl Prepared {
    fn new(t: &EmbeddingTriple) -> Result<Self> {
        Ok(Self {
            image: widen(&t.image),
            caption: widen(&t.caption),
            delta: t.delta()?,
        })
    }
}

fn terms(a: &Prepared, b: &Prepared) -> Result<DistanceTerms> {
    let (image, z1) = cosine_distance(&a.image, &b.image)?;
    let (caption, z2) = cosine_distance(&a.caption, &b.caption)?;
    let (quality, z3) = cosine_distance(&a.delta, &b.delta)?;
    Ok(DistanceTerms {
        image,
        caption,
        quality,
        zero_vectors: u8::from(z1) + u8::from(z2) + u8::from(z3),
    })
}

pub fn pair_terms(a: &EmbeddingTriple, b: &EmbeddingTriple) -> Result<DistanceTerms> {
    terms(&Prepared::new(a)?, &Prepared::new(b)?)
}

/// Error-aware distance: mean of image and caption distance weighted by
/// `1 − alpha`, plus the deviation-direction distance weighted by `alpha`.
pub fn pair_distance(a: &EmbeddingTriple, b: &EmbeddingTriple, alpha: f64) -> Result<f64> {
    let t = pair_terms(a, b)?;
    if t.zero_vectors > 0 {
        log::warn!("zero embedding between {} and {}; treating that term as maximally distant", a.id, b.id);
    }
    Ok(t.combine(alpha))
}

/// Symmetric distance matrix with zero diagonal, stored as the upper triangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    condensed: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_condensed(n: usize, condensed: Vec<f64>) -> Result<Self> {
        if condensed.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::input(format!(
                "{} condensed entries do not describe a {n}×{n} matrix",
                condensed.len()
            )));
        }
        if condensed.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::input("distances must be finite and non-negative"));
        }
        Ok(Self { n, condensed })
    }

    /// Evaluate `f(i, j)` for every `i < j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut condensed = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                condensed.push(f(i, j));
            }
        }
        Self::from_condensed(n, condensed)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn condensed(&self) -> &[f64] {
        &self.condensed
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        // row i starts after i rows of decreasing length
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Less => self.condensed[self.offset(i, j)],
            std::cmp::Ordering::Greater => self.condensed[self.offset(j, i)],
        }
    }

    /// Reorder rows and columns: entry `(a, b)` of the result is `(order[a], order[b])` here.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::from_fn(order.len(), |a, b| self.get(order[a], order[b]))
    }
}

/// Pairwise error-aware distances, computed in parallel. Returns the matrix
/// and the number of terms that involved a zero vector.
pub fn distance_matrix(triples: &[EmbeddingTriple], alpha: f64) -> Result<(DistanceMatrix, usize)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::config(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let prepared: Vec<Prepared> = triples.iter().map(Prepared::new).collect::<Result<_>>()?;
    let n = prepared.len();
    let rows: Vec<Vec<DistanceTerms>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| terms(&prepared[i], &prepared[j])).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let zero = rows.iter().flatten().map(|t| t.zero_vectors as usize).sum();
    let condensed = rows.iter().flatten().map(|t| t.combine(alpha)).collect();
    Ok((DistanceMatrix::from_condensed(n, condensed)?, zero))
}
