//! Consensus-based TF-IDF n-gram similarity. Term frequencies are raw counts
//! (cosine is scale invariant) and document frequency counts instances whose
//! reference set contains the n-gram.

use std::collections::{BTreeMap, BTreeSet};

use super::ngrams::{ngram_counts, Counts};
use crate::error::{Error, Result};

fn weighted(counts: &Counts<'_>, idf: &BTreeMap<&[String], f64>, ln_n: f64) -> BTreeMap<Vec<String>, f64> {
    counts
        .iter()
        .map(|(g, &c)| {
            let w = idf.get(g).copied().unwrap_or(ln_n);
            (g.to_vec(), c as f64 * w)
        })
        .collect()
}

fn cosine(a: &BTreeMap<Vec<String>, f64>, b: &BTreeMap<Vec<String>, f64>) -> f64 {
    let dot: f64 = a.iter().filter_map(|(g, x)| b.get(g).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Per-instance scores: `scale` × mean over orders `1..=max_n` of the mean
/// cosine between candidate and each reference.
pub fn cider_scores(cands: &[Vec<String>], refs: &[Vec<Vec<String>>], max_n: usize, scale: f64) -> Result<Vec<f64>> {
    if cands.len() != refs.len() {
        return Err(Error::input("candidate and reference counts differ"));
    }
    if cands.len() < 2 {
        return Err(Error::DegenerateIdf(cands.len()));
    }
    if refs.iter().any(Vec::is_empty) {
        return Err(Error::input("every candidate needs at least one reference"));
    }
    let ln_n = (cands.len() as f64).ln();
    let mut per_order: Vec<Vec<f64>> = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let ref_counts: Vec<Vec<Counts<'_>>> = refs
            .iter()
            .map(|rs| rs.iter().map(|r| ngram_counts(r, n)).collect())
            .collect();
        let mut df: BTreeMap<&[String], usize> = BTreeMap::new();
        for rs in &ref_counts {
            let grams: BTreeSet<&[String]> = rs.iter().flat_map(|c| c.keys().copied()).collect();
            for g in grams {
                *df.entry(g).or_default() += 1;
            }
        }
        let idf: BTreeMap<&[String], f64> = df.into_iter().map(|(g, d)| (g, ln_n - (d as f64).ln())).collect();
        let scores = cands
            .iter()
            .zip(&ref_counts)
            .map(|(c, rs)| {
                let cv = weighted(&ngram_counts(c, n), &idf, ln_n);
                rs.iter().map(|r| cosine(&cv, &weighted(r, &idf, ln_n))).sum::<f64>() / rs.len() as f64
            })
            .collect();
        per_order.push(scores);
    }
    Ok((0..cands.len())
        .map(|i| scale * per_order.iter().map(|s| s[i]).sum::<f64>() / max_n as f64)
        .collect())
}

pub fn corpus_cider(cands: &[Vec<String>], refs: &[Vec<Vec<String>>], max_n: usize, scale: f64) -> Result<f64> {
    let s = cider_scores(cands, refs, max_n, scale)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn corpus(c: &[&str], r: &[&[&str]]) -> (Vec<Vec<String>>, Vec<Vec<Vec<String>>>) {
        (
            c.iter().map(|s| tokenize(s)).collect(),
            r.iter().map(|rs| rs.iter().map(|s| tokenize(s)).collect()).collect(),
        )
    }

    #[test]
    fn identical_to_distinct_references_scores_scale() {
        let (c, r) = corpus(
            &["a man riding a horse", "two dogs play in snow", "a red car parked outside"],
            &[&["a man riding a horse"], &["two dogs play in snow"], &["a red car parked outside"]],
        );
        let s = corpus_cider(&c, &r, 4, 10.0).unwrap();
        assert!((s - 10.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn disjoint_vocabulary_is_zero() {
        let (c, r) = corpus(&["x y z w", "q r s t"], &[&["a b c d"], &["e f g h"]]);
        assert_eq!(corpus_cider(&c, &r, 4, 10.0).unwrap(), 0.0);
    }

    #[test]
    fn single_instance_is_degenerate() {
        let (c, r) = corpus(&["a b"], &[&["a b"]]);
        assert!(matches!(cider_scores(&c, &r, 4, 10.0), Err(Error::DegenerateIdf(1))));
    }

    #[test]
    fn ubiquitous_ngrams_carry_no_weight() {
        // "a" appears in every reference set, so a candidate that is just "a" scores 0.
        let (c, r) = corpus(&["a", "a dog"], &[&["a cat"], &["a dog"]]);
        let s = cider_scores(&c, &r, 1, 10.0).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 10.0).abs() < 1e-12);
    }
}
