use std::collections::BTreeMap;

use super::ngrams::{ngram_counts, Counts};
use crate::error::{Error, Result};

fn clipped_matches(cand: &Counts<'_>, refs: &[Counts<'_>]) -> usize {
    cand.iter()
        .map(|(g, &c)| {
            let max_ref = refs.iter().map(|r| r.get(g).copied().unwrap_or(0)).max().unwrap_or(0);
            c.min(max_ref)
        })
        .sum()
}

/// Reference length closest to `c`; ties go to the shorter reference.
fn closest_ref_len(c: usize, refs: &[Vec<String>]) -> usize {
    refs.iter()
        .map(Vec::len)
        .min_by_key(|&r| (r.abs_diff(c), r))
        .unwrap_or(0)
}

fn brevity_penalty(c: usize, r: usize) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

fn check(cands: &[Vec<String>], refs: &[Vec<Vec<String>>], n: usize) -> Result<()> {
    if cands.is_empty() {
        return Err(Error::input("BLEU needs at least one candidate"));
    }
    if cands.len() != refs.len() {
        return Err(Error::input("candidate and reference counts differ"));
    }
    if refs.iter().any(Vec::is_empty) {
        return Err(Error::input("every candidate needs at least one reference"));
    }
    if n == 0 {
        return Err(Error::input("BLEU order must be at least 1"));
    }
    Ok(())
}

/// Corpus BLEU: clipped n-gram counts pooled over the corpus, uniform
/// geometric mean over orders `1..=n`, corpus brevity penalty. No smoothing.
pub fn corpus_bleu(cands: &[Vec<String>], refs: &[Vec<Vec<String>>], n: usize) -> Result<f64> {
    check(cands, refs, n)?;
    let mut matched = vec![0usize; n];
    let mut total = vec![0usize; n];
    let (mut c_len, mut r_len) = (0, 0);
    for (cand, rs) in cands.iter().zip(refs) {
        c_len += cand.len();
        r_len += closest_ref_len(cand.len(), rs);
        for k in 1..=n {
            let cc = ngram_counts(cand, k);
            let rc: Vec<_> = rs.iter().map(|r| ngram_counts(r, k)).collect();
            matched[k - 1] += clipped_matches(&cc, &rc);
            total[k - 1] += cand.len().saturating_sub(k - 1);
        }
    }
    if matched.iter().any(|&m| m == 0) {
        return Ok(0.0);
    }
    let log_p: f64 = matched
        .iter()
        .zip(&total)
        .map(|(&m, &t)| (m as f64 / t as f64).ln())
        .sum::<f64>()
        / n as f64;
    Ok(brevity_penalty(c_len, r_len) * log_p.exp())
}

/// Sentence BLEU with add-one smoothing on orders 2 and above; order 1 is
/// unsmoothed so a candidate with no overlapping words scores 0.
pub fn sentence_bleu(cand: &[String], refs: &[Vec<String>], n: usize) -> Result<f64> {
    if refs.is_empty() {
        return Err(Error::input("every candidate needs at least one reference"));
    }
    if n == 0 {
        return Err(Error::input("BLEU order must be at least 1"));
    }
    let mut log_p = 0.0;
    for k in 1..=n {
        let cc = ngram_counts(cand, k);
        let rc: Vec<_> = refs.iter().map(|r| ngram_counts(r, k)).collect();
        let m = clipped_matches(&cc, &rc) as f64;
        let t = cand.len().saturating_sub(k - 1) as f64;
        let p = if k == 1 {
            if m == 0.0 {
                return Ok(0.0);
            }
            m / t
        } else {
            (m + 1.0) / (t + 1.0)
        };
        log_p += p.ln();
    }
    let bp = brevity_penalty(cand.len(), closest_ref_len(cand.len(), refs));
    Ok(bp * (log_p / n as f64).exp())
}

/// Per-order (matched, total) counts; exposed for diagnostics.
pub fn ngram_precision_counts(cand: &[String], refs: &[Vec<String>], n: usize) -> BTreeMap<usize, (usize, usize)> {
    (1..=n)
        .map(|k| {
            let cc = ngram_counts(cand, k);
            let rc: Vec<_> = refs.iter().map(|r| ngram_counts(r, k)).collect();
            (k, (clipped_matches(&cc, &rc), cand.len().saturating_sub(k - 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tokenize;

    fn t(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn identity_is_one() {
        let c = vec![t("a man rides a red bike"), t("two dogs run on the grass")];
        let r: Vec<_> = c.iter().map(|x| vec![x.clone()]).collect();
        assert_eq!(corpus_bleu(&c, &r, 1).unwrap(), 1.0);
        assert!((corpus_bleu(&c, &r, 4).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unigram_precision_hand_count() {
        let b = corpus_bleu(&[t("a b c")], &[vec![t("a b d")]], 1).unwrap();
        assert!((b - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn clipping_limits_repeats() {
        let counts = ngram_precision_counts(&t("the the the"), &[t("the cat")], 1);
        assert_eq!(counts[&1], (1, 3));
    }

    #[test]
    fn brevity_penalty_applies_to_short_candidates() {
        let b = corpus_bleu(&[t("a b")], &[vec![t("a b c d")]], 1).unwrap();
        assert!((b - (1.0f64 - 2.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn disjoint_is_zero() {
        assert_eq!(corpus_bleu(&[t("x y z w")], &[vec![t("a b c d")]], 4).unwrap(), 0.0);
        assert_eq!(sentence_bleu(&t("x y z w"), &[t("a b c d")], 4).unwrap(), 0.0);
    }

    #[test]
    fn sentence_smoothing_avoids_collapse() {
        // unigram 2/3, bigrams 1 of 2 -> 2/3, trigram 0 of 1 -> 1/2
        let s = sentence_bleu(&t("a b c"), &[t("a b d")], 3).unwrap();
        let expected = ((2.0f64 / 3.0) * (2.0 / 3.0) * 0.5).powf(1.0 / 3.0);
        assert!((s - expected).abs() < 1e-15);
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(corpus_bleu(&[], &[], 1).is_err());
    }
}
