//! Unigram-alignment METEOR without the synonym stage: exact matches first,
//! then matches on a light suffix-stripping stem.

/// Crude English stem: strips plural and common verbal suffixes, then a
/// final silent "e" so that "horse" and "horses" agree.
pub fn stem(word: &str) -> String {
    let mut w = strip_suffix(word);
    if w.len() > 3 && w.ends_with('e') && !w.ends_with("ee") {
        w.pop();
    }
    w
}

fn strip_suffix(w: &str) -> String {
    let n = w.len();
    if n > 4 && w.ends_with("ies") {
        return format!("{}y", &w[..n - 3]);
    }
    if n > 3 && ["ches", "shes", "sses", "xes", "zes"].iter().any(|s| w.ends_with(s)) {
        return w[..n - 2].to_string();
    }
    if n > 5 && w.ends_with("ing") {
        return w[..n - 3].to_string();
    }
    if n > 4 && w.ends_with("ed") {
        return w[..n - 2].to_string();
    }
    if n > 2 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") {
        return w[..n - 1].to_string();
    }
    w.to_string()
}

/// Alignment as `(candidate index, reference index)` pairs sorted by candidate index.
pub fn align(cand: &[String], reference: &[String]) -> Vec<(usize, usize)> {
    let mut cand_used = vec![false; cand.len()];
    let mut ref_used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    let cand_stems: Vec<String> = cand.iter().map(|w| stem(w)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|w| stem(w)).collect();
    for stage in 0..2 {
        for (i, c) in cand.iter().enumerate() {
            if cand_used[i] {
                continue;
            }
            let hit = (0..reference.len()).find(|&j| {
                !ref_used[j]
                    && match stage {
                        0 => reference[j] == *c,
                        _ => ref_stems[j] == cand_stems[i],
                    }
            });
            if let Some(j) = hit {
                cand_used[i] = true;
                ref_used[j] = true;
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Runs of alignment pairs adjacent in both candidate and reference.
pub fn chunk_count(pairs: &[(usize, usize)]) -> usize {
    if pairs.is_empty() {
        return 0;
    }
    1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

#[derive(Clone, Copy, Debug)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

pub fn meteor_single(cand: &[String], reference: &[String], p: MeteorParams) -> f64 {
    let pairs = align(cand, reference);
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let prec = m as f64 / cand.len() as f64;
    let rec = m as f64 / reference.len() as f64;
    let fmean = prec * rec / (p.alpha * prec + (1.0 - p.alpha) * rec);
    let frag = chunk_count(&pairs) as f64 / m as f64;
    fmean * (1.0 - p.gamma * frag.powf(p.beta))
}

/// Best score over the references.
pub fn meteor_lite(cand: &[String], refs: &[Vec<String>], p: MeteorParams) -> f64 {
    refs.iter().map(|r| meteor_single(cand, r, p)).fold(0.0, f64::max)
}
