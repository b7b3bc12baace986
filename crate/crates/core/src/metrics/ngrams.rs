use std::collections::BTreeMap;

pub(crate) type Counts<'a> = BTreeMap<&'a [String], usize>;

pub(crate) fn ngram_counts(tokens: &[String], n: usize) -> Counts<'_> {
    let mut out = Counts::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for w in tokens.windows(n) {
        *out.entry(w).or_default() += 1;
    }
    out
}
