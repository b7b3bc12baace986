use std::collections::BTreeSet;

use crate::sg::{canonicalize, SceneGraph, SgTuple, SynonymLexicon};

/// Tuple F1 of the candidate graph against the union of the reference graphs.
pub fn spice(candidate: &SceneGraph, references: &[SceneGraph], lex: &SynonymLexicon) -> f64 {
    let cand = canonicalize(candidate, lex);
    let refs: BTreeSet<SgTuple> = references
        .iter()
        .flat_map(|g| canonicalize(g, lex).tuples)
        .collect();
    let tp = cand.iter().filter(|t| refs.contains(t)).count();
    if tp == 0 {
        return 0.0;
    }
    let p = tp as f64 / cand.len() as f64;
    let r = tp as f64 / refs.len() as f64;
    2.0 * p * r / (p + r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sg::GraphSource;

    fn g(parts: &[&[&str]]) -> SceneGraph {
        SceneGraph::from_tuples(GraphSource::Candidate, parts.iter().map(|p| SgTuple::from_parts(p).unwrap()))
    }

    #[test]
    fn identity_and_subset() {
        let lex = SynonymLexicon::default();
        let r = g(&[&["car"], &["car", "red"], &["road"], &["car", "on", "road"]]);
        assert_eq!(spice(&r, &[r.clone()], &lex), 1.0);
        let c = g(&[&["car"], &["road"]]);
        assert!((spice(&c, &[r], &lex) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_candidate() {
        assert_eq!(spice(&g(&[]), &[g(&[&["car"]])], &SynonymLexicon::default()), 0.0);
    }

    #[test]
    fn references_are_pooled() {
        let lex = SynonymLexicon::default();
        let c = g(&[&["car"], &["dog"]]);
        let s = spice(&c, &[g(&[&["car"]]), g(&[&["dog"]])], &lex);
        assert_eq!(s, 1.0);
    }
}
