use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{canonicalize, categorize, SceneGraph, SgTuple, SynonymLexicon, TaskCategory, TaskVocab};

/// Partition of one task's tuples after text-level matching.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryMatch {
    pub tp: BTreeSet<SgTuple>,
    pub fp_raw: BTreeSet<SgTuple>,
    #[serde(rename = "fn")]
    pub fn_: BTreeSet<SgTuple>,
}

impl CategoryMatch {
    /// Candidate tuples of this task (`TP ∪ FP_raw`).
    pub fn candidate_count(&self) -> usize {
        self.tp.len() + self.fp_raw.len()
    }

    pub fn reference_count(&self) -> usize {
        self.tp.len() + self.fn_.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextMatchResult {
    pub categories: BTreeMap<TaskCategory, CategoryMatch>,
    /// Size of the canonicalised candidate graph.
    pub candidate_total: usize,
    pub reference_total: usize,
}

impl TextMatchResult {
    pub fn get(&self, task: TaskCategory) -> &CategoryMatch {
        self.categories
            .get(&task)
            .expect("match results carry every task category")
    }
}

/// Canonicalise both graphs, then split each task's tuples into TP, FP_raw and FN
/// by exact whole-tuple set comparison.
pub fn match_graphs(
    candidate: &SceneGraph,
    reference: &SceneGraph,
    lex: &SynonymLexicon,
    vocab: &TaskVocab,
) -> TextMatchResult {
    let cand = canonicalize(candidate, lex);
    let refr = canonicalize(reference, lex);

    let mut categories: BTreeMap<TaskCategory, CategoryMatch> = TaskCategory::ALL
        .into_iter()
        .map(|t| (t, CategoryMatch::default()))
        .collect();

    for t in cand.iter() {
        let in_ref = refr.contains(t);
        for cat in categorize(t, vocab) {
            let m = categories.get_mut(&cat).expect("all categories present");
            if in_ref {
                m.tp.insert(t.clone());
            } else {
                m.fp_raw.insert(t.clone());
            }
        }
    }
    for t in refr.iter().filter(|t| !cand.contains(t)) {
        for cat in categorize(t, vocab) {
            categories.get_mut(&cat).expect("all categories present").fn_.insert(t.clone());
        }
    }

    TextMatchResult {
        categories,
        candidate_total: cand.len(),
        reference_total: refr.len(),
    }
}
