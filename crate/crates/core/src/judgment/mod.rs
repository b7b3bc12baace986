//! Image-level judgment: false-positive tuples whose probe sentence is close
//! enough to the clean image embedding are rescued into the AC set.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sg::{canonicalize, SceneGraph, SgTuple, SynonymLexicon, TaskCategory, TextMatchResult};
use crate::store::EmbeddingTable;

/// Threshold range considered sensible; values outside only trigger a warning.
pub const TESTED_THRESHOLD_BAND: (f64, f64) = (0.1, 0.5);

/// Template sentence used to look up a tuple's text embedding.
pub fn probe_sentence(t: &SgTuple) -> String {
    match t {
        SgTuple::Object(h) => format!("a photo of a {h}"),
        SgTuple::Attribute(h, a) => format!("a photo of a {a} {h}"),
        SgTuple::Relation(h, r, o) => format!("a photo of a {h} {r} a {o}"),
    }
}

/// Every probe sentence that judging tuples of these graphs may need. Matching
/// works on canonical lexemes, so the sentences use canonical forms too.
pub fn required_probes<'a>(graphs: impl IntoIterator<Item = &'a SceneGraph>, lex: &SynonymLexicon) -> BTreeSet<String> {
    graphs
        .into_iter()
        .flat_map(|g| canonicalize(g, lex).tuples)
        .map(|t| probe_sentence(&t))
        .collect()
}

/// Warning text when `threshold` lies outside the tested band.
pub fn threshold_warning(threshold: f64) -> Option<String> {
    let (lo, hi) = TESTED_THRESHOLD_BAND;
    (!(lo..=hi).contains(&threshold))
        .then(|| format!("similarity threshold {threshold} is outside the tested range {lo}–{hi}"))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingProbePolicy {
    /// A missing probe embedding is an error.
    #[default]
    Strict,
    /// The tuple stays a false positive and the sentence is recorded.
    KeepFp,
}

impl std::str::FromStr for MissingProbePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Self::Strict),
            "keep-fp" => Ok(Self::KeepFp),
            other => Err(Error::config(format!("unknown missing-probe policy {other:?}"))),
        }
    }
}

pub trait ProbeLookup {
    fn probe(&self, sentence: &str) -> Option<&[f32]>;
}

impl ProbeLookup for EmbeddingTable {
    fn probe(&self, sentence: &str) -> Option<&[f32]> {
        self.get(sentence)
    }
}

impl ProbeLookup for HashMap<String, Vec<f32>> {
    fn probe(&self, sentence: &str) -> Option<&[f32]> {
        self.get(sentence).map(Vec::as_slice)
    }
}

impl ProbeLookup for BTreeMap<String, Vec<f32>> {
    fn probe(&self, sentence: &str) -> Option<&[f32]> {
        self.get(sentence).map(Vec::as_slice)
    }
}

/// Cosine similarity in f64; 0 when either vector has zero norm.
pub fn cosine(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::input(format!("cannot compare vectors of dimension {} and {}", a.len(), b.len())));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na.sqrt() * nb.sqrt()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedCategory {
    pub tp: BTreeSet<SgTuple>,
    pub fp_raw: BTreeSet<SgTuple>,
    pub fp_new: BTreeSet<SgTuple>,
    pub ac: BTreeSet<SgTuple>,
    #[serde(rename = "fn")]
    pub fn_: BTreeSet<SgTuple>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgedMatchResult {
    pub categories: BTreeMap<TaskCategory, JudgedCategory>,
    pub candidate_total: usize,
    pub reference_total: usize,
    pub threshold_used: f64,
    /// Probe sentences that had no embedding (only under `keep-fp`).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_probes: Vec<String>,
}

impl JudgedMatchResult {
    pub fn get(&self, task: TaskCategory) -> &JudgedCategory {
        self.categories
            .get(&task)
            .expect("judged results carry every task category")
    }
}

/// Move each false positive whose probe cosine to `image_vec` strictly
/// exceeds `threshold` from FP_new into AC. TP and FN pass through untouched.
pub fn judge<P: ProbeLookup + ?Sized>(
    m: &TextMatchResult,
    image_vec: &[f32],
    probes: &P,
    threshold: f64,
    policy: MissingProbePolicy,
) -> Result<JudgedMatchResult> {
    let mut verdicts: BTreeMap<&SgTuple, bool> = BTreeMap::new();
    let mut missing = BTreeSet::new();
    for t in m.categories.values().flat_map(|c| c.fp_raw.iter()) {
        if verdicts.contains_key(t) {
            continue;
        }
        let sentence = probe_sentence(t);
        let rescued = match probes.probe(&sentence) {
            Some(v) => cosine(image_vec, v)? > threshold,
            None => match policy {
                MissingProbePolicy::Strict => return Err(Error::MissingProbe(sentence)),
                MissingProbePolicy::KeepFp => {
                    log::debug!("no probe embedding for {sentence:?}; keeping it as a false positive");
                    missing.insert(sentence);
                    false
                }
            },
        };
        verdicts.insert(t, rescued);
    }

    let categories = m
        .categories
        .iter()
        .map(|(&task, c)| {
            let (ac, fp_new): (BTreeSet<SgTuple>, BTreeSet<SgTuple>) =
                c.fp_raw.iter().cloned().partition(|t| verdicts[t]);
            let judged = JudgedCategory {
                tp: c.tp.clone(),
                fp_raw: c.fp_raw.clone(),
                fp_new,
                ac,
                fn_: c.fn_.clone(),
            };
            (task, judged)
        })
        .collect();
    Ok(JudgedMatchResult {
        categories,
        candidate_total: m.candidate_total,
        reference_total: m.reference_total,
        threshold_used: threshold,
        missing_probes: missing.into_iter().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sg::{match_graphs, GraphSource, TaskVocab};
    use proptest::prelude::*;

    fn single_fp(tuple: SgTuple) -> TextMatchResult {
        let cand = SceneGraph::from_tuples(GraphSource::Candidate, [tuple]);
        let refr = SceneGraph::new(GraphSource::Reference);
        match_graphs(&cand, &refr, &SynonymLexicon::default(), &TaskVocab::builtin())
    }

    /// Unit probe vector at angle `acos(c)` from the image vector (1, 0).
    fn probes_with_cosine(sentence: &str, c: f64) -> HashMap<String, Vec<f32>> {
        let s = (1.0 - c * c).sqrt();
        [(sentence.to_string(), vec![c as f32, s as f32])].into()
    }

    #[test]
    fn probe_templates() {
        assert_eq!(probe_sentence(&SgTuple::object("car").unwrap()), "a photo of a car");
        assert_eq!(probe_sentence(&SgTuple::attribute("car", "gray").unwrap()), "a photo of a gray car");
        assert_eq!(
            probe_sentence(&SgTuple::relation("car", "on", "street").unwrap()),
            "a photo of a car on a street"
        );
    }

    #[test]
    fn above_threshold_moves_to_ac() {
        let car = SgTuple::object("car").unwrap();
        let m = single_fp(car.clone());
        let j = judge(&m, &[1.0, 0.0], &probes_with_cosine("a photo of a car", 0.31), 0.25, MissingProbePolicy::Strict).unwrap();
        assert!(j.get(TaskCategory::Object).ac.contains(&car));
        assert!(j.get(TaskCategory::Object).fp_new.is_empty());
    }

    #[test]
    fn boundary_stays_false_positive() {
        let m = single_fp(SgTuple::object("car").unwrap());
        // cosine of e1 with the all-ones vector in 16 dimensions is exactly 1/4
        let mut image = vec![0.0f32; 16];
        image[0] = 1.0;
        let probes: HashMap<String, Vec<f32>> = [("a photo of a car".to_string(), vec![1.0f32; 16])].into();
        assert_eq!(cosine(&image, &probes["a photo of a car"]).unwrap(), 0.25);
        let j = judge(&m, &image, &probes, 0.25, MissingProbePolicy::Strict).unwrap();
        assert!(j.get(TaskCategory::Object).ac.is_empty());
        assert_eq!(j.get(TaskCategory::Object).fp_new.len(), 1);
    }

    #[test]
    fn threshold_above_one_rescues_nothing() {
        let m = single_fp(SgTuple::object("car").unwrap());
        let j = judge(&m, &[1.0, 0.0], &probes_with_cosine("a photo of a car", 1.0), 1.1, MissingProbePolicy::Strict).unwrap();
        assert!(j.get(TaskCategory::Object).ac.is_empty());
    }

    #[test]
    fn missing_probe_policies() {
        let m = single_fp(SgTuple::object("car").unwrap());
        let empty: HashMap<String, Vec<f32>> = HashMap::new();
        assert!(matches!(
            judge(&m, &[1.0], &empty, 0.25, MissingProbePolicy::Strict),
            Err(Error::MissingProbe(_))
        ));
        let j = judge(&m, &[1.0], &empty, 0.25, MissingProbePolicy::KeepFp).unwrap();
        assert_eq!(j.get(TaskCategory::Object).fp_new.len(), 1);
        assert_eq!(j.missing_probes, vec!["a photo of a car".to_string()]);
    }

    #[test]
    fn zero_vector_never_rescues() {
        let m = single_fp(SgTuple::object("car").unwrap());
        let j = judge(&m, &[0.0, 0.0], &probes_with_cosine("a photo of a car", 1.0), 0.0, MissingProbePolicy::Strict).unwrap();
        assert!(j.get(TaskCategory::Object).ac.is_empty());
    }

    #[test]
    fn warning_band() {
        assert!(threshold_warning(0.25).is_none());
        assert!(threshold_warning(0.6).is_some());
        assert_eq!("keep-fp".parse::<MissingProbePolicy>().unwrap(), MissingProbePolicy::KeepFp);
    }

    proptest! {
        #[test]
        fn ac_shrinks_as_threshold_rises(
            cosines in proptest::collection::vec(-1.0f64..1.0, 1..8),
            t1 in -1.0f64..1.2,
            dt in 0.0f64..1.0,
        ) {
            let tuples: Vec<SgTuple> = (0..cosines.len()).map(|i| SgTuple::object(&format!("thing{i}")).unwrap()).collect();
            let cand = SceneGraph::from_tuples(GraphSource::Candidate, tuples.clone());
            let m = match_graphs(&cand, &SceneGraph::new(GraphSource::Reference), &SynonymLexicon::default(), &TaskVocab::builtin());
            let mut probes = HashMap::new();
            for (t, &c) in tuples.iter().zip(&cosines) {
                probes.insert(probe_sentence(t), vec![c as f32, (1.0 - c * c).sqrt() as f32]);
            }
            let a = judge(&m, &[1.0, 0.0], &probes, t1, MissingProbePolicy::Strict).unwrap();
            let b = judge(&m, &[1.0, 0.0], &probes, t1 + dt, MissingProbePolicy::Strict).unwrap();
            let (a, b) = (a.get(TaskCategory::Object), b.get(TaskCategory::Object));
            prop_assert!(b.ac.is_subset(&a.ac));
            prop_assert_eq!(a.ac.len() + a.fp_new.len(), a.fp_raw.len());
            prop_assert!(a.ac.is_disjoint(&a.fp_new));
        }
    }
}
