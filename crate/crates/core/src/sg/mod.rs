//! Scene graphs as sets of object / attribute / relation tuples, task
//! categories, synonym canonicalisation and text-level matching.

mod lexicon;
mod matching;
mod parser;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use lexicon::SynonymLexicon;
pub use matching::{match_graphs, CategoryMatch, TextMatchResult};
pub use parser::TemplateParser;
pub use vocab::TaskVocab;

/// Built-in lexical resources.
pub mod defaults {
    pub use super::lexicon::DEFAULT_SYNONYMS as SYNONYMS;
    pub use super::vocab::{DEFAULT_COLORS as COLORS, DEFAULT_NUMBERS as NUMBERS, DEFAULT_SIZES as SIZES};
}

use crate::error::{Error, Result};

/// One scene-graph tuple: `(object)`, `(object, attribute)` or
/// `(object, relation, object)`. Lexemes are trimmed, lowercase and non-empty.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SgTuple {
    Object(String),
    Attribute(String, String),
    Relation(String, String, String),
}

fn lexeme(raw: &str) -> Result<String> {
    let lex = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if lex.is_empty() {
        return Err(Error::input("scene-graph lexeme is empty"));
    }
    Ok(lex)
}

impl SgTuple {
    pub fn object(head: &str) -> Result<Self> {
        Ok(SgTuple::Object(lexeme(head)?))
    }

    pub fn attribute(head: &str, attr: &str) -> Result<Self> {
        Ok(SgTuple::Attribute(lexeme(head)?, lexeme(attr)?))
    }

    pub fn relation(head: &str, rel: &str, tail: &str) -> Result<Self> {
        Ok(SgTuple::Relation(lexeme(head)?, lexeme(rel)?, lexeme(tail)?))
    }

    pub fn from_parts<S: AsRef<str>>(parts: &[S]) -> Result<Self> {
        match parts {
            [h] => Self::object(h.as_ref()),
            [h, a] => Self::attribute(h.as_ref(), a.as_ref()),
            [h, r, t] => Self::relation(h.as_ref(), r.as_ref(), t.as_ref()),
            _ => Err(Error::input(format!(
                "scene-graph tuple must have 1 to 3 elements, got {}",
                parts.len()
            ))),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SgTuple::Object(_) => 1,
            SgTuple::Attribute(..) => 2,
            SgTuple::Relation(..) => 3,
        }
    }

    pub fn head(&self) -> &str {
        match self {
            SgTuple::Object(h) | SgTuple::Attribute(h, _) | SgTuple::Relation(h, _, _) => h,
        }
    }

    /// Attribute (arity 2) or relation (arity 3) lexeme.
    pub fn slot2(&self) -> Option<&str> {
        match self {
            SgTuple::Object(_) => None,
            SgTuple::Attribute(_, s) | SgTuple::Relation(_, s, _) => Some(s),
        }
    }

    pub fn slot3(&self) -> Option<&str> {
        match self {
            SgTuple::Relation(_, _, t) => Some(t),
            _ => None,
        }
    }

    pub fn parts(&self) -> Vec<&str> {
        match self {
            SgTuple::Object(h) => vec![h],
            SgTuple::Attribute(h, a) => vec![h, a],
            SgTuple::Relation(h, r, t) => vec![h, r, t],
        }
    }

    pub(crate) fn map_lexemes(&self, f: impl Fn(&str) -> String) -> SgTuple {
        match self {
            SgTuple::Object(h) => SgTuple::Object(f(h)),
            SgTuple::Attribute(h, a) => SgTuple::Attribute(f(h), f(a)),
            SgTuple::Relation(h, r, t) => SgTuple::Relation(f(h), f(r), f(t)),
        }
    }
}

impl fmt::Display for SgTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.parts().join(", "))
    }
}

impl Serialize for SgTuple {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.parts().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SgTuple {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let parts = Vec::<String>::deserialize(d)?;
        SgTuple::from_parts(&parts).map_err(D::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphSource {
    #[default]
    Candidate,
    Reference,
}

/// Deduplicated set of tuples.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub tuples: BTreeSet<SgTuple>,
    #[serde(default)]
    pub source: GraphSource,
}

impl SceneGraph {
    pub fn new(source: GraphSource) -> Self {
        Self {
            tuples: BTreeSet::new(),
            source,
        }
    }

    pub fn from_tuples(source: GraphSource, tuples: impl IntoIterator<Item = SgTuple>) -> Self {
        Self {
            tuples: tuples.into_iter().collect(),
            source,
        }
    }

    pub fn insert(&mut self, t: SgTuple) -> bool {
        self.tuples.insert(t)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SgTuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, t: &SgTuple) -> bool {
        self.tuples.contains(t)
    }
}

/// The six analysis tasks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskCategory {
    Object,
    Attribute,
    Relation,
    Color,
    Count,
    Size,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 6] = [
        TaskCategory::Object,
        TaskCategory::Attribute,
        TaskCategory::Relation,
        TaskCategory::Color,
        TaskCategory::Count,
        TaskCategory::Size,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskCategory::Object => "object",
            TaskCategory::Attribute => "attribute",
            TaskCategory::Relation => "relation",
            TaskCategory::Color => "color",
            TaskCategory::Count => "count",
            TaskCategory::Size => "size",
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskCategory::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown task {s:?}")))
    }
}

/// Task categories a tuple belongs to; never empty.
pub fn categorize(tuple: &SgTuple, vocab: &TaskVocab) -> BTreeSet<TaskCategory> {
    let mut cats = BTreeSet::new();
    match tuple {
        SgTuple::Object(_) => {
            cats.insert(TaskCategory::Object);
        }
        SgTuple::Relation(..) => {
            cats.insert(TaskCategory::Relation);
        }
        SgTuple::Attribute(_, attr) => {
            cats.insert(TaskCategory::Attribute);
            if vocab.is_color(attr) {
                cats.insert(TaskCategory::Color);
            }
            if vocab.is_count(attr) {
                cats.insert(TaskCategory::Count);
            }
            if vocab.is_size(attr) {
                cats.insert(TaskCategory::Size);
            }
        }
    }
    cats
}

/// Replace every lexeme by its canonical synonym; the set may shrink.
pub fn canonicalize(sg: &SceneGraph, lex: &SynonymLexicon) -> SceneGraph {
    SceneGraph {
        tuples: sg
            .tuples
            .iter()
            .map(|t| t.map_lexemes(|l| lex.canonical(l).to_owned()))
            .collect(),
        source: sg.source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(parts: &[&str]) -> SgTuple {
        SgTuple::from_parts(parts).unwrap()
    }

    #[test]
    fn lexemes_are_normalised() {
        assert_eq!(t(&["  Car "]), SgTuple::Object("car".into()));
        assert_eq!(
            t(&["building", "On  Either side of", "street"]).slot2(),
            Some("on either side of")
        );
        assert!(SgTuple::from_parts(&["  "]).is_err());
        assert!(SgTuple::from_parts::<&str>(&[]).is_err());
        assert!(SgTuple::from_parts(&["a", "b", "c", "d"]).is_err());
    }

    #[test]
    fn arity_fixes_slots() {
        let r = t(&["car", "on", "street"]);
        assert_eq!((r.arity(), r.head(), r.slot2(), r.slot3()), (3, "car", Some("on"), Some("street")));
        let o = t(&["car"]);
        assert_eq!((o.arity(), o.slot2(), o.slot3()), (1, None, None));
    }

    #[test]
    fn tuple_serialises_as_array() {
        let json = serde_json::to_string(&t(&["car", "gray"])).unwrap();
        assert_eq!(json, r#"["car","gray"]"#);
        let back: SgTuple = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t(&["car", "gray"]));
    }

    #[test]
    fn categorize_examples() {
        let vocab = TaskVocab::builtin();
        use TaskCategory::*;
        assert_eq!(categorize(&t(&["car", "gray"]), &vocab), [Attribute, Color].into());
        assert_eq!(categorize(&t(&["car", "two"]), &vocab), [Attribute, Count].into());
        assert_eq!(categorize(&t(&["car", "12"]), &vocab), [Attribute, Count].into());
        assert_eq!(categorize(&t(&["building", "small"]), &vocab), [Attribute, Size].into());
        assert_eq!(categorize(&t(&["street", "winding"]), &vocab), [Attribute].into());
        assert_eq!(
            categorize(&t(&["building", "on either side of", "street"]), &vocab),
            [Relation].into()
        );
        assert_eq!(categorize(&t(&["car"]), &vocab), [Object].into());
    }

    #[test]
    fn canonicalize_examples() {
        let lex = SynonymLexicon::from_groups([vec!["auto", "car"]]).unwrap();
        let g = SceneGraph::from_tuples(GraphSource::Candidate, [t(&["auto"])]);
        assert_eq!(canonicalize(&g, &lex).tuples, [t(&["auto"])].into());
        let g = SceneGraph::from_tuples(GraphSource::Candidate, [t(&["car"]), t(&["auto"])]);
        assert_eq!(canonicalize(&g, &lex).len(), 1);
        let g = SceneGraph::from_tuples(GraphSource::Candidate, [t(&["car", "on", "road"])]);
        assert_eq!(canonicalize(&g, &SynonymLexicon::default()), g);
    }

    #[test]
    fn task_names_round_trip() {
        for task in TaskCategory::ALL {
            assert_eq!(task.as_str().parse::<TaskCategory>().unwrap(), task);
        }
        assert!("shape".parse::<TaskCategory>().is_err());
    }
}
