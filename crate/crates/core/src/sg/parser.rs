//! Rule-based parser for template-grammar captions.
//!
//! Grammar: a sequence of noun phrases `[article] adjective* noun` joined by
//! relation phrases from a closed list. The first noun phrase is the subject;
//! every later noun phrase preceded by a relation yields
//! `(subject, relation, noun)`. Adjectives attach to the noun that follows
//! them. Words outside the closed lists are skipped and drop any adjectives
//! collected so far.

use std::collections::{BTreeSet, HashMap};

use super::vocab::{word_list, DEFAULT_COLORS, DEFAULT_NUMBERS, DEFAULT_SIZES};
use super::{GraphSource, SceneGraph, SgTuple};

const DEFAULT_NOUNS: &str = include_str!("../../data/nouns.txt");
const DEFAULT_ATTRIBUTES: &str = include_str!("../../data/attributes.txt");
const DEFAULT_RELATIONS: &str = include_str!("../../data/relations.txt");

const ARTICLES: [&str; 3] = ["a", "an", "the"];
const CONNECTORS: [&str; 2] = ["and", ","];

#[derive(Clone, Debug)]
pub struct TemplateParser {
    /// surface form -> singular lemma
    nouns: HashMap<String, String>,
    adjectives: BTreeSet<String>,
    /// relation phrases as token lists, longest first
    relations: Vec<Vec<String>>,
}

impl Default for TemplateParser {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateParser {
    pub fn builtin() -> Self {
        let mut adjectives = word_list(DEFAULT_ATTRIBUTES);
        adjectives.extend(word_list(DEFAULT_COLORS));
        adjectives.extend(word_list(DEFAULT_SIZES));
        adjectives.extend(word_list(DEFAULT_NUMBERS));
        Self::new(DEFAULT_NOUNS, adjectives, DEFAULT_RELATIONS)
    }

    /// `nouns`: one `singular [plural]` entry per line; regular plurals are derived.
    pub fn new(nouns: &str, adjectives: BTreeSet<String>, relations: &str) -> Self {
        let mut table = HashMap::new();
        for line in word_list(nouns) {
            let mut parts = line.split_whitespace();
            let Some(lemma) = parts.next() else { continue };
            for surface in regular_plurals(lemma) {
                table.entry(surface).or_insert_with(|| lemma.to_owned());
            }
            if let Some(irregular) = parts.next() {
                table.insert(irregular.to_owned(), lemma.to_owned());
            }
            table.insert(lemma.to_owned(), lemma.to_owned());
        }
        let mut relations: Vec<Vec<String>> = word_list(relations)
            .into_iter()
            .map(|r| r.split_whitespace().map(str::to_owned).collect())
            .collect();
        relations.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Self {
            nouns: table,
            adjectives,
            relations,
        }
    }

    pub fn parse(&self, text: &str) -> SceneGraph {
        let tokens = tokenize(text);
        let mut graph = SceneGraph::new(GraphSource::Candidate);
        let mut subject: Option<String> = None;
        let mut adjectives: Vec<String> = Vec::new();
        let mut relation: Option<String> = None;

        let mut i = 0;
        while i < tokens.len() {
            let tok = tokens[i].as_str();
            if ARTICLES.contains(&tok) || CONNECTORS.contains(&tok) {
                i += 1;
                continue;
            }
            if let Some(len) = self.relation_at(&tokens[i..]) {
                relation = Some(tokens[i..i + len].join(" "));
                adjectives.clear();
                i += len;
                continue;
            }
            if is_digits(tok) || self.adjectives.contains(tok) {
                adjectives.push(tok.to_owned());
                i += 1;
                continue;
            }
            if let Some(lemma) = self.nouns.get(tok) {
                graph.insert(SgTuple::Object(lemma.clone()));
                for adj in adjectives.drain(..) {
                    graph.insert(SgTuple::Attribute(lemma.clone(), adj));
                }
                match (&subject, relation.take()) {
                    (None, _) => subject = Some(lemma.clone()),
                    (Some(subj), Some(rel)) => {
                        graph.insert(SgTuple::Relation(subj.clone(), rel, lemma.clone()));
                    }
                    (Some(_), None) => {}
                }
                i += 1;
                continue;
            }
            adjectives.clear();
            i += 1;
        }
        graph
    }

    fn relation_at(&self, tokens: &[String]) -> Option<usize> {
        self.relations
            .iter()
            .find(|rel| {
                rel.len() <= tokens.len() && rel.iter().zip(tokens).all(|(a, b)| a == b)
            })
            .map(Vec::len)
    }
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

fn regular_plurals(lemma: &str) -> Vec<String> {
    let mut forms = vec![format!("{lemma}s")];
    if ["s", "x", "z", "ch", "sh"].iter().any(|e| lemma.ends_with(e)) {
        forms.push(format!("{lemma}es"));
    }
    if let Some(stem) = lemma.strip_suffix('y') {
        if !stem.ends_with(['a', 'e', 'i', 'o', 'u']) {
            forms.push(format!("{stem}ies"));
        }
    }
    forms
}

/// Lowercase, split on whitespace, trim punctuation at token edges (inner
/// hyphens survive, so `building-lined` stays one unknown token).
fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}
