use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};

pub const DEFAULT_SYNONYMS: &str = include_str!("../../data/synonyms.txt");

/// Disjoint synonym groups. The canonical form of a lexeme is the
/// lexicographically smallest member of its group.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    groups: Vec<BTreeSet<String>>,
    canonical: HashMap<String, String>,
}

impl SynonymLexicon {
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_SYNONYMS).expect("bundled synonym groups are valid")
    }

    pub fn from_groups<I, G, S>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut lex = SynonymLexicon::default();
        for group in groups {
            let members: BTreeSet<String> = group
                .into_iter()
                .map(|s| s.as_ref().trim().to_lowercase())
                .filter(|s| !s.is_empty())
                .collect();
            if members.len() < 2 {
                continue;
            }
            let head = members.iter().next().cloned().expect("non-empty group");
            for m in &members {
                if lex.canonical.insert(m.clone(), head.clone()).is_some() {
                    return Err(Error::config(format!(
                        "lexeme {m:?} appears in more than one synonym group"
                    )));
                }
            }
            lex.groups.push(members);
        }
        Ok(lex)
    }

    /// One comma-separated group per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_groups(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(|l| l.split(',').map(str::to_owned).collect::<Vec<_>>()),
        )
    }

    pub fn canonical<'a>(&'a self, lexeme: &'a str) -> &'a str {
        self.canonical.get(lexeme).map(String::as_str).unwrap_or(lexeme)
    }

    pub fn groups(&self) -> &[BTreeSet<String>] {
        &self.groups
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}
