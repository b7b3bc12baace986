use std::collections::{BTreeMap, BTreeSet};

use crate::sg::{categorize, SceneGraph, SgTuple, TaskCategory, TaskVocab};

/// The element a tuple contributes to a label for `task`, if any.
pub fn task_element(t: &SgTuple, task: TaskCategory, vocab: &TaskVocab) -> Option<String> {
    if !categorize(t, vocab).contains(&task) {
        return None;
    }
    match t {
        SgTuple::Object(h) => Some(h.clone()),
        SgTuple::Attribute(h, a) => Some(format!("{h} {a}")),
        SgTuple::Relation(_, r, _) => Some(r.clone()),
    }
}

/// Most frequent task element across the member graphs, each graph counting
/// an element once; ties go to the lexicographically smallest. `None` when no
/// member mentions the task.
pub fn centroid_label<'a>(
    graphs: impl IntoIterator<Item = &'a SceneGraph>,
    task: TaskCategory,
    vocab: &TaskVocab,
) -> Option<String> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for g in graphs {
        let elements: BTreeSet<String> = g.iter().filter_map(|t| task_element(t, task, vocab)).collect();
        for e in elements {
            *counts.entry(e).or_default() += 1;
        }
    }
    // BTreeMap iterates in ascending order, so keeping the first maximum breaks ties lexicographically.
    let mut best: Option<(String, usize)> = None;
    for (e, c) in counts {
        if best.as_ref().is_none_or(|(_, bc)| c > *bc) {
            best = Some((e, c));
        }
    }
    best.map(|(e, _)| e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sg::TemplateParser;

    #[test]
    fn colour_label_is_head_attribute_bigram() {
        let g = TemplateParser::builtin().parse("a gray car");
        assert_eq!(centroid_label([&g], TaskCategory::Color, &TaskVocab::builtin()).as_deref(), Some("car gray"));
    }

    #[test]
    fn ties_break_lexicographically() {
        let p = TemplateParser::builtin();
        let (a, b) = (p.parse("a car"), p.parse("a bus"));
        assert_eq!(centroid_label([&a, &b], TaskCategory::Object, &TaskVocab::builtin()).as_deref(), Some("bus"));
    }

    #[test]
    fn relation_label_and_absent_task() {
        let p = TemplateParser::builtin();
        let gs = [p.parse("a car on a street"), p.parse("a dog on a road"), p.parse("a cat near a tree")];
        let vocab = TaskVocab::builtin();
        assert_eq!(centroid_label(&gs, TaskCategory::Relation, &vocab).as_deref(), Some("on"));
        assert_eq!(centroid_label(&gs, TaskCategory::Size, &vocab), None);
    }
}
