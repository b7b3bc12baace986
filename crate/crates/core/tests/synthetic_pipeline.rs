use corrobe_core::graphs::GraphProvider;
use corrobe_core::judgment::MissingProbePolicy;
use corrobe_core::patterns::{discover, embedding_triple, DiscoveryItem, DiscoveryParams};
use corrobe_core::sg::{SynonymLexicon, TaskCategory, TaskVocab};
use corrobe_core::synthetic::{fixture_cluster_params, SyntheticDataset, SEEDED_KEY, SEEDED_TASK};
use corrobe_core::tasks::{analyze_tasks, JudgmentSetup, TaskAnalysis};

fn analyse(d: &SyntheticDataset, key: &str) -> TaskAnalysis {
    let setup = JudgmentSetup {
        image_embeddings: &d.image_embeddings,
        probes: &d.probe_embeddings,
        threshold: 0.25,
        policy: MissingProbePolicy::Strict,
    };
    analyze_tasks(
        &d.manifest,
        key,
        &GraphProvider::default(),
        &SynonymLexicon::builtin(),
        &TaskVocab::builtin(),
        &setup,
    )
    .unwrap()
}

fn err(a: &TaskAnalysis, task: TaskCategory) -> f64 {
    a.summaries.iter().find(|s| s.task == task).unwrap().err.unwrap()
}

#[test]
fn seeded_colour_errors_surface_and_cluster() {
    let d = SyntheticDataset::generate(7).unwrap();
    let clean = analyse(&d, "clean");
    let corrupted = analyse(&d, SEEDED_KEY);
    assert!(err(&corrupted, SEEDED_TASK) > err(&clean, SEEDED_TASK));
    assert_eq!(err(&clean, SEEDED_TASK), 0.0);

    let vocab = TaskVocab::builtin();
    let items: Vec<DiscoveryItem> = corrupted
        .records
        .iter()
        .filter(|r| r.task == SEEDED_TASK && r.attempted())
        .map(|r| {
            let inst = d.manifest.get(&r.image_id).unwrap();
            DiscoveryItem {
                triple: embedding_triple(&r.image_id, SEEDED_KEY, inst.ground_truths.len(), &d.image_embeddings, &d.text_embeddings)
                    .unwrap(),
                graph: GraphProvider::default().candidate(SEEDED_KEY, inst).unwrap(),
            }
        })
        .collect();
    assert_eq!(items.len(), 20);
    let model = discover(
        SEEDED_TASK,
        SEEDED_KEY,
        &items,
        &DiscoveryParams {
            alpha: 0.1,
            clustering: fixture_cluster_params(),
            vocab: &vocab,
            external_coords: None,
        },
    )
    .unwrap();
    let best = model
        .clusters
        .iter()
        .map(|c| model.members(c.label).filter(|id| d.seeded_ids.iter().any(|s| s == id)).count())
        .max()
        .unwrap();
    assert!(best * 10 >= d.seeded_ids.len() * 8, "labels {:?}", model.labels);
}
