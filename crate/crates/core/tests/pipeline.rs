//! Library-level end-to-end flows: synth corpus -> graph -> training ->
//! experiment, plus file round-trips between the stages.

use persona_graph::corpus::Dataset;
use persona_graph::experiment::{run_experiment, ExperimentSpec, FeatureKind, VariantSpec};
use persona_graph::features::{load_embeddings, save_embeddings_binary, save_embeddings_jsonl};
use persona_graph::graph::{build_graph, CosineScorer, PersonaGraph};
use persona_graph::model::TrainConfig;
use persona_graph::synth::generate_synthetic_corpus;
use persona_graph::train::Variant;

#[test]
fn noise_free_separable_data_reaches_f1_95_for_both_variants() {
    let (ds, features) = generate_synthetic_corpus(240, 8, 4, 0.0, 31).unwrap();
    let graph = build_graph(&features, 5, &CosineScorer::new(&features)).unwrap();
    let spec = ExperimentSpec {
        variants: vec![
            VariantSpec {
                feature: FeatureKind::Embeddings,
                model: Variant::Fused,
            },
            VariantSpec {
                feature: FeatureKind::Embeddings,
                model: Variant::Linear,
            },
        ],
        fractions: vec![1.0],
        runs: 1,
        base_seed: 5,
        config: TrainConfig {
            epochs: 80,
            batch_size: 512,
            lr_head: 5e-3,
            lr_gnn: 1e-2,
            hidden_dim: 16,
            dropout_rate: 0.0,
            ..TrainConfig::default()
        },
        linear_epochs: 500,
        ..ExperimentSpec::default()
    };
    let report = run_experiment(&ds, Some(&features), &graph, &spec).unwrap();
    for cell in &report.cells {
        assert!(
            cell.f1.mean >= 0.95,
            "{} reached only {:.4}",
            cell.variant,
            cell.f1.mean
        );
    }
}

#[test]
fn artifacts_roundtrip_through_files_between_stages() {
    let dir = tempfile::tempdir().unwrap();
    let (ds, features) = generate_synthetic_corpus(50, 8, 4, 0.1, 7).unwrap();

    let corpus_path = dir.path().join("corpus.jsonl");
    ds.save_jsonl(&corpus_path).unwrap();
    let ds2 = Dataset::load_jsonl(&corpus_path).unwrap();
    assert_eq!(ds, ds2);

    let emb_a = dir.path().join("emb.jsonl");
    save_embeddings_jsonl(&features, &emb_a).unwrap();
    let loaded_a = load_embeddings(&emb_a, &ds2).unwrap();
    assert_eq!(loaded_a, features);

    // Binary format quantizes to f32; reload its own output losslessly.
    let emb_b = dir.path().join("emb.bin");
    save_embeddings_binary(&features, &emb_b).unwrap();
    let loaded_b = load_embeddings(&emb_b, &ds2).unwrap();
    let emb_b2 = dir.path().join("emb2.bin");
    save_embeddings_binary(&loaded_b, &emb_b2).unwrap();
    let reloaded_b = load_embeddings(&emb_b2, &ds2).unwrap();
    assert_eq!(loaded_b, reloaded_b);
    for (x, y) in features.values.iter().zip(loaded_b.values.iter()) {
        assert!((x - y).abs() < 1e-6);
    }

    let graph = build_graph(&loaded_a, 4, &CosineScorer::new(&loaded_a)).unwrap();
    let graph_path = dir.path().join("graph.json");
    graph.save(&graph_path).unwrap();
    let graph2 = PersonaGraph::load(&graph_path).unwrap();
    assert_eq!(graph, graph2);
}
