mod common;

use argugraph_core::critique::{
    detect_structural, support_cycles, Pattern, PatternBank, PatternCategory, PatternKind, Severity,
    StructuralSignature,
};
use argugraph_core::graph::ArgumentGraph;
use proptest::prelude::*;

use common::*;

fn bank() -> PatternBank {
    let p = |id: &str, sig| Pattern {
        id: id.into(),
        name: id.into(),
        category: PatternCategory::Fallacy,
        kind: PatternKind::Structural,
        structural_signature: Some(sig),
        prompt_template: None,
        description: String::new(),
        severity: Severity::Warning,
    };
    PatternBank {
        version: "1".into(),
        patterns: vec![
            p("circular_reasoning", StructuralSignature::Cycle),
            p("contradictory_pair", StructuralSignature::ContradictoryPair),
            p("unsupported_claim", StructuralSignature::UnsupportedClaim),
            p("isolated_node", StructuralSignature::IsolatedNode),
        ],
    }
}

fn detected(graph: &ArgumentGraph) -> StructuralTruth {
    let findings = detect_structural(graph, &bank()).unwrap();
    let mut truth = StructuralTruth::default();
    for f in findings {
        match f.pattern_id.as_str() {
            "circular_reasoning" => {
                assert!(truth.cycles.insert(f.involved_node_ids.clone()), "cycle reported twice");
            }
            "contradictory_pair" => {
                let pair = (f.involved_node_ids[0].clone(), f.involved_node_ids[1].clone());
                assert!(truth.contradictory_pairs.insert(pair));
            }
            "unsupported_claim" => {
                assert!(truth.unsupported.insert(f.involved_node_ids[0].clone()));
            }
            "isolated_node" => {
                assert!(truth.isolated.insert(f.involved_node_ids[0].clone()));
            }
            other => panic!("unexpected pattern {other}"),
        }
    }
    truth
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn matches_brute_force(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), 8, 1.0);
        prop_assert_eq!(detected(&g), brute_force_structure(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn findings_are_sorted_resolvable_and_stable(seed in any::<u64>()) {
        let g = random_graph(&mut rng(seed), 8, 1.0);
        let findings = detect_structural(&g, &bank()).unwrap();
        prop_assert_eq!(&findings, &detect_structural(&g, &bank()).unwrap());
        let keys: Vec<_> = findings
            .iter()
            .map(|f| (f.pattern_id.clone(), f.involved_node_ids.iter().min().cloned()))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        prop_assert_eq!(keys, sorted);
        for f in &findings {
            prop_assert!(!f.involved_node_ids.is_empty() || !f.involved_edge_ids.is_empty());
            prop_assert!(f.involved_node_ids.iter().all(|id| g.node(id).is_some()));
            prop_assert!(f.involved_edge_ids.iter().all(|id| g.edge(id).is_some()));
        }
        // cycle edges really connect consecutive cycle nodes
        for c in support_cycles(&g) {
            for (k, edge_id) in c.edges.iter().enumerate() {
                let e = g.edge(edge_id).unwrap();
                prop_assert_eq!(&e.source_id, &c.nodes[k]);
                prop_assert_eq!(&e.target_id, &c.nodes[(k + 1) % c.nodes.len()]);
            }
        }
    }

    #[test]
    fn removing_an_edge_never_adds_a_cycle(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let g = random_graph(&mut rng(seed), 8, 1.0);
        prop_assume!(!g.edges.is_empty());
        let before = detected(&g).cycles;
        let mut smaller = g.clone();
        let id = pick.get(&g.edges).id.clone();
        smaller.remove_edge(&id).unwrap();
        prop_assert!(detected(&smaller).cycles.is_subset(&before));
    }
}
