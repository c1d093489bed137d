//! Random graph generators and brute-force oracles shared by the property
//! and acceptance tests. Nothing here calls into the engine's scoring or
//! cycle-finding code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use argugraph_core::graph::{
    ArgumentGraph, ClaimType, NewEdge, NewEvidence, Origin, Polarity, QualitativeStrength, Relation,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const STRENGTHS: [QualitativeStrength; 6] = QualitativeStrength::ALL;

/// Evans band midpoints, written out independently of the engine.
pub fn band(strength: QualitativeStrength) -> f64 {
    match strength {
        QualitativeStrength::None => 0.0,
        QualitativeStrength::VeryWeak => 0.1,
        QualitativeStrength::Weak => 0.3,
        QualitativeStrength::Moderate => 0.5,
        QualitativeStrength::Strong => 0.7,
        QualitativeStrength::VeryStrong => 0.9,
    }
}

pub fn random_strength(rng: &mut impl Rng) -> QualitativeStrength {
    STRENGTHS[rng.random_range(0..STRENGTHS.len())]
}

fn random_claim_type(rng: &mut impl Rng) -> ClaimType {
    [ClaimType::Fact, ClaimType::Policy, ClaimType::Value][rng.random_range(0..3)]
}

fn random_origin(rng: &mut impl Rng) -> Origin {
    if rng.random_bool(0.3) {
        Origin::HumanOverride
    } else {
        Origin::Machine
    }
}

fn add_nodes(rng: &mut impl Rng, graph: &mut ArgumentGraph, n: usize, max_evidence: usize) {
    for i in 0..n {
        let id = format!("c{i}");
        graph
            .add_claim_with_id(id.clone(), format!("claim {i}"), random_claim_type(rng))
            .unwrap();
        for k in 0..rng.random_range(0..=max_evidence) {
            let polarity = if rng.random_bool(0.5) {
                Polarity::Supporting
            } else {
                Polarity::Negating
            };
            let mut ev = NewEvidence::new(format!("excerpt {i}.{k}"), polarity, random_strength(rng))
                .justification("because")
                .origin(random_origin(rng));
            if rng.random_bool(0.3) {
                ev = ev.source_document(format!("doc{k}"));
            }
            graph.add_evidence(&id, ev).unwrap();
        }
    }
}

fn try_edge(rng: &mut impl Rng, graph: &mut ArgumentGraph, s: &str, t: &str, relation: Relation) {
    let edge = NewEdge::new(s, t, relation, random_strength(rng))
        .justification(format!("{s} vs {t}"))
        .origin(random_origin(rng));
    let _ = graph.add_edge(edge);
}

fn random_relation(rng: &mut impl Rng) -> Relation {
    if rng.random_bool(0.6) {
        Relation::Support
    } else {
        Relation::Attack
    }
}

pub fn empty_graph(delta: f64) -> ArgumentGraph {
    let mut g = ArgumentGraph::new("random", "random graph", "2026-01-01T00:00:00Z");
    g.set_delta(delta).unwrap();
    g
}

/// Arbitrary graph, cycles allowed, both relations on a pair allowed.
pub fn random_graph(rng: &mut impl Rng, max_nodes: usize, delta: f64) -> ArgumentGraph {
    let mut g = empty_graph(delta);
    let n = rng.random_range(1..=max_nodes);
    add_nodes(rng, &mut g, n, 3);
    let density: f64 = rng.random_range(0.05..0.5);
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random_bool(density) {
                let relation = random_relation(rng);
                try_edge(rng, &mut g, &format!("c{s}"), &format!("c{t}"), relation);
                if rng.random_bool(0.1) {
                    let other = match relation {
                        Relation::Support => Relation::Attack,
                        Relation::Attack => Relation::Support,
                    };
                    try_edge(rng, &mut g, &format!("c{s}"), &format!("c{t}"), other);
                }
            }
        }
    }
    g.edges.shuffle(rng);
    g
}

/// Acyclic graph whose hidden topological order differs from insertion order.
pub fn random_dag(rng: &mut impl Rng, max_nodes: usize, delta: f64) -> ArgumentGraph {
    let mut g = empty_graph(delta);
    let n = rng.random_range(1..=max_nodes);
    add_nodes(rng, &mut g, n, 3);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let density: f64 = rng.random_range(0.05..0.6);
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.random_bool(density) {
                let relation = random_relation(rng);
                try_edge(
                    rng,
                    &mut g,
                    &format!("c{}", order[a]),
                    &format!("c{}", order[b]),
                    relation,
                );
            }
        }
    }
    g.edges.shuffle(rng);
    g
}

/// Cyclic graph where every node's incoming absolute weights sum to at most
/// `budget`.
pub fn random_contractive(rng: &mut impl Rng, max_nodes: usize, budget: f64, delta: f64) -> ArgumentGraph {
    let mut g = empty_graph(delta);
    let n = rng.random_range(2..=max_nodes);
    add_nodes(rng, &mut g, n, 3);
    // ring guarantees at least one cycle
    for i in 0..n {
        let strength = [
            QualitativeStrength::VeryWeak,
            QualitativeStrength::Weak,
            QualitativeStrength::Moderate,
        ][rng.random_range(0..3)];
        let edge = NewEdge::new(
            format!("c{i}"),
            format!("c{}", (i + 1) % n),
            random_relation(rng),
            strength,
        );
        g.add_edge(edge).unwrap();
    }
    for t in 0..n {
        let target = format!("c{t}");
        let mut used: f64 = g.incoming(&target).map(|e| band(e.strength)).sum();
        for _ in 0..n {
            let s = rng.random_range(0..n);
            let strength = random_strength(rng);
            if s == t || used + band(strength) > budget {
                continue;
            }
            let edge = NewEdge::new(format!("c{s}"), target.clone(), random_relation(rng), strength);
            if g.add_edge(edge).is_ok() {
                used += band(strength);
            }
        }
    }
    g
}

fn signed_edge(relation: Relation, strength: QualitativeStrength) -> f64 {
    match relation {
        Relation::Support => band(strength),
        Relation::Attack => -band(strength),
    }
}

fn evidence_mean(graph: &ArgumentGraph, id: &str) -> f64 {
    let node = graph.nodes.iter().find(|n| n.id == id).unwrap();
    if node.evidence.is_empty() {
        return 0.0;
    }
    let total: f64 = node
        .evidence
        .iter()
        .map(|e| match e.polarity {
            Polarity::Supporting => band(e.strength),
            Polarity::Negating => -band(e.strength),
        })
        .sum();
    total / node.evidence.len() as f64
}

/// Kahn ordering. `None` if the graph has a cycle.
pub fn topological_order(graph: &ArgumentGraph) -> Option<Vec<String>> {
    let mut indegree: BTreeMap<&str, usize> = graph.nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
    for e in &graph.edges {
        *indegree.get_mut(e.target_id.as_str()).unwrap() += 1;
    }
    let mut ready: Vec<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(id, _)| *id).collect();
    let mut order = Vec::new();
    while let Some(v) = ready.pop() {
        order.push(v.to_string());
        for e in graph.edges.iter().filter(|e| e.source_id == v) {
            let d = indegree.get_mut(e.target_id.as_str()).unwrap();
            *d -= 1;
            if *d == 0 {
                ready.push(e.target_id.as_str());
            }
        }
    }
    (order.len() == graph.nodes.len()).then_some(order)
}

/// Single pass in topological order using `std`'s `tanh`.
pub fn dag_oracle(graph: &ArgumentGraph, delta: f64) -> BTreeMap<String, f64> {
    let order = topological_order(graph).expect("graph must be acyclic");
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for id in order {
        let mut pre = delta * evidence_mean(graph, &id);
        for e in graph.edges.iter().filter(|e| e.target_id == id) {
            pre += signed_edge(e.relation, e.strength) * scores[&e.source_id];
        }
        scores.insert(id, pre.tanh());
    }
    scores
}

/// Number of edges on the longest directed path.
pub fn longest_path(graph: &ArgumentGraph) -> usize {
    let order = topological_order(graph).expect("graph must be acyclic");
    let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
    for id in &order {
        let d = graph
            .edges
            .iter()
            .filter(|e| &e.target_id == id)
            .map(|e| depth[e.source_id.as_str()] + 1)
            .max()
            .unwrap_or(0);
        depth.insert(id.as_str(), d);
    }
    depth.values().copied().max().unwrap_or(0)
}

/// `ceil(log(eps * (1 - L)) / log(L))`.
pub fn contraction_bound(epsilon: f64, lipschitz: f64) -> usize {
    ((epsilon * (1.0 - lipschitz)).ln() / lipschitz.ln()).ceil() as usize
}

/// Structural findings reduced to comparable keys.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct StructuralTruth {
    /// Node sequences, rotated to start at the smallest id.
    pub cycles: BTreeSet<Vec<String>>,
    pub contradictory_pairs: BTreeSet<(String, String)>,
    pub unsupported: BTreeSet<String>,
    pub isolated: BTreeSet<String>,
}

/// Exhaustive enumeration: every simple path is extended from every start
/// node, and a closing support edge back to the start yields a cycle.
pub fn brute_force_structure(graph: &ArgumentGraph) -> StructuralTruth {
    let ids: Vec<String> = graph.nodes.iter().map(|n| n.id.clone()).collect();
    let supports: BTreeSet<(String, String)> = graph
        .edges
        .iter()
        .filter(|e| e.relation == Relation::Support)
        .map(|e| (e.source_id.clone(), e.target_id.clone()))
        .collect();

    let mut cycles = BTreeSet::new();
    fn extend(
        path: &mut Vec<String>,
        ids: &[String],
        supports: &BTreeSet<(String, String)>,
        out: &mut BTreeSet<Vec<String>>,
    ) {
        let last = path.last().unwrap().clone();
        if path.len() >= 2 && supports.contains(&(last.clone(), path[0].clone())) {
            let min = path.iter().enumerate().min_by(|a, b| a.1.cmp(b.1)).unwrap().0;
            let mut rotated = path[min..].to_vec();
            rotated.extend_from_slice(&path[..min]);
            out.insert(rotated);
        }
        for next in ids {
            if !path.contains(next) && supports.contains(&(last.clone(), next.clone())) {
                path.push(next.clone());
                extend(path, ids, supports, out);
                path.pop();
            }
        }
    }
    for start in &ids {
        extend(&mut vec![start.clone()], &ids, &supports, &mut cycles);
    }

    let mut truth = StructuralTruth {
        cycles,
        ..Default::default()
    };
    for a in &ids {
        for b in &ids {
            let has = |rel| {
                graph
                    .edges
                    .iter()
                    .any(|e| &e.source_id == a && &e.target_id == b && e.relation == rel)
            };
            if has(Relation::Support) && has(Relation::Attack) {
                truth.contradictory_pairs.insert((a.clone(), b.clone()));
            }
        }
    }
    for node in &graph.nodes {
        let in_support = graph
            .edges
            .iter()
            .filter(|e| e.target_id == node.id && e.relation == Relation::Support)
            .count();
        let degree = graph
            .edges
            .iter()
            .filter(|e| e.target_id == node.id || e.source_id == node.id)
            .count();
        if node.evidence.is_empty() && in_support == 0 {
            truth.unsupported.insert(node.id.clone());
        }
        if node.evidence.is_empty() && degree == 0 {
            truth.isolated.insert(node.id.clone());
        }
    }
    truth
}
