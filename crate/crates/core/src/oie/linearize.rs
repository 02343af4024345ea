//! Breadth-first graph linearization back into token text.
//!
//! Traversal starts at the highest-weight node (ties: lexicographically
//! smaller canonical phrase) of each connected component; components are
//! visited in descending max-node-weight order. At each node the incident
//! edges are scanned by descending edge weight (ties: descending neighbor
//! weight, then neighbor phrase, then edge id) and every not-yet-emitted edge
//! contributes "src predicate dst" in its true direction, enqueueing unseen
//! neighbors. Isolated nodes are emitted alone, so every node appears at
//! least once and every edge exactly once.

use std::collections::VecDeque;

use super::KnowledgeGraph;

/// The linearized graph as a flat token sequence.
pub fn linearize(graph: &KnowledgeGraph) -> Vec<String> {
    let n = graph.nodes.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &graph.edges {
        adjacency[e.src].push(e.edge_id);
        if e.dst != e.src {
            adjacency[e.dst].push(e.edge_id);
        }
    }
    for (node, edge_ids) in adjacency.iter_mut().enumerate() {
        edge_ids.sort_by(|&a, &b| {
            let (ea, eb) = (&graph.edges[a], &graph.edges[b]);
            let other = |e: &super::Edge| if e.src == node { e.dst } else { e.src };
            let (na, nb) = (&graph.nodes[other(ea)], &graph.nodes[other(eb)]);
            eb.weight
                .cmp(&ea.weight)
                .then(nb.weight.cmp(&na.weight))
                .then(na.canonical_phrase.cmp(&nb.canonical_phrase))
                .then(a.cmp(&b))
        });
    }

    // components over the undirected adjacency
    let mut component = vec![usize::MAX; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = Vec::new();
        let mut stack = vec![start];
        component[start] = id;
        while let Some(u) = stack.pop() {
            members.push(u);
            for &e in &adjacency[u] {
                let edge = &graph.edges[e];
                let v = if edge.src == u { edge.dst } else { edge.src };
                if component[v] == usize::MAX {
                    component[v] = id;
                    stack.push(v);
                }
            }
        }
        components.push(members);
    }

    // best node per component drives both the start and the component order
    let best = |members: &[usize]| {
        members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                graph.nodes[b]
                    .weight
                    .cmp(&graph.nodes[a].weight)
                    .then(graph.nodes[a].canonical_phrase.cmp(&graph.nodes[b].canonical_phrase))
            })
            .expect("components are non-empty")
    };
    let mut order: Vec<(usize, Vec<usize>)> = components.into_iter().map(|m| (best(&m), m)).collect();
    order.sort_by(|a, b| {
        graph.nodes[b.0]
            .weight
            .cmp(&graph.nodes[a.0].weight)
            .then(graph.nodes[a.0].canonical_phrase.cmp(&graph.nodes[b.0].canonical_phrase))
    });

    let mut tokens: Vec<String> = Vec::new();
    let push_phrase = |tokens: &mut Vec<String>, phrase: &str| {
        tokens.extend(phrase.split(' ').map(String::from));
    };
    let mut edge_emitted = vec![false; graph.edges.len()];
    for (start, members) in order {
        if members.len() == 1 && adjacency[start].is_empty() {
            push_phrase(&mut tokens, &graph.nodes[start].canonical_phrase);
            continue;
        }
        let mut visited = vec![false; n];
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &e in &adjacency[u] {
                if edge_emitted[e] {
                    continue;
                }
                edge_emitted[e] = true;
                let edge = &graph.edges[e];
                push_phrase(&mut tokens, &graph.nodes[edge.src].canonical_phrase);
                push_phrase(&mut tokens, &edge.predicate_phrase);
                push_phrase(&mut tokens, &graph.nodes[edge.dst].canonical_phrase);
                let v = if edge.src == u { edge.dst } else { edge.src };
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    tokens
}

/// Convenience: the linearization joined into one string.
pub fn linearized_text(graph: &KnowledgeGraph) -> String {
    linearize(graph).join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oie::{Edge, Node, PhraseSpan};

    fn node(id: usize, phrase: &str, weight: usize) -> Node {
        Node {
            node_id: id,
            canonical_phrase: phrase.to_string(),
            weight,
            member_spans: vec![PhraseSpan { doc_id: "d".into(), range: (id, id + 1), text: phrase.to_string() }],
        }
    }

    fn edge(id: usize, pred: &str, weight: usize, src: usize, dst: usize) -> Edge {
        Edge {
            edge_id: id,
            predicate_phrase: pred.to_string(),
            weight,
            src,
            dst,
            member_spans: vec![],
        }
    }

    #[test]
    fn empty_graph_linearizes_to_nothing() {
        assert!(linearize(&KnowledgeGraph::default()).is_empty());
    }

    #[test]
    fn edges_follow_descending_weight_from_the_heaviest_node() {
        let graph = KnowledgeGraph {
            nodes: vec![node(0, "a", 3), node(1, "b", 2), node(2, "c", 1)],
            edges: vec![edge(0, "predab", 2, 0, 1), edge(1, "predac", 1, 0, 2)],
            triplets: vec![],
            triplet_nodes: vec![],
        };
        assert_eq!(linearize(&graph), ["a", "predab", "b", "a", "predac", "c"]);
    }

    #[test]
    fn isolated_nodes_appear_alone_in_component_order() {
        let graph = KnowledgeGraph {
            nodes: vec![node(0, "lonely", 1), node(1, "popular", 5)],
            edges: vec![],
            triplets: vec![],
            triplet_nodes: vec![],
        };
        assert_eq!(linearize(&graph), ["popular", "lonely"]);
    }

    #[test]
    fn every_node_appears_and_every_edge_appears_once() {
        // a triangle plus a directed-away node: b→a, b→c, a→c, d isolated
        let graph = KnowledgeGraph {
            nodes: vec![node(0, "a", 4), node(1, "b", 3), node(2, "c", 2), node(3, "d", 1)],
            edges: vec![edge(0, "p", 2, 1, 0), edge(1, "q", 1, 1, 2), edge(2, "r", 3, 0, 2)],
            triplets: vec![],
            triplet_nodes: vec![],
        };
        let tokens = linearize(&graph);
        for name in ["a", "b", "c", "d"] {
            assert!(tokens.contains(&name.to_string()), "{name} missing from {tokens:?}");
        }
        for pred in ["p", "q", "r"] {
            assert_eq!(tokens.iter().filter(|t| *t == pred).count(), 1, "{pred} emitted more than once");
        }
        // the incoming edge b→a is still emitted in its true direction
        let p_at = tokens.iter().position(|t| t == "p").unwrap();
        assert_eq!(tokens[p_at - 1], "b");
        assert_eq!(tokens[p_at + 1], "a");
    }

    #[test]
    fn multi_word_phrases_split_into_tokens() {
        let graph = KnowledgeGraph {
            nodes: vec![node(0, "the applicant", 2), node(1, "the court", 1)],
            edges: vec![edge(0, "was arrested by", 1, 0, 1)],
            triplets: vec![],
            triplet_nodes: vec![],
        };
        assert_eq!(
            linearize(&graph),
            ["the", "applicant", "was", "arrested", "by", "the", "court"]
        );
    }

    #[test]
    fn linearization_is_deterministic() {
        let graph = KnowledgeGraph {
            nodes: vec![node(0, "a", 2), node(1, "b", 2), node(2, "c", 2)],
            edges: vec![edge(0, "p", 1, 0, 1), edge(1, "q", 1, 1, 2), edge(2, "r", 1, 2, 0)],
            triplets: vec![],
            triplet_nodes: vec![],
        };
        let first = linearize(&graph);
        for _ in 0..5 {
            assert_eq!(linearize(&graph), first);
        }
    }
}
