//! Open-information-extraction pipeline: rule-based SVO triplets, a
//! lightweight pronoun resolver, TF-IDF phrase similarity, knowledge-graph
//! construction with node merging and triplet dedup, causal attention masks
//! derived from the graph, and breadth-first linearization back into text.

mod extract;
mod graph;
mod lexicon;
mod linearize;
mod mask;
mod tfidf;

pub use extract::{extract_triplets, resolve_coref_lite, sentence_ranges, PRONOUNS};
pub use graph::{build_graph, dedup_triplet, read_graph_dump, write_graph_dump, DedupDecision, GraphSkeleton};
pub use lexicon::is_verb;
pub use linearize::{linearize, linearized_text};
pub use mask::{derive_causal_mask, read_mask_dump, write_mask_dump, CausalMask};
pub use tfidf::{tfidf_similarity, DocFreq};

use serde::{Deserialize, Serialize};

/// A contiguous token range in one document, with its normalized text
/// (lowercased surfaces joined by single spaces).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhraseSpan {
    pub doc_id: String,
    /// Token positions `[start, end)`.
    pub range: (usize, usize),
    pub text: String,
}

impl PhraseSpan {
    pub fn positions(&self) -> impl Iterator<Item = usize> {
        self.range.0..self.range.1
    }

    pub fn len(&self) -> usize {
        self.range.1 - self.range.0
    }

    pub fn is_empty(&self) -> bool {
        self.range.0 >= self.range.1
    }
}

/// Subject–predicate–object spans from one sentence; the three ranges are
/// disjoint and ordered subject < predicate < object.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: PhraseSpan,
    pub predicate: PhraseSpan,
    pub object: PhraseSpan,
}

impl Triplet {
    /// The phrase-concatenation key used by triplet dedup.
    pub fn concat_text(&self) -> String {
        format!("{} {} {}", self.subject.text, self.predicate.text, self.object.text)
    }
}

/// Graph node: one entity, possibly merged from several coreferent or
/// near-duplicate phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub node_id: usize,
    pub canonical_phrase: String,
    /// Total occurrences of the node's member phrases in the source document.
    pub weight: usize,
    pub member_spans: Vec<PhraseSpan>,
}

/// Directed predicate edge between two nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub edge_id: usize,
    pub predicate_phrase: String,
    /// Occurrences of the predicate phrase in the source document.
    pub weight: usize,
    pub src: usize,
    pub dst: usize,
    pub member_spans: Vec<PhraseSpan>,
}

/// The per-document knowledge graph, keeping the triplets that survived
/// dedup and the node each subject/object resolved to (needed for masks).
#[derive(Debug, Clone, Default)]
pub struct KnowledgeGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub triplets: Vec<Triplet>,
    /// `(subject node id, object node id)` per retained triplet.
    pub triplet_nodes: Vec<(usize, usize)>,
}

impl KnowledgeGraph {
    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }
}
