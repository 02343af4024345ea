//! Incremental knowledge-graph construction: triplet dedup, node
//! creation/merging (coreference clusters and TF-IDF similarity), and the
//! reloadable text dump format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use super::tfidf::{tfidf_similarity, DocFreq};
use super::{Edge, KnowledgeGraph, Node, PhraseSpan, Triplet};
use crate::corpus::Document;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedupDecision {
    Accept,
    Reject,
}

/// Rejects `candidate` iff the TF-IDF similarity between its concatenated
/// phrase text and any retained triplet's reaches `dedup_threshold`.
pub fn dedup_triplet(
    graph: &KnowledgeGraph,
    candidate: &Triplet,
    dedup_threshold: f64,
    stats: &DocFreq,
) -> Result<DedupDecision> {
    validate_threshold("dedup_threshold", dedup_threshold)?;
    dedup_against(&graph.triplets, candidate, dedup_threshold, stats)
}

fn dedup_against(
    retained: &[Triplet],
    candidate: &Triplet,
    dedup_threshold: f64,
    stats: &DocFreq,
) -> Result<DedupDecision> {
    let cand = candidate.concat_text();
    for kept in retained {
        if tfidf_similarity(&kept.concat_text(), &cand, stats)? >= dedup_threshold {
            return Ok(DedupDecision::Reject);
        }
    }
    Ok(DedupDecision::Accept)
}

fn validate_threshold(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::invalid(format!("{name} must lie in [0, 1], got {value}")));
    }
    Ok(())
}

/// Builds the document graph: triplets are offered in document order and
/// deduplicated incrementally; subject/object phrases become nodes, which
/// absorb their coreference cluster's spans and merge whenever two nodes
/// share a mention span or their canonical phrases reach `merge_threshold`.
/// Node and edge weights count occurrences of their phrases in the document.
pub fn build_graph(
    doc: &Document,
    triplets: &[Triplet],
    clusters: &[Vec<PhraseSpan>],
    merge_threshold: f64,
    dedup_threshold: f64,
    stats: &DocFreq,
) -> Result<KnowledgeGraph> {
    validate_threshold("merge_threshold", merge_threshold)?;
    validate_threshold("dedup_threshold", dedup_threshold)?;
    let mut builder = Builder::new(doc, clusters, merge_threshold, stats);

    let mut retained: Vec<Triplet> = Vec::new();
    let mut raw_endpoints: Vec<(usize, usize)> = Vec::new();
    for t in triplets {
        if dedup_against(&retained, t, dedup_threshold, stats)? == DedupDecision::Reject {
            continue;
        }
        let subj = builder.ensure_node(&t.subject)?;
        let obj = builder.ensure_node(&t.object)?;
        builder.edges.push(ProtoEdge {
            src: subj,
            dst: obj,
            predicate: t.predicate.text.clone(),
            member_spans: vec![t.predicate.clone()],
        });
        raw_endpoints.push((subj, obj));
        retained.push(t.clone());
    }
    builder.finalize(retained, raw_endpoints)
}

struct ProtoNode {
    member_texts: BTreeSet<String>,
    member_spans: Vec<PhraseSpan>,
    canonical: String,
    weight: usize,
}

struct ProtoEdge {
    src: usize,
    dst: usize,
    predicate: String,
    member_spans: Vec<PhraseSpan>,
}

struct Builder<'a> {
    doc_lower: Vec<String>,
    clusters: &'a [Vec<PhraseSpan>],
    merge_threshold: f64,
    stats: &'a DocFreq,
    nodes: Vec<Option<ProtoNode>>,
    parent: Vec<usize>,
    edges: Vec<ProtoEdge>,
    occ_cache: HashMap<String, usize>,
}

impl<'a> Builder<'a> {
    fn new(doc: &Document, clusters: &'a [Vec<PhraseSpan>], merge_threshold: f64, stats: &'a DocFreq) -> Self {
        Builder {
            doc_lower: doc.tokens.iter().map(|t| t.surface.to_lowercase()).collect(),
            clusters,
            merge_threshold,
            stats,
            nodes: Vec::new(),
            parent: Vec::new(),
            edges: Vec::new(),
            occ_cache: HashMap::new(),
        }
    }

    fn find(&self, mut i: usize) -> usize {
        while self.parent[i] != i {
            i = self.parent[i];
        }
        i
    }

    /// Non-overlapping occurrences of a phrase's token sequence in the doc.
    fn occurrences(&mut self, phrase: &str) -> usize {
        if let Some(&n) = self.occ_cache.get(phrase) {
            return n;
        }
        let needle: Vec<&str> = phrase.split(' ').collect();
        let mut count = 0;
        let mut i = 0;
        while i + needle.len() <= self.doc_lower.len() {
            if needle.iter().zip(&self.doc_lower[i..]).all(|(a, b)| *a == b) {
                count += 1;
                i += needle.len();
            } else {
                i += 1;
            }
        }
        self.occ_cache.insert(phrase.to_string(), count);
        count
    }

    fn node_weight(&mut self, texts: &BTreeSet<String>) -> usize {
        texts.iter().map(|t| t.to_string()).collect::<Vec<_>>().iter().map(|t| self.occurrences(t)).sum()
    }

    /// Creates (or extends) the node owning `span`, absorbing the span's
    /// whole coreference cluster, then re-runs the merge fixpoint.
    fn ensure_node(&mut self, span: &PhraseSpan) -> Result<usize> {
        let mut spans: Vec<PhraseSpan> = vec![span.clone()];
        for cluster in self.clusters {
            if cluster.iter().any(|s| s.range == span.range) {
                spans.extend(cluster.iter().cloned());
            }
        }
        spans.sort();
        spans.dedup();

        let owner = self.nodes.iter().enumerate().find_map(|(i, n)| {
            let n = n.as_ref()?;
            let root = self.find(i);
            (root == i && n.member_spans.iter().any(|m| spans.iter().any(|s| s.range == m.range)))
                .then_some(i)
        });
        let idx = match owner {
            Some(i) => {
                let node = self.nodes[i].as_mut().expect("owner is alive");
                node.member_spans.extend(spans.iter().cloned());
                node.member_spans.sort();
                node.member_spans.dedup();
                node.member_texts.extend(spans.iter().map(|s| s.text.clone()));
                let texts = node.member_texts.clone();
                self.nodes[i].as_mut().unwrap().weight = {
                    let w = self.node_weight(&texts);
                    w
                };
                i
            }
            None => {
                let texts: BTreeSet<String> = spans.iter().map(|s| s.text.clone()).collect();
                let weight = self.node_weight(&texts);
                self.nodes.push(Some(ProtoNode {
                    member_texts: texts,
                    member_spans: spans,
                    canonical: span.text.clone(),
                    weight,
                }));
                self.parent.push(self.nodes.len() - 1);
                self.nodes.len() - 1
            }
        };
        self.merge_fixpoint()?;
        Ok(self.find(idx))
    }

    fn merge_fixpoint(&mut self) -> Result<()> {
        loop {
            let roots: Vec<usize> =
                (0..self.nodes.len()).filter(|&i| self.nodes[i].is_some() && self.find(i) == i).collect();
            let mut merged = false;
            'outer: for (a, &i) in roots.iter().enumerate() {
                for &j in &roots[a + 1..] {
                    if self.should_merge(i, j)? {
                        self.merge(i, j);
                        merged = true;
                        break 'outer;
                    }
                }
            }
            if !merged {
                return Ok(());
            }
        }
    }

    fn should_merge(&self, i: usize, j: usize) -> Result<bool> {
        let (ni, nj) = (self.nodes[i].as_ref().unwrap(), self.nodes[j].as_ref().unwrap());
        // shared mention span ⇔ same coreference cluster (clusters were
        // expanded into member_spans at creation time)
        if ni.member_spans.iter().any(|a| nj.member_spans.iter().any(|b| a.range == b.range)) {
            return Ok(true);
        }
        Ok(tfidf_similarity(&ni.canonical, &nj.canonical, self.stats)? >= self.merge_threshold)
    }

    fn merge(&mut self, i: usize, j: usize) {
        let loser = self.nodes[j].take().expect("merge target alive");
        let keep_i = {
            let winner = self.nodes[i].as_ref().unwrap();
            match winner.weight.cmp(&loser.weight) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => winner.canonical <= loser.canonical,
            }
        };
        let node = self.nodes[i].as_mut().unwrap();
        if !keep_i {
            node.canonical = loser.canonical;
        }
        node.member_spans.extend(loser.member_spans);
        node.member_spans.sort();
        node.member_spans.dedup();
        node.member_texts.extend(loser.member_texts);
        let texts = node.member_texts.clone();
        self.parent[j] = i;
        self.nodes[i].as_mut().unwrap().weight = self.node_weight(&texts);
    }

    fn finalize(mut self, triplets: Vec<Triplet>, raw_endpoints: Vec<(usize, usize)>) -> Result<KnowledgeGraph> {
        let mut final_id: BTreeMap<usize, usize> = BTreeMap::new();
        let mut nodes = Vec::new();
        for i in 0..self.nodes.len() {
            if self.nodes[i].is_some() && self.find(i) == i {
                let id = nodes.len();
                final_id.insert(i, id);
                let proto = self.nodes[i].as_ref().unwrap();
                nodes.push(Node {
                    node_id: id,
                    canonical_phrase: proto.canonical.clone(),
                    weight: proto.weight,
                    member_spans: proto.member_spans.clone(),
                });
            }
        }

        let mut edges: Vec<Edge> = Vec::new();
        let mut edge_slot: HashMap<(usize, usize, String), usize> = HashMap::new();
        let predicates: Vec<(usize, usize, String, Vec<PhraseSpan>)> = self
            .edges
            .drain(..)
            .collect::<Vec<_>>()
            .into_iter()
            .map(|e| (self.find(e.src), self.find(e.dst), e.predicate, e.member_spans))
            .collect();
        for (src_raw, dst_raw, predicate, member_spans) in predicates {
            let src = final_id[&src_raw];
            let dst = final_id[&dst_raw];
            let key = (src, dst, predicate.clone());
            match edge_slot.get(&key) {
                Some(&slot) => {
                    edges[slot].member_spans.extend(member_spans);
                    edges[slot].member_spans.sort();
                    edges[slot].member_spans.dedup();
                }
                None => {
                    let weight = self.occurrences(&predicate);
                    edge_slot.insert(key, edges.len());
                    edges.push(Edge {
                        edge_id: edges.len(),
                        predicate_phrase: predicate,
                        weight,
                        src,
                        dst,
                        member_spans,
                    });
                }
            }
        }

        let triplet_nodes = raw_endpoints
            .into_iter()
            .map(|(s, o)| (final_id[&self.find(s)], final_id[&self.find(o)]))
            .collect();
        Ok(KnowledgeGraph { nodes, edges, triplets, triplet_nodes })
    }
}

/// `NODE <id> <weight> <phrase>` / `EDGE <id> <weight> <src> <dst> <phrase>`
/// lines, nodes then edges, both in id order. Reloadable and byte-stable.
pub fn write_graph_dump<W: Write>(graph: &KnowledgeGraph, mut w: W) -> Result<()> {
    for n in &graph.nodes {
        writeln!(w, "NODE {} {} {}", n.node_id, n.weight, n.canonical_phrase)?;
    }
    for e in &graph.edges {
        writeln!(w, "EDGE {} {} {} {} {}", e.edge_id, e.weight, e.src, e.dst, e.predicate_phrase)?;
    }
    Ok(())
}

/// The dump's structural content (member spans are not serialized).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphSkeleton {
    pub nodes: Vec<(usize, usize, String)>,
    pub edges: Vec<(usize, usize, usize, usize, String)>,
}

pub fn read_graph_dump<R: BufRead>(r: R) -> Result<GraphSkeleton> {
    let mut skeleton = GraphSkeleton::default();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::invalid(format!("graph dump line {}: malformed record {line:?}", idx + 1));
        let mut parts = line.splitn(2, ' ');
        let tag = parts.next().ok_or_else(bad)?;
        let rest = parts.next().ok_or_else(bad)?;
        match tag {
            "NODE" => {
                let mut f = rest.splitn(3, ' ');
                let id = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let weight = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let phrase = f.next().ok_or_else(bad)?.to_string();
                skeleton.nodes.push((id, weight, phrase));
            }
            "EDGE" => {
                let mut f = rest.splitn(5, ' ');
                let id = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let weight = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let src = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let dst = f.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                let phrase = f.next().ok_or_else(bad)?.to_string();
                skeleton.edges.push((id, weight, src, dst, phrase));
            }
            _ => return Err(bad()),
        }
    }
    Ok(skeleton)
}
