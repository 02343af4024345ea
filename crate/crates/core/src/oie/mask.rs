//! Binary causal attention masks derived from the knowledge graph.
//!
//! A mask is indexed by *document* token positions. The encoder prepends the
//! [CLS] token, so it expands the mask with [`CausalMask::with_cls`] (a fully
//! connected row/column at index 0) before applying it to attention logits.

use std::io::{BufRead, Write};

use super::KnowledgeGraph;
use crate::corpus::Document;
use crate::{Error, Result};

/// Symmetric N×N binary matrix with an all-ones diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalMask {
    n: usize,
    bits: Vec<bool>,
}

impl CausalMask {
    /// The identity mask: every position sees only itself.
    pub fn identity(n: usize) -> Self {
        let mut mask = CausalMask { n, bits: vec![false; n * n] };
        for i in 0..n {
            mask.bits[i * n + i] = true;
        }
        mask
    }

    /// All-ones mask (attention unrestricted).
    pub fn full(n: usize) -> Self {
        CausalMask { n, bits: vec![true; n * n] }
    }

    /// Identity plus a clique over `positions` — the mask shape used when an
    /// oracle marks the causal tokens directly.
    pub fn from_positions(n: usize, positions: &[usize]) -> Result<Self> {
        let mut mask = CausalMask::identity(n);
        for &p in positions {
            if p >= n {
                return Err(Error::invalid(format!("mask position {p} out of bounds for length {n}")));
            }
        }
        mask.connect_clique(positions.iter().copied());
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    fn set_sym(&mut self, i: usize, j: usize) {
        self.bits[i * self.n + j] = true;
        self.bits[j * self.n + i] = true;
    }

    fn connect_clique(&mut self, positions: impl Iterator<Item = usize> + Clone) {
        for i in positions.clone() {
            for j in positions.clone() {
                self.set_sym(i, j);
            }
        }
    }

    /// Expanded copy with [CLS] at index 0: its row and column are all ones,
    /// document entries shift by one.
    pub fn with_cls(&self) -> CausalMask {
        let n = self.n + 1;
        let mut out = CausalMask { n, bits: vec![false; n * n] };
        for j in 0..n {
            out.set_sym(0, j);
        }
        for i in 0..self.n {
            for j in 0..self.n {
                if self.get(i, j) {
                    out.bits[(i + 1) * n + (j + 1)] = true;
                }
            }
        }
        out
    }

    /// Top-left submatrix, used when an oversize input is truncated.
    pub fn truncated(&self, n: usize) -> CausalMask {
        assert!(n <= self.n);
        let mut out = CausalMask { n, bits: vec![false; n * n] };
        for i in 0..n {
            for j in 0..n {
                out.bits[i * n + j] = self.get(i, j);
            }
        }
        out
    }
}

/// Builds the document mask: A[i][j] = 1 iff i = j or some retained triplet
/// covers both positions. A triplet covers its predicate span plus *all*
/// member spans of the nodes its subject and object resolved to, so merged
/// mentions (coreferent pronouns, near-duplicate phrases) see each other.
pub fn derive_causal_mask(graph: &KnowledgeGraph, doc: &Document) -> Result<CausalMask> {
    let n = doc.tokens.len();
    let mut mask = CausalMask::identity(n);
    for (t, &(subj_node, obj_node)) in graph.triplets.iter().zip(&graph.triplet_nodes) {
        let mut coverage: Vec<usize> = t.predicate.positions().collect();
        for node in [subj_node, obj_node] {
            for span in &graph.node(node).member_spans {
                coverage.extend(span.positions());
            }
        }
        coverage.sort_unstable();
        coverage.dedup();
        if let Some(&p) = coverage.iter().find(|&&p| p >= n) {
            return Err(Error::invalid(format!(
                "graph span position {p} exceeds document length {n} (doc {})",
                doc.doc_id
            )));
        }
        mask.connect_clique(coverage.iter().copied());
    }
    Ok(mask)
}

/// Sparse dump: a `N=<len>` header, then one `i j` pair per line for every
/// above-diagonal 1. The diagonal is implicit (always 1).
pub fn write_mask_dump<W: Write>(mask: &CausalMask, mut w: W) -> Result<()> {
    writeln!(w, "N={}", mask.len())?;
    for i in 0..mask.len() {
        for j in (i + 1)..mask.len() {
            if mask.get(i, j) {
                writeln!(w, "{i} {j}")?;
            }
        }
    }
    Ok(())
}

pub fn read_mask_dump<R: BufRead>(r: R) -> Result<CausalMask> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("mask dump: missing N= header"))?
        .map_err(Error::Io)?;
    let n: usize = header
        .strip_prefix("N=")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::invalid(format!("mask dump: malformed header {header:?}")))?;
    let mut mask = CausalMask::identity(n);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::invalid(format!("mask dump line {}: malformed pair {line:?}", idx + 2));
        let mut parts = line.split_whitespace();
        let i: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let j: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        if parts.next().is_some() || i >= n || j >= n {
            return Err(bad());
        }
        mask.set_sym(i, j);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::oie::{build_graph, extract_triplets, resolve_coref_lite, DocFreq};
    use std::collections::BTreeSet;

    fn doc(text: &str) -> Document {
        Document::new("d0", text, BTreeSet::new())
    }

    fn mask_of(text: &str) -> (CausalMask, Document) {
        let d = doc(text);
        let triplets = extract_triplets(&d);
        let clusters = resolve_coref_lite(&d);
        let ds = crate::corpus::Dataset::new(vec![d.clone()], vec![], "t").unwrap();
        let stats = DocFreq::build(&ds);
        let g = build_graph(&d, &triplets, &clusters, 0.5, 0.7, &stats).unwrap();
        (derive_causal_mask(&g, &d).unwrap(), d)
    }

    #[test]
    fn zero_triplets_give_identity_plus_cls() {
        let (mask, d) = mask_of("car tree house");
        assert_eq!(mask, CausalMask::identity(d.tokens.len()));
        let expanded = mask.with_cls();
        for j in 0..expanded.len() {
            assert!(expanded.get(0, j) && expanded.get(j, 0), "[CLS] row/column must be all ones");
        }
        for i in 1..expanded.len() {
            for j in 1..expanded.len() {
                assert_eq!(expanded.get(i, j), i == j);
            }
        }
    }

    #[test]
    fn triplet_coverage_forms_a_clique_and_leaves_the_rest_alone() {
        // tokens: Bob(0) robbed(1) Alice(2) .(3) tree(4) house(5)
        let (mask, _) = mask_of("Bob robbed Alice. tree house");
        assert!(mask.get(0, 2) && mask.get(2, 0), "subject and object must see each other");
        assert!(mask.get(0, 1) && mask.get(1, 2));
        assert!(!mask.get(0, 4), "uncovered position must stay masked");
        assert!(!mask.get(3, 0), "sentence punctuation is outside the triplet spans");
    }

    #[test]
    fn merged_pronoun_spans_join_the_clique() {
        // He(4) stole(5) the(6) car(7): "he" merges into bob's node
        let (mask, _) = mask_of("Bob robbed Alice. He stole the car.");
        assert!(mask.get(0, 4), "coreferent mention should be connected to the clique");
        assert!(mask.get(4, 2), "pronoun inherits connections of its node");
    }

    #[test]
    fn mask_is_symmetric_with_unit_diagonal() {
        let (mask, _) = mask_of("Bob robbed Alice. He stole the car. The court held a hearing.");
        for i in 0..mask.len() {
            assert!(mask.get(i, i));
            for j in 0..mask.len() {
                assert_eq!(mask.get(i, j), mask.get(j, i));
            }
        }
    }

    #[test]
    fn oracle_positions_build_identity_plus_clique() {
        let mask = CausalMask::from_positions(5, &[1, 3]).unwrap();
        assert!(mask.get(1, 3) && mask.get(3, 1));
        assert!(!mask.get(0, 1) && !mask.get(2, 3));
        assert!(CausalMask::from_positions(3, &[7]).is_err());
    }

    #[test]
    fn dump_round_trips_bit_exactly() {
        let (mask, _) = mask_of("Bob robbed Alice. He stole the car.");
        let mut bytes = Vec::new();
        write_mask_dump(&mask, &mut bytes).unwrap();
        let reloaded = read_mask_dump(bytes.as_slice()).unwrap();
        assert_eq!(reloaded, mask);
        let mut again = Vec::new();
        write_mask_dump(&reloaded, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn span_past_document_end_is_reported() {
        let d = doc("Bob robbed Alice.");
        let triplets = extract_triplets(&d);
        let ds = crate::corpus::Dataset::new(vec![d.clone()], vec![], "t").unwrap();
        let stats = DocFreq::build(&ds);
        let clusters = resolve_coref_lite(&d);
        let g = build_graph(&d, &triplets, &clusters, 0.5, 0.7, &stats).unwrap();
        let short = doc("Bob robbed");
        assert!(derive_causal_mask(&g, &short).is_err());
    }
}
