//! TF-IDF weighted cosine similarity between phrases.
//!
//! tf = term count within the phrase; idf = ln((1+D)/(1+df)) + 1 over the
//! reference corpus (smoothed, so unseen terms get the largest weight rather
//! than a division by zero).

use std::collections::{BTreeMap, HashMap};

use crate::corpus::Dataset;
use crate::{Error, Result};

/// Document frequencies over a reference corpus (usually the training split).
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct DocFreq {
    num_docs: usize,
    df: BTreeMap<String, usize>,
}

impl DocFreq {
    pub fn build(corpus: &Dataset) -> Self {
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in &corpus.documents {
            let mut seen: std::collections::HashSet<String> = std::collections::HashSet::new();
            for token in &doc.tokens {
                seen.insert(token.surface.to_lowercase());
            }
            for term in seen {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        DocFreq { num_docs: corpus.len(), df }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1 + self.num_docs) as f64 / (1 + df) as f64).ln() + 1.0
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }
}

/// Cosine similarity of the two phrases' TF-IDF vectors. Phrases are
/// whitespace-separated term sequences; empty phrases are an error.
/// Identical term multisets short-circuit to exactly 1.0.
pub fn tfidf_similarity(a: &str, b: &str, stats: &DocFreq) -> Result<f64> {
    let ta = term_counts(a)?;
    let tb = term_counts(b)?;
    if ta == tb {
        return Ok(1.0);
    }
    let dot: f64 = ta
        .iter()
        .filter_map(|(term, &ca)| tb.get(term.as_str()).map(|&cb| weight(term, ca, stats) * weight(term, cb, stats)))
        .sum();
    let norm = |counts: &HashMap<String, usize>| -> f64 {
        counts.iter().map(|(t, &c)| weight(t, c, stats).powi(2)).sum::<f64>().sqrt()
    };
    Ok(dot / (norm(&ta) * norm(&tb)))
}

fn weight(term: &str, count: usize, stats: &DocFreq) -> f64 {
    count as f64 * stats.idf(term)
}

fn term_counts(phrase: &str) -> Result<HashMap<String, usize>> {
    let mut counts = HashMap::new();
    for term in phrase.split_whitespace() {
        *counts.entry(term.to_string()).or_insert(0) += 1;
    }
    if counts.is_empty() {
        return Err(Error::invalid("tfidf_similarity: empty phrase"));
    }
    Ok(counts)
}
