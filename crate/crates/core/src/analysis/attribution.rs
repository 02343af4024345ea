//! Erasure attribution and crucial-word profiling.
//!
//! The attribution of position `i` for label `y` is the drop in the model's
//! probability for `y` when token `i` is replaced by `[MASK]`, one position
//! at a time. Large positive scores mark tokens the prediction leans on.

use crate::corpus::{Document, TokenKind, Vocabulary};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

/// Per-position erasure scores of one document for one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub doc_id: String,
    pub label: usize,
    /// One score per token, aligned with the document's token positions.
    pub scores: Vec<f64>,
}

/// One word's weight among the crucial words versus the training corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub word: String,
    pub crucial_count: u64,
    pub train_count: u64,
}

/// Crucial-word counts joined with training-corpus counts, sorted by
/// crucial count descending (ties alphabetically).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyReport {
    pub rows: Vec<FrequencyRow>,
}

fn mask_position(doc: &Document, position: usize) -> Document {
    let mut tokens = doc.tokens.clone();
    tokens[position].surface = "[MASK]".to_string();
    tokens[position].kind = TokenKind::Mask;
    Document::from_tokens(doc.doc_id.clone(), tokens, doc.labels.clone())
}

/// Scores every position of `doc` for label `y` by single-token erasure.
/// `predict` maps a document to per-label probabilities and must be pure;
/// positions are probed in parallel.
pub fn erasure_attribution<F>(predict: F, doc: &Document, y: usize) -> Result<AttributionVector>
where
    F: Fn(&Document) -> Result<Vec<f64>> + Sync,
{
    let base = predict(doc)?;
    if y >= base.len() {
        return Err(Error::invalid(format!(
            "label {y} outside the model's {}-label output",
            base.len()
        )));
    }
    let base_y = base[y];
    let scores: Vec<f64> = (0..doc.tokens.len())
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let probs = predict(&mask_position(doc, i))?;
            let score = base_y - probs[y];
            if !score.is_finite() {
                return Err(Error::NonFinite(format!(
                    "attribution for doc {:?} position {i}",
                    doc.doc_id
                )));
            }
            Ok(score)
        })
        .collect::<Result<_>>()?;
    Ok(AttributionVector { doc_id: doc.doc_id.clone(), label: y, scores })
}

/// The ⌈k·N/100⌉ highest-scoring positions (N = attackable positions, i.e.
/// everything but `[MASK]` placeholders), as `(surface, position)` pairs in
/// score order; ties prefer the lower position.
pub fn top_k_percent(
    doc: &Document,
    attr: &AttributionVector,
    k: f64,
) -> Result<Vec<(String, usize)>> {
    if !(k > 0.0 && k <= 100.0) {
        return Err(Error::invalid(format!("k must be in (0, 100], got {k}")));
    }
    if attr.scores.len() != doc.tokens.len() {
        return Err(Error::invalid(format!(
            "attribution length {} does not match doc {:?} with {} tokens",
            attr.scores.len(),
            doc.doc_id,
            doc.tokens.len()
        )));
    }
    let mut eligible: Vec<usize> = doc
        .tokens
        .iter()
        .filter(|t| t.kind != TokenKind::Mask)
        .map(|t| t.position)
        .collect();
    if eligible.is_empty() {
        return Ok(Vec::new());
    }
    let take = (k * eligible.len() as f64 / 100.0).ceil() as usize;
    eligible.sort_by(|&a, &b| {
        attr.scores[b].partial_cmp(&attr.scores[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    Ok(eligible
        .into_iter()
        .take(take)
        .map(|p| (doc.tokens[p].surface.clone(), p))
        .collect())
}

/// Joins the crucial-word multiset (pooled over the test set) with training
/// counts. Words are case-folded, matching vocabulary construction.
pub fn frequency_profile(crucial: &[(String, usize)], vocab: &Vocabulary) -> FrequencyReport {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (surface, _) in crucial {
        *counts.entry(surface.to_lowercase()).or_insert(0) += 1;
    }
    let mut rows: Vec<FrequencyRow> = counts
        .into_iter()
        .map(|(word, crucial_count)| {
            let train_count = vocab.train_count(&word);
            FrequencyRow { word, crucial_count, train_count }
        })
        .collect();
    rows.sort_by(|a, b| b.crucial_count.cmp(&a.crucial_count).then_with(|| a.word.cmp(&b.word)));
    FrequencyReport { rows }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Dumps attribution vectors as CSV, one row per (document, position).
pub fn write_attribution_csv<W: Write>(
    items: &[(&Document, &AttributionVector)],
    w: &mut W,
) -> Result<()> {
    writeln!(w, "doc_id,position,surface,label,score")?;
    for (doc, attr) in items {
        if attr.scores.len() != doc.tokens.len() {
            return Err(Error::invalid(format!(
                "attribution length mismatch for doc {:?}",
                doc.doc_id
            )));
        }
        for (i, score) in attr.scores.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{:.6}",
                csv_field(&doc.doc_id),
                i,
                csv_field(&doc.tokens[i].surface),
                attr.label,
                score
            )?;
        }
    }
    Ok(())
}

pub fn write_frequency_csv<W: Write>(report: &FrequencyReport, w: &mut W) -> Result<()> {
    writeln!(w, "word,crucial_count,train_count")?;
    for row in &report.rows {
        writeln!(w, "{},{},{}", csv_field(&row.word), row.crucial_count, row.train_count)?;
    }
    Ok(())
}
