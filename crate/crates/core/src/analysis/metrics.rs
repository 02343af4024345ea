//! Multi-label F1 and prediction-consistency metrics.
//!
//! Conventions, fixed here and echoed in output metadata:
//! * 0/0 precision, recall, or F1 collapses to 0;
//! * a document with empty gold set and empty prediction set contributes no
//!   TP/FP/FN anywhere — it is F1-neutral ("neutral" convention);
//! * macro-F1 averages over the *label space*, so labels that never occur
//!   contribute a zero term.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::Write;

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

fn validate(
    predictions: &[BTreeSet<usize>],
    golds: &[BTreeSet<usize>],
    num_labels: usize,
) -> Result<()> {
    if predictions.len() != golds.len() {
        return Err(Error::invalid(format!(
            "{} predictions against {} golds",
            predictions.len(),
            golds.len()
        )));
    }
    for set in predictions.iter().chain(golds) {
        if let Some(&l) = set.iter().find(|&&l| l >= num_labels) {
            return Err(Error::invalid(format!(
                "label index {l} outside label space of size {num_labels}"
            )));
        }
    }
    Ok(())
}

/// Per-label F1 over the whole label space, indices aligned with the space.
pub fn per_label_f1(
    predictions: &[BTreeSet<usize>],
    golds: &[BTreeSet<usize>],
    num_labels: usize,
) -> Result<Vec<f64>> {
    validate(predictions, golds, num_labels)?;
    let mut tp = vec![0usize; num_labels];
    let mut fp = vec![0usize; num_labels];
    let mut fn_ = vec![0usize; num_labels];
    for (pred, gold) in predictions.iter().zip(golds) {
        for &l in pred {
            if gold.contains(&l) {
                tp[l] += 1;
            } else {
                fp[l] += 1;
            }
        }
        for &l in gold {
            if !pred.contains(&l) {
                fn_[l] += 1;
            }
        }
    }
    Ok((0..num_labels).map(|l| f1(tp[l], fp[l], fn_[l])).collect())
}

/// Micro-F1 (TP/FP/FN pooled over every (document, label) pair) and macro-F1
/// (per-label F1 averaged over the label space).
pub fn micro_macro_f1(
    predictions: &[BTreeSet<usize>],
    golds: &[BTreeSet<usize>],
    num_labels: usize,
) -> Result<(f64, f64)> {
    validate(predictions, golds, num_labels)?;
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for (pred, gold) in predictions.iter().zip(golds) {
        tp += pred.intersection(gold).count();
        fp += pred.difference(gold).count();
        fn_ += gold.difference(pred).count();
    }
    let micro = f1(tp, fp, fn_);
    let per_label = per_label_f1(predictions, golds, num_labels)?;
    let macro_ = if num_labels == 0 {
        0.0
    } else {
        per_label.iter().sum::<f64>() / num_labels as f64
    };
    Ok((micro, macro_))
}

/// CR/SR over aligned before/after prediction sets: CR is the percentage of
/// pairs with exact set equality, SR its complement. Correctness against the
/// gold labels is deliberately not consulted — an unchanged wrong prediction
/// is still consistent.
pub fn certified_ratio(
    before: &[BTreeSet<usize>],
    after: &[BTreeSet<usize>],
) -> Result<(f64, f64)> {
    if before.is_empty() {
        return Err(Error::invalid("certified ratio over zero pairs is undefined"));
    }
    if before.len() != after.len() {
        return Err(Error::invalid(format!(
            "{} before-sets against {} after-sets",
            before.len(),
            after.len()
        )));
    }
    let equal = before.iter().zip(after).filter(|(b, a)| b == a).count();
    let cr = 100.0 * equal as f64 / before.len() as f64;
    Ok((cr, 100.0 - cr))
}

/// The JSON evaluation record emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub per_label_f1: Vec<f64>,
    /// How documents with empty gold and empty prediction are treated.
    pub empty_label_convention: String,
}

impl MetricsReport {
    pub fn from_predictions(
        predictions: &[BTreeSet<usize>],
        golds: &[BTreeSet<usize>],
        num_labels: usize,
    ) -> Result<Self> {
        let (micro_f1, macro_f1) = micro_macro_f1(predictions, golds, num_labels)?;
        Ok(MetricsReport {
            micro_f1,
            macro_f1,
            per_label_f1: per_label_f1(predictions, golds, num_labels)?,
            empty_label_convention: "neutral".to_string(),
        })
    }
}

pub fn write_metrics_json<W: Write>(report: &MetricsReport, w: &mut W) -> Result<()> {
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::invalid(format!("metrics serialization failed: {e}")))?;
    writeln!(w, "{json}")?;
    Ok(())
}
