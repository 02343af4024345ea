//! JSONL readers/writers for datasets and oracle sidecars.
//!
//! One document per line: `{"id": ..., "text": ..., "labels": [names]}`.
//! Oracle sidecar: `{"id": ..., "causal_positions": [ints]}`.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use super::{Dataset, Document, Oracle};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct DocLine {
    id: String,
    text: String,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct OracleLine {
    id: String,
    causal_positions: Vec<usize>,
}

/// Reads a dataset. With `label_space: Some(..)` every document label must be
/// in it; with `None` the label space is inferred (sorted unique names).
pub fn load_dataset<R: BufRead>(reader: R, label_space: Option<&[String]>, split: &str) -> Result<Dataset> {
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Jsonl { line: lineno, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DocLine =
            serde_json::from_str(&line).map_err(|e| Error::Jsonl { line: lineno, msg: e.to_string() })?;
        lines.push((lineno, parsed));
    }

    let label_space: Vec<String> = match label_space {
        Some(space) => space.to_vec(),
        None => {
            let names: BTreeSet<&str> =
                lines.iter().flat_map(|(_, d)| d.labels.iter().map(|s| s.as_str())).collect();
            names.into_iter().map(String::from).collect()
        }
    };

    let mut documents = Vec::with_capacity(lines.len());
    for (lineno, parsed) in lines {
        let mut labels = BTreeSet::new();
        for name in &parsed.labels {
            let idx = label_space.iter().position(|l| l == name).ok_or_else(|| Error::Jsonl {
                line: lineno,
                msg: format!("unknown label {name:?} (label space is fixed)"),
            })?;
            labels.insert(idx);
        }
        documents.push(Document::new(parsed.id, parsed.text, labels));
    }
    Dataset::new(documents, label_space, split)
}

pub fn save_dataset<W: Write>(dataset: &Dataset, mut writer: W) -> Result<()> {
    for doc in &dataset.documents {
        let line = DocLine {
            id: doc.doc_id.clone(),
            text: doc.raw_text.clone(),
            labels: doc.labels.iter().map(|&i| dataset.label_space[i].clone()).collect(),
        };
        serde_json::to_writer(&mut writer, &line).map_err(|e| Error::invalid(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_oracle<R: BufRead>(reader: R) -> Result<Oracle> {
    let mut oracle = Oracle::default();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Jsonl { line: lineno, msg: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: OracleLine =
            serde_json::from_str(&line).map_err(|e| Error::Jsonl { line: lineno, msg: e.to_string() })?;
        oracle.insert(parsed.id, parsed.causal_positions);
    }
    Ok(oracle)
}

pub fn save_oracle<W: Write>(oracle: &Oracle, mut writer: W) -> Result<()> {
    for (id, positions) in oracle.iter() {
        let line = OracleLine { id: id.to_string(), causal_positions: positions.to_vec() };
        serde_json::to_writer(&mut writer, &line).map_err(|e| Error::invalid(e.to_string()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
