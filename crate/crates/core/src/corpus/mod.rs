//! Documents, tokenization, vocabulary, dataset I/O, and the synthetic
//! structural-causal-model benchmark generator.

mod jsonl;
mod scm;
mod tokenize;
mod vocab;

pub use jsonl::{load_dataset, load_oracle, save_dataset, save_oracle};
pub use scm::{generate_scm_dataset, ScmConfig, ScmData, ScmPools};
pub use tokenize::{detokenize, tokenize};
pub use vocab::{Vocabulary, CLS_ID, MASK_ID, PAD_ID, RESERVED_TOKENS, UNK_ID};

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use crate::{Error, Result};

/// Lexical class of a token. `Mask` marks the literal `[MASK]` placeholder
/// that perturbations substitute for a real token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TokenKind {
    Word,
    Number,
    Punctuation,
    Mask,
}

/// One surface token with its position and byte span in the raw text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    /// 0-based index into the document's token sequence.
    pub position: usize,
    /// Byte offsets `(start, end)` into the raw text this token was cut from.
    pub char_span: (usize, usize),
    pub kind: TokenKind,
}

/// A tokenized document with its gold label set (indices into the owning
/// dataset's label space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw_text: String,
    pub tokens: Vec<Token>,
    pub labels: BTreeSet<usize>,
}

impl Document {
    /// Tokenizes `raw_text` and wraps it up as a document.
    pub fn new(doc_id: impl Into<String>, raw_text: impl Into<String>, labels: BTreeSet<usize>) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        Document { doc_id: doc_id.into(), raw_text, tokens, labels }
    }

    /// Rebuilds a document from an edited token sequence: raw text is the
    /// surfaces joined by single spaces, positions and spans are recomputed.
    /// Used by attacks, which must leave the original document untouched.
    pub fn from_tokens(doc_id: impl Into<String>, tokens: Vec<Token>, labels: BTreeSet<usize>) -> Self {
        let raw_text = detokenize(&tokens);
        let mut rebuilt = Vec::with_capacity(tokens.len());
        let mut offset = 0usize;
        for (position, token) in tokens.into_iter().enumerate() {
            let start = offset;
            let end = start + token.surface.len();
            offset = end + 1; // the single joining space
            rebuilt.push(Token { surface: token.surface, position, char_span: (start, end), kind: token.kind });
        }
        Document { doc_id: doc_id.into(), raw_text, tokens: rebuilt, labels }
    }

    pub fn surfaces(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.surface.as_str()).collect()
    }
}

/// A named split of documents over a fixed label space.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub documents: Vec<Document>,
    /// Sorted, duplicate-free label names; label indices refer to this list.
    pub label_space: Vec<String>,
    pub split: String,
}

impl Dataset {
    pub fn new(documents: Vec<Document>, label_space: Vec<String>, split: impl Into<String>) -> Result<Self> {
        let dataset = Dataset { documents, label_space, split: split.into() };
        dataset.validate()?;
        Ok(dataset)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for doc in &self.documents {
            if !seen.insert(doc.doc_id.as_str()) {
                return Err(Error::invalid(format!("duplicate doc_id {:?}", doc.doc_id)));
            }
            if let Some(&label) = doc.labels.iter().find(|&&l| l >= self.label_space.len()) {
                return Err(Error::invalid(format!(
                    "doc {:?} carries label index {} outside the label space (size {})",
                    doc.doc_id,
                    label,
                    self.label_space.len()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Gold causal positions per document, as produced by the SCM generator.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Oracle {
    by_doc: std::collections::BTreeMap<String, Vec<usize>>,
}

impl Oracle {
    pub fn insert(&mut self, doc_id: impl Into<String>, mut positions: Vec<usize>) {
        positions.sort_unstable();
        self.by_doc.insert(doc_id.into(), positions);
    }

    pub fn positions(&self, doc_id: &str) -> Option<&[usize]> {
        self.by_doc.get(doc_id).map(|v| v.as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.by_doc.iter().map(|(id, pos)| (id.as_str(), pos.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.by_doc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_doc.is_empty()
    }
}
