//! Case-folded vocabulary with reserved special ids.
//!
//! Ids are keyed on lowercased surfaces so that normalized graph text (always
//! lowercase) hits the same embedding rows as the original tokens.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

use super::{Dataset, TokenKind};
use crate::{Error, Result};

pub const PAD_ID: usize = 0;
pub const MASK_ID: usize = 1;
pub const CLS_ID: usize = 2;
pub const UNK_ID: usize = 3;

/// Reserved surfaces, in id order.
pub const RESERVED_TOKENS: [&str; 4] = ["[PAD]", "[MASK]", "[CLS]", "[UNK]"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    #[serde(skip)]
    token_to_id: HashMap<String, usize>,
    /// Raw training counts per lowercased surface, unfiltered by `min_freq`,
    /// so frequency profiles can report counts for out-of-vocabulary words too.
    freq: BTreeMap<String, u64>,
}

impl Vocabulary {
    /// Counts lowercased surfaces over the training split and assigns ids to
    /// every token with count >= `min_freq`, ordered by descending count and
    /// then lexicographically (so construction is deterministic).
    pub fn build(train: &Dataset, min_freq: u64) -> Result<Self> {
        if min_freq < 1 {
            return Err(Error::invalid(format!("min_freq must be >= 1, got {min_freq}")));
        }
        let mut freq: BTreeMap<String, u64> = BTreeMap::new();
        for doc in &train.documents {
            for token in &doc.tokens {
                if token.kind == TokenKind::Mask {
                    continue; // the placeholder already owns a reserved id
                }
                *freq.entry(token.surface.to_lowercase()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&String, &u64)> = freq.iter().filter(|(_, &c)| c >= min_freq).collect();
        kept.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));

        let mut id_to_token: Vec<String> = RESERVED_TOKENS.iter().map(|s| s.to_string()).collect();
        id_to_token.extend(kept.into_iter().map(|(t, _)| t.clone()));
        let mut vocab = Vocabulary { id_to_token, token_to_id: HashMap::new(), freq };
        vocab.rebuild_index();
        Ok(vocab)
    }

    /// Restores the lookup index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.token_to_id = self.id_to_token.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    }

    pub fn id(&self, surface: &str) -> usize {
        if let Some(reserved) = RESERVED_TOKENS.iter().position(|r| *r == surface) {
            return reserved;
        }
        let lower = surface.to_lowercase();
        *self.token_to_id.get(lower.as_str()).unwrap_or(&UNK_ID)
    }

    /// Maps a document's tokens to ids; `[MASK]`-kind tokens go to the
    /// reserved mask id regardless of vocabulary content.
    pub fn ids_for(&self, doc: &super::Document) -> Vec<usize> {
        doc.tokens
            .iter()
            .map(|t| if t.kind == TokenKind::Mask { MASK_ID } else { self.id(&t.surface) })
            .collect()
    }

    pub fn ids_for_surfaces<S: AsRef<str>>(&self, surfaces: &[S]) -> Vec<usize> {
        surfaces
            .iter()
            .map(|s| {
                let s = s.as_ref();
                if s == "[MASK]" {
                    MASK_ID
                } else {
                    self.id(s)
                }
            })
            .collect()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(|s| s.as_str())
    }

    pub fn size(&self) -> usize {
        self.id_to_token.len()
    }

    /// Training count of a (lowercased) surface; 0 when never seen.
    pub fn train_count(&self, surface: &str) -> u64 {
        self.freq.get(&surface.to_lowercase()).copied().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use std::collections::BTreeSet;

    fn tiny_dataset(texts: &[&str]) -> Dataset {
        let documents = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Document::new(format!("d{i}"), *t, BTreeSet::new()))
            .collect();
        Dataset::new(documents, vec!["x".into()], "train").unwrap()
    }

    #[test]
    fn reserved_ids_never_collide() {
        let ds = tiny_dataset(&["the pad the mask"]);
        let v = Vocabulary::build(&ds, 1).unwrap();
        assert_eq!(v.id("[PAD]"), PAD_ID);
        assert_eq!(v.id("[MASK]"), MASK_ID);
        assert_eq!(v.id("[CLS]"), CLS_ID);
        assert_eq!(v.id("[UNK]"), UNK_ID);
        assert!(v.id("the") > UNK_ID);
    }

    #[test]
    fn min_freq_filters_rare_tokens_to_unk() {
        let ds = tiny_dataset(&["alpha alpha beta"]);
        let v = Vocabulary::build(&ds, 2).unwrap();
        assert_ne!(v.id("alpha"), UNK_ID);
        assert_eq!(v.id("beta"), UNK_ID);
        // counts survive the filter for profiling purposes
        assert_eq!(v.train_count("beta"), 1);
    }

    #[test]
    fn lookup_is_case_folded() {
        let ds = tiny_dataset(&["Bob bob BOB"]);
        let v = Vocabulary::build(&ds, 1).unwrap();
        assert_eq!(v.id("Bob"), v.id("bob"));
        assert_eq!(v.train_count("bOb"), 3);
    }

    #[test]
    fn min_freq_zero_is_rejected() {
        let ds = tiny_dataset(&["a"]);
        assert!(Vocabulary::build(&ds, 0).is_err());
    }

    #[test]
    fn construction_is_deterministic() {
        let ds = tiny_dataset(&["c b a", "b c", "c"]);
        let v1 = Vocabulary::build(&ds, 1).unwrap();
        let v2 = Vocabulary::build(&ds, 1).unwrap();
        assert_eq!(v1.id_to_token, v2.id_to_token);
        // ordered by count desc then lexicographic: c(3), b(2), a(1)
        assert_eq!(v1.token(4), Some("c"));
        assert_eq!(v1.token(5), Some("b"));
        assert_eq!(v1.token(6), Some("a"));
    }
}
