//! Label-preserving perturbation operators and the consistency harness.
//!
//! Eight attack families target closed lexical classes (function words,
//! auxiliaries, articles, prepositions), surface classes (every word, every
//! punctuation mark), and the numbering scaffolding of paragraph-structured
//! documents (the leading sequence number and its dot). Each attack either
//! masks one token or removes one token; gold labels are copied unchanged,
//! which is what makes prediction consistency a meaningful robustness signal.

mod enumerate;
mod lexicon;
mod suite;

pub use enumerate::{apply_attack, enumerate_attack_sites};
pub use lexicon::{AUXILIARIES, FUNCTION_WORDS, PREPOSITIONS};
pub use suite::{
    attack_suite, write_detail_jsonl, write_report_csv, KindReport, RobustnessReport,
    SiteOutcome, SiteSelection,
};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// The eight perturbation families. String names are stable and shared by the
/// CLI, report files, and parsers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    FunctionalWord,
    WordLevel,
    SeqNumber,
    DotAfterSeqNumber,
    Punctuation,
    AuxiliaryVerb,
    Article,
    Preposition,
}

impl AttackKind {
    pub const ALL: [AttackKind; 8] = [
        AttackKind::FunctionalWord,
        AttackKind::WordLevel,
        AttackKind::SeqNumber,
        AttackKind::DotAfterSeqNumber,
        AttackKind::Punctuation,
        AttackKind::AuxiliaryVerb,
        AttackKind::Article,
        AttackKind::Preposition,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AttackKind::FunctionalWord => "functional_word",
            AttackKind::WordLevel => "word_level",
            AttackKind::SeqNumber => "seq_number",
            AttackKind::DotAfterSeqNumber => "dot_after_seq_number",
            AttackKind::Punctuation => "punctuation",
            AttackKind::AuxiliaryVerb => "auxiliary_verb",
            AttackKind::Article => "article",
            AttackKind::Preposition => "preposition",
        }
    }

    /// Sequence-number kinds delete their token; everything else masks it.
    pub fn action(&self) -> AttackAction {
        match self {
            AttackKind::SeqNumber | AttackKind::DotAfterSeqNumber => AttackAction::Remove,
            _ => AttackAction::Mask,
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown attack kind {s:?}")))
    }
}

/// What an attack does to its target token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackAction {
    Mask,
    Remove,
}

/// One applicable perturbation: a kind, the document, the token position it
/// targets, and the surface recorded at enumeration time (so stale
/// applications are detectable).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackInstance {
    pub kind: AttackKind,
    pub doc_id: String,
    pub site: usize,
    pub original: String,
    pub action: AttackAction,
}
