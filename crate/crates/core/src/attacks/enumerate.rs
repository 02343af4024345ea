//! Site enumeration per attack kind, and single-site application.

use super::lexicon::{AUXILIARIES, FUNCTION_WORDS, PREPOSITIONS};
use super::{AttackAction, AttackInstance, AttackKind};
use crate::corpus::{Document, Token, TokenKind};
use crate::{Error, Result};

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Returns every applicable site for `kind` in `doc`, in ascending position
/// order. Pure and deterministic; an empty result means the document offers
/// no target for this kind.
pub fn enumerate_attack_sites(doc: &Document, kind: AttackKind) -> Vec<AttackInstance> {
    let toks = &doc.tokens;
    let mut sites = Vec::new();
    let mut push = |t: &Token| {
        sites.push(AttackInstance {
            kind,
            doc_id: doc.doc_id.clone(),
            site: t.position,
            original: t.surface.clone(),
            action: kind.action(),
        })
    };
    match kind {
        AttackKind::FunctionalWord => {
            for t in toks {
                if t.kind == TokenKind::Word && FUNCTION_WORDS.contains(t.surface.to_lowercase().as_str()) {
                    push(t);
                }
            }
        }
        AttackKind::WordLevel => {
            for t in toks {
                if t.kind == TokenKind::Word {
                    push(t);
                }
            }
        }
        AttackKind::SeqNumber => {
            for i in sequence_number_positions(doc) {
                push(&toks[i]);
            }
        }
        AttackKind::DotAfterSeqNumber => {
            for i in sequence_number_positions(doc) {
                push(&toks[i + 1]);
            }
        }
        AttackKind::Punctuation => {
            for t in toks {
                if t.kind == TokenKind::Punctuation {
                    push(t);
                }
            }
        }
        AttackKind::AuxiliaryVerb => {
            for t in toks {
                if t.kind == TokenKind::Word && AUXILIARIES.contains(&t.surface.to_lowercase().as_str()) {
                    push(t);
                }
            }
        }
        AttackKind::Article => {
            for (i, t) in toks.iter().enumerate() {
                let next_is_word = toks.get(i + 1).is_some_and(|n| n.kind == TokenKind::Word);
                if t.kind == TokenKind::Word
                    && next_is_word
                    && ARTICLES.contains(&t.surface.to_lowercase().as_str())
                {
                    push(t);
                }
            }
        }
        AttackKind::Preposition => {
            for (i, t) in toks.iter().enumerate() {
                if t.kind != TokenKind::Word {
                    continue;
                }
                let lower = t.surface.to_lowercase();
                if !PREPOSITIONS.contains(lower.as_str()) || lower == "of" || lower == "for" {
                    continue;
                }
                // exempt prepositions anchoring a numeric range ("from 2001 to 2016")
                let flanked = i > 0
                    && toks[i - 1].kind == TokenKind::Number
                    && toks.get(i + 1).is_some_and(|n| n.kind == TokenKind::Number);
                if !flanked {
                    push(t);
                }
            }
        }
    }
    sites
}

/// Positions of leading sequence numbers: a number token at the document
/// start or directly after a newline, immediately followed by a `.` token.
fn sequence_number_positions(doc: &Document) -> Vec<usize> {
    let toks = &doc.tokens;
    let mut out = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Number {
            continue;
        }
        let at_line_start = if i == 0 {
            true
        } else {
            let gap = &doc.raw_text[toks[i - 1].char_span.1..t.char_span.0];
            gap.contains('\n')
        };
        let dot_next = toks.get(i + 1).is_some_and(|n| n.surface == ".");
        if at_line_start && dot_next {
            out.push(i);
        }
    }
    out
}

/// Applies one attack, returning a fresh re-spanned document; the input is
/// untouched and gold labels are copied verbatim.
pub fn apply_attack(doc: &Document, instance: &AttackInstance) -> Result<Document> {
    if instance.doc_id != doc.doc_id {
        return Err(Error::invalid(format!(
            "attack targets doc {:?} but was applied to {:?}",
            instance.doc_id, doc.doc_id
        )));
    }
    let target = doc.tokens.get(instance.site).ok_or_else(|| {
        Error::invalid(format!(
            "stale attack site: position {} outside doc {:?} ({} tokens)",
            instance.site,
            doc.doc_id,
            doc.tokens.len()
        ))
    })?;
    if target.surface != instance.original {
        return Err(Error::invalid(format!(
            "stale attack site: doc {:?} position {} now reads {:?}, expected {:?}",
            doc.doc_id, instance.site, target.surface, instance.original
        )));
    }
    let mut tokens = doc.tokens.clone();
    match instance.action {
        AttackAction::Mask => {
            tokens[instance.site].surface = "[MASK]".to_string();
            tokens[instance.site].kind = TokenKind::Mask;
        }
        AttackAction::Remove => {
            tokens.remove(instance.site);
        }
    }
    Ok(Document::from_tokens(doc.doc_id.clone(), tokens, doc.labels.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn doc(text: &str) -> Document {
        Document::new("d0", text, BTreeSet::from([1]))
    }

    fn positions(doc: &Document, kind: AttackKind) -> Vec<usize> {
        enumerate_attack_sites(doc, kind).into_iter().map(|a| a.site).collect()
    }

    #[test]
    fn sequence_number_and_its_dot_are_separate_kinds() {
        let d = doc("3. The applicant complained.");
        assert_eq!(positions(&d, AttackKind::SeqNumber), [0]);
        assert_eq!(positions(&d, AttackKind::DotAfterSeqNumber), [1]);
        let seq = &enumerate_attack_sites(&d, AttackKind::SeqNumber)[0];
        assert_eq!((seq.original.as_str(), seq.action), ("3", AttackAction::Remove));
    }

    #[test]
    fn paragraph_numbers_need_a_newline_and_a_dot() {
        let d = doc("Facts follow.\n4. He was arrested. On 5. May");
        // "4" follows a newline and precedes "."; "5" is mid-line.
        assert_eq!(positions(&d, AttackKind::SeqNumber), [3]);
        let d = doc("12\n13. done");
        assert_eq!(positions(&d, AttackKind::SeqNumber), [1]);
        // number followed by a word instead of a dot is not a sequence number
        let d = doc("7 dwarves\n8 more");
        assert!(positions(&d, AttackKind::SeqNumber).is_empty());
    }

    #[test]
    fn numeric_range_exempts_the_inner_preposition_only() {
        let d = doc("He worked from 2001 to 2016 in town");
        let sites: Vec<String> = enumerate_attack_sites(&d, AttackKind::Preposition)
            .into_iter()
            .map(|a| a.original)
            .collect();
        assert_eq!(sites, ["from", "in"]);
    }

    #[test]
    fn of_and_for_are_never_preposition_sites() {
        let d = doc("He paid for the car of Alice");
        assert!(positions(&d, AttackKind::Preposition).is_empty());
        // but both still count as function words
        let func: Vec<String> = enumerate_attack_sites(&d, AttackKind::FunctionalWord)
            .into_iter()
            .map(|a| a.original)
            .collect();
        assert!(func.contains(&"for".to_string()) && func.contains(&"of".to_string()));
    }

    #[test]
    fn articles_must_precede_a_word() {
        let d = doc("the 3 cars belong to the owner. The end");
        let arts: Vec<usize> = positions(&d, AttackKind::Article);
        // "the" before "3" is skipped; "the owner" and "The end" qualify.
        let surfaces: Vec<&str> = arts.iter().map(|&p| d.tokens[p].surface.as_str()).collect();
        assert_eq!(surfaces, ["the", "The"]);
    }

    #[test]
    fn auxiliary_and_word_level_counts() {
        let d = doc("He was arrested and has been detained.");
        let aux: Vec<String> = enumerate_attack_sites(&d, AttackKind::AuxiliaryVerb)
            .into_iter()
            .map(|a| a.original)
            .collect();
        assert_eq!(aux, ["was", "has", "been"]);
        assert_eq!(positions(&d, AttackKind::WordLevel).len(), 7);
        assert_eq!(positions(&d, AttackKind::Punctuation), [7]);
    }

    #[test]
    fn masking_changes_exactly_one_surface_and_keeps_labels() {
        let d = doc("Bob robbed the bank.");
        let art = &enumerate_attack_sites(&d, AttackKind::Article)[0];
        let attacked = apply_attack(&d, art).unwrap();
        assert_eq!(attacked.tokens.len(), d.tokens.len());
        assert_eq!(attacked.tokens[art.site].surface, "[MASK]");
        assert_eq!(attacked.tokens[art.site].kind, TokenKind::Mask);
        assert_eq!(attacked.labels, d.labels);
        let diffs = d
            .tokens
            .iter()
            .zip(&attacked.tokens)
            .filter(|(a, b)| a.surface != b.surface)
            .count();
        assert_eq!(diffs, 1);
        // the original is untouched
        assert_eq!(d.tokens[art.site].surface, "the");
    }

    #[test]
    fn removal_shrinks_by_one_and_respans() {
        let d = doc("3. The applicant complained.");
        let seq = &enumerate_attack_sites(&d, AttackKind::SeqNumber)[0];
        let attacked = apply_attack(&d, seq).unwrap();
        assert_eq!(attacked.tokens.len(), d.tokens.len() - 1);
        assert_eq!(attacked.tokens[0].surface, ".");
        for (i, t) in attacked.tokens.iter().enumerate() {
            assert_eq!(t.position, i);
            assert_eq!(&attacked.raw_text[t.char_span.0..t.char_span.1], t.surface);
        }
    }

    #[test]
    fn stale_sites_are_rejected() {
        let d = doc("the car");
        let art = &enumerate_attack_sites(&d, AttackKind::Article)[0];
        let attacked = apply_attack(&d, art).unwrap();
        // same site again: surface no longer matches
        assert!(apply_attack(&attacked, art).is_err());
        let mut oob = art.clone();
        oob.site = 99;
        assert!(apply_attack(&d, &oob).is_err());
        let mut wrong_doc = art.clone();
        wrong_doc.doc_id = "other".into();
        assert!(apply_attack(&d, &wrong_doc).is_err());
    }

    #[test]
    fn masked_tokens_are_not_re_attackable_words() {
        let d = doc("the car");
        let word = enumerate_attack_sites(&d, AttackKind::WordLevel);
        assert_eq!(word.len(), 2);
        let attacked = apply_attack(&d, &word[1]).unwrap();
        assert_eq!(positions(&attacked, AttackKind::WordLevel), [0]);
    }
}
