//! Rule-based SVO extraction and a pronoun-only coreference pass.

use super::lexicon::is_verb;
use super::{PhraseSpan, Triplet};
use crate::corpus::{Document, Token, TokenKind};

/// Pronouns eligible for coreference clustering.
pub const PRONOUNS: [&str; 8] = ["he", "she", "it", "they", "his", "her", "its", "their"];

fn is_pronoun(surface: &str) -> bool {
    let lower = surface.to_lowercase();
    PRONOUNS.contains(&lower.as_str())
}

/// Token ranges of sentences, split after `.`, `!`, `?` punctuation tokens.
/// A trailing run without a final punctuation still counts as a sentence.
pub fn sentence_ranges(tokens: &[Token]) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let mut start = 0;
    for (i, token) in tokens.iter().enumerate() {
        let terminal =
            token.kind == TokenKind::Punctuation && matches!(token.surface.as_str(), "." | "!" | "?");
        if terminal {
            ranges.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < tokens.len() {
        ranges.push((start, tokens.len()));
    }
    ranges
}

fn phrase(doc: &Document, range: (usize, usize)) -> PhraseSpan {
    let text = doc.tokens[range.0..range.1]
        .iter()
        .map(|t| t.surface.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ");
    PhraseSpan { doc_id: doc.doc_id.clone(), range, text }
}

/// At most one triplet per sentence: the first word run before the first verb
/// run is the subject, the verb run is the predicate, and the remainder up to
/// the sentence end (trimmed of leading/trailing punctuation) is the object.
/// Sentences missing any of the three parts contribute nothing.
pub fn extract_triplets(doc: &Document) -> Vec<Triplet> {
    let mut triplets = Vec::new();
    for (sent_start, sent_end) in sentence_ranges(&doc.tokens) {
        let sent = &doc.tokens[sent_start..sent_end];
        let Some(v) = sent.iter().position(|t| t.kind == TokenKind::Word && is_verb(&t.surface)) else {
            continue;
        };

        // subject: first maximal word run strictly before the verb
        let mut subject = None;
        let mut run_start = None;
        for (i, token) in sent[..v].iter().enumerate() {
            if token.kind == TokenKind::Word {
                run_start.get_or_insert(i);
            } else if let Some(s) = run_start.take() {
                subject = Some((s, i));
                break;
            }
        }
        if subject.is_none() {
            subject = run_start.map(|s| (s, v));
        }
        let Some((subj_start, subj_end)) = subject else { continue };

        // predicate: maximal verb run starting at v
        let mut pred_end = v + 1;
        while pred_end < sent.len() && sent[pred_end].kind == TokenKind::Word && is_verb(&sent[pred_end].surface) {
            pred_end += 1;
        }

        // object: remainder of the sentence, punctuation trimmed at both ends
        let mut obj_start = pred_end;
        let mut obj_end = sent.len();
        while obj_start < obj_end && sent[obj_start].kind == TokenKind::Punctuation {
            obj_start += 1;
        }
        while obj_end > obj_start && sent[obj_end - 1].kind == TokenKind::Punctuation {
            obj_end -= 1;
        }
        if obj_start >= obj_end {
            continue;
        }

        triplets.push(Triplet {
            subject: phrase(doc, (sent_start + subj_start, sent_start + subj_end)),
            predicate: phrase(doc, (sent_start + v, sent_start + pred_end)),
            object: phrase(doc, (sent_start + obj_start, sent_start + obj_end)),
        });
    }
    triplets
}

/// Clusters subject/object phrases with the pronouns that refer to them.
///
/// Mentions are the subject/object phrases of [`extract_triplets`] plus every
/// standalone pronoun token not inside one of those phrases. Each pronoun
/// attaches to the nearest preceding non-pronoun mention in the same or the
/// previous sentence — nominative pronouns (he/she/it/they) only consider
/// subject phrases, the possessive forms consider subjects and objects alike.
/// Pronouns with no antecedent stay singletons, as does every unclustered
/// mention.
pub fn resolve_coref_lite(doc: &Document) -> Vec<Vec<PhraseSpan>> {
    let sentences = sentence_ranges(&doc.tokens);
    let sentence_of = |pos: usize| sentences.iter().position(|&(s, e)| pos >= s && pos < e).unwrap_or(0);

    let mut mentions: Vec<(PhraseSpan, bool)> = Vec::new(); // (span, is_subject)
    for t in extract_triplets(doc) {
        for (span, is_subject) in [(t.subject, true), (t.object, false)] {
            if !mentions.iter().any(|(m, _)| m.range == span.range) {
                mentions.push((span, is_subject));
            }
        }
    }
    for token in &doc.tokens {
        if token.kind == TokenKind::Word
            && is_pronoun(&token.surface)
            && !mentions.iter().any(|(m, _)| token.position >= m.range.0 && token.position < m.range.1)
        {
            mentions.push((phrase(doc, (token.position, token.position + 1)), false));
        }
    }
    mentions.sort_by_key(|(m, _)| m.range);

    // cluster ids per mention index; pronouns join their antecedent's cluster
    let mut cluster_of: Vec<usize> = (0..mentions.len()).collect();
    for i in 0..mentions.len() {
        let (m, _) = &mentions[i];
        if m.len() != 1 || !is_pronoun(&m.text) {
            continue;
        }
        let subjects_only = matches!(m.text.as_str(), "he" | "she" | "it" | "they");
        let pron_sentence = sentence_of(m.range.0);
        let antecedent = mentions[..i]
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| !(c.len() == 1 && is_pronoun(&c.text)))
            .filter(|(_, (_, is_subject))| *is_subject || !subjects_only)
            .filter(|(_, (c, _))| c.range.1 <= m.range.0)
            .filter(|(_, (c, _))| {
                let s = sentence_of(c.range.1 - 1);
                s == pron_sentence || s + 1 == pron_sentence
            })
            .max_by_key(|(_, (c, _))| c.range.1);
        if let Some((j, _)) = antecedent {
            cluster_of[i] = cluster_of[j];
        }
    }

    let mut clusters: Vec<Vec<PhraseSpan>> = Vec::new();
    let mut remap: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for (i, (mention, _)) in mentions.into_iter().enumerate() {
        let slot = *remap.entry(cluster_of[i]).or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[slot].push(mention);
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn doc(text: &str) -> Document {
        Document::new("d0", text, BTreeSet::new())
    }

    #[test]
    fn bob_robbed_alice_of_her_car() {
        let triplets = extract_triplets(&doc("Bob robbed Alice of her car."));
        assert_eq!(triplets.len(), 1);
        let t = &triplets[0];
        assert_eq!(t.subject.text, "bob");
        assert_eq!(t.predicate.text, "robbed");
        assert_eq!(t.object.text, "alice of her car");
        assert!(t.subject.range.1 <= t.predicate.range.0);
        assert!(t.predicate.range.1 <= t.object.range.0);
    }

    #[test]
    fn lone_punctuation_yields_nothing() {
        assert!(extract_triplets(&doc(".")).is_empty());
        assert!(extract_triplets(&doc("")).is_empty());
    }

    #[test]
    fn no_triplet_crosses_a_sentence_boundary() {
        let triplets = extract_triplets(&doc("Bob robbed Alice. The court held a hearing."));
        assert_eq!(triplets.len(), 2);
        for t in &triplets {
            let sentences = sentence_ranges(&doc("Bob robbed Alice. The court held a hearing.").tokens);
            let inside_one = sentences
                .iter()
                .any(|&(s, e)| t.subject.range.0 >= s && t.object.range.1 <= e);
            assert!(inside_one, "triplet spans a sentence boundary: {t:?}");
        }
    }

    #[test]
    fn verb_run_becomes_a_multi_token_predicate() {
        let triplets = extract_triplets(&doc("The applicant was arrested by the police."));
        assert_eq!(triplets.len(), 1);
        assert_eq!(triplets[0].subject.text, "the applicant");
        assert_eq!(triplets[0].predicate.text, "was arrested");
        assert_eq!(triplets[0].object.text, "by the police");
    }

    #[test]
    fn pronoun_clusters_with_preceding_subject() {
        let clusters = resolve_coref_lite(&doc("Bob robbed Alice. He fled."));
        let bob_cluster = clusters
            .iter()
            .find(|c| c.iter().any(|s| s.text == "bob"))
            .expect("bob should be a mention");
        assert!(
            bob_cluster.iter().any(|s| s.text == "he"),
            "pronoun failed to join its antecedent: {clusters:?}"
        );
    }

    #[test]
    fn no_pronouns_means_all_singletons() {
        let clusters = resolve_coref_lite(&doc("Bob robbed Alice. The court held a hearing."));
        assert!(!clusters.is_empty());
        for c in &clusters {
            assert_eq!(c.len(), 1, "unexpected cluster: {c:?}");
        }
    }

    #[test]
    fn leading_pronoun_stays_singleton() {
        let clusters = resolve_coref_lite(&doc("He fled."));
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].len(), 1);
        assert_eq!(clusters[0][0].text, "he");
    }

    #[test]
    fn antecedent_must_be_in_same_or_previous_sentence() {
        // "bob" is two sentences back from the pronoun, out of range
        let clusters = resolve_coref_lite(&doc("Bob robbed Alice. The court held a hearing. He fled."));
        let he = clusters
            .iter()
            .find(|c| c.iter().any(|s| s.text == "he"))
            .expect("pronoun mention missing");
        assert!(
            !he.iter().any(|s| s.text == "bob"),
            "pronoun skipped over a sentence: {he:?}"
        );
    }
}
