//! Shipped lexica for the closed-class attacks.

use std::collections::HashSet;
use std::sync::LazyLock;

fn load(raw: &'static str) -> HashSet<&'static str> {
    raw.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

/// Determiners, auxiliaries, conjunctions, pronouns, prepositions, and
/// particles — the target set of the functional-word attack.
pub static FUNCTION_WORDS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| load(include_str!("../../data/function_words.txt")));

/// Preposition list for the preposition attack. `of` and `for` are present
/// here but excluded at enumeration time, together with number-flanked
/// occurrences.
pub static PREPOSITIONS: LazyLock<HashSet<&'static str>> =
    LazyLock::new(|| load(include_str!("../../data/prepositions.txt")));

/// The auxiliary verbs targeted by the auxiliary-verb attack.
pub const AUXILIARIES: [&str; 23] = [
    "be", "am", "is", "are", "was", "were", "been", "being", "do", "does", "did", "have", "has",
    "had", "can", "could", "may", "might", "must", "shall", "should", "will", "would",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexica_load_and_cover_the_obvious_members() {
        for w in ["a", "an", "the", "and", "he", "of", "to", "not"] {
            assert!(FUNCTION_WORDS.contains(w), "{w} missing from function words");
        }
        for p in ["of", "for", "in", "on", "from", "to", "between"] {
            assert!(PREPOSITIONS.contains(p), "{p} missing from prepositions");
        }
        assert!(!FUNCTION_WORDS.contains(""), "comments/blanks must be stripped");
    }

    #[test]
    fn auxiliaries_are_distinct_function_words() {
        assert_eq!(AUXILIARIES.len(), 23);
        let set: HashSet<_> = AUXILIARIES.iter().collect();
        assert_eq!(set.len(), 23, "duplicate auxiliary");
        for aux in AUXILIARIES {
            assert!(FUNCTION_WORDS.contains(aux), "{aux} should also be a function word");
        }
    }
}
