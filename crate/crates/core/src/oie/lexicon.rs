//! Verb lexicon (shipped data file) plus the regular-past suffix heuristic.

use std::collections::HashSet;
use std::sync::LazyLock;

static VERBS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    include_str!("../../data/verbs.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

/// A surface counts as a verb when its lowercase form is in the lexicon or
/// ends in "-ed" with at least four characters (so "fled" and "robbed" hit,
/// but "red" does not).
pub fn is_verb(surface: &str) -> bool {
    let lower = surface.to_lowercase();
    VERBS.contains(lower.as_str()) || (lower.len() >= 4 && lower.ends_with("ed"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_and_suffix_paths_both_fire() {
        assert!(is_verb("was"));
        assert!(is_verb("Robbed"));
        assert!(is_verb("fled"));
        assert!(is_verb("arrested"));
        assert!(!is_verb("red"));
        assert!(!is_verb("applicant"));
    }
}
