//! Whitespace + punctuation tokenizer. No subwords, no lowercasing.
//!
//! Lexeme rules, applied at each non-whitespace byte:
//! * the literal `[MASK]` is one token of kind `Mask` (attacked documents
//!   must survive a detokenize → tokenize round trip);
//! * a digit starts a number: `[0-9]+` with internal dots kept only when
//!   flanked by digits on both sides, so `3.14` is one token but the trailing
//!   dot of `3.` is punctuation;
//! * a letter starts a word: a maximal alphabetic run, case preserved;
//! * anything else is a single punctuation glyph.

use super::{Token, TokenKind};

const MASK_SURFACE: &str = "[MASK]";

pub fn tokenize(raw: &str) -> Vec<Token> {
    let bytes = raw.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &raw[i..];
        let ch = rest.chars().next().unwrap();
        if ch.is_whitespace() {
            i += ch.len_utf8();
            continue;
        }
        let (len, kind) = if rest.starts_with(MASK_SURFACE) {
            (MASK_SURFACE.len(), TokenKind::Mask)
        } else if ch.is_ascii_digit() {
            (number_len(rest), TokenKind::Number)
        } else if ch.is_alphabetic() {
            (word_len(rest), TokenKind::Word)
        } else {
            (ch.len_utf8(), TokenKind::Punctuation)
        };
        tokens.push(Token {
            surface: rest[..len].to_string(),
            position: tokens.len(),
            char_span: (i, i + len),
            kind,
        });
        i += len;
    }
    tokens
}

/// Inverse-ish of [`tokenize`]: surfaces joined by single spaces. Tokenizing
/// the result reproduces the same surfaces and kinds.
pub fn detokenize(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

fn number_len(s: &str) -> usize {
    let b = s.as_bytes();
    let mut i = 0;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    // a dot continues the number only when a digit follows it
    while i < b.len() && b[i] == b'.' && b.get(i + 1).is_some_and(|c| c.is_ascii_digit()) {
        i += 1;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
    }
    i
}

fn word_len(s: &str) -> usize {
    s.char_indices()
        .find(|(_, c)| !c.is_alphabetic())
        .map(|(i, _)| i)
        .unwrap_or(s.len())
}
