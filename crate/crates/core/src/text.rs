//! Tokenization and sentence splitting shared by every module.
//!
//! A token is a maximal run of alphanumeric characters, lowercased. Everything
//! else (whitespace, punctuation, symbols) is a boundary and never appears in
//! a token, so punctuation-only tokens cannot exist.

use std::collections::HashSet;
use std::ops::Range;
use std::sync::OnceLock;

/// A token together with the byte range it occupies in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub token: String,
    pub range: Range<usize>,
}

pub fn tokenize(text: &str) -> Vec<String> {
    tokenize_spans(text).into_iter().map(|s| s.token).collect()
}

pub fn tokenize_spans(text: &str) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            spans.push(make_span(text, s, i));
        }
    }
    if let Some(s) = start {
        spans.push(make_span(text, s, text.len()));
    }
    spans
}

fn make_span(text: &str, start: usize, end: usize) -> Span {
    Span {
        // some uppercase letters lowercase to a base letter plus a combining mark
        token: text[start..end].chars().flat_map(char::to_lowercase).filter(|c| c.is_alphanumeric()).collect(),
        range: start..end,
    }
}

pub fn token_count(text: &str) -> usize {
    tokenize_spans(text).len()
}

/// Byte ranges of sentences in `text`. A sentence ends after `.`, `!` or `?`
/// (plus any closing quotes/brackets) when followed by whitespace or the end
/// of the text. The ranges cover the text without gaps: trailing whitespace
/// belongs to the preceding sentence.
pub fn sentence_ranges(text: &str) -> Vec<Range<usize>> {
    let mut ranges = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (_, ch) = chars[i];
        if matches!(ch, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '"' | '\'' | ')' | ']' | '”' | '’') {
                j += 1;
            }
            if j == chars.len() || chars[j].1.is_whitespace() {
                while j < chars.len() && chars[j].1.is_whitespace() {
                    j += 1;
                }
                let end = if j == chars.len() { text.len() } else { chars[j].0 };
                ranges.push(start..end);
                start = end;
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if start < text.len() {
        ranges.push(start..text.len());
    }
    ranges
}

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "before", "but", "by",
    "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how", "i", "if",
    "in", "into", "is", "it", "its", "more", "most", "much", "not", "of", "on", "or", "other", "our", "she", "so",
    "some", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "to",
    "up", "was", "we", "were", "what", "when", "where", "which", "who", "whom", "why", "will", "with", "would", "you",
];

pub fn stop_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOP_WORDS.iter().copied().collect())
}

pub fn is_stop_word(token: &str) -> bool {
    stop_words().contains(token)
}

/// Tokens with stop words removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_stop_word(t)).collect()
}
