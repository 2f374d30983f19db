//! Text normalization and sentence segmentation shared by the stages.

use crate::corpus::Span;

/// Lowercases and collapses every whitespace run to one space, trimming
/// both ends.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(c.to_lowercase());
    }
    out
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits `chars` into sentences, returned as character spans with
/// surrounding whitespace trimmed.
///
/// A sentence ends at `.`, `!` or `?` followed by whitespace or the end of
/// the text, and at every newline. There is no abbreviation handling.
pub fn sentence_spans(chars: &[char]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &c) in chars.iter().enumerate() {
        if c == '\n' {
            if let Some(s) = start.take() {
                spans.push(trimmed(chars, s, i));
            }
            continue;
        }
        if start.is_none() {
            if c.is_whitespace() {
                continue;
            }
            start = Some(i);
        }
        let at_boundary = chars.get(i + 1).is_none_or(|n| n.is_whitespace());
        if is_terminator(c) && at_boundary {
            let s = start.take().unwrap();
            spans.push(Span { start: s, end: i + 1 });
        }
    }
    if let Some(s) = start {
        spans.push(trimmed(chars, s, chars.len()));
    }
    spans
}

fn trimmed(chars: &[char], start: usize, mut end: usize) -> Span {
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    Span { start, end }
}
