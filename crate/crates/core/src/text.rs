//! Tokenization shared by the relevance filter, the annotator and the
//! definition search. One definition of "word" keeps their matching rules
//! consistent: maximal runs of alphanumeric characters, case-folded.

/// A token with its byte span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Original text of the run.
    pub text: String,
    /// Case-folded form used for matching.
    pub folded: String,
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
}

/// Splits `text` into maximal alphanumeric runs. Everything else is a
/// separator and is dropped.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    for (idx, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(idx);
            }
        } else if let Some(start) = run_start.take() {
            push_token(text, start, idx, &mut out);
        }
    }
    if let Some(start) = run_start {
        push_token(text, start, text.len(), &mut out);
    }
    out
}

fn push_token(text: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let raw = &text[start..end];
    out.push(Token {
        text: raw.to_string(),
        folded: raw.to_lowercase(),
        start,
        end,
    });
}

/// Case-folded token sequence of `text`, for callers that do not need spans.
pub fn folded_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.folded).collect()
}

/// True when `needle` occurs as a consecutive subsequence of `haystack`.
/// Both sides are folded token sequences; an empty needle never matches.
pub fn contains_sequence(haystack: &[String], needle: &[String]) -> bool {
    if needle.is_empty() || needle.len() > haystack.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}

/// Trims and collapses internal whitespace runs to single spaces.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch);
        }
    }
    out
}
