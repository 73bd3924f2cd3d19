//! Tokenization shared by the reference encoder, term counting and the
//! word-matching baseline.

/// Characters that close a sentence. Bigrams never span one of these.
const SENTENCE_BREAKS: [char; 4] = ['.', '!', '?', ';'];

/// Lowercase alphanumeric tokens in reading order.
pub fn tokenize(text: &str) -> Vec<String> {
    sentences(text).into_iter().flatten().collect()
}

/// Tokens grouped by sentence. Empty sentences are dropped.
pub fn sentences(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut word = String::new();

    for ch in text.chars() {
        if ch.is_alphanumeric() {
            word.extend(ch.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            current.push(std::mem::take(&mut word));
        }
        if SENTENCE_BREAKS.contains(&ch) && !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !word.is_empty() {
        current.push(word);
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Parse a word list: one entry per line, blank lines and `#` comments skipped,
/// entries trimmed and lowercased.
pub fn parse_word_list(source: &str) -> Vec<String> {
    source
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}
