//! Rule-based sentence boundary detection tuned for legal prose.
//!
//! A candidate boundary is a run of `.`, `?` or `!` (optionally followed by
//! closing quotes or brackets) that is followed by whitespace and then an
//! uppercase letter, an opening quote or an opening bracket. A period
//! candidate is discarded when the token it terminates is a known
//! abbreviation, a single capital initial, or a dotted citation form such as
//! `F.2d` or `U.S.C.`. A blank line always ends a sentence.

use std::collections::HashSet;
use std::sync::OnceLock;

/// Shipped abbreviation lexicon, one entry per line, compared
/// case-insensitively against the token ending in a period.
pub const DEFAULT_ABBREVIATIONS: &str = include_str!("abbreviations.txt");

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        Self::with_abbreviations(DEFAULT_ABBREVIATIONS.lines())
    }
}

impl SentenceSplitter {
    pub fn with_abbreviations<'a, I: IntoIterator<Item = &'a str>>(entries: I) -> Self {
        let abbreviations = entries
            .into_iter()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn abbreviations(&self) -> impl Iterator<Item = &str> {
        self.abbreviations.iter().map(String::as_str)
    }

    pub fn is_abbreviation(&self, token: &str) -> bool {
        self.abbreviations.contains(&token.to_lowercase())
    }

    /// Splits `text` into trimmed, non-empty sentences in document order.
    pub fn split<'t>(&self, text: &'t str) -> Vec<&'t str> {
        let mut out = Vec::new();
        let mut start = 0;
        for end in self.boundaries(text) {
            push_trimmed(&mut out, &text[start..end]);
            start = end;
        }
        push_trimmed(&mut out, &text[start..]);
        out
    }

    /// Byte offsets at which a new sentence may start (exclusive end of the
    /// previous one).
    fn boundaries(&self, text: &str) -> Vec<usize> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut cuts = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if c == '\n' && blank_line_follows(&chars, i) {
                cuts.push(pos);
                i += 1;
                continue;
            }
            if !matches!(c, '.' | '?' | '!') {
                i += 1;
                continue;
            }
            // Absorb the full terminator run plus closing punctuation.
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1].1, '.' | '?' | '!') {
                j += 1;
            }
            while j + 1 < chars.len() && is_closing(chars[j + 1].1) {
                j += 1;
            }
            let end = chars.get(j + 1).map_or(text.len(), |&(p, _)| p);
            let mut k = j + 1;
            let mut saw_space = false;
            while k < chars.len() && chars[k].1.is_whitespace() {
                saw_space = true;
                k += 1;
            }
            let opens_sentence = k < chars.len() && starts_sentence(&chars[k..]);
            if saw_space && opens_sentence && !(c == '.' && self.suppressed(text, pos)) {
                cuts.push(end);
            }
            i = j + 1;
        }
        cuts
    }

    /// Whether the period at byte `dot` belongs to an abbreviation or
    /// citation form rather than closing a sentence.
    fn suppressed(&self, text: &str, dot: usize) -> bool {
        let head = &text[..dot];
        let token_start = head
            .char_indices()
            .rev()
            .find(|&(_, ch)| ch.is_whitespace())
            .map_or(0, |(p, ch)| p + ch.len_utf8());
        let token = head[token_start..].trim_start_matches(is_opening);
        if token.is_empty() {
            return false;
        }
        let with_dot = format!("{token}.");
        if self.is_abbreviation(&with_dot) {
            return true;
        }
        let mut chars = token.chars();
        if let (Some(first), None) = (chars.next(), chars.next()) {
            // Middle initials and reporter letters: "J.", "F.", "S."
            if first.is_uppercase() {
                return true;
            }
        }
        // Dotted forms: "U.S.C", "F.2d", "e.g" -> every dot-separated piece short.
        if token.contains('.') {
            let pieces: Vec<&str> = token.split('.').collect();
            let dotted_citation = pieces
                .iter()
                .all(|p| !p.is_empty() && p.chars().count() <= 3 && p.chars().all(char::is_alphanumeric));
            if dotted_citation {
                return true;
            }
        }
        false
    }
}

fn push_trimmed<'t>(out: &mut Vec<&'t str>, piece: &'t str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece);
    }
}

fn blank_line_follows(chars: &[(usize, char)], i: usize) -> bool {
    chars[i + 1..]
        .iter()
        .take_while(|(_, c)| c.is_whitespace())
        .any(|&(_, c)| c == '\n')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opening(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

fn starts_sentence(rest: &[(usize, char)]) -> bool {
    let mut it = rest.iter().map(|&(_, c)| c);
    match it.next() {
        Some(c) if c.is_uppercase() => true,
        Some(c) if is_opening(c) => {
            // A quote or bracket counts when it opens something capitalised
            // or numeric ("(1) The ...").
            it.next()
                .is_some_and(|n| n.is_uppercase() || n.is_ascii_digit() || is_opening(n))
        }
        _ => false,
    }
}

fn default_splitter() -> &'static SentenceSplitter {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default)
}

/// Splits with the shipped abbreviation lexicon.
pub fn split_sentences(text: &str) -> Vec<String> {
    default_splitter().split(text).into_iter().map(str::to_string).collect()
}
