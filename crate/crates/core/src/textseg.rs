//! Paragraph / sentence segmentation and tokenization.
//!
//! Tokens are maximal runs of Unicode letters and digits, except that every
//! CJK codepoint is a token on its own. Punctuation never forms a token.
//! Sentences end at `. ! ? …` followed by whitespace (or end of text), or
//! unconditionally at the full-width terminators `。！？；`. Paragraphs are
//! separated by one or more blank lines. No abbreviation handling.

use std::collections::HashSet;
use std::ops::Range;

use crate::error::TextError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    /// Half-open byte range into the text that was tokenized.
    pub byte_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<Token>,
    /// Ordinal within the whole document.
    pub index: usize,
    pub paragraph_index: usize,
    /// Half-open byte range into the document source. Token spans are
    /// relative to the document source as well.
    pub byte_span: (usize, usize),
}

impl Sentence {
    pub fn token_set(&self) -> HashSet<&str> {
        self.tokens.iter().map(|t| t.normalized.as_str()).collect()
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedDocument {
    pub source: String,
    /// Sentence indices per paragraph, in order.
    pub paragraphs: Vec<Vec<usize>>,
    pub sentences: Vec<Sentence>,
}

impl SegmentedDocument {
    /// Source text between the end of sentence `i` and the start of `i + 1`.
    pub fn gap_after(&self, i: usize) -> Option<&str> {
        let cur = self.sentences.get(i)?;
        let next = self.sentences.get(i + 1)?;
        Some(&self.source[cur.byte_span.1..next.byte_span.0])
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::token_count).sum()
    }
}

/// True for codepoints that are tokenized one character at a time.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x309F      // Hiragana
        | 0x30A0..=0x30FF    // Katakana
        | 0x3400..=0x4DBF    // CJK Ext A
        | 0x4E00..=0x9FFF    // CJK Unified
        | 0xAC00..=0xD7AF    // Hangul syllables
        | 0xF900..=0xFAFF    // CJK compatibility
        | 0x20000..=0x2FA1F  // Ext B..F, compatibility supplement
        | 0x30000..=0x3134F  // Ext G
    )
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() && !is_cjk(c)
}

/// Case fold used for token normalization.
pub fn fold(s: &str) -> String {
    s.to_lowercase()
}

/// Tokenize `text`. Byte spans are relative to `text`.
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_at(text, 0)
}

fn tokenize_at(text: &str, offset: usize) -> Vec<Token> {
    let mut out = Vec::new();
    let mut run_start: Option<usize> = None;
    let push = |out: &mut Vec<Token>, r: Range<usize>| {
        let surface = &text[r.clone()];
        out.push(Token {
            surface: surface.to_string(),
            normalized: fold(surface),
            byte_span: (r.start + offset, r.end + offset),
        });
    };
    for (i, c) in text.char_indices() {
        if is_word_char(c) {
            run_start.get_or_insert(i);
            continue;
        }
        if let Some(s) = run_start.take() {
            push(&mut out, s..i);
        }
        if is_cjk(c) {
            push(&mut out, i..i + c.len_utf8());
        }
    }
    if let Some(s) = run_start {
        push(&mut out, s..text.len());
    }
    out
}

pub fn token_count(text: &str) -> usize {
    let mut n = 0;
    let mut in_word = false;
    for c in text.chars() {
        if is_word_char(c) {
            if !in_word {
                n += 1;
                in_word = true;
            }
        } else {
            in_word = false;
            if is_cjk(c) {
                n += 1;
            }
        }
    }
    n
}

/// Normalized token sequence of `text`, joined by single spaces.
pub fn normalized_key(text: &str) -> String {
    tokenize(text)
        .into_iter()
        .map(|t| t.normalized)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Cut `text` after its `max_tokens`-th token. Text is returned unchanged
/// when it already fits. Never splits a token.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let toks = tokenize(text);
    if toks.len() <= max_tokens {
        text
    } else if max_tokens == 0 {
        ""
    } else {
        &text[..toks[max_tokens - 1].byte_span.1]
    }
}

/// Terminators that end a sentence regardless of what follows.
fn is_hard_terminator(c: char) -> bool {
    matches!(c, '。' | '！' | '？' | '；' | '｡')
}

/// Terminators that end a sentence only before whitespace or end of text.
fn is_soft_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

pub fn is_terminator(c: char) -> bool {
    is_hard_terminator(c) || is_soft_terminator(c)
}

fn is_closer(c: char) -> bool {
    matches!(
        c,
        '"' | '\'' | ')' | ']' | '}' | '”' | '’' | '）' | '」' | '』' | '】' | '》' | '〉'
    )
}

/// Byte ranges of paragraphs (blank-line separated, whitespace-only
/// paragraphs dropped).
fn paragraph_ranges(source: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut line_start = 0;
    let mut saw_blank = false;
    let mut para_has_text = false;
    let bytes = source.as_bytes();
    let mut i = 0;
    while i <= bytes.len() {
        let at_end = i == bytes.len();
        if at_end || bytes[i] == b'\n' {
            let line = &source[line_start..i];
            if line.trim().is_empty() {
                saw_blank = true;
            } else {
                if saw_blank && para_has_text {
                    out.push(start..line_start);
                    start = line_start;
                }
                saw_blank = false;
                para_has_text = true;
            }
            line_start = i + 1;
        }
        i += 1;
    }
    if para_has_text {
        out.push(start..source.len());
    }
    out
}

/// Split one paragraph into trimmed sentence byte ranges (absolute).
fn sentence_ranges(source: &str, para: Range<usize>) -> Vec<Range<usize>> {
    let text = &source[para.clone()];
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut cuts = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        // absorb terminator runs and closing quotes/brackets
        let mut j = i + 1;
        let mut hard = is_hard_terminator(c);
        while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
            hard |= is_hard_terminator(chars[j].1);
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(b, _)| b);
        let followed_by_space = chars.get(j).is_none_or(|&(_, n)| n.is_whitespace());
        if hard || followed_by_space {
            cuts.push(end);
        }
        i = j;
    }
    let mut out = Vec::new();
    let mut prev = 0;
    for cut in cuts.into_iter().chain(std::iter::once(text.len())) {
        let piece = &text[prev..cut];
        let lead = piece.len() - piece.trim_start().len();
        let trimmed = piece.trim();
        if !trimmed.is_empty() {
            let s = para.start + prev + lead;
            out.push(s..s + trimmed.len());
        }
        prev = cut;
    }
    out
}

pub fn segment(document: &str) -> Result<SegmentedDocument, TextError> {
    if document.trim().is_empty() {
        return Err(TextError::EmptyDocument);
    }
    let mut paragraphs = Vec::new();
    let mut sentences = Vec::new();
    for (pi, para) in paragraph_ranges(document).into_iter().enumerate() {
        let mut members = Vec::new();
        for r in sentence_ranges(document, para) {
            let index = sentences.len();
            members.push(index);
            sentences.push(Sentence {
                text: document[r.clone()].to_string(),
                tokens: tokenize_at(&document[r.clone()], r.start),
                index,
                paragraph_index: pi,
                byte_span: (r.start, r.end),
            });
        }
        paragraphs.push(members);
    }
    Ok(SegmentedDocument {
        source: document.to_string(),
        paragraphs,
        sentences,
    })
}
