//! Single tokenizer shared by counters, ratios and readability.
//!
//! A text splits into three token kinds, scanned left to right:
//!
//! * URL: `https?://…` or `www.…`, trailing sentence punctuation excluded;
//! * word: a run of letters/digits, optionally joined by inner apostrophes
//!   (`don't`, `it’s`);
//! * punctuation: any other single non-whitespace character.

use std::sync::OnceLock;

use regex::Regex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Word,
    Url,
    Punct,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    pub kind: TokenKind,
}

/// URL pattern, also used standalone by the URL counter.
pub const URL_PATTERN: &str = r#"(?i)(?:https?://|www\.)[^\s<>"]*[^\s<>".,;:!?)\]'"]"#;

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let pattern = format!(r"({URL_PATTERN})|([\p{{L}}\p{{N}}]+(?:['’][\p{{L}}]+)*)|([^\s\p{{L}}\p{{N}}])");
        Regex::new(&pattern).expect("token regex compiles")
    })
}

pub fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(URL_PATTERN).expect("url regex compiles"))
}

pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    token_regex()
        .captures_iter(text)
        .filter_map(|caps| {
            if let Some(m) = caps.get(1) {
                Some(Token { text: m.as_str(), kind: TokenKind::Url })
            } else if let Some(m) = caps.get(2) {
                Some(Token { text: m.as_str(), kind: TokenKind::Word })
            } else {
                caps.get(3).map(|m| Token { text: m.as_str(), kind: TokenKind::Punct })
            }
        })
        .collect()
}

pub fn count_urls(text: &str) -> usize {
    url_regex().find_iter(text).count()
}

pub fn is_sentence_end(tok: &Token<'_>) -> bool {
    tok.kind == TokenKind::Punct && matches!(tok.text, "." | "!" | "?")
}

/// Sentences end at `.`, `!` or `?` that follow at least one word; trailing
/// words without a terminator form a final sentence.
pub fn count_sentences(tokens: &[Token<'_>]) -> usize {
    let mut sentences = 0;
    let mut words_pending = 0;
    for tok in tokens {
        match tok.kind {
            TokenKind::Word | TokenKind::Url => words_pending += 1,
            TokenKind::Punct if is_sentence_end(tok) && words_pending > 0 => {
                sentences += 1;
                words_pending = 0;
            }
            TokenKind::Punct => {}
        }
    }
    if words_pending > 0 {
        sentences += 1;
    }
    sentences
}
