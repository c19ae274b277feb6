//! Readability scores and syllable counting.
//!
//! Syllable rules:
//! 1. lowercase the word and keep ASCII letters only;
//! 2. count maximal runs of vowels `a e i o u y`;
//! 3. a final `e` is silent (subtract one) when the count exceeds one,
//!    except for a consonant + `le` ending (`table`);
//! 4. every word has at least one syllable.

use std::collections::BTreeSet;

use super::lexicon::easy_words;
use super::tokenize::{count_sentences, tokenize, Token, TokenKind};

/// Average adult reading speed used for the reading-time estimate.
pub const WORDS_PER_SECOND: f64 = 3.83;

pub fn count_syllables(word: &str) -> usize {
    let letters: Vec<u8> = word
        .bytes()
        .filter(u8::is_ascii_alphabetic)
        .map(|b| b.to_ascii_lowercase())
        .collect();
    let is_vowel = |b: u8| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y');
    let mut count = 0usize;
    let mut prev_vowel = false;
    for &b in &letters {
        let v = is_vowel(b);
        if v && !prev_vowel {
            count += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    if count > 1 && n >= 2 && letters[n - 1] == b'e' {
        let consonant_le = n >= 3 && letters[n - 2] == b'l' && !is_vowel(letters[n - 3]);
        if !consonant_le {
            count -= 1;
        }
    }
    count.max(1)
}

/// Counts shared by the readability scores.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    /// Words of at most three letters.
    pub miniwords: usize,
}

impl TextCounts {
    pub fn from_tokens(tokens: &[Token<'_>]) -> Self {
        let mut counts = TextCounts { sentences: count_sentences(tokens), ..Default::default() };
        for tok in tokens.iter().filter(|t| t.kind == TokenKind::Word) {
            counts.words += 1;
            counts.syllables += count_syllables(tok.text);
            if tok.text.chars().count() <= 3 {
                counts.miniwords += 1;
            }
        }
        counts
    }

    /// Readability is undefined (sentinel 0.0) for texts without words.
    pub fn is_defined(&self) -> bool {
        self.words > 0
    }

    pub fn flesch(&self) -> f64 {
        if !self.is_defined() {
            return 0.0;
        }
        let words = self.words.max(1) as f64;
        let sentences = self.sentences.max(1) as f64;
        206.835 - 1.015 * (words / sentences) - 84.6 * (self.syllables as f64 / words)
    }

    pub fn eflaw(&self) -> f64 {
        if !self.is_defined() {
            return 0.0;
        }
        (self.words + self.miniwords) as f64 / self.sentences.max(1) as f64
    }
}

pub fn flesch_score(text: &str) -> f64 {
    TextCounts::from_tokens(&tokenize(text)).flesch()
}

pub fn mcalpine_eflaw(text: &str) -> f64 {
    TextCounts::from_tokens(&tokenize(text)).eflaw()
}

/// Scores above this are unfavorable for non-native readers.
pub const EFLAW_UNFAVORABLE: f64 = 25.0;

/// Distinct words (case-insensitive) with three or more syllables that are
/// not on the easy-word list.
pub fn difficult_words(tokens: &[Token<'_>]) -> usize {
    let easy = easy_words();
    tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Word)
        .map(|t| t.text.to_lowercase())
        .filter(|w| count_syllables(w) >= 3 && !easy.contains(w.as_str()))
        .collect::<BTreeSet<_>>()
        .len()
}

pub fn reading_time_seconds(words: usize) -> f64 {
    words as f64 / WORDS_PER_SECOND
}
