//! Embedded word lists: stop words, POS closed classes, sentiment/emotion
//! lexicon and the easy-word list used by the difficult-word counter.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

const STOPWORDS: &str = include_str!("../../resources/stopwords.txt");
const POS_LEXICON: &str = include_str!("../../resources/pos_lexicon.tsv");
const SENTIMENT: &str = include_str!("../../resources/sentiment.tsv");
const EASY_WORDS: &str = include_str!("../../resources/easy_words.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Adjective,
    Adverb,
    Interjection,
    Noun,
    Pronoun,
    Verb,
    /// Determiners, adpositions, conjunctions, numerals: counted in no ratio.
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Anger,
    Fear,
    Happiness,
    Sadness,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 5] = [
        Emotion::Anger,
        Emotion::Fear,
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
    ];

    fn parse(s: &str) -> Option<Emotion> {
        match s.trim() {
            "anger" => Some(Emotion::Anger),
            "fear" => Some(Emotion::Fear),
            "happiness" => Some(Emotion::Happiness),
            "sadness" => Some(Emotion::Sadness),
            "surprise" => Some(Emotion::Surprise),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentEntry {
    pub polarity: f64,
    pub emotions: Vec<Emotion>,
}

fn lines(src: &str) -> impl Iterator<Item = &str> {
    src.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| lines(STOPWORDS).collect())
}

pub fn is_stopword(lower: &str) -> bool {
    stopwords().contains(lower)
}

pub fn easy_words() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| lines(EASY_WORDS).collect())
}

fn pos_lexicon() -> &'static HashMap<&'static str, PosTag> {
    static MAP: OnceLock<HashMap<&'static str, PosTag>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in lines(POS_LEXICON) {
            let mut cols = line.split('\t');
            let (Some(word), Some(tag)) = (cols.next(), cols.next()) else {
                continue;
            };
            let tag = match tag {
                "ADJ" => PosTag::Adjective,
                "ADV" => PosTag::Adverb,
                "INTJ" => PosTag::Interjection,
                "PRON" => PosTag::Pronoun,
                "VERB" | "AUX" => PosTag::Verb,
                _ => PosTag::Other,
            };
            map.entry(word).or_insert(tag);
        }
        map
    })
}

pub fn sentiment_lexicon() -> &'static HashMap<&'static str, SentimentEntry> {
    static MAP: OnceLock<HashMap<&'static str, SentimentEntry>> = OnceLock::new();
    MAP.get_or_init(|| {
        let mut map = HashMap::new();
        for line in lines(SENTIMENT) {
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 3 {
                continue;
            }
            let Ok(polarity) = cols[1].trim().parse::<f64>() else {
                continue;
            };
            let emotions = cols[2].split(',').filter_map(Emotion::parse).collect();
            map.insert(cols[0], SentimentEntry { polarity, emotions });
        }
        map
    })
}

const ADJECTIVE_SUFFIXES: &[&str] = &["ful", "ous", "ive", "able", "ible", "less", "ish", "ic", "al", "est"];
const VERB_SUFFIXES: &[&str] = &["ing", "ed", "ize", "ise", "ify", "ate", "en"];

/// Closed-class lookup first, then suffix heuristics; any remaining
/// alphabetic word is a noun. Tokens containing digits are `Other`.
pub fn pos_tag(lower: &str) -> PosTag {
    if let Some(tag) = pos_lexicon().get(lower) {
        return *tag;
    }
    if !lower.chars().all(|c| c.is_alphabetic() || c == '\'' || c == '’') {
        return PosTag::Other;
    }
    let len = lower.chars().count();
    if len > 4 && lower.ends_with("ly") {
        return PosTag::Adverb;
    }
    if len > 4 && ADJECTIVE_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return PosTag::Adjective;
    }
    if len > 4 && VERB_SUFFIXES.iter().any(|s| lower.ends_with(s)) {
        return PosTag::Verb;
    }
    PosTag::Noun
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resources_load() {
        assert!(stopwords().len() >= 120);
        assert!(is_stopword("the"));
        assert!(!is_stopword("pizza"));
        assert!(sentiment_lexicon().contains_key("great"));
        assert!(easy_words().contains("family"));
    }

    #[test]
    fn tags_closed_classes_and_suffixes() {
        assert_eq!(pos_tag("she"), PosTag::Pronoun);
        assert_eq!(pos_tag("wow"), PosTag::Interjection);
        assert_eq!(pos_tag("quickly"), PosTag::Adverb);
        assert_eq!(pos_tag("wonderful"), PosTag::Adjective);
        assert_eq!(pos_tag("walking"), PosTag::Verb);
        assert_eq!(pos_tag("the"), PosTag::Other);
        assert_eq!(pos_tag("cat"), PosTag::Noun);
        assert_eq!(pos_tag("42"), PosTag::Other);
    }
}
