//! Content features extracted from review text, plus word-gram rows.

pub mod lexicon;
pub mod readability;
pub mod sentiment;
pub mod tokenize;
pub mod wordgrams;

use serde::{Deserialize, Serialize};

use crate::types::{DatasetProfile, RawEvent};
use lexicon::{pos_tag, PosTag};
use readability::{difficult_words, reading_time_seconds, TextCounts};
use sentiment::{polarity_and_emotion_tokens, rating_polarity_deviation, EmotionLoad};
use tokenize::{count_urls, tokenize, TokenKind};

pub use readability::{flesch_score, mcalpine_eflaw};
pub use sentiment::polarity_and_emotion;
pub use wordgrams::{build_wordgrams, VocabState, WordGramRow};

pub const ADJECTIVE_RATIO: &str = "adjective_ratio";
pub const ADVERB_RATIO: &str = "adverb_ratio";
pub const CHAR_COUNT: &str = "char_count";
pub const DIFFICULT_WORD_COUNT: &str = "difficult_word_count";
pub const EMOTION_ANGER: &str = "emotion_anger";
pub const EMOTION_FEAR: &str = "emotion_fear";
pub const EMOTION_HAPPINESS: &str = "emotion_happiness";
pub const EMOTION_SADNESS: &str = "emotion_sadness";
pub const EMOTION_SURPRISE: &str = "emotion_surprise";
pub const FLESCH: &str = "flesch";
pub const INTERJECTION_RATIO: &str = "interjection_ratio";
pub const EFLAW: &str = "eflaw";
pub const NOUN_RATIO: &str = "noun_ratio";
pub const POLARITY: &str = "polarity";
pub const PRONOUN_RATIO: &str = "pronoun_ratio";
pub const PUNCTUATION_RATIO: &str = "punctuation_ratio";
pub const READING_TIME: &str = "reading_time_seconds";
pub const URL_COUNT: &str = "url_count";
pub const VERB_RATIO: &str = "verb_ratio";
pub const WORD_COUNT: &str = "word_count";
pub const RATING_POLARITY_DEVIATION: &str = "rating_polarity_deviation";
pub const RATING: &str = "rating";

/// Content feature IDs with their keys. Word-grams (17) live in
/// [`WordGramRow`] and have no scalar key.
pub const CONTENT_FEATURE_KEYS: &[(u8, &[&str])] = &[
    (1, &[ADJECTIVE_RATIO]),
    (2, &[ADVERB_RATIO]),
    (3, &[CHAR_COUNT]),
    (4, &[DIFFICULT_WORD_COUNT]),
    (5, &[EMOTION_ANGER, EMOTION_FEAR, EMOTION_HAPPINESS, EMOTION_SADNESS, EMOTION_SURPRISE]),
    (6, &[FLESCH]),
    (7, &[INTERJECTION_RATIO]),
    (8, &[EFLAW]),
    (9, &[NOUN_RATIO]),
    (10, &[POLARITY]),
    (11, &[PRONOUN_RATIO]),
    (12, &[PUNCTUATION_RATIO]),
    (13, &[READING_TIME]),
    (14, &[URL_COUNT]),
    (15, &[VERB_RATIO]),
    (16, &[WORD_COUNT]),
    (18, &[RATING_POLARITY_DEVIATION]),
    (19, &[RATING]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentFeatures {
    pub adjective_ratio: f64,
    pub adverb_ratio: f64,
    pub char_count: f64,
    pub difficult_word_count: f64,
    pub emotions: [f64; 5],
    pub flesch: f64,
    pub interjection_ratio: f64,
    pub eflaw: f64,
    pub noun_ratio: f64,
    pub polarity: f64,
    pub pronoun_ratio: f64,
    pub punctuation_ratio: f64,
    pub reading_time_seconds: f64,
    pub url_count: f64,
    pub verb_ratio: f64,
    pub word_count: f64,
    /// Yelp profile with a rating only.
    pub rating_polarity_deviation: Option<f64>,
    pub rating: Option<f64>,
    /// False when the text has no words; flesch/eflaw then hold the 0.0 sentinel.
    pub readability_defined: bool,
}

impl ContentFeatures {
    /// `(key, value)` pairs in feature-ID order.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            (ADJECTIVE_RATIO, self.adjective_ratio),
            (ADVERB_RATIO, self.adverb_ratio),
            (CHAR_COUNT, self.char_count),
            (DIFFICULT_WORD_COUNT, self.difficult_word_count),
            (EMOTION_ANGER, self.emotions[0]),
            (EMOTION_FEAR, self.emotions[1]),
            (EMOTION_HAPPINESS, self.emotions[2]),
            (EMOTION_SADNESS, self.emotions[3]),
            (EMOTION_SURPRISE, self.emotions[4]),
            (FLESCH, self.flesch),
            (INTERJECTION_RATIO, self.interjection_ratio),
            (EFLAW, self.eflaw),
            (NOUN_RATIO, self.noun_ratio),
            (POLARITY, self.polarity),
            (PRONOUN_RATIO, self.pronoun_ratio),
            (PUNCTUATION_RATIO, self.punctuation_ratio),
            (READING_TIME, self.reading_time_seconds),
            (URL_COUNT, self.url_count),
            (VERB_RATIO, self.verb_ratio),
            (WORD_COUNT, self.word_count),
        ];
        if let Some(d) = self.rating_polarity_deviation {
            out.push((RATING_POLARITY_DEVIATION, d));
        }
        if let Some(r) = self.rating {
            out.push((RATING, r));
        }
        out
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.entries().into_iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }
}

fn emotion_array(load: &EmotionLoad) -> [f64; 5] {
    [load.anger, load.fear, load.happiness, load.sadness, load.surprise]
}

/// Ratios are taken over all tokens (words, URLs and punctuation marks).
pub fn extract_content_features(event: &RawEvent, profile: DatasetProfile) -> ContentFeatures {
    let text = event.text.as_str();
    let tokens = tokenize(text);
    let total = tokens.len();
    let mut pos = [0usize; 6];
    let mut punct = 0usize;
    for tok in &tokens {
        match tok.kind {
            TokenKind::Punct => punct += 1,
            TokenKind::Url => {}
            TokenKind::Word => {
                let idx = match pos_tag(&tok.text.to_lowercase()) {
                    PosTag::Adjective => 0,
                    PosTag::Adverb => 1,
                    PosTag::Interjection => 2,
                    PosTag::Noun => 3,
                    PosTag::Pronoun => 4,
                    PosTag::Verb => 5,
                    PosTag::Other => continue,
                };
                pos[idx] += 1;
            }
        }
    }
    let ratio = |n: usize| if total == 0 { 0.0 } else { n as f64 / total as f64 };
    let counts = TextCounts::from_tokens(&tokens);
    let (polarity, load) = polarity_and_emotion_tokens(&tokens);

    let (rating, deviation) = match (profile.uses_rating(), event.rating) {
        (true, Some(r)) => (Some(r as f64), Some(rating_polarity_deviation(r, polarity))),
        _ => (None, None),
    };

    ContentFeatures {
        adjective_ratio: ratio(pos[0]),
        adverb_ratio: ratio(pos[1]),
        char_count: text.chars().count() as f64,
        difficult_word_count: difficult_words(&tokens) as f64,
        emotions: emotion_array(&load),
        flesch: counts.flesch(),
        interjection_ratio: ratio(pos[2]),
        eflaw: counts.eflaw(),
        noun_ratio: ratio(pos[3]),
        polarity,
        pronoun_ratio: ratio(pos[4]),
        punctuation_ratio: ratio(punct),
        reading_time_seconds: reading_time_seconds(counts.words),
        url_count: count_urls(text) as f64,
        verb_ratio: ratio(pos[5]),
        word_count: counts.words as f64,
        rating_polarity_deviation: deviation,
        rating,
        readability_defined: counts.is_defined(),
    }
}
