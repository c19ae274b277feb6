//! Lexicon-based polarity and emotion load.
//!
//! Polarity is the mean lexicon score over matched words; a match directly
//! preceded by a negator (`not`, `no`, `never`, `*n't`) contributes its score
//! times -0.5. Emotion `e` is the fraction of emotion-bearing matches that
//! carry `e`.

use super::lexicon::{sentiment_lexicon, Emotion};
use super::tokenize::{Token, TokenKind};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EmotionLoad {
    pub anger: f64,
    pub fear: f64,
    pub happiness: f64,
    pub sadness: f64,
    pub surprise: f64,
}

impl EmotionLoad {
    pub fn get(&self, e: Emotion) -> f64 {
        match e {
            Emotion::Anger => self.anger,
            Emotion::Fear => self.fear,
            Emotion::Happiness => self.happiness,
            Emotion::Sadness => self.sadness,
            Emotion::Surprise => self.surprise,
        }
    }

    fn slot(&mut self, e: Emotion) -> &mut f64 {
        match e {
            Emotion::Anger => &mut self.anger,
            Emotion::Fear => &mut self.fear,
            Emotion::Happiness => &mut self.happiness,
            Emotion::Sadness => &mut self.sadness,
            Emotion::Surprise => &mut self.surprise,
        }
    }
}

fn is_negator(lower: &str) -> bool {
    matches!(lower, "not" | "no" | "never" | "without") || lower.ends_with("n't") || lower.ends_with("n’t")
}

pub fn polarity_and_emotion_tokens(tokens: &[Token<'_>]) -> (f64, EmotionLoad) {
    let lexicon = sentiment_lexicon();
    let mut polarity_sum = 0.0;
    let mut polarity_hits = 0usize;
    let mut emotion_hits = 0usize;
    let mut load = EmotionLoad::default();
    let mut prev_negator = false;

    for tok in tokens {
        if tok.kind != TokenKind::Word {
            if tok.kind == TokenKind::Punct {
                prev_negator = false;
            }
            continue;
        }
        let lower = tok.text.to_lowercase();
        if let Some(entry) = lexicon.get(lower.as_str()) {
            let score = if prev_negator { -0.5 * entry.polarity } else { entry.polarity };
            polarity_sum += score;
            polarity_hits += 1;
            if !entry.emotions.is_empty() {
                emotion_hits += 1;
                for &e in &entry.emotions {
                    *load.slot(e) += 1.0;
                }
            }
        }
        prev_negator = is_negator(&lower);
    }

    let polarity = if polarity_hits == 0 {
        0.0
    } else {
        (polarity_sum / polarity_hits as f64).clamp(-1.0, 1.0)
    };
    if emotion_hits > 0 {
        for e in Emotion::ALL {
            *load.slot(e) /= emotion_hits as f64;
        }
    }
    (polarity, load)
}

pub fn polarity_and_emotion(text: &str) -> (f64, EmotionLoad) {
    polarity_and_emotion_tokens(&super::tokenize::tokenize(text))
}

/// Polarity mapped onto the 0..5 rating scale.
pub fn polarity_likert(polarity: f64) -> f64 {
    2.5 * (polarity + 1.0)
}

/// Unclamped |rating − likert(polarity)|, in [0, 5].
pub fn rating_polarity_deviation(rating: u8, polarity: f64) -> f64 {
    (rating as f64 - polarity_likert(polarity)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_and_unknown_text() {
        assert_eq!(polarity_and_emotion("").0, 0.0);
        assert_eq!(polarity_and_emotion("").1, EmotionLoad::default());
        assert_eq!(polarity_and_emotion("zxq blorp").0, 0.0);
    }

    #[test]
    fn single_positive_word() {
        let (p, load) = polarity_and_emotion("The pasta was great");
        assert!(p > 0.0);
        assert_eq!(load.happiness, 1.0);
    }

    #[test]
    fn negation_flips_and_damps() {
        let (p, _) = polarity_and_emotion("not great");
        assert!((p - (-0.4)).abs() < 1e-12);
    }

    #[test]
    fn emotion_fractions() {
        // terrible: anger+sadness, scary: fear
        let (_, load) = polarity_and_emotion("terrible and scary");
        assert!((load.anger - 0.5).abs() < 1e-12);
        assert!((load.sadness - 0.5).abs() < 1e-12);
        assert!((load.fear - 0.5).abs() < 1e-12);
        assert_eq!(load.happiness, 0.0);
    }

    #[test]
    fn deviation_is_unclamped() {
        assert_eq!(rating_polarity_deviation(5, -1.0), 5.0);
        assert_eq!(rating_polarity_deviation(3, 0.0), 0.5);
    }
}
