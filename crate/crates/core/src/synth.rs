//! Seeded synthetic streams for tests, benches and demos.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{FeatureVector, Label, RawEvent};

/// Label = [x > 0.5] with x uniform on [0, 1); one feature keyed `x`.
pub fn threshold_stream(n: usize, seed: u64) -> Vec<(FeatureVector, Label)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.gen();
            let label = if x > 0.5 { Label::Spam } else { Label::NonSpam };
            (FeatureVector::from_iter([("x".to_owned(), x)]), label)
        })
        .collect()
}

const FAMILY_A: [&str; 6] = ["quorb", "zint", "plov", "drask", "mirp", "tolk"];
const FAMILY_B: [&str; 6] = ["vesk", "grun", "blor", "frap", "kelt", "snib"];
const FILLER: [&str; 12] = ["dorn", "wumb", "trel", "fisk", "hord", "jamp", "lurt", "nost", "pirk", "selm", "vont", "yarb"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipConfig {
    pub n: usize,
    pub flip_at: usize,
    /// Share of spam events; unequal shares make the family marginals shift
    /// at the flip.
    pub spam_share: f64,
    pub family_words: usize,
    pub filler_words: (usize, usize),
    pub users: usize,
    pub items: usize,
    pub seed: u64,
}

impl Default for FlipConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            flip_at: 5_000,
            spam_share: 0.3,
            family_words: 3,
            filler_words: (5, 10),
            users: 400,
            items: 60,
            seed: 7,
        }
    }
}

/// Two token families whose class association swaps at `flip_at`. Before the
/// flip spam reviews draw from family A and genuine ones from family B;
/// afterwards the roles are reversed. Users, items, ratings and filler are
/// label-independent.
pub fn vocabulary_flip_stream(cfg: &FlipConfig) -> Vec<RawEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.n)
        .map(|i| {
            let label = if rng.gen_bool(cfg.spam_share) { Label::Spam } else { Label::NonSpam };
            let flipped = i >= cfg.flip_at;
            let family = match (label == Label::Spam) ^ flipped {
                true => &FAMILY_A,
                false => &FAMILY_B,
            };
            let mut words: Vec<&str> = family.choose_multiple(&mut rng, cfg.family_words).copied().collect();
            let n_fill = rng.gen_range(cfg.filler_words.0..=cfg.filler_words.1);
            words.extend(FILLER.choose_multiple(&mut rng, n_fill).copied());
            words.shuffle(&mut rng);
            let text = format!("{}.", words.join(" "));
            let user = rng.gen_range(0..cfg.users);
            let item = rng.gen_range(0..cfg.items);
            RawEvent::new(format!("s{i:05}"), format!("u{user}"), format!("i{item}"), 1_600_000_000 + i as i64 * 600, text)
                .with_rating(rng.gen_range(1..=5))
                .with_label(label)
        })
        .collect()
}

/// Identical genuine reviews from one user: zero error, zero word-gram shift.
pub fn stationary_stream(n: usize) -> Vec<RawEvent> {
    (0..n)
        .map(|i| {
            RawEvent::new(format!("c{i:05}"), "u0", "i0", 1_600_000_000 + i as i64 * 60, "Tidy room and friendly staff.")
                .with_rating(4)
                .with_label(Label::NonSpam)
        })
        .collect()
}

/// Identical genuine reviews, then from `shift_at` on identical spam in a
/// disjoint vocabulary. Errors and word-gram shift both start at `shift_at`.
pub fn single_shift_stream(n: usize, shift_at: usize) -> Vec<RawEvent> {
    (0..n)
        .map(|i| {
            let (text, label) = if i < shift_at {
                ("Tidy room and friendly staff.", Label::NonSpam)
            } else {
                ("Cheap pills online now.", Label::Spam)
            };
            RawEvent::new(format!("d{i:05}"), format!("u{}", i % 7), "i0", 1_600_000_000 + i as i64 * 60, text)
                .with_rating(4)
                .with_label(label)
        })
        .collect()
}
