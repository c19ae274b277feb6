//! Unigram + bigram rows over normalized tokens, with streaming
//! document-frequency filtering.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::lexicon::is_stopword;
use super::tokenize::url_regex;

/// Sparse gram → count row. Present keys always have count ≥ 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WordGramRow(pub BTreeMap<String, u32>);

impl WordGramRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, gram: impl Into<String>, count: u32) {
        if count > 0 {
            *self.0.entry(gram.into()).or_insert(0) += count;
        }
    }

    pub fn get(&self, gram: &str) -> u32 {
        self.0.get(gram).copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl<S: Into<String>> FromIterator<(S, u32)> for WordGramRow {
    fn from_iter<I: IntoIterator<Item = (S, u32)>>(iter: I) -> Self {
        let mut row = WordGramRow::new();
        for (g, c) in iter {
            row.add(g, c);
        }
        row
    }
}

fn has_vowel(s: &str) -> bool {
    s.bytes().any(|b| matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y'))
}

fn undouble(stem: &str) -> &str {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !matches!(b[n - 1], b'l' | b's' | b'z' | b'e' | b'o') {
        &stem[..n - 1]
    } else {
        stem
    }
}

/// Rule-based lemmatizer stand-in: strips plural and verb inflections.
pub fn stem(word: &str) -> String {
    let w = word;
    if w.len() <= 3 || !w.is_ascii() {
        return w.to_owned();
    }
    if let Some(s) = w.strip_suffix("ies") {
        if s.len() >= 2 {
            return format!("{s}y");
        }
    }
    if let Some(s) = w.strip_suffix("ied") {
        if s.len() >= 2 {
            return format!("{s}y");
        }
    }
    if let Some(s) = w.strip_suffix("sses") {
        return format!("{s}ss");
    }
    if let Some(s) = w.strip_suffix("ing") {
        if s.len() >= 3 && has_vowel(s) {
            return undouble(s).to_owned();
        }
        return w.to_owned();
    }
    if let Some(s) = w.strip_suffix("ed") {
        if s.len() >= 3 && has_vowel(s) {
            return undouble(s).to_owned();
        }
        return w.to_owned();
    }
    if w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return w[..w.len() - 1].to_owned();
    }
    w.to_owned()
}

/// Lowercased, URL/digit/punctuation-free, stop-word-free, stemmed tokens.
pub fn normalized_tokens(text: &str) -> Vec<String> {
    let without_urls = url_regex().replace_all(text, " ");
    let lower = without_urls.to_lowercase();
    lower
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .map(stem)
        .filter(|t| t.chars().count() >= 2 && !is_stopword(t))
        .collect()
}

/// All unigrams and bigrams of `text`, unfiltered by document frequency.
pub fn raw_grams(text: &str) -> WordGramRow {
    let toks = normalized_tokens(text);
    let mut row = WordGramRow::new();
    for t in &toks {
        row.add(t.clone(), 1);
    }
    for pair in toks.windows(2) {
        row.add(format!("{} {}", pair[0], pair[1]), 1);
    }
    row
}

/// Running document frequencies over a trailing reference corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VocabState {
    pub min_df: f64,
    pub max_df: f64,
    /// Size of the trailing reference corpus, in documents.
    pub reference_docs: usize,
    /// Documents during which every gram passes.
    pub cold_start_docs: usize,
    docs: VecDeque<Vec<String>>,
    df: HashMap<String, u32>,
    seen: u64,
}

impl Default for VocabState {
    fn default() -> Self {
        Self::new(0.1, 0.7)
    }
}

impl VocabState {
    pub fn new(min_df: f64, max_df: f64) -> Self {
        Self {
            min_df,
            max_df,
            reference_docs: 2000,
            cold_start_docs: 100,
            docs: VecDeque::new(),
            df: HashMap::new(),
            seen: 0,
        }
    }

    pub fn documents_seen(&self) -> u64 {
        self.seen
    }

    /// Fraction of reference documents containing `gram`.
    pub fn document_frequency(&self, gram: &str) -> f64 {
        if self.docs.is_empty() {
            return 0.0;
        }
        self.df.get(gram).copied().unwrap_or(0) as f64 / self.docs.len() as f64
    }

    fn passes(&self, gram: &str) -> bool {
        if self.seen < self.cold_start_docs as u64 {
            return true;
        }
        let df = self.document_frequency(gram);
        df >= self.min_df && df <= self.max_df
    }

    fn absorb(&mut self, grams: Vec<String>) {
        for g in &grams {
            *self.df.entry(g.clone()).or_insert(0) += 1;
        }
        self.docs.push_back(grams);
        while self.docs.len() > self.reference_docs {
            if let Some(old) = self.docs.pop_front() {
                for g in old {
                    if let Some(c) = self.df.get_mut(&g) {
                        *c -= 1;
                        if *c == 0 {
                            self.df.remove(&g);
                        }
                    }
                }
            }
        }
        self.seen += 1;
    }
}

/// Filters the document's grams by their frequency over the reference corpus
/// (excluding this document), then adds the document to the corpus.
pub fn build_wordgrams(text: &str, vocab: &mut VocabState) -> WordGramRow {
    let raw = raw_grams(text);
    let kept: WordGramRow = raw.iter().filter(|(g, _)| vocab.passes(g)).map(|(g, c)| (g.to_owned(), c)).collect();
    let distinct: BTreeSet<String> = raw.0.into_keys().collect();
    vocab.absorb(distinct.into_iter().collect());
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stemmer_rules() {
        for (w, s) in [
            ("cats", "cat"),
            ("parties", "party"),
            ("walking", "walk"),
            ("running", "run"),
            ("ordered", "order"),
            ("stopped", "stop"),
            ("glass", "glass"),
            ("bus", "bus"),
            ("red", "red"),
            ("used", "used"),
            ("classes", "class"),
        ] {
            assert_eq!(stem(w), s, "{w}");
        }
    }

    #[test]
    fn preprocessing_drops_noise() {
        let toks = normalized_tokens("The 2 cats visited http://x.io, and THE dogs!");
        assert_eq!(toks, vec!["cat", "visit", "dog"]);
    }

    #[test]
    fn unigrams_and_bigrams() {
        let row = raw_grams("Great pizza, great pizza");
        assert_eq!(row.get("great"), 2);
        assert_eq!(row.get("pizza"), 2);
        assert_eq!(row.get("great pizza"), 2);
        assert_eq!(row.get("pizza great"), 1);
        assert_eq!(row.get("the"), 0);
    }

    #[test]
    fn first_document_passes_everything() {
        let mut v = VocabState::default();
        let row = build_wordgrams("unique tasty ramen", &mut v);
        assert_eq!(row, raw_grams("unique tasty ramen"));
        assert_eq!(v.documents_seen(), 1);
    }

    #[test]
    fn frequent_gram_excluded_after_cold_start() {
        let mut v = VocabState::new(0.1, 0.7);
        v.cold_start_docs = 10;
        for i in 0..100 {
            // "food" is in every document, "word{i%5}" in 20% of them
            build_wordgrams(&format!("food word{}", ["alpha", "beta", "gamma", "delta", "omega"][i % 5]), &mut v);
        }
        let row = build_wordgrams("food wordalpha", &mut v);
        assert_eq!(row.get("food"), 0);
        assert_eq!(row.get("wordalpha"), 1);
        // bigram "food wordalpha" appears in 20% of docs too
        assert_eq!(row.get("food wordalpha"), 1);
        let rare = build_wordgrams("zebra", &mut v);
        assert!(rare.is_empty());
    }

    #[test]
    fn reference_corpus_is_trailing() {
        let mut v = VocabState::new(0.1, 0.7);
        v.reference_docs = 10;
        for _ in 0..30 {
            build_wordgrams("alpha", &mut v);
        }
        assert_eq!(v.document_frequency("alpha"), 1.0);
        for _ in 0..10 {
            build_wordgrams("beta", &mut v);
        }
        assert_eq!(v.document_frequency("alpha"), 0.0);
        assert_eq!(v.document_frequency("beta"), 1.0);
    }
}
