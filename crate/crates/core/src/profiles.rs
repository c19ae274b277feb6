//! Incremental user and item profiles over a user–item review graph.
//!
//! Every event is enriched with the profile state *before* the event, then
//! folded into the profiles, so an event never sees its own contribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textfeat::{ContentFeatures, CONTENT_FEATURE_KEYS};
use crate::types::{FeatureVector, Label, RawEvent};

pub const SECONDS_PER_WEEK: f64 = 604_800.0;

pub const USER_POST_COUNT: &str = "user_post_count";
pub const USER_SPAM_TENDENCY: &str = "user_spam_tendency";
pub const USER_ANTIQUITY_WEEKS: &str = "user_antiquity_weeks";
pub const USER_POSTING_FREQUENCY: &str = "user_posting_frequency";

#[derive(Debug, Error, PartialEq)]
pub enum ProfileError {
    #[error("non-finite observation {value} for `{key}`")]
    NonFinite { key: String, value: f64 },
}

/// Running mean and maximum of one feature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IncrementalStat {
    pub avg: f64,
    pub max: f64,
    pub count: u64,
}

impl IncrementalStat {
    /// The mean divides by the number of observations.
    pub fn update(&mut self, value: f64) -> Result<(), ProfileError> {
        if value.is_nan() || value.is_infinite() {
            return Err(ProfileError::NonFinite { key: String::new(), value });
        }
        self.count += 1;
        if self.count == 1 {
            self.avg = value;
            self.max = value;
        } else {
            self.avg += (value - self.avg) / self.count as f64;
            self.max = self.max.max(value);
        }
        Ok(())
    }

    pub fn updated(mut self, value: f64) -> Result<Self, ProfileError> {
        self.update(value)?;
        Ok(self)
    }
}

type StatMap = BTreeMap<String, IncrementalStat>;

fn update_map(map: &mut StatMap, key: &str, value: f64) {
    if let Err(e) = map.entry(key.to_owned()).or_default().update(value) {
        log::warn!("skipping profile update: {e} (`{key}`)");
    }
}

fn emit_stats(fv: &mut FeatureVector, prefix: &str, map: Option<&StatMap>, keys: &[String]) {
    for key in keys {
        let stat = map.and_then(|m| m.get(key)).copied().unwrap_or_default();
        fv.insert(format!("{prefix}_avg:{key}"), stat.avg);
        fv.insert(format!("{prefix}_max:{key}"), stat.max);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub stats: StatMap,
    pub post_count: u64,
    pub spam_count: u64,
    pub labeled_count: u64,
    pub first_post_ts: Option<i64>,
}

impl UserProfile {
    pub fn spam_tendency(&self) -> f64 {
        if self.labeled_count == 0 {
            0.0
        } else {
            self.spam_count as f64 / self.labeled_count as f64
        }
    }

    pub fn antiquity_weeks(&self, now: i64) -> f64 {
        match self.first_post_ts {
            Some(first) => ((now - first) as f64 / SECONDS_PER_WEEK).max(0.0),
            None => 0.0,
        }
    }

    pub fn posting_frequency(&self, now: i64) -> f64 {
        self.post_count as f64 / self.antiquity_weeks(now).max(1.0)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemProfile {
    pub stats: StatMap,
    /// Per-rating (1..=5) statistics over content features only.
    pub by_rating: BTreeMap<u8, StatMap>,
}

/// User and item nodes joined by review edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileGraph {
    pub users: BTreeMap<String, UserProfile>,
    pub items: BTreeMap<String, ItemProfile>,
    /// `(user, item)` → timestamp of the latest review.
    pub edges: BTreeMap<(String, String), i64>,
}

impl ProfileGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn user(&self, user_id: &str) -> Option<&UserProfile> {
        self.users.get(user_id)
    }

    pub fn item(&self, item_id: &str) -> Option<&ItemProfile> {
        self.items.get(item_id)
    }

    /// Number of distinct items a user has reviewed.
    pub fn user_degree(&self, user_id: &str) -> usize {
        self.edges.range((user_id.to_owned(), String::new())..).take_while(|((u, _), _)| u == user_id).count()
    }

    /// Returns false (and logs) for an unknown user.
    pub fn record_label(&mut self, user_id: &str, label: Label) -> bool {
        match self.users.get_mut(user_id) {
            Some(u) => {
                u.labeled_count += 1;
                if label == Label::Spam {
                    u.spam_count += 1;
                }
                true
            }
            None => {
                log::warn!("label for unknown user `{user_id}` ignored");
                false
            }
        }
    }

    /// Replaces a previously recorded label (or adds one when `previous` is
    /// `None`) for spam-tendency bookkeeping.
    pub fn override_label(&mut self, user_id: &str, previous: Option<Label>, new: Label) -> bool {
        let Some(u) = self.users.get_mut(user_id) else {
            log::warn!("label override for unknown user `{user_id}` ignored");
            return false;
        };
        match previous {
            Some(old) => {
                if old == Label::Spam {
                    u.spam_count = u.spam_count.saturating_sub(1);
                }
            }
            None => u.labeled_count += 1,
        }
        if new == Label::Spam {
            u.spam_count += 1;
        }
        true
    }
}

/// Content features plus passthrough columns: the base values that profiles
/// aggregate (IDs 1–27).
pub fn base_values(event: &RawEvent, cf: &ContentFeatures) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = cf.entries().into_iter().map(|(k, v)| (k.to_owned(), v)).collect();
    out.extend(event.extra.iter().map(|(k, v)| (k.clone(), *v)));
    out
}

/// Builds the feature vector for `event` from pre-event profiles, then folds
/// the event into the user, item, rating-bucket and edge state.
pub fn enrich(event: &RawEvent, cf: &ContentFeatures, graph: &mut ProfileGraph) -> FeatureVector {
    let base = base_values(event, cf);
    let base_keys: Vec<String> = base.iter().map(|(k, _)| k.clone()).collect();
    let content_keys: Vec<String> = cf.entries().into_iter().map(|(k, _)| k.to_owned()).collect();

    let mut fv: FeatureVector = base.iter().cloned().collect();
    let now = event.timestamp;

    let user = graph.users.get(&event.user_id);
    emit_stats(&mut fv, "user", user.map(|u| &u.stats), &base_keys);
    fv.insert(USER_POST_COUNT, user.map_or(0.0, |u| u.post_count as f64));
    fv.insert(USER_SPAM_TENDENCY, user.map_or(0.0, UserProfile::spam_tendency));
    fv.insert(USER_ANTIQUITY_WEEKS, user.map_or(0.0, |u| u.antiquity_weeks(now)));
    fv.insert(USER_POSTING_FREQUENCY, user.map_or(0.0, |u| u.posting_frequency(now)));

    let item = graph.items.get(&event.item_id);
    emit_stats(&mut fv, "item", item.map(|i| &i.stats), &base_keys);
    let bucket = event.rating.and_then(|r| item.and_then(|i| i.by_rating.get(&r)));
    emit_stats(&mut fv, "item_rating", bucket, &content_keys);

    let user = graph.users.entry(event.user_id.clone()).or_default();
    for (k, v) in &base {
        update_map(&mut user.stats, k, *v);
    }
    user.post_count += 1;
    user.first_post_ts.get_or_insert(now);

    let item = graph.items.entry(event.item_id.clone()).or_default();
    for (k, v) in &base {
        update_map(&mut item.stats, k, *v);
    }
    if let Some(r) = event.rating.filter(|r| (1..=5).contains(r)) {
        let bucket = item.by_rating.entry(r).or_default();
        for (k, v) in cf.entries() {
            update_map(bucket, k, v);
        }
    }
    graph.edges.insert((event.user_id.clone(), event.item_id.clone()), now);
    fv
}

/// One row of the published feature-ID ↔ key mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureIdEntry {
    pub id: u16,
    pub name: String,
    /// Feature-vector keys; `*` stands for any passthrough column name.
    pub keys: Vec<String>,
}

/// Canonical passthrough column names for IDs 20–27; CSV columns may use
/// these names or any prefix-compatible variant (`edit_quality_damaging`).
pub const PASSTHROUGH_KEYS: &[(u8, &str)] = &[
    (20, "bot_flag"),
    (21, "deleted_flag"),
    (22, "new_flag"),
    (23, "revert_flag"),
    (24, "size_diff"),
    (25, "edit_quality*"),
    (26, "item_quality*"),
    (27, "article_quality*"),
];

fn base_keys_for(id: u8) -> Vec<String> {
    if let Some((_, keys)) = CONTENT_FEATURE_KEYS.iter().find(|(i, _)| *i == id) {
        return keys.iter().map(|k| (*k).to_owned()).collect();
    }
    if let Some((_, key)) = PASSTHROUGH_KEYS.iter().find(|(i, _)| *i == id) {
        return vec![(*key).to_owned()];
    }
    if id == 17 {
        return vec![format!("{}*", crate::types::WORDGRAM_PREFIX)];
    }
    Vec::new()
}

/// IDs 1–177: content (1–27), user (28–85) and item (86–177) features.
pub fn feature_id_table() -> Vec<FeatureIdEntry> {
    let mut out = Vec::with_capacity(177);
    for id in 1u8..=27 {
        out.push(FeatureIdEntry { id: id as u16, name: format!("content_{id}"), keys: base_keys_for(id) });
    }
    let incremental = |out: &mut Vec<FeatureIdEntry>, start: u16, prefix: &str, last_base: u8| {
        for f in 1u8..=last_base {
            let keys = base_keys_for(f);
            let id = start + 2 * (f as u16 - 1);
            // word-grams have no scalar aggregate
            let agg = |kind: &str| if f == 17 { Vec::new() } else { keys.iter().map(|k| format!("{prefix}_{kind}:{k}")).collect() };
            out.push(FeatureIdEntry { id, name: format!("{prefix}_avg_{f}"), keys: agg("avg") });
            out.push(FeatureIdEntry { id: id + 1, name: format!("{prefix}_max_{f}"), keys: agg("max") });
        }
    };
    incremental(&mut out, 28, "user", 27);
    for (id, key) in [(82u16, USER_POST_COUNT), (83, USER_SPAM_TENDENCY), (84, USER_ANTIQUITY_WEEKS), (85, USER_POSTING_FREQUENCY)] {
        out.push(FeatureIdEntry { id, name: key.to_owned(), keys: vec![key.to_owned()] });
    }
    incremental(&mut out, 86, "item", 27);
    incremental(&mut out, 140, "item_rating", 19);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textfeat::{extract_content_features, CHAR_COUNT};
    use crate::types::DatasetProfile;

    fn batch(xs: &[f64]) -> (f64, f64) {
        (xs.iter().sum::<f64>() / xs.len() as f64, xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    #[test]
    fn single_observation() {
        let s = IncrementalStat::default().updated(7.0).unwrap();
        assert_eq!((s.avg, s.max, s.count), (7.0, 7.0, 1));
    }

    #[test]
    fn matches_batch_examples() {
        for xs in [vec![2.0, 4.0, 6.0], vec![-1.0, -5.0]] {
            let mut s = IncrementalStat::default();
            for x in &xs {
                s.update(*x).unwrap();
            }
            let (avg, max) = batch(&xs);
            assert!((s.avg - avg).abs() < 1e-12 && s.max == max);
        }
    }

    #[test]
    fn rejects_nan() {
        let mut s = IncrementalStat::default();
        assert!(s.update(f64::NAN).is_err());
        assert_eq!(s.count, 0);
    }

    fn event(user: &str, item: &str, ts: i64, text: &str) -> (RawEvent, ContentFeatures) {
        let e = RawEvent::new(format!("{user}-{ts}"), user, item, ts, text).with_rating(4);
        let cf = extract_content_features(&e, DatasetProfile::Yelp);
        (e, cf)
    }

    #[test]
    fn cold_profile_is_zero() {
        let mut g = ProfileGraph::new();
        let (e, cf) = event("u1", "i1", 0, "Lovely place.");
        let fv = enrich(&e, &cf, &mut g);
        assert_eq!(fv.get(USER_POST_COUNT), 0.0);
        assert_eq!(fv.get(&format!("user_avg:{CHAR_COUNT}")), 0.0);
        assert_eq!(fv.get(&format!("item_max:{CHAR_COUNT}")), 0.0);
        assert_eq!(fv.get(CHAR_COUNT), 13.0);
    }

    #[test]
    fn read_then_update_ordering() {
        let mut g = ProfileGraph::new();
        let (e1, cf1) = event("u1", "i1", 0, "Short.");
        let (e2, cf2) = event("u1", "i2", 3600, "A much longer review text.");
        enrich(&e1, &cf1, &mut g);
        let fv2 = enrich(&e2, &cf2, &mut g);
        assert_eq!(fv2.get(&format!("user_avg:{CHAR_COUNT}")), cf1.char_count);
        assert_eq!(fv2.get(USER_POST_COUNT), 1.0);
        // item i2 is new, the item-rating bucket is empty
        assert_eq!(fv2.get(&format!("item_rating_avg:{CHAR_COUNT}")), 0.0);
        assert_eq!(g.user_degree("u1"), 2);
    }

    #[test]
    fn rating_bucket_features() {
        let mut g = ProfileGraph::new();
        let (e1, cf1) = event("u1", "i1", 0, "Nice.");
        let (e2, cf2) = event("u2", "i1", 10, "Fine food here.");
        enrich(&e1, &cf1, &mut g);
        let fv = enrich(&e2, &cf2, &mut g);
        assert_eq!(fv.get(&format!("item_rating_avg:{CHAR_COUNT}")), 5.0);
        assert_eq!(fv.get(&format!("item_avg:{CHAR_COUNT}")), 5.0);
    }

    #[test]
    fn spam_tendency_counts() {
        let mut g = ProfileGraph::new();
        assert!(!g.record_label("ghost", Label::Spam));
        let (e, cf) = event("u1", "i1", 0, "x");
        enrich(&e, &cf, &mut g);
        assert_eq!(g.user("u1").unwrap().spam_tendency(), 0.0);
        g.record_label("u1", Label::Spam);
        assert_eq!(g.user("u1").unwrap().spam_tendency(), 1.0);
        for _ in 0..3 {
            g.record_label("u1", Label::NonSpam);
        }
        assert_eq!(g.user("u1").unwrap().spam_tendency(), 0.25);
        g.override_label("u1", Some(Label::Spam), Label::NonSpam);
        assert_eq!(g.user("u1").unwrap().spam_tendency(), 0.0);
    }

    #[test]
    fn antiquity_and_frequency() {
        let mut g = ProfileGraph::new();
        let week = SECONDS_PER_WEEK as i64;
        for k in 0..4 {
            let (e, cf) = event("u1", "i1", k * week, "ok");
            enrich(&e, &cf, &mut g);
        }
        let (e, cf) = event("u1", "i1", 4 * week, "ok");
        let fv = enrich(&e, &cf, &mut g);
        assert_eq!(fv.get(USER_ANTIQUITY_WEEKS), 4.0);
        assert_eq!(fv.get(USER_POSTING_FREQUENCY), 1.0);
    }

    #[test]
    fn id_table_covers_1_to_177() {
        let table = feature_id_table();
        let ids: Vec<u16> = table.iter().map(|e| e.id).collect();
        assert_eq!(ids, (1..=177).collect::<Vec<_>>());
        let e28 = &table[27];
        assert_eq!(e28.keys, vec!["user_avg:adjective_ratio".to_owned()]);
    }
}
