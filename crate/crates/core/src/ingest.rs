//! CSV ingestion.
//!
//! Required columns: `review_id,user_id,item_id,timestamp,text`. Optional:
//! `rating` (integer 1–5, blank when absent) and `label` (`spam`/`1`/`fake`
//! or `nonspam`/`0`/`ham`/`genuine`, blank for unlabelled). Any other column
//! is a numeric passthrough feature; blank cells are skipped.
//!
//! Timestamps may be integer epoch seconds, RFC 3339, `YYYY-MM-DD HH:MM:SS`
//! or `YYYY-MM-DD` (UTC). Rows are returned sorted by timestamp (stable).

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use thiserror::Error;

use crate::types::{DatasetProfile, Label, RawEvent};

const REQUIRED: [&str; 5] = ["review_id", "user_id", "item_id", "timestamp", "text"];
const KNOWN: [&str; 7] = ["review_id", "user_id", "item_id", "timestamp", "rating", "text", "label"];
const MAX_DIAGNOSTICS: usize = 5;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("{malformed} of {total} rows malformed (limit {limit:.1}%); first problems: {diagnostics:?}")]
    TooManyMalformed { malformed: usize, total: usize, limit: f64, diagnostics: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestOptions {
    /// Fraction of malformed rows above which ingestion fails.
    pub max_malformed_fraction: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self { max_malformed_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub events: Vec<RawEvent>,
    pub total_rows: usize,
    pub malformed: usize,
    pub diagnostics: Vec<String>,
}

pub fn parse_label(s: &str) -> Result<Option<Label>, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" => Ok(None),
        "spam" | "1" | "true" | "y" | "yes" | "fake" | "-1" => Ok(Some(Label::Spam)),
        "nonspam" | "non-spam" | "ham" | "0" | "false" | "n" | "no" | "genuine" | "legit" => Ok(Some(Label::NonSpam)),
        other => Err(format!("unknown label `{other}`")),
    }
}

pub fn parse_timestamp(s: &str) -> Result<i64, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp());
    }
    Err(format!("bad timestamp `{s}`"))
}

fn parse_rating(s: &str) -> Result<Option<u8>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let r: f64 = s.parse().map_err(|_| format!("bad rating `{s}`"))?;
    if r.fract() != 0.0 || !(1.0..=5.0).contains(&r) {
        return Err(format!("rating `{s}` outside 1-5"));
    }
    Ok(Some(r as u8))
}

/// Reads events from CSV; see the module docs for the schema.
pub fn read_events<R: Read>(reader: R, profile: DatasetProfile, opts: IngestOptions) -> Result<IngestReport, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    for name in REQUIRED {
        if col(name).is_none() {
            return Err(IngestError::MissingColumn(name.to_owned()));
        }
    }
    let idx = |name: &str| col(name).expect("checked");
    let (id_c, user_c, item_c, ts_c, text_c) = (idx("review_id"), idx("user_id"), idx("item_id"), idx("timestamp"), idx("text"));
    let (rating_c, label_c) = (col("rating"), col("label"));
    let extra_cols: Vec<(usize, String)> =
        headers.iter().enumerate().filter(|(_, h)| !KNOWN.contains(&h.as_str())).map(|(i, h)| (i, h.clone())).collect();

    let mut events = Vec::new();
    let mut malformed = 0usize;
    let mut total = 0usize;
    let mut diagnostics = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        total += 1;
        let row = (|| -> Result<RawEvent, String> {
            let rec = rec.map_err(|e| e.to_string())?;
            if rec.len() != headers.len() {
                return Err(format!("expected {} fields, got {}", headers.len(), rec.len()));
            }
            let get = |i: usize| rec.get(i).unwrap_or("");
            let timestamp = parse_timestamp(get(ts_c))?;
            let mut ev = RawEvent::new(get(id_c).trim(), get(user_c).trim(), get(item_c).trim(), timestamp, get(text_c));
            if ev.event_id.is_empty() || ev.user_id.is_empty() || ev.item_id.is_empty() {
                return Err("empty id".into());
            }
            if let Some(c) = rating_c {
                ev.rating = parse_rating(get(c))?;
            }
            if let Some(c) = label_c {
                ev.label = parse_label(get(c))?;
            }
            let mut extra = BTreeMap::new();
            for (c, name) in &extra_cols {
                let cell = get(*c).trim();
                if cell.is_empty() {
                    continue;
                }
                let v: f64 = cell.parse().map_err(|_| format!("column `{name}`: `{cell}` is not numeric"))?;
                if !v.is_finite() {
                    return Err(format!("column `{name}`: non-finite value"));
                }
                extra.insert(name.clone(), v);
            }
            ev.extra = extra;
            Ok(ev)
        })();
        match row {
            Ok(ev) => events.push(ev),
            Err(msg) => {
                malformed += 1;
                log::warn!("row {}: {msg}", line + 2);
                if diagnostics.len() < MAX_DIAGNOSTICS {
                    diagnostics.push(format!("row {}: {msg}", line + 2));
                }
            }
        }
    }
    if total > 0 && malformed as f64 / total as f64 > opts.max_malformed_fraction {
        return Err(IngestError::TooManyMalformed {
            malformed,
            total,
            limit: opts.max_malformed_fraction * 100.0,
            diagnostics,
        });
    }
    if !profile.uses_rating() {
        for e in &mut events {
            e.rating = None;
        }
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(IngestReport { events, total_rows: total, malformed, diagnostics })
}

pub fn read_events_path(path: &Path, profile: DatasetProfile, opts: IngestOptions) -> Result<IngestReport, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io { path: path.display().to_string(), source })?;
    read_events(std::io::BufReader::new(file), profile, opts)
}

/// Writes events in the ingest schema; passthrough columns are the union of
/// all `extra` keys.
pub fn write_events<W: Write>(writer: W, events: &[RawEvent]) -> Result<(), IngestError> {
    let extra: std::collections::BTreeSet<&str> =
        events.iter().flat_map(|e| e.extra.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = KNOWN.to_vec();
    header.extend(extra.iter().copied());
    w.write_record(&header)?;
    for e in events {
        let mut rec = vec![
            e.event_id.clone(),
            e.user_id.clone(),
            e.item_id.clone(),
            e.timestamp.to_string(),
            e.rating.map(|r| r.to_string()).unwrap_or_default(),
            e.text.clone(),
            e.label.map(|l| l.as_str().to_owned()).unwrap_or_default(),
        ];
        rec.extend(extra.iter().map(|k| e.extra.get(*k).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| IngestError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "review_id,user_id,item_id,timestamp,rating,text,label
r3,u1,i1,2021-03-01,4,\"Nice, clean place.\",nonspam
r1,u2,i1,1600000000,5,Best pizza ever!!!,spam
r2,u1,i2,2020-12-01T10:00:00Z,2,Slow service.,0
r5,u3,i2,2021-03-01 12:00:00,,No rating here.,
r4,u2,i3,1610000000,3,ok,1
";

    #[test]
    fn toy_fixture_sorted() {
        let rep = read_events(TOY.as_bytes(), DatasetProfile::Yelp, IngestOptions::default()).unwrap();
        let ids: Vec<&str> = rep.events.iter().map(|e| e.event_id.as_str()).collect();
        assert_eq!(ids, vec!["r1", "r2", "r4", "r3", "r5"]);
        assert_eq!(rep.malformed, 0);
        assert_eq!(rep.events[3].text, "Nice, clean place.");
        assert_eq!(rep.events[4].label, None);
        assert_eq!(rep.events[4].rating, None);
        assert_eq!(rep.events[1].label, Some(Label::NonSpam));
    }

    #[test]
    fn bad_rating_skipped_and_counted() {
        let csv = "review_id,user_id,item_id,timestamp,rating,text,label\nr1,u,i,1,9,hi,spam\nr2,u,i,2,3,hi,spam\n";
        let lenient = IngestOptions { max_malformed_fraction: 1.0 };
        let rep = read_events(csv.as_bytes(), DatasetProfile::Yelp, lenient).unwrap();
        assert_eq!(rep.events.len(), 1);
        assert_eq!(rep.malformed, 1);
        assert!(rep.diagnostics[0].contains("outside 1-5"));
        let err = read_events(csv.as_bytes(), DatasetProfile::Yelp, IngestOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::TooManyMalformed { malformed: 1, total: 2, .. }));
    }

    #[test]
    fn passthrough_columns() {
        let csv = "review_id,user_id,item_id,timestamp,text,label,bot_flag,size_diff\nr1,u,i,5,edit,spam,1,-42.5\nr2,u,i,6,edit,0,,3\n";
        let rep = read_events(csv.as_bytes(), DatasetProfile::MediaWiki, IngestOptions::default()).unwrap();
        assert_eq!(rep.events[0].extra.get("size_diff"), Some(&-42.5));
        assert_eq!(rep.events[1].extra.get("bot_flag"), None);
    }

    #[test]
    fn missing_column() {
        let err = read_events("review_id,user_id\n".as_bytes(), DatasetProfile::Yelp, IngestOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "item_id"));
    }

    #[test]
    fn write_then_read() {
        let rep = read_events(TOY.as_bytes(), DatasetProfile::Yelp, IngestOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_events(&mut buf, &rep.events).unwrap();
        let back = read_events(buf.as_slice(), DatasetProfile::Yelp, IngestOptions::default()).unwrap();
        assert_eq!(back.events, rep.events);
    }

    #[test]
    fn timestamps() {
        assert_eq!(parse_timestamp("1970-01-02").unwrap(), 86_400);
        assert_eq!(parse_timestamp("1970-01-01T00:01:00+00:00").unwrap(), 60);
        assert!(parse_timestamp("yesterday").is_err());
    }
}
