use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::data::MediaType;

use super::session::Condition;
use super::EvalError;

pub const RATING_MIN: u8 = 1;
pub const RATING_MAX: u8 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingRecord {
    pub subject: String,
    pub image_id: String,
    pub media_type: MediaType,
    pub condition: Condition,
    pub rating: u8,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: u64,
}

pub type RatingKey = (String, String, Condition);

impl RatingRecord {
    pub fn key(&self) -> RatingKey {
        (self.subject.clone(), self.image_id.clone(), self.condition)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if !(RATING_MIN..=RATING_MAX).contains(&self.rating) {
            return Err(EvalError::RatingOutOfRange(self.rating as i64));
        }
        if self.subject.is_empty() || self.image_id.is_empty() {
            return Err(EvalError::InvalidArgument("subject and image_id must be non-empty".into()));
        }
        if Condition::for_media(self.media_type).contains(&self.condition) {
            Ok(())
        } else {
            Err(EvalError::InvalidArgument(format!(
                "condition {} does not apply to {}",
                self.condition,
                self.media_type.as_str()
            )))
        }
    }
}

/// Parses and validates one JSON line.
pub fn parse_rating_line(line: &str) -> Result<RatingRecord, EvalError> {
    let r: RatingRecord = serde_json::from_str(line).map_err(|e| EvalError::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    r.validate()?;
    Ok(r)
}

/// Parses JSON lines. Later records for the same (subject, image, condition)
/// replace earlier ones.
pub fn parse_ratings(text: &str) -> Result<BTreeMap<RatingKey, RatingRecord>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r = parse_rating_line(line).map_err(|e| match e {
            EvalError::Parse { msg, .. } => EvalError::Parse { line: i + 1, msg },
            other => EvalError::Parse {
                line: i + 1,
                msg: other.to_string(),
            },
        })?;
        out.insert(r.key(), r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PutOutcome {
    Inserted,
    Replaced,
    Unchanged,
}

struct StoreState {
    records: BTreeMap<RatingKey, RatingRecord>,
    log: Option<File>,
}

/// Ratings keyed by (subject, image, condition), optionally backed by an
/// append-only JSON-lines file.
pub struct RatingStore {
    path: Option<PathBuf>,
    state: Mutex<StoreState>,
}

impl RatingStore {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            state: Mutex::new(StoreState {
                records: BTreeMap::new(),
                log: None,
            }),
        }
    }

    /// Replays an existing log (if any) and appends to it afterwards.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        let path = path.as_ref().to_path_buf();
        let records = match std::fs::read_to_string(&path) {
            Ok(text) => parse_ratings(&text)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => BTreeMap::new(),
            Err(e) => return Err(e.into()),
        };
        let log = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path: Some(path),
            state: Mutex::new(StoreState { records, log: Some(log) }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Identical ratings for an existing slot are not logged again.
    pub fn put(&self, record: RatingRecord) -> Result<PutOutcome, EvalError> {
        record.validate()?;
        let mut state = self.state.lock().expect("rating store poisoned");
        let outcome = match state.records.get(&record.key()) {
            Some(old) if old.rating == record.rating && old.media_type == record.media_type => {
                return Ok(PutOutcome::Unchanged)
            }
            Some(_) => PutOutcome::Replaced,
            None => PutOutcome::Inserted,
        };
        if let Some(log) = state.log.as_mut() {
            let line = serde_json::to_string(&record).expect("record serialises");
            writeln!(log, "{line}")?;
            log.flush()?;
        }
        state.records.insert(record.key(), record);
        Ok(outcome)
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("rating store poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Current records in key order.
    pub fn snapshot(&self) -> Vec<RatingRecord> {
        self.state.lock().expect("rating store poisoned").records.values().cloned().collect()
    }

    pub fn subject_records(&self, subject: &str) -> Vec<RatingRecord> {
        self.snapshot().into_iter().filter(|r| r.subject == subject).collect()
    }

    /// One line per slot, in key order.
    pub fn export_jsonl(&self) -> String {
        self.snapshot()
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serialises") + "\n")
            .collect()
    }

    pub fn export(&self, path: impl AsRef<Path>) -> Result<(), EvalError> {
        std::fs::write(path, self.export_jsonl())?;
        Ok(())
    }

    pub fn import_jsonl(text: &str) -> Result<Self, EvalError> {
        let store = Self::in_memory();
        store.state.lock().expect("rating store poisoned").records = parse_ratings(text)?;
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subject: &str, image: &str, condition: Condition, rating: u8) -> RatingRecord {
        RatingRecord {
            subject: subject.into(),
            image_id: image.into(),
            media_type: MediaType::Artwork,
            condition,
            rating,
            timestamp: 1,
        }
    }

    #[test]
    fn range_is_enforced() {
        let store = RatingStore::in_memory();
        assert!(matches!(
            store.put(rec("s", "i", Condition::MatchedEmotion, 6)),
            Err(EvalError::RatingOutOfRange(6))
        ));
        assert!(store.put(rec("s", "i", Condition::MatchedEmotion, 0)).is_err());
        assert!(store.put(rec("s", "i", Condition::MatchedEmotionExtra, 3)).is_err());
        assert!(store.is_empty());
    }

    #[test]
    fn idempotent_overwrite_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ratings.jsonl");
        let store = RatingStore::open(&path).unwrap();
        let r = rec("s", "i", Condition::MatchedEmotion, 4);
        assert_eq!(store.put(r.clone()).unwrap(), PutOutcome::Inserted);
        assert_eq!(store.put(r.clone()).unwrap(), PutOutcome::Unchanged);
        assert_eq!(store.put(rec("s", "i", Condition::MatchedEmotion, 2)).unwrap(), PutOutcome::Replaced);
        assert_eq!(store.len(), 1);
        drop(store);
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 2);
        let again = RatingStore::open(&path).unwrap();
        assert_eq!(again.snapshot()[0].rating, 2);
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let good = serde_json::to_string(&rec("s", "i", Condition::MatchedEmotion, 4)).unwrap();
        let text = format!("{good}\n{}\n", good.replace("\"rating\":4", "\"rating\":9"));
        match parse_ratings(&text) {
            Err(EvalError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_ratings("{\n"), Err(EvalError::Parse { line: 1, .. })));
    }
}
