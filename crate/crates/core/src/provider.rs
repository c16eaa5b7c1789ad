//! Music provider contract, the tag-overlap mock catalog and clip selection.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::metadata::MusicQuery;

pub const CLIP_SECONDS: u32 = 15;
pub const DEFAULT_LIMIT: usize = 10;

const BUNDLED_CATALOG: &str = include_str!("../config/catalog.json");

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("catalog line {line}, column {column}: {msg}")]
    Catalog { line: usize, column: usize, msg: String },
    #[error("limit must be at least 1")]
    InvalidLimit,
    #[error("track '{id}' lasts {duration_s}s, shorter than a {CLIP_SECONDS}s clip")]
    TrackTooShort { id: String, duration_s: f64 },
    #[error("provider unreachable: {0}")]
    Transport(String),
    #[error("provider returned a malformed response: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrack {
    id: String,
    title: String,
    artist: String,
    tags: Vec<String>,
    duration_s: f64,
    #[serde(default)]
    audio_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrack")]
pub struct Track {
    pub id: String,
    pub title: String,
    pub artist: String,
    /// Lowercase, sorted, distinct.
    pub tags: Vec<String>,
    pub duration_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
}

impl TryFrom<RawTrack> for Track {
    type Error = String;

    fn try_from(raw: RawTrack) -> Result<Self, String> {
        if raw.id.trim().is_empty() {
            return Err("track id must not be empty".into());
        }
        if !(raw.duration_s > 0.0 && raw.duration_s.is_finite()) {
            return Err(format!("track '{}': duration_s must be positive", raw.id));
        }
        let mut tags = BTreeSet::new();
        for t in &raw.tags {
            if t.is_empty() || t.chars().any(|c| c.is_uppercase() || c.is_whitespace()) {
                return Err(format!("track '{}': tag '{t}' must be one lowercase word", raw.id));
            }
            tags.insert(t.clone());
        }
        Ok(Track {
            id: raw.id,
            title: raw.title,
            artist: raw.artist,
            tags: tags.into_iter().collect(),
            duration_s: raw.duration_s,
            audio_ref: raw.audio_ref,
        })
    }
}

impl Track {
    /// Number of distinct query tokens among the track's tags.
    pub fn score(&self, tokens: &BTreeSet<String>) -> usize {
        tokens.iter().filter(|t| self.tags.binary_search(t).is_ok()).count()
    }
}

/// Tracks with unique ids, in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Catalog {
    tracks: Vec<Track>,
}

impl<'de> Deserialize<'de> for Catalog {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct CatalogVisitor;

        impl<'de> Visitor<'de> for CatalogVisitor {
            type Value = Catalog;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an array of tracks")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Catalog, A::Error> {
                let mut seen = HashSet::new();
                let mut tracks = Vec::new();
                while let Some(t) = seq.next_element::<Track>()? {
                    if !seen.insert(t.id.clone()) {
                        return Err(serde::de::Error::custom(format!("duplicate track id '{}'", t.id)));
                    }
                    tracks.push(t);
                }
                Ok(Catalog { tracks })
            }
        }

        d.deserialize_seq(CatalogVisitor)
    }
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        serde_json::from_str(text).map_err(|e| ProviderError::Catalog {
            line: e.line(),
            column: e.column(),
            msg: strip_position(&e.to_string()),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_tracks(tracks: Vec<Track>) -> Result<Self, ProviderError> {
        let json = serde_json::to_string(&tracks).expect("tracks serialise");
        Self::from_json(&json)
    }

    /// Small demo catalog covering every bundled emotion and style keyword.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_CATALOG).expect("bundled catalog is valid")
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn get(&self, id: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Reference ranking: score = shared tokens, keep score >= 1, order by
    /// (score desc, id asc), keep the first `limit`.
    pub fn search_keywords(&self, keywords: &str, limit: usize) -> Result<Vec<Track>, ProviderError> {
        if limit == 0 {
            return Err(ProviderError::InvalidLimit);
        }
        let tokens = tokenize(keywords);
        let mut hits: Vec<(usize, &Track)> = self
            .tracks
            .iter()
            .map(|t| (t.score(&tokens), t))
            .filter(|(s, _)| *s >= 1)
            .collect();
        hits.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.id.cmp(&b.1.id)));
        Ok(hits.into_iter().take(limit).map(|(_, t)| t.clone()).collect())
    }
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Lowercased, de-duplicated whitespace tokens.
pub fn tokenize(keywords: &str) -> BTreeSet<String> {
    keywords.split_whitespace().map(str::to_lowercase).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Playlist {
    pub query: MusicQuery,
    pub tracks: Vec<Track>,
}

/// A searchable music source. Implementations are deterministic for fixed
/// contents and report transport failures separately from empty results.
pub trait MusicProvider {
    fn search(&self, query: &MusicQuery, limit: usize) -> Result<Playlist, ProviderError>;
}

impl MusicProvider for Catalog {
    fn search(&self, query: &MusicQuery, limit: usize) -> Result<Playlist, ProviderError> {
        Ok(Playlist {
            query: query.clone(),
            tracks: self.search_keywords(&query.keywords, limit)?,
        })
    }
}

pub fn mock_search(query: &MusicQuery, catalog: &Catalog, limit: usize) -> Result<Playlist, ProviderError> {
    catalog.search(query, limit)
}

/// Search response body on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub tracks: Vec<WireTrack>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTrack {
    pub id: String,
    pub title: String,
    pub artist: String,
    pub tags: Vec<String>,
    pub duration_s: f64,
}

impl From<&Track> for WireTrack {
    fn from(t: &Track) -> Self {
        WireTrack {
            id: t.id.clone(),
            title: t.title.clone(),
            artist: t.artist.clone(),
            tags: t.tags.clone(),
            duration_s: t.duration_s,
        }
    }
}

impl From<WireTrack> for Track {
    fn from(w: WireTrack) -> Self {
        Track {
            id: w.id,
            title: w.title,
            artist: w.artist,
            tags: w.tags,
            duration_s: w.duration_s,
            audio_ref: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Clip<'a> {
    pub track_id: &'a str,
    pub offset_s: u32,
    pub length_s: u32,
}

/// A 15-second window starting at a seeded uniform whole-second offset.
pub fn pick_clip(track: &Track, seed: u64) -> Result<Clip<'_>, ProviderError> {
    let slack = track.duration_s - CLIP_SECONDS as f64;
    if slack < 0.0 {
        return Err(ProviderError::TrackTooShort {
            id: track.id.clone(),
            duration_s: track.duration_s,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = rng.gen_range(0.0..=slack).floor() as u32;
    Ok(Clip {
        track_id: &track.id,
        offset_s: offset,
        length_s: CLIP_SECONDS,
    })
}
