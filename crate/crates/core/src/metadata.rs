//! Music metadata engine: turns an image analysis into a music-search query.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Arousal, MediaType, StyleLabel, StyleSet, Valence};
use crate::pipeline::ImageAnalysis;

const DEFAULT_EMOTION_KEYWORDS: &str = include_str!("../config/emotion_keywords.toml");
const DEFAULT_STYLE_KEYWORDS: &str = include_str!("../config/style_keywords.toml");

#[derive(Debug, thiserror::Error)]
pub enum MetadataError {
    #[error("keyword table: {0}")]
    Table(String),
    #[error("unknown quadrant '{0}'; expected one of +V+A, +V-A, -V+A, -V-A")]
    UnknownQuadrant(String),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("emotion+style queries need an artwork with a style")]
    StyleUnavailable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionQuadrant {
    PositiveHigh,
    PositiveLow,
    NegativeHigh,
    NegativeLow,
}

impl EmotionQuadrant {
    pub const ALL: [EmotionQuadrant; 4] = [
        EmotionQuadrant::PositiveHigh,
        EmotionQuadrant::PositiveLow,
        EmotionQuadrant::NegativeHigh,
        EmotionQuadrant::NegativeLow,
    ];

    pub fn new(valence: Valence, arousal: Arousal) -> Self {
        match (valence, arousal) {
            (Valence::Positive, Arousal::High) => EmotionQuadrant::PositiveHigh,
            (Valence::Positive, Arousal::Low) => EmotionQuadrant::PositiveLow,
            (Valence::Negative, Arousal::High) => EmotionQuadrant::NegativeHigh,
            (Valence::Negative, Arousal::Low) => EmotionQuadrant::NegativeLow,
        }
    }

    pub fn valence(self) -> Valence {
        match self {
            EmotionQuadrant::PositiveHigh | EmotionQuadrant::PositiveLow => Valence::Positive,
            _ => Valence::Negative,
        }
    }

    pub fn arousal(self) -> Arousal {
        match self {
            EmotionQuadrant::PositiveHigh | EmotionQuadrant::NegativeHigh => Arousal::High,
            _ => Arousal::Low,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            EmotionQuadrant::PositiveHigh => "+V+A",
            EmotionQuadrant::PositiveLow => "+V-A",
            EmotionQuadrant::NegativeHigh => "-V+A",
            EmotionQuadrant::NegativeLow => "-V-A",
        }
    }
}

impl fmt::Display for EmotionQuadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for EmotionQuadrant {
    type Err = MetadataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        // Accept the typographic minus as well.
        let norm: String = s.trim().replace('\u{2212}', "-").to_ascii_uppercase();
        EmotionQuadrant::ALL
            .into_iter()
            .find(|q| q.symbol() == norm)
            .ok_or_else(|| MetadataError::UnknownQuadrant(s.to_string()))
    }
}

impl Serialize for EmotionQuadrant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.symbol())
    }
}

impl<'de> Deserialize<'de> for EmotionQuadrant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn quadrant_of(valence: Valence, arousal: Arousal) -> EmotionQuadrant {
    EmotionQuadrant::new(valence, arousal)
}

/// Uniform choice among the three quadrants other than `q`.
pub fn mismatch_quadrant(q: EmotionQuadrant, rng: &mut impl Rng) -> EmotionQuadrant {
    let others: Vec<EmotionQuadrant> = EmotionQuadrant::ALL.into_iter().filter(|&o| o != q).collect();
    others[rng.gen_range(0..others.len())]
}

#[derive(Debug, Deserialize)]
struct KeywordFile {
    quadrants: BTreeMap<String, Vec<String>>,
}

/// Ordered emotion keywords per quadrant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordTable {
    lists: BTreeMap<EmotionQuadrant, Vec<String>>,
}

impl KeywordTable {
    pub fn new(lists: BTreeMap<EmotionQuadrant, Vec<String>>) -> Result<Self, MetadataError> {
        let mut owner: HashMap<&str, EmotionQuadrant> = HashMap::new();
        for q in EmotionQuadrant::ALL {
            let list = lists
                .get(&q)
                .filter(|l| !l.is_empty())
                .ok_or_else(|| MetadataError::Table(format!("quadrant {q} has no keywords")))?;
            for k in list {
                if k.is_empty() || k.chars().any(|c| c.is_uppercase() || c.is_whitespace()) {
                    return Err(MetadataError::Table(format!(
                        "keyword '{k}' must be a single lowercase word"
                    )));
                }
                if let Some(prev) = owner.insert(k, q) {
                    return Err(MetadataError::Table(format!(
                        "keyword '{k}' appears under both {prev} and {q}"
                    )));
                }
            }
        }
        Ok(Self { lists })
    }

    pub fn from_toml(text: &str) -> Result<Self, MetadataError> {
        let file: KeywordFile = toml::from_str(text).map_err(|e| MetadataError::Table(e.to_string()))?;
        let mut lists = BTreeMap::new();
        for (key, words) in file.quadrants {
            let q: EmotionQuadrant = key.parse()?;
            if lists.insert(q, words).is_some() {
                return Err(MetadataError::Table(format!("quadrant {q} listed twice")));
            }
        }
        Self::new(lists)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MetadataError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn keywords(&self, q: EmotionQuadrant) -> &[String] {
        &self.lists[&q]
    }
}

impl Default for KeywordTable {
    fn default() -> Self {
        Self::from_toml(DEFAULT_EMOTION_KEYWORDS).expect("bundled keyword table is valid")
    }
}

pub fn emotion_keywords(q: EmotionQuadrant, table: &KeywordTable) -> &[String] {
    table.keywords(q)
}

#[derive(Debug, Deserialize)]
struct StyleKeywordFile {
    keywords: BTreeMap<String, String>,
}

/// One music-style keyword for every artwork movement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleKeywordMap {
    map: BTreeMap<String, String>,
}

impl StyleKeywordMap {
    pub fn from_toml(text: &str, styles: &StyleSet) -> Result<Self, MetadataError> {
        let file: StyleKeywordFile = toml::from_str(text).map_err(|e| MetadataError::Table(e.to_string()))?;
        let mut map = BTreeMap::new();
        for (name, kw) in file.keywords {
            let label = styles
                .parse(&name)
                .map_err(|_| MetadataError::Table(format!("'{name}' is not a known style")))?;
            if kw.is_empty() || kw.chars().any(|c| c.is_uppercase() || c.is_whitespace()) {
                return Err(MetadataError::Table(format!(
                    "style keyword '{kw}' must be a single lowercase word"
                )));
            }
            if map.insert(label.as_str().to_string(), kw).is_some() {
                return Err(MetadataError::Table(format!("style '{name}' listed twice")));
            }
        }
        if let Some(missing) = styles.names().iter().find(|n| !map.contains_key(*n)) {
            return Err(MetadataError::Table(format!("no keyword for style '{missing}'")));
        }
        Ok(Self { map })
    }

    pub fn load(path: impl AsRef<Path>, styles: &StyleSet) -> Result<Self, MetadataError> {
        Self::from_toml(&std::fs::read_to_string(path)?, styles)
    }

    pub fn keyword(&self, style: &StyleLabel) -> Option<&str> {
        self.map.get(style.as_str()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl Default for StyleKeywordMap {
    fn default() -> Self {
        Self::from_toml(DEFAULT_STYLE_KEYWORDS, &StyleSet::default()).expect("bundled style map is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryStrategy {
    MatchedEmotionStyle,
    MatchedEmotion,
    MismatchedEmotion,
}

impl QueryStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryStrategy::MatchedEmotionStyle => "matched_emotion_style",
            QueryStrategy::MatchedEmotion => "matched_emotion",
            QueryStrategy::MismatchedEmotion => "mismatched_emotion",
        }
    }
}

impl fmt::Display for QueryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// User-facing strategy names: `matched` picks emotion+style for artworks
/// and emotion alone for photographs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recommendation {
    Matched,
    EmotionOnly,
    Mismatched,
}

impl Recommendation {
    pub fn strategy_for(self, media: MediaType) -> QueryStrategy {
        match (self, media) {
            (Recommendation::Matched, MediaType::Artwork) => QueryStrategy::MatchedEmotionStyle,
            (Recommendation::Matched, MediaType::Photograph) | (Recommendation::EmotionOnly, _) => {
                QueryStrategy::MatchedEmotion
            }
            (Recommendation::Mismatched, _) => QueryStrategy::MismatchedEmotion,
        }
    }
}

impl FromStr for Recommendation {
    type Err = MetadataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "matched" => Ok(Recommendation::Matched),
            "emotion-only" => Ok(Recommendation::EmotionOnly),
            "mismatched" => Ok(Recommendation::Mismatched),
            _ => Err(MetadataError::UnknownStrategy(s.to_string())),
        }
    }
}

/// How a keyword is chosen from a quadrant's list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KeywordPick {
    #[default]
    First,
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MusicQuery {
    /// Space-joined lowercase tokens.
    pub keywords: String,
    pub strategy: QueryStrategy,
    /// Quadrant of the image.
    pub source_quadrant: EmotionQuadrant,
    /// Quadrant the emotion keyword came from.
    pub keyword_quadrant: EmotionQuadrant,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub style: Option<StyleLabel>,
}

impl MusicQuery {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.keywords.split_whitespace()
    }
}

fn choose<'a>(list: &'a [String], pick: KeywordPick, rng: &mut impl Rng) -> &'a str {
    match pick {
        KeywordPick::First => &list[0],
        KeywordPick::Random => &list[rng.gen_range(0..list.len())],
    }
}

/// Builds the search query for an analysed image. `rng` is consulted only
/// for the mismatched quadrant and random keyword picks.
pub fn build_query(
    analysis: &ImageAnalysis,
    strategy: QueryStrategy,
    table: &KeywordTable,
    styles: &StyleKeywordMap,
    pick: KeywordPick,
    rng: &mut impl Rng,
) -> Result<MusicQuery, MetadataError> {
    let source = quadrant_of(analysis.valence, analysis.arousal);
    let keyword_quadrant = match strategy {
        QueryStrategy::MismatchedEmotion => mismatch_quadrant(source, rng),
        _ => source,
    };
    let emotion = choose(table.keywords(keyword_quadrant), pick, rng);
    let (keywords, style) = match strategy {
        QueryStrategy::MatchedEmotionStyle => {
            let style = match (&analysis.media_type, &analysis.style) {
                (MediaType::Artwork, Some(s)) => s,
                _ => return Err(MetadataError::StyleUnavailable),
            };
            let kw = styles.keyword(style).ok_or(MetadataError::StyleUnavailable)?;
            (format!("{emotion} {kw}"), Some(style.clone()))
        }
        _ => (emotion.to_string(), None),
    };
    Ok(MusicQuery {
        keywords,
        strategy,
        source_quadrant: source,
        keyword_quadrant,
        style,
    })
}
