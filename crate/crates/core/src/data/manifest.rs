//! Line-oriented dataset manifests.
//!
//! ```text
//! # name: deep-emotion
//! # source: downloaded 2024-05-01
//! images/0001.jpg<TAB>photograph<TAB>emotion=fear
//! art/12.png<TAB>artwork<TAB>emotions=happiness|calm;style=Impressionism
//! ```
//!
//! Label keys: `emotion`, `emotions` (`|`-separated tags), `valence`,
//! `arousal`, `style`. Several labels are joined with `;`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::emotion::{regroup_arousal, regroup_valence, Arousal, Emotion8, Valence};
use super::style::{StyleLabel, StyleSet};
use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    Artwork,
    Photograph,
}

impl MediaType {
    /// Class order used by media-gate models.
    pub const CLASSES: [&'static str; 2] = ["artwork", "photograph"];

    pub fn as_str(self) -> &'static str {
        match self {
            MediaType::Artwork => "artwork",
            MediaType::Photograph => "photograph",
        }
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MediaType {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "artwork" => Ok(MediaType::Artwork),
            "photograph" | "photo" => Ok(MediaType::Photograph),
            _ => Err(DataError::UnknownLabel {
                kind: "media type",
                value: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Labels {
    pub emotion: Option<Emotion8>,
    /// Multi-emotion tag set, lowercase, in file order.
    pub emotions: Vec<String>,
    pub valence: Option<Valence>,
    pub arousal: Option<Arousal>,
    pub style: Option<StyleLabel>,
}

impl Labels {
    pub fn is_empty(&self) -> bool {
        *self == Labels::default()
    }

    /// Explicit valence, or the regrouped single emotion.
    pub fn valence(&self) -> Option<Valence> {
        self.valence.or(self.emotion.map(regroup_valence))
    }

    /// Explicit arousal, or the regrouped single emotion (`None` when excluded).
    pub fn arousal(&self) -> Option<Arousal> {
        self.arousal.or(self.emotion.and_then(regroup_arousal))
    }
}

impl fmt::Display for Labels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(e) = self.emotion {
            parts.push(format!("emotion={e}"));
        }
        if !self.emotions.is_empty() {
            parts.push(format!("emotions={}", self.emotions.join("|")));
        }
        if let Some(v) = self.valence {
            parts.push(format!("valence={v}"));
        }
        if let Some(a) = self.arousal {
            parts.push(format!("arousal={a}"));
        }
        if let Some(s) = &self.style {
            parts.push(format!("style={s}"));
        }
        f.write_str(&parts.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub path: String,
    pub media_type: MediaType,
    pub labels: Labels,
}

/// Which label a task trains on, and what [`crate::data::split`] stratifies by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKey {
    Media,
    Valence,
    Arousal,
    Style,
    Emotion,
}

impl FromStr for LabelKey {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "media" => Ok(LabelKey::Media),
            "valence" => Ok(LabelKey::Valence),
            "arousal" => Ok(LabelKey::Arousal),
            "style" => Ok(LabelKey::Style),
            "emotion" => Ok(LabelKey::Emotion),
            _ => Err(DataError::UnknownLabel {
                kind: "label key",
                value: s.to_string(),
            }),
        }
    }
}

impl ManifestRecord {
    /// Class name of this record under `key`, if it has one.
    pub fn class_of(&self, key: LabelKey) -> Option<String> {
        match key {
            LabelKey::Media => Some(self.media_type.to_string()),
            LabelKey::Valence => self.labels.valence().map(|v| v.to_string()),
            LabelKey::Arousal => self.labels.arousal().map(|a| a.to_string()),
            LabelKey::Style => self.labels.style.as_ref().map(|s| s.to_string()),
            LabelKey::Emotion => self.labels.emotion.map(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub name: String,
    pub source: String,
    pub records: Vec<ManifestRecord>,
}

fn parse_labels(field: &str, styles: &StyleSet, line: usize) -> Result<Labels, DataError> {
    let err = |msg: String| DataError::Manifest { line, msg };
    let mut labels = Labels::default();
    let mut seen = HashSet::new();
    for part in field.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| err(format!("label '{part}' is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(err(format!("label key '{key}' given twice")));
        }
        let relabel = |e: DataError| err(e.to_string());
        match key {
            "emotion" => labels.emotion = Some(value.parse().map_err(relabel)?),
            "emotions" => {
                let tags: Vec<String> = value
                    .split('|')
                    .map(|t| t.trim().to_ascii_lowercase())
                    .filter(|t| !t.is_empty())
                    .collect();
                if tags.iter().any(|t| t.contains(char::is_whitespace) || t.contains('=')) {
                    return Err(err(format!("malformed emotion tags '{value}'")));
                }
                labels.emotions = tags;
            }
            "valence" => labels.valence = Some(value.parse().map_err(relabel)?),
            "arousal" => labels.arousal = Some(value.parse().map_err(relabel)?),
            "style" => labels.style = Some(styles.parse(value).map_err(relabel)?),
            other => return Err(err(format!("unknown label key '{other}'"))),
        }
    }
    Ok(labels)
}

impl DatasetManifest {
    pub fn parse(text: &str, styles: &StyleSet) -> Result<Self, DataError> {
        let mut manifest = DatasetManifest::default();
        let mut paths = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("name:") {
                    manifest.name = v.trim().to_string();
                } else if let Some(v) = comment.strip_prefix("source:") {
                    manifest.source = v.trim().to_string();
                }
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(DataError::Manifest {
                    line,
                    msg: format!("expected path<TAB>media_type<TAB>labels, got {} fields", fields.len()),
                });
            }
            let path = fields[0].trim();
            if path.is_empty() || path.starts_with('#') {
                return Err(DataError::Manifest {
                    line,
                    msg: format!("invalid path '{path}'"),
                });
            }
            let media_type: MediaType = fields[1].parse().map_err(|e: DataError| DataError::Manifest {
                line,
                msg: e.to_string(),
            })?;
            let labels = parse_labels(fields.get(2).copied().unwrap_or(""), styles, line)?;
            if labels.style.is_some() && media_type != MediaType::Artwork {
                return Err(DataError::Manifest {
                    line,
                    msg: "style labels are only valid on artworks".into(),
                });
            }
            if !paths.insert(path.to_string()) {
                return Err(DataError::Manifest {
                    line,
                    msg: format!("duplicate path '{path}'"),
                });
            }
            manifest.records.push(ManifestRecord {
                path: path.to_string(),
                media_type,
                labels,
            });
        }
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>, styles: &StyleSet) -> Result<Self, DataError> {
        Self::parse(&std::fs::read_to_string(path)?, styles)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl fmt::Display for DatasetManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "# name: {}", self.name)?;
        }
        if !self.source.is_empty() {
            writeln!(f, "# source: {}", self.source)?;
        }
        for r in &self.records {
            writeln!(f, "{}\t{}\t{}", r.path, r.media_type, r.labels)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# name: demo\n# source: unit test\n\
        a.png\tphotograph\temotion=fear\n\
        b.png\tartwork\temotions=happiness|calm;style=Impressionism\n\
        c.png\tartwork\t\n\
        d.png\tphoto\tvalence=positive;arousal=low\n";

    #[test]
    fn parses_and_round_trips() {
        let styles = StyleSet::default();
        let m = DatasetManifest::parse(SAMPLE, &styles).unwrap();
        assert_eq!(m.name, "demo");
        assert_eq!(m.len(), 4);
        assert_eq!(m.records[0].labels.emotion, Some(Emotion8::Fear));
        assert_eq!(m.records[1].labels.emotions, vec!["happiness", "calm"]);
        assert_eq!(m.records[1].labels.style.as_ref().unwrap().as_str(), "Impressionism");
        assert!(m.records[2].labels.is_empty());
        assert_eq!(m.records[3].class_of(LabelKey::Arousal).as_deref(), Some("low"));
        assert_eq!(m.records[0].class_of(LabelKey::Valence).as_deref(), Some("negative"));
        let again = DatasetManifest::parse(&m.to_string(), &styles).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let styles = StyleSet::default();
        let cases = [
            "a.png\tphotograph\tstyle=Baroque\n",
            "a.png\tsculpture\t\n",
            "a.png\tartwork\tstyle=Baroque\na.png\tartwork\t\n",
            "a.png\n",
            "a.png\tartwork\tmood=odd\n",
            "a.png\tartwork\temotion=fear;emotion=awe\n",
        ];
        let expected_lines = [1, 1, 2, 1, 1, 1];
        for (text, want) in cases.iter().zip(expected_lines) {
            match DatasetManifest::parse(text, &styles) {
                Err(DataError::Manifest { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn amusement_has_no_arousal_class() {
        let styles = StyleSet::default();
        let m = DatasetManifest::parse("a\tphotograph\temotion=amusement\n", &styles).unwrap();
        assert_eq!(m.records[0].class_of(LabelKey::Arousal), None);
        assert_eq!(m.records[0].class_of(LabelKey::Valence).as_deref(), Some("positive"));
    }
}
