use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Deserialize;

use super::emotion::Valence;
use super::manifest::{DatasetManifest, Labels, ManifestRecord};
use super::DataError;

const DEFAULT_POLARITY: &str = include_str!("../../config/wikiart_polarity.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Positive,
    Negative,
    /// Mixed or neutral categories.
    Other,
}

#[derive(Debug, Deserialize)]
struct PolarityFile {
    positive: Vec<String>,
    negative: Vec<String>,
    other: Vec<String>,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

/// Polarity of each WikiArt Emotions category, plus spelling aliases.
#[derive(Debug, Clone)]
pub struct PolarityTable {
    polarity: HashMap<String, Polarity>,
}

impl PolarityTable {
    pub fn from_toml(text: &str) -> Result<Self, DataError> {
        let file: PolarityFile =
            toml::from_str(text).map_err(|e| DataError::Config(format!("polarity table: {e}")))?;
        let mut polarity = HashMap::new();
        for (names, p) in [
            (&file.positive, Polarity::Positive),
            (&file.negative, Polarity::Negative),
            (&file.other, Polarity::Other),
        ] {
            for n in names {
                if polarity.insert(n.to_ascii_lowercase(), p).is_some() {
                    return Err(DataError::Config(format!(
                        "emotion '{n}' listed under more than one polarity"
                    )));
                }
            }
        }
        for (alias, target) in &file.aliases {
            let p = *polarity.get(&target.to_ascii_lowercase()).ok_or_else(|| {
                DataError::Config(format!("alias '{alias}' points at unknown emotion '{target}'"))
            })?;
            if polarity.insert(alias.to_ascii_lowercase(), p).is_some() {
                return Err(DataError::Config(format!("alias '{alias}' shadows a category")));
            }
        }
        Ok(Self { polarity })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn polarity(&self, tag: &str) -> Option<Polarity> {
        self.polarity.get(&tag.trim().to_ascii_lowercase()).copied()
    }
}

impl Default for PolarityTable {
    fn default() -> Self {
        Self::from_toml(DEFAULT_POLARITY).expect("bundled polarity table is valid")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterReport {
    pub positive: usize,
    pub negative: usize,
    pub dropped_mixed: usize,
    /// Records without any emotion tag.
    pub dropped_untagged: usize,
    /// Records carrying a tag missing from the polarity table.
    pub dropped_unknown: usize,
}

/// Classifies a tag set: `Some` only when every tag has the same polarity.
pub fn binary_valence(tags: &[String], table: &PolarityTable) -> Result<Option<Valence>, String> {
    let mut seen = (false, false);
    for t in tags {
        match table.polarity(t) {
            Some(Polarity::Positive) => seen.0 = true,
            Some(Polarity::Negative) => seen.1 = true,
            Some(Polarity::Other) => return Ok(None),
            None => return Err(t.clone()),
        }
    }
    Ok(match seen {
        (true, false) => Some(Valence::Positive),
        (false, true) => Some(Valence::Negative),
        _ => None,
    })
}

/// Keeps records whose tags are purely positive or purely negative and
/// labels them with that valence.
pub fn filter_wikiart_emotions(
    manifest: &DatasetManifest,
    table: &PolarityTable,
) -> (DatasetManifest, FilterReport) {
    let mut report = FilterReport::default();
    let mut out = DatasetManifest {
        name: manifest.name.clone(),
        source: manifest.source.clone(),
        records: Vec::new(),
    };
    for r in &manifest.records {
        if r.labels.emotions.is_empty() {
            report.dropped_untagged += 1;
            continue;
        }
        match binary_valence(&r.labels.emotions, table) {
            Ok(Some(v)) => {
                match v {
                    Valence::Positive => report.positive += 1,
                    Valence::Negative => report.negative += 1,
                }
                out.records.push(ManifestRecord {
                    path: r.path.clone(),
                    media_type: r.media_type,
                    labels: Labels {
                        valence: Some(v),
                        style: r.labels.style.clone(),
                        ..Labels::default()
                    },
                });
            }
            Ok(None) => report.dropped_mixed += 1,
            Err(_) => report.dropped_unknown += 1,
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::StyleSet;

    fn tags(t: &[&str]) -> Vec<String> {
        t.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rule_examples() {
        let table = PolarityTable::default();
        assert_eq!(
            binary_valence(&tags(&["happiness", "calm"]), &table),
            Ok(Some(Valence::Positive))
        );
        assert_eq!(binary_valence(&tags(&["happiness", "fear"]), &table), Ok(None));
        assert_eq!(
            binary_valence(&tags(&["sadness", "regret"]), &table),
            Ok(Some(Valence::Negative))
        );
        assert_eq!(binary_valence(&tags(&["love", "surprise"]), &table), Ok(None));
    }

    #[test]
    fn table_has_twenty_categories_six_other() {
        let table = PolarityTable::default();
        let file: PolarityFile = toml::from_str(DEFAULT_POLARITY).unwrap();
        let total = file.positive.len() + file.negative.len() + file.other.len();
        assert_eq!(total, 20);
        assert_eq!(file.other.len(), 6);
        assert_eq!(table.polarity("Trust"), Some(Polarity::Positive));
    }

    #[test]
    fn filter_counts() {
        let text = "a\tartwork\temotions=happiness|calm\n\
                    b\tartwork\temotions=happiness|fear\n\
                    c\tartwork\temotions=fear\n\
                    d\tartwork\t\n\
                    e\tartwork\temotions=wistfulness\n";
        let m = DatasetManifest::parse(text, &StyleSet::default()).unwrap();
        let (out, report) = filter_wikiart_emotions(&m, &PolarityTable::default());
        assert_eq!(out.len(), 2);
        assert_eq!(
            report,
            FilterReport {
                positive: 1,
                negative: 1,
                dropped_mixed: 1,
                dropped_untagged: 1,
                dropped_unknown: 1,
            }
        );
        assert_eq!(out.records[1].labels.valence, Some(Valence::Negative));
    }
}
