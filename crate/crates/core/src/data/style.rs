use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;

pub const STYLE_COUNT: usize = 27;

const DEFAULT_STYLES: &str = include_str!("../../config/styles.toml");

/// An artwork movement name, canonicalised against a [`StyleSet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleLabel(String);

impl StyleLabel {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Deserialize)]
struct StyleFile {
    styles: Vec<String>,
}

/// The ordered list of 27 movements. Index order is the class order of
/// style models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StyleSet {
    names: Vec<String>,
}

fn fold(name: &str) -> String {
    name.trim()
        .chars()
        .map(|c| if c == '_' { ' ' } else { c.to_ascii_lowercase() })
        .collect()
}

impl StyleSet {
    pub fn from_names(names: Vec<String>) -> Result<Self, DataError> {
        if names.len() != STYLE_COUNT {
            return Err(DataError::Config(format!(
                "style list must name exactly {STYLE_COUNT} movements, found {}",
                names.len()
            )));
        }
        let mut folded: Vec<_> = names.iter().map(|n| fold(n)).collect();
        folded.sort();
        folded.dedup();
        if folded.len() != names.len() {
            return Err(DataError::Config("style names must be distinct".into()));
        }
        if names.iter().any(|n| n.trim().is_empty() || n.contains(['\t', ';', '\n'])) {
            return Err(DataError::Config(
                "style names must be non-empty and free of tabs, newlines and ';'".into(),
            ));
        }
        Ok(Self { names })
    }

    pub fn from_toml(text: &str) -> Result<Self, DataError> {
        let file: StyleFile =
            toml::from_str(text).map_err(|e| DataError::Config(format!("styles: {e}")))?;
        Self::from_names(file.styles)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Case-insensitive lookup; underscores match spaces (`High_Renaissance`).
    pub fn parse(&self, name: &str) -> Result<StyleLabel, DataError> {
        self.index_of(name)
            .map(|i| StyleLabel(self.names[i].clone()))
            .ok_or_else(|| DataError::UnknownLabel {
                kind: "style",
                value: name.to_string(),
            })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        let key = fold(name);
        self.names.iter().position(|n| fold(n) == key)
    }

    pub fn label(&self, index: usize) -> Option<StyleLabel> {
        self.names.get(index).map(|n| StyleLabel(n.clone()))
    }
}

impl Default for StyleSet {
    fn default() -> Self {
        Self::from_toml(DEFAULT_STYLES).expect("bundled style list is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_set_has_27_distinct() {
        let set = StyleSet::default();
        assert_eq!(set.names().len(), 27);
        assert_eq!(set.parse("high_renaissance").unwrap().as_str(), "High Renaissance");
        assert!(set.parse("Vaporwave").is_err());
    }

    #[test]
    fn wrong_count_or_duplicates_rejected() {
        let mut names: Vec<String> = StyleSet::default().names().to_vec();
        names.pop();
        assert!(StyleSet::from_names(names.clone()).is_err());
        names.push("baroque".into());
        assert!(StyleSet::from_names(names).is_err());
    }
}
