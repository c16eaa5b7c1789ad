use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Arousal, MediaType, StyleSet, Valence};

use super::backend::{CnnBackend, InferenceBackend};
use super::PipelineError;

pub const REGISTRY_FILE: &str = "registry.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    MediaGate,
    PhotoValence,
    PhotoArousal,
    ArtValence,
    ArtArousal,
    ArtStyle,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::MediaGate,
        Slot::PhotoValence,
        Slot::PhotoArousal,
        Slot::ArtValence,
        Slot::ArtArousal,
        Slot::ArtStyle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::MediaGate => "media_gate",
            Slot::PhotoValence => "photo_valence",
            Slot::PhotoArousal => "photo_arousal",
            Slot::ArtValence => "art_valence",
            Slot::ArtArousal => "art_arousal",
            Slot::ArtStyle => "art_style",
        }
    }

    pub fn valence_for(media: MediaType) -> Slot {
        match media {
            MediaType::Artwork => Slot::ArtValence,
            MediaType::Photograph => Slot::PhotoValence,
        }
    }

    pub fn arousal_for(media: MediaType) -> Slot {
        match media {
            MediaType::Artwork => Slot::ArtArousal,
            MediaType::Photograph => Slot::PhotoArousal,
        }
    }

    /// Class names a backend in this slot must declare, in any order.
    pub fn expected_classes(self, styles: &StyleSet) -> Vec<String> {
        let names: Vec<&str> = match self {
            Slot::MediaGate => MediaType::CLASSES.to_vec(),
            Slot::PhotoValence | Slot::ArtValence => Valence::CLASSES.to_vec(),
            Slot::PhotoArousal | Slot::ArtArousal => Arousal::CLASSES.to_vec(),
            Slot::ArtStyle => return styles.names().to_vec(),
        };
        names.into_iter().map(String::from).collect()
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Slot::ALL
            .into_iter()
            .find(|slot| slot.as_str() == s)
            .ok_or_else(|| PipelineError::Registry(format!("unknown slot '{s}'")))
    }
}

/// On-disk description of one slot in `registry.json`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotEntry {
    pub id: String,
    /// Checkpoint path, relative to the registry directory.
    pub checkpoint: String,
    pub classes: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegistryFile {
    pub slots: BTreeMap<Slot, SlotEntry>,
}

/// One backend per slot. All backends share one input shape.
#[derive(Clone)]
pub struct ModelRegistry {
    styles: StyleSet,
    slots: BTreeMap<Slot, Arc<dyn InferenceBackend>>,
}

impl fmt::Debug for ModelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: BTreeMap<&str, &str> = self.slots.iter().map(|(s, b)| (s.as_str(), b.id())).collect();
        f.debug_struct("ModelRegistry").field("slots", &ids).finish()
    }
}

impl Default for ModelRegistry {
    fn default() -> Self {
        Self::new(StyleSet::default())
    }
}

impl ModelRegistry {
    pub fn new(styles: StyleSet) -> Self {
        Self {
            styles,
            slots: BTreeMap::new(),
        }
    }

    pub fn styles(&self) -> &StyleSet {
        &self.styles
    }

    /// Shared input shape, once any backend is present.
    pub fn input_shape(&self) -> Option<[usize; 3]> {
        self.slots.values().next().map(|b| b.input_shape())
    }

    pub fn insert(&mut self, slot: Slot, backend: Arc<dyn InferenceBackend>) -> Result<(), PipelineError> {
        let mut want = slot.expected_classes(&self.styles);
        let mut got = backend.classes().to_vec();
        want.sort();
        got.sort();
        if want != got {
            return Err(PipelineError::Registry(format!(
                "slot {slot} needs classes {want:?}, backend '{}' declares {got:?}",
                backend.id()
            )));
        }
        if let Some(shape) = self.input_shape() {
            let others = self.slots.iter().any(|(s, _)| *s != slot);
            if others && shape != backend.input_shape() {
                return Err(PipelineError::Registry(format!(
                    "backend '{}' takes input {:?} but the registry uses {shape:?}",
                    backend.id(),
                    backend.input_shape()
                )));
            }
        }
        self.slots.insert(slot, backend);
        Ok(())
    }

    pub fn get(&self, slot: Slot) -> Result<&dyn InferenceBackend, PipelineError> {
        self.slots
            .get(&slot)
            .map(|b| b.as_ref())
            .ok_or(PipelineError::MissingSlot(slot))
    }

    pub fn is_complete(&self) -> bool {
        Slot::ALL.iter().all(|s| self.slots.contains_key(s))
    }

    /// Loads `registry.json` and its checkpoints from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref();
        let path = dir.join(REGISTRY_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::Registry(format!("{}: {e}", path.display())))?;
        let file: RegistryFile = serde_json::from_str(&text)
            .map_err(|e| PipelineError::Registry(format!("{}: {e}", path.display())))?;
        let mut reg = ModelRegistry::default();
        for (slot, entry) in file.slots {
            let backend = CnnBackend::load(entry.id, dir.join(&entry.checkpoint), entry.classes)?;
            reg.insert(slot, Arc::new(backend))?;
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::FixedBackend;

    #[test]
    fn slot_names_round_trip() {
        for s in Slot::ALL {
            assert_eq!(s.as_str().parse::<Slot>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.as_str()));
        }
    }

    #[test]
    fn insert_checks_classes_and_shape() {
        let mut reg = ModelRegistry::default();
        let gate = FixedBackend::new("g", &["photograph", "artwork"], &[0.5, 0.5]);
        reg.insert(Slot::MediaGate, Arc::new(gate)).unwrap();
        let wrong = FixedBackend::new("v", &["negative", "neutral"], &[0.5, 0.5]);
        assert!(reg.insert(Slot::PhotoValence, Arc::new(wrong)).is_err());
        let mut other = FixedBackend::new("v", &["negative", "positive"], &[0.5, 0.5]);
        other.input_shape = [32, 32, 3];
        assert!(reg.insert(Slot::PhotoValence, Arc::new(other)).is_err());
        assert!(!reg.is_complete());
        assert!(matches!(reg.get(Slot::ArtStyle), Err(PipelineError::MissingSlot(Slot::ArtStyle))));
    }
}
