//! The classification cascade: media gate, media-specific valence and
//! arousal models, and style for artworks.

mod backend;
mod cascade;
pub mod fixtures;
mod registry;

pub use backend::{checked_scores, CnnBackend, FixedBackend, InferenceBackend};
pub use cascade::{
    analyze, analyze_file, classify_emotion, classify_media_type, classify_style, preprocess, preprocess_file,
    EmotionDecision, ImageAnalysis, MediaDecision, StyleDecision,
};
pub use registry::{ModelRegistry, RegistryFile, Slot, SlotEntry, REGISTRY_FILE};

use crate::data::DataError;
use crate::nn::NnError;
use crate::optim::OptimError;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("no backend in slot {0}")]
    MissingSlot(Slot),
    #[error("backend '{id}': {msg}")]
    Backend { id: String, msg: String },
    #[error("registry: {0}")]
    Registry(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },
    #[error("style is only classified for artworks")]
    StyleOfPhotograph,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}
