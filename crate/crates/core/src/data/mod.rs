//! Datasets: label vocabularies, manifests, images, splits, augmentation and
//! synthetic sets.

mod augment;
mod emotion;
mod image;
mod manifest;
mod split;
mod style;
mod synth;
mod wikiart;

pub use augment::{augment, AugmentConfig};
pub use emotion::{regroup_arousal, regroup_valence, Arousal, Emotion8, Valence};
pub use image::Image;
pub use manifest::{DatasetManifest, LabelKey, Labels, ManifestRecord, MediaType};
pub use split::{split, stratified_indices};
pub use style::{StyleLabel, StyleSet, STYLE_COUNT};
pub use synth::{make_synthetic_desk_sets, make_synthetic_set, SynthKind, DEFAULT_SIDE, SYNTH_STYLES};
pub use wikiart::{binary_valence, filter_wikiart_emotions, FilterReport, Polarity, PolarityTable};

use crate::nn::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("unknown {kind} '{value}'")]
    UnknownLabel { kind: &'static str, value: String },
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    InvalidArgument(String),
    #[error("cannot decode image {path}: {msg}")]
    Decode { path: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Images paired with class indices into `classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages {
    pub images: Vec<Image>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl LabeledImages {
    pub fn new(images: Vec<Image>, labels: Vec<usize>, classes: Vec<String>) -> Result<Self, DataError> {
        if images.len() != labels.len() {
            return Err(DataError::InvalidArgument(format!(
                "{} images but {} labels",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(DataError::InvalidArgument(format!(
                "label {bad} out of range for {} classes",
                classes.len()
            )));
        }
        Ok(Self {
            images,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Image, usize)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes.len()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledImages {
        LabeledImages {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Stratified train/test split.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(LabeledImages, LabeledImages), DataError> {
        let (train, test) = stratified_indices(&self.labels, train_fraction, seed)?;
        Ok((self.subset(&train), self.subset(&test)))
    }

    /// Batch of the selected images shaped for a model input `(h, w, c)`.
    pub fn batch(&self, indices: &[usize], input_shape: [usize; 3]) -> Result<Tensor<f32>, DataError> {
        let images: Vec<&Image> = indices.iter().map(|&i| &self.images[i]).collect();
        images_to_batch(&images, input_shape)
    }
}

/// Stacks images into an `(n, h, w, c)` tensor, resizing as needed. `c` is 3
/// for RGB or 1 for luma.
pub fn images_to_batch(images: &[&Image], [h, w, c]: [usize; 3]) -> Result<Tensor<f32>, DataError> {
    if c != 1 && c != 3 {
        return Err(DataError::InvalidArgument(format!(
            "images convert to 1 or 3 channels, not {c}"
        )));
    }
    let mut data = Vec::with_capacity(images.len() * h * w * c);
    for img in images {
        let img = img.resize(w, h);
        if c == 3 {
            data.extend_from_slice(img.data());
        } else {
            data.extend(
                img.data()
                    .chunks_exact(3)
                    .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]),
            );
        }
    }
    Tensor::new(vec![images.len(), h, w, c], data)
        .map_err(|e| DataError::InvalidArgument(e.to_string()))
}
