//! Small seeded models trained on the synthetic sets, filling every registry
//! slot. Used by tests and demos in place of full-size models.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::data::{make_synthetic_set, AugmentConfig, LabeledImages, StyleSet, SynthKind};
use crate::nn::{build_baseline_model, save_checkpoint, ParamSet};
use crate::optim::{evaluate, train, FineTunePlan, ScheduleConfig, TrainConfig};

use super::backend::{CnnBackend, InferenceBackend};
use super::registry::{ModelRegistry, RegistryFile, Slot, SlotEntry, REGISTRY_FILE};
use super::PipelineError;

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureConfig {
    pub side: usize,
    /// Images generated per slot before the 80/20 split.
    pub images: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            side: 32,
            images: 240,
            epochs: 6,
            batch_size: 16,
            seed: 7,
        }
    }
}

pub fn synth_kind_for(slot: Slot) -> SynthKind {
    match slot {
        Slot::MediaGate => SynthKind::Media,
        Slot::PhotoValence | Slot::ArtValence => SynthKind::Color,
        Slot::PhotoArousal | Slot::ArtArousal => SynthKind::Geometry,
        Slot::ArtStyle => SynthKind::Style,
    }
}

/// Synthetic set for a slot with labels in the slot's class order. The style
/// set is re-indexed into the full 27-name list.
pub fn fixture_dataset(slot: Slot, config: &FixtureConfig, styles: &StyleSet) -> Result<LabeledImages, PipelineError> {
    let seed = config.seed.wrapping_mul(1000).wrapping_add(slot as u64);
    let set = make_synthetic_set(synth_kind_for(slot), config.images, config.side, seed)?;
    if slot != Slot::ArtStyle {
        return Ok(set);
    }
    let remap: Vec<usize> = set
        .classes
        .iter()
        .map(|c| styles.index_of(c).ok_or_else(|| PipelineError::Registry(format!("style '{c}' is not in the style list"))))
        .collect::<Result<_, _>>()?;
    let labels = set.labels.iter().map(|&l| remap[l]).collect();
    Ok(LabeledImages::new(set.images, labels, styles.names().to_vec())?)
}

#[derive(Debug, Clone)]
pub struct FixtureModel {
    pub backend: CnnBackend,
    pub held_out_accuracy: f64,
}

pub fn train_fixture_model(slot: Slot, config: &FixtureConfig, styles: &StyleSet) -> Result<FixtureModel, PipelineError> {
    let data = fixture_dataset(slot, config, styles)?;
    let seed = config.seed.wrapping_add(slot as u64);
    let (train_set, test_set) = data.split(0.8, seed)?;
    let model = build_baseline_model([config.side, config.side, 3], data.classes.len())?;
    let params = ParamSet::init(&model, seed)?;
    let steps_per_epoch = train_set.len().div_ceil(config.batch_size) as f64;
    let train_config = TrainConfig {
        schedule: ScheduleConfig {
            lr_min: 1e-4,
            lr_max: 2e-3,
            t0: 2.0 * steps_per_epoch,
            t_mult: 2.0,
            decay: 0.85,
        },
        batch_size: config.batch_size,
        augment: AugmentConfig {
            flip_probability: 0.5,
            zoom: (0.95, 1.05),
            rotation_deg: (-5.0, 5.0),
        },
        seed,
        ..TrainConfig::default()
    };
    let plan = FineTunePlan::all_layers(&model, config.epochs);
    let (params, _) = train(&model, params, &train_set, &test_set, &plan, &train_config)?;
    let (_, held_out_accuracy) = evaluate(&model, &params, &test_set)?;
    let id = format!("fixture-{slot}-s{}", config.seed);
    Ok(FixtureModel {
        backend: CnnBackend::new(id, model, params, data.classes)?,
        held_out_accuracy,
    })
}

/// Trains every slot, writes checkpoints and `registry.json` into `dir`, and
/// returns the held-out accuracy per slot.
pub fn build_fixture_registry(
    dir: impl AsRef<Path>,
    config: &FixtureConfig,
) -> Result<(ModelRegistry, BTreeMap<Slot, f64>), PipelineError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::Registry(format!("{}: {e}", dir.display())))?;
    let styles = StyleSet::default();
    let mut registry = ModelRegistry::new(styles.clone());
    let mut file = RegistryFile::default();
    let mut accuracy = BTreeMap::new();
    for slot in Slot::ALL {
        let fixture = train_fixture_model(slot, config, &styles)?;
        let checkpoint = format!("{slot}.mbnn");
        let b = &fixture.backend;
        save_checkpoint(b.model(), b.params(), dir.join(&checkpoint)).map_err(|e| PipelineError::Checkpoint {
            path: dir.join(&checkpoint).display().to_string(),
            msg: e.to_string(),
        })?;
        file.slots.insert(
            slot,
            SlotEntry {
                id: b.id().to_string(),
                checkpoint,
                classes: b.classes().to_vec(),
            },
        );
        accuracy.insert(slot, fixture.held_out_accuracy);
        registry.insert(slot, Arc::new(fixture.backend))?;
    }
    let json = serde_json::to_string_pretty(&file).expect("registry serialises");
    std::fs::write(dir.join(REGISTRY_FILE), json + "\n")
        .map_err(|e| PipelineError::Registry(format!("{}: {e}", dir.display())))?;
    Ok((registry, accuracy))
}
