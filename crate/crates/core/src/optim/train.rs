use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{augment, images_to_batch, AugmentConfig, Image, LabeledImages};
use crate::nn::{
    apply_running_stats, model_backward, model_forward, model_forward_with, softmax_cross_entropy,
    LayerKind, Mode, ModelSpec, ParamSet, Tensor,
};

use super::adam::{adam_step_masked, AdamConfig, AdamState};
use super::early_stop::{EarlyStop, EarlyStopState, DEFAULT_MIN_DELTA};
use super::finetune::{FineTunePlan, Stage};
use super::schedule::{sgdr_lr, ScheduleConfig};
use super::OptimError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub schedule: ScheduleConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub augment: AugmentConfig,
    /// Patience in epochs on validation accuracy; `None` disables early stopping.
    pub early_stop_patience: Option<usize>,
    pub min_delta: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            schedule: ScheduleConfig::default(),
            adam: AdamConfig::default(),
            batch_size: 16,
            augment: AugmentConfig::default(),
            early_stop_patience: None,
            min_delta: DEFAULT_MIN_DELTA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Learning rate at the first step of the epoch.
    pub lr: f64,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    #[serde(skip)]
    pub stage: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Stages cut short by early stopping.
    pub stopped_stages: Vec<usize>,
}

impl TrainHistory {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), OptimError> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        if self.records.is_empty() {
            w.write_record(["epoch", "lr", "train_loss", "train_acc", "val_loss", "val_acc"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), OptimError> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }
}

/// Layers a stage leaves frozen: conv/dense layers outside the stage, the
/// batch-norm layers they own, and anything marked non-trainable.
pub fn frozen_layers(model: &ModelSpec, stage: &Stage) -> BTreeSet<String> {
    let mut frozen = BTreeSet::new();
    for (i, l) in model.layers.iter().enumerate() {
        let trains = match l.kind {
            LayerKind::Conv2d { .. } | LayerKind::Dense { .. } => stage.trains(&l.name),
            LayerKind::BatchNorm => model.batch_norm_owner(i).is_some_and(|o| stage.trains(o)),
            _ => continue,
        };
        if !trains || !l.trainable {
            frozen.insert(l.name.clone());
        }
    }
    frozen
}

fn correct(logits: &Tensor<f32>, labels: &[usize]) -> usize {
    let classes = logits.shape()[1];
    logits
        .data()
        .chunks_exact(classes)
        .zip(labels)
        .filter(|(row, &l)| argmax(row) == l)
        .count()
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(row: &[f32]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Forward, backward, Adam update and running-statistics update on one batch.
/// Returns the batch loss and the number of correct train-mode predictions.
pub fn train_step(
    model: &ModelSpec,
    params: &mut ParamSet<f32>,
    adam: &mut AdamState<f32>,
    batch: &Tensor<f32>,
    labels: &[usize],
    lr: f64,
    frozen: &BTreeSet<String>,
) -> Result<(f64, usize), OptimError> {
    let (logits, cache) = model_forward_with(model, params, batch, Mode::Train, frozen)?;
    let (loss, grads) = model_backward(model, params, &logits, &cache, labels)?;
    let loss = loss as f64;
    if !loss.is_finite() {
        return Err(OptimError::NonFiniteLoss { epoch: 0 });
    }
    adam_step_masked(params, &grads, adam, lr, frozen)?;
    apply_running_stats(model, params, &cache)?;
    Ok((loss, correct(&logits, labels)))
}

/// Mean loss and accuracy in inference mode.
pub fn evaluate(model: &ModelSpec, params: &ParamSet<f32>, set: &LabeledImages) -> Result<(f64, f64), OptimError> {
    if set.is_empty() {
        return Err(OptimError::InvalidConfig("cannot evaluate an empty set".into()));
    }
    let mut loss = 0.0;
    let mut hits = 0;
    let idx: Vec<usize> = (0..set.len()).collect();
    for chunk in idx.chunks(64) {
        let x = set.batch(chunk, model.input_shape)?;
        let labels: Vec<usize> = chunk.iter().map(|&i| set.labels[i]).collect();
        let (logits, _) = model_forward(model, params, &x, Mode::Infer)?;
        let (l, _) = softmax_cross_entropy(&logits, &labels)?;
        loss += l as f64 * chunk.len() as f64;
        hits += correct(&logits, &labels);
    }
    let n = set.len() as f64;
    Ok((loss / n, hits as f64 / n))
}

/// Splits a shuffled order into batches, folding a trailing singleton into
/// the previous batch since train-mode batch norm needs two items.
pub(crate) fn make_batches(order: &[usize], batch_size: usize) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size.max(2)).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let tail = batches.pop().unwrap_or_default();
        if let Some(prev) = batches.last_mut() {
            prev.extend(tail);
        }
    }
    batches
}

fn check_set(model: &ModelSpec, set: &LabeledImages, what: &str) -> Result<(), OptimError> {
    if set.is_empty() {
        return Err(OptimError::InvalidConfig(format!("{what} set is empty")));
    }
    if set.classes.len() != model.n_classes {
        return Err(OptimError::InvalidConfig(format!(
            "{what} set has {} classes but the model predicts {}",
            set.classes.len(),
            model.n_classes
        )));
    }
    Ok(())
}

/// Runs every stage of `plan`. Each stage gets fresh Adam moments, restarts
/// the schedule and, when enabled, its own early-stopping tracker. Training
/// is a pure function of the inputs and `config.seed`.
pub fn train(
    model: &ModelSpec,
    params: ParamSet<f32>,
    train_set: &LabeledImages,
    val_set: &LabeledImages,
    plan: &FineTunePlan,
    config: &TrainConfig,
) -> Result<(ParamSet<f32>, TrainHistory), OptimError> {
    config.schedule.validate()?;
    config.augment.validate()?;
    check_set(model, train_set, "training")?;
    check_set(model, val_set, "validation")?;
    if train_set.len() < 2 {
        return Err(OptimError::InvalidConfig("training needs at least 2 images".into()));
    }
    params.check_against(model)?;

    let mut params = params;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = TrainHistory::default();
    let mut epoch = 0;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for (stage_idx, stage) in plan.stages.iter().enumerate() {
        let frozen = frozen_layers(model, stage);
        let mut adam = AdamState::new(&params, config.adam);
        let mut stopper = config
            .early_stop_patience
            .map(|p| EarlyStopState::with_min_delta(p, config.min_delta));
        let mut step: u64 = 0;
        for _ in 0..stage.epochs {
            epoch += 1;
            let lr_start = sgdr_lr(step, &config.schedule);
            order.shuffle(&mut rng);
            let (mut loss_sum, mut hits) = (0.0, 0);
            for batch in make_batches(&order, config.batch_size) {
                let images: Vec<Image> = batch
                    .iter()
                    .map(|&i| augment(&train_set.images[i], &config.augment, &mut rng))
                    .collect();
                let refs: Vec<&Image> = images.iter().collect();
                let x = images_to_batch(&refs, model.input_shape)?;
                let labels: Vec<usize> = batch.iter().map(|&i| train_set.labels[i]).collect();
                let lr = sgdr_lr(step, &config.schedule);
                let (loss, c) = train_step(model, &mut params, &mut adam, &x, &labels, lr, &frozen)
                    .map_err(|e| match e {
                        OptimError::NonFiniteLoss { .. } => OptimError::NonFiniteLoss { epoch },
                        other => other,
                    })?;
                loss_sum += loss * batch.len() as f64;
                hits += c;
                step += 1;
            }
            let n = train_set.len() as f64;
            let (val_loss, val_acc) = evaluate(model, &params, val_set)?;
            history.records.push(EpochRecord {
                epoch,
                lr: lr_start,
                train_loss: loss_sum / n,
                train_acc: hits as f64 / n,
                val_loss,
                val_acc,
                stage: stage_idx,
            });
            if let Some(s) = stopper.as_mut() {
                if s.update(val_acc) == EarlyStop::Stop {
                    history.stopped_stages.push(stage_idx);
                    break;
                }
            }
        }
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic_set, SynthKind};
    use crate::nn::build_baseline_model;

    #[test]
    fn batches_never_end_in_singleton() {
        let order: Vec<usize> = (0..9).collect();
        let b = make_batches(&order, 4);
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 5]);
        assert_eq!(make_batches(&order, 100).len(), 1);
    }

    #[test]
    fn frozen_set_for_head_stage() {
        let m = build_baseline_model([16, 16, 3], 2).unwrap();
        let stage = Stage {
            trainable: vec!["head".into(), "fc1".into()],
            epochs: 1,
        };
        let frozen = frozen_layers(&m, &stage);
        assert!(!frozen.contains("head") && !frozen.contains("fc1") && !frozen.contains("bn5"));
        assert!(frozen.contains("conv4") && frozen.contains("bn4"));
    }

    #[test]
    fn short_run_is_reproducible_and_writes_csv() {
        let m = build_baseline_model([16, 16, 3], 2).unwrap();
        let set = make_synthetic_set(SynthKind::Color, 20, 16, 1).unwrap();
        let config = TrainConfig {
            batch_size: 8,
            seed: 5,
            ..TrainConfig::default()
        };
        let plan = FineTunePlan::all_layers(&m, 2);
        let run = || train(&m, ParamSet::init(&m, 1).unwrap(), &set, &set, &plan, &config).unwrap();
        let (pa, ha) = run();
        let (pb, hb) = run();
        assert_eq!(pa, pb);
        assert_eq!(ha, hb);
        assert_eq!(ha.records.len(), 2);
        let mut out = Vec::new();
        ha.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("epoch,lr,train_loss,train_acc,val_loss,val_acc\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
