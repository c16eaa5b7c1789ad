use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::LabeledImages;
use crate::nn::{ModelSpec, ParamSet};

use super::adam::{AdamConfig, AdamState};
use super::train::{make_batches, train_step};
use super::OptimError;

pub const SMOOTHING: f64 = 0.98;
pub const DIVERGENCE_FACTOR: f64 = 4.0;
pub const MIN_ITERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangePoint {
    pub step: usize,
    pub lr: f64,
    pub raw_loss: f64,
    pub smoothed_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RangeTest {
    pub lr_min: f64,
    pub lr_max: f64,
    /// Rate at the smallest smoothed loss.
    pub best_lr: f64,
    pub points: Vec<RangePoint>,
    /// Step at which the sweep stopped because the loss diverged.
    pub aborted_at: Option<usize>,
}

impl RangeTest {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), OptimError> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(p)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), OptimError> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// `lr_i = start * (end / start)^(i / (n - 1))`, pinned exactly to both ends.
pub fn lr_sequence(start_lr: f64, end_lr: f64, n_iters: usize) -> Result<Vec<f64>, OptimError> {
    if !(start_lr > 0.0 && start_lr < end_lr && end_lr.is_finite()) {
        return Err(OptimError::InvalidConfig(format!(
            "range test needs 0 < start_lr < end_lr, got {start_lr} and {end_lr}"
        )));
    }
    if n_iters < MIN_ITERS {
        return Err(OptimError::InvalidConfig(format!(
            "range test needs at least {MIN_ITERS} iterations, got {n_iters}"
        )));
    }
    let ratio = end_lr / start_lr;
    let last = (n_iters - 1) as f64;
    let mut lrs: Vec<f64> = (0..n_iters)
        .map(|i| start_lr * ratio.powf(i as f64 / last))
        .collect();
    lrs[0] = start_lr;
    lrs[n_iters - 1] = end_lr;
    Ok(lrs)
}

/// Sweeps `lr` upwards, calling `step(lr)` for the loss at each rate. The
/// loss is smoothed with a bias-corrected exponential average and the sweep
/// stops once it exceeds four times the best value seen.
pub fn range_test_with(
    start_lr: f64,
    end_lr: f64,
    n_iters: usize,
    mut step: impl FnMut(f64) -> Result<f64, OptimError>,
) -> Result<RangeTest, OptimError> {
    let lrs = lr_sequence(start_lr, end_lr, n_iters)?;
    let mut points = Vec::with_capacity(n_iters);
    let mut avg = 0.0;
    let mut best = (f64::INFINITY, 0usize);
    let mut aborted_at = None;
    for (i, &lr) in lrs.iter().enumerate() {
        let raw = step(lr)?;
        avg = SMOOTHING * avg + (1.0 - SMOOTHING) * raw;
        let smoothed = avg / (1.0 - SMOOTHING.powi(i as i32 + 1));
        points.push(RangePoint {
            step: i,
            lr,
            raw_loss: raw,
            smoothed_loss: smoothed,
        });
        if !smoothed.is_finite() || (i > 0 && smoothed > DIVERGENCE_FACTOR * best.0) {
            aborted_at = Some(i);
            break;
        }
        if smoothed < best.0 {
            best = (smoothed, i);
        }
    }
    if best.1 == 0 {
        return Err(OptimError::RangeTestDiverged { start_lr });
    }
    let best_lr = lrs[best.1];
    let lr_max = best_lr / 10.0;
    Ok(RangeTest {
        lr_min: lr_max / 10.0,
        lr_max,
        best_lr,
        points,
        aborted_at,
    })
}

/// Range test on a copy of `params`: one Adam step per rate on successive
/// shuffled batches. `params` itself is not modified.
#[allow(clippy::too_many_arguments)]
pub fn lr_range_test(
    model: &ModelSpec,
    params: &ParamSet<f32>,
    data: &LabeledImages,
    start_lr: f64,
    end_lr: f64,
    n_iters: usize,
    batch_size: usize,
    seed: u64,
) -> Result<RangeTest, OptimError> {
    if data.len() < 2 {
        return Err(OptimError::InvalidConfig("range test needs at least 2 images".into()));
    }
    let mut params = params.clone();
    let mut adam = AdamState::new(&params, AdamConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut queue: Vec<Vec<usize>> = Vec::new();
    let frozen = Default::default();
    range_test_with(start_lr, end_lr, n_iters, |lr| {
        if queue.is_empty() {
            order.shuffle(&mut rng);
            queue = make_batches(&order, batch_size);
            queue.reverse();
        }
        let batch = queue.pop().unwrap_or_default();
        let x = data.batch(&batch, model.input_shape)?;
        let labels: Vec<usize> = batch.iter().map(|&i| data.labels[i]).collect();
        match train_step(model, &mut params, &mut adam, &x, &labels, lr, &frozen) {
            Ok((loss, _)) => Ok(loss),
            Err(OptimError::NonFiniteLoss { .. }) | Err(OptimError::NonFiniteGradient { .. }) => Ok(f64::NAN),
            Err(e) => Err(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_formula() {
        let lrs = lr_sequence(1e-5, 1e-1, 100).unwrap();
        let want = 1e-5 * 1e4f64.powf(50.0 / 99.0);
        assert!((lrs[50] - want).abs() < 1e-15);
        assert!((lrs[50] - 1.0476e-3).abs() < 1e-7);
        assert_eq!((lrs[0], lrs[99]), (1e-5, 1e-1));
        assert!(lrs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn bad_arguments() {
        assert!(lr_sequence(1e-1, 1e-5, 100).is_err());
        assert!(lr_sequence(1e-5, 1e-1, 19).is_err());
        assert!(lr_sequence(0.0, 1e-1, 100).is_err());
    }

    #[test]
    fn recovers_synthetic_minimum() {
        let target: f64 = 3e-3;
        let r = range_test_with(1e-5, 1e-1, 1000, |lr| {
            Ok(1.0 + (lr.ln() - target.ln()).powi(2))
        })
        .unwrap();
        let want = target / 10.0;
        assert!(r.lr_max > want / 2.0 && r.lr_max < want * 2.0, "{}", r.lr_max);
        assert!((r.lr_min - r.lr_max / 10.0).abs() < 1e-18);
        assert!(r.aborted_at.is_some());
    }

    #[test]
    fn rising_loss_is_an_error() {
        let mut k = 0.0;
        let err = range_test_with(1e-5, 1e-1, 50, |_| {
            k += 1.0;
            Ok(k)
        })
        .unwrap_err();
        assert!(err.to_string().contains("start_lr"), "{err}");
    }

    #[test]
    fn csv_columns() {
        let r = range_test_with(1e-5, 1e-1, 20, |lr| Ok((lr.ln() + 7.0).powi(2))).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("step,lr,raw_loss,smoothed_loss\n"));
    }
}
