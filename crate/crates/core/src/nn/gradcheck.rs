use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{model_backward, model_forward, LayerKind, ModelSpec, ParamRole, ParamSet};
use super::ops::Mode;
use super::tensor::Tensor;
use super::NnError;

/// Coordinates sampled per parameterised layer.
pub const SAMPLES_PER_LAYER: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    /// Coordinates left out because their gradient is identically zero.
    pub skipped_invariant: usize,
    /// Probes discarded because the step moved a relu input across zero.
    pub skipped_kinks: usize,
    /// `(layer, param, flat index, analytic, numeric)` of the worst entry.
    pub worst: Option<(String, String, usize, f64, f64)>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

fn loss_at(
    model: &ModelSpec,
    params: &ParamSet<f64>,
    batch: &Tensor<f64>,
    labels: &[usize],
    mode: Mode,
) -> Result<(f64, Vec<bool>), NnError> {
    let (logits, cache) = model_forward(model, params, batch, mode)?;
    let (loss, _) = model_backward(model, params, &logits, &cache, labels)?;
    if !loss.is_finite() {
        return Err(NnError::NonFinite("loss".into()));
    }
    Ok((loss, cache.relu_pattern()))
}

/// Layers whose bias is cancelled by the train-mode batch norm right after
/// them: the loss does not depend on that bias at all.
fn bias_invariant_layers(model: &ModelSpec) -> Vec<&str> {
    model
        .layers
        .windows(2)
        .filter(|w| {
            matches!(w[0].kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. })
                && w[1].kind == LayerKind::BatchNorm
        })
        .map(|w| w[0].name.as_str())
        .collect()
}

/// Compares backprop gradients against central differences on a seeded
/// random subset of trainable coordinates, at least 20 per layer (all of
/// them for smaller layers).
///
/// A probe whose `+epsilon` or `-epsilon` evaluation flips the sign of any
/// relu input straddles a kink, where the function is not differentiable;
/// such probes are replaced by another random coordinate.
///
/// In [`Mode::Train`] the biases feeding a batch norm are skipped: their
/// exact gradient is zero and the finite difference is pure rounding noise.
pub fn gradient_check(
    model: &ModelSpec,
    params: &ParamSet<f64>,
    batch: &Tensor<f64>,
    labels: &[usize],
    epsilon: f64,
    mode: Mode,
    seed: u64,
) -> Result<GradCheckReport, NnError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(NnError::invalid(format!(
            "finite-difference step must be positive, got {epsilon}"
        )));
    }
    let [h, w, _] = model.input_shape;
    if h > 16 || w > 16 || batch.shape().first().is_none_or(|&n| n > 4) {
        return Err(NnError::invalid(
            "gradient check is limited to inputs up to 16x16 and batches up to 4",
        ));
    }
    let (logits, cache) = model_forward(model, params, batch, mode)?;
    let (loss, analytic) = model_backward(model, params, &logits, &cache, labels)?;
    if !loss.is_finite() {
        return Err(NnError::NonFinite("loss".into()));
    }
    let base_pattern = cache.relu_pattern();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped_invariant: 0,
        skipped_kinks: 0,
        worst: None,
    };
    let invariant = match mode {
        Mode::Train => bias_invariant_layers(model),
        Mode::Infer => Vec::new(),
    };
    for layer in &params.layers {
        let trainable: Vec<_> = layer
            .params
            .iter()
            .filter(|p| p.role == ParamRole::Trainable)
            .filter(|p| {
                let skip = p.name == "bias" && invariant.contains(&layer.layer.as_str());
                if skip {
                    report.skipped_invariant += p.value.len();
                }
                !skip
            })
            .collect();
        let total: usize = trainable.iter().map(|p| p.value.len()).sum();
        let wanted = SAMPLES_PER_LAYER.min(total);
        let mut accepted = 0;
        for flat in sample(&mut rng, total, total).into_iter() {
            if accepted == wanted {
                break;
            }
            let (mut idx, mut which) = (flat, 0);
            while idx >= trainable[which].value.len() {
                idx -= trainable[which].value.len();
                which += 1;
            }
            let name = &trainable[which].name;
            let original = params.get(&layer.layer, name)?.data()[idx];
            probe.get_mut(&layer.layer, name)?.data_mut()[idx] = original + epsilon;
            let (plus, plus_pattern) = loss_at(model, &probe, batch, labels, mode)?;
            probe.get_mut(&layer.layer, name)?.data_mut()[idx] = original - epsilon;
            let (minus, minus_pattern) = loss_at(model, &probe, batch, labels, mode)?;
            probe.get_mut(&layer.layer, name)?.data_mut()[idx] = original;
            if plus_pattern != base_pattern || minus_pattern != base_pattern {
                report.skipped_kinks += 1;
                continue;
            }
            accepted += 1;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = analytic.get(&layer.layer, name)?.data()[idx];
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((layer.layer.clone(), name.clone(), idx, a, numeric));
            }
        }
    }
    Ok(report)
}
