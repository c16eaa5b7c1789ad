use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, BatchNormCache, BatchNormParams, ConvCache, Mode, BN_MOMENTUM};
use super::tensor::{Scalar, Tensor};
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Conv2d {
        filters: usize,
        kernel: usize,
        stride: usize,
    },
    BatchNorm,
    Relu,
    Flatten,
    Dense {
        units: usize,
    },
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: LayerKind,
    pub trainable: bool,
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, kind: LayerKind) -> Self {
        Self {
            name: name.into(),
            kind,
            trainable: true,
        }
    }

    pub fn has_params(&self) -> bool {
        matches!(
            self.kind,
            LayerKind::Conv2d { .. } | LayerKind::Dense { .. } | LayerKind::BatchNorm
        )
    }
}

/// Ordered layer list plus the input shape `(height, width, channels)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_shape: [usize; 3],
    pub n_classes: usize,
    pub layers: Vec<LayerSpec>,
}

impl ModelSpec {
    pub fn new(
        input_shape: [usize; 3],
        n_classes: usize,
        layers: Vec<LayerSpec>,
    ) -> Result<Self, NnError> {
        let spec = Self {
            input_shape,
            n_classes,
            layers,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks names, hyper-parameters and that shapes chain to `n_classes`.
    pub fn validate(&self) -> Result<(), NnError> {
        let mut seen = HashSet::new();
        for layer in &self.layers {
            if !seen.insert(layer.name.as_str()) {
                return Err(NnError::invalid(format!(
                    "duplicate layer name '{}'",
                    layer.name
                )));
            }
        }
        match self.layers.last() {
            Some(l) if l.kind == LayerKind::Softmax => {}
            _ => return Err(NnError::invalid("the last layer must be softmax")),
        }
        let shapes = self.layer_output_shapes()?;
        let logits = &shapes[shapes.len() - 1];
        if logits != &[self.n_classes] {
            return Err(NnError::shape(
                "model",
                format!(
                    "network ends in shape {logits:?} but n_classes is {}",
                    self.n_classes
                ),
            ));
        }
        Ok(())
    }

    /// Per-sample output shape of every layer (batch axis omitted).
    pub fn layer_output_shapes(&self) -> Result<Vec<Vec<usize>>, NnError> {
        let mut shape = self.input_shape.to_vec();
        let mut out = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            shape = match (layer.kind, shape.as_slice()) {
                (
                    LayerKind::Conv2d {
                        filters,
                        kernel,
                        stride,
                    },
                    &[h, w, _],
                ) => {
                    if kernel == 0 || stride == 0 || filters == 0 {
                        return Err(NnError::invalid(format!(
                            "layer '{}': filters, kernel size and stride must be positive",
                            layer.name
                        )));
                    }
                    vec![
                        ops::same_output_side(h, stride),
                        ops::same_output_side(w, stride),
                        filters,
                    ]
                }
                (LayerKind::BatchNorm | LayerKind::Relu | LayerKind::Softmax, s) => s.to_vec(),
                (LayerKind::Flatten, s) => vec![s.iter().product()],
                (LayerKind::Dense { units }, &[_]) => {
                    if units == 0 {
                        return Err(NnError::invalid(format!(
                            "layer '{}': unit count must be positive",
                            layer.name
                        )));
                    }
                    vec![units]
                }
                (kind, s) => {
                    return Err(NnError::shape(
                        "model",
                        format!("layer '{}' ({kind:?}) cannot accept shape {s:?}", layer.name),
                    ))
                }
            };
            out.push(shape.clone());
        }
        Ok(out)
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    /// Names of the parameterised layers that own trainable weights (conv and
    /// dense), in input-to-output order.
    pub fn weight_layers(&self) -> Vec<&str> {
        self.layers
            .iter()
            .filter(|l| matches!(l.kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. }))
            .map(|l| l.name.as_str())
            .collect()
    }

    /// For each batch-norm layer, the conv/dense layer it normalises.
    pub fn batch_norm_owner(&self, bn_index: usize) -> Option<&str> {
        self.layers[..bn_index]
            .iter()
            .rev()
            .find(|l| matches!(l.kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. }))
            .map(|l| l.name.as_str())
    }
}

/// conv(32,s1) BN relu, conv(64,s2) BN relu, conv(128,s2) BN relu,
/// conv(256,s2) BN relu, flatten, dense(512) BN relu, dense(n), softmax.
/// All kernels are 3x3 with same padding.
pub fn build_baseline_model(input_shape: [usize; 3], n_classes: usize) -> Result<ModelSpec, NnError> {
    let [h, w, c] = input_shape;
    if h != w {
        return Err(NnError::invalid(format!(
            "baseline model needs a square input, got {h}x{w}"
        )));
    }
    if h < 16 {
        return Err(NnError::invalid(format!(
            "input side {h} is too small for three stride-2 reductions (need >= 16)"
        )));
    }
    if c == 0 || n_classes < 2 {
        return Err(NnError::invalid(
            "baseline model needs at least one channel and two classes",
        ));
    }
    let mut layers = Vec::new();
    for (i, (filters, stride)) in [(32, 1), (64, 2), (128, 2), (256, 2)].into_iter().enumerate() {
        let n = i + 1;
        layers.push(LayerSpec::new(
            format!("conv{n}"),
            LayerKind::Conv2d {
                filters,
                kernel: 3,
                stride,
            },
        ));
        layers.push(LayerSpec::new(format!("bn{n}"), LayerKind::BatchNorm));
        layers.push(LayerSpec::new(format!("relu{n}"), LayerKind::Relu));
    }
    layers.push(LayerSpec::new("flatten", LayerKind::Flatten));
    layers.push(LayerSpec::new("fc1", LayerKind::Dense { units: 512 }));
    layers.push(LayerSpec::new("bn5", LayerKind::BatchNorm));
    layers.push(LayerSpec::new("relu5", LayerKind::Relu));
    layers.push(LayerSpec::new("head", LayerKind::Dense { units: n_classes }));
    layers.push(LayerSpec::new("softmax", LayerKind::Softmax));
    ModelSpec::new(input_shape, n_classes, layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamRole {
    /// Updated by the optimiser.
    Trainable,
    /// Batch-norm running statistics, updated by forward passes in train mode.
    Statistic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T = f32> {
    pub name: String,
    pub role: ParamRole,
    pub value: Tensor<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T = f32> {
    pub layer: String,
    pub params: Vec<Param<T>>,
}

/// Parameters for every parameterised layer, in model order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T = f32> {
    pub layers: Vec<LayerParams<T>>,
}

fn param<T>(name: &str, role: ParamRole, value: Tensor<T>) -> Param<T> {
    Param {
        name: name.to_string(),
        role,
        value,
    }
}

impl<T: Scalar> ParamSet<T> {
    /// He-style uniform initialisation: `U(-sqrt(6 / fan_in), +sqrt(6 / fan_in))`,
    /// zero biases, unit gamma and running variance.
    pub fn init(model: &ModelSpec, seed: u64) -> Result<Self, NnError> {
        let shapes = model.layer_output_shapes()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut in_shape = model.input_shape.to_vec();
        for (layer, out_shape) in model.layers.iter().zip(&shapes) {
            let mut uniform = |shape: Vec<usize>, fan_in: usize| {
                let limit = (6.0 / fan_in as f64).sqrt();
                Tensor::from_fn(shape, |_| T::from_f64_lossy(rng.gen_range(-limit..limit)))
            };
            let params = match layer.kind {
                LayerKind::Conv2d {
                    filters, kernel, ..
                } => {
                    let c_in = in_shape[2];
                    vec![
                        param(
                            "weights",
                            ParamRole::Trainable,
                            uniform(vec![kernel, kernel, c_in, filters], kernel * kernel * c_in),
                        ),
                        param("bias", ParamRole::Trainable, Tensor::zeros(vec![filters])),
                    ]
                }
                LayerKind::Dense { units } => {
                    let f = in_shape[0];
                    vec![
                        param("weights", ParamRole::Trainable, uniform(vec![f, units], f)),
                        param("bias", ParamRole::Trainable, Tensor::zeros(vec![units])),
                    ]
                }
                LayerKind::BatchNorm => {
                    let f = *out_shape.last().unwrap();
                    vec![
                        param("gamma", ParamRole::Trainable, Tensor::filled(vec![f], T::one())),
                        param("beta", ParamRole::Trainable, Tensor::zeros(vec![f])),
                        param("running_mean", ParamRole::Statistic, Tensor::zeros(vec![f])),
                        param(
                            "running_var",
                            ParamRole::Statistic,
                            Tensor::filled(vec![f], T::one()),
                        ),
                    ]
                }
                _ => Vec::new(),
            };
            if !params.is_empty() {
                layers.push(LayerParams {
                    layer: layer.name.clone(),
                    params,
                });
            }
            in_shape = out_shape.clone();
        }
        Ok(Self { layers })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    layer: l.layer.clone(),
                    params: l
                        .params
                        .iter()
                        .map(|p| param(&p.name, p.role, Tensor::zeros(p.value.shape().to_vec())))
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn layer(&self, name: &str) -> Option<&LayerParams<T>> {
        self.layers.iter().find(|l| l.layer == name)
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut LayerParams<T>> {
        self.layers.iter_mut().find(|l| l.layer == name)
    }

    pub fn get(&self, layer: &str, name: &str) -> Result<&Tensor<T>, NnError> {
        self.layer(layer)
            .and_then(|l| l.params.iter().find(|p| p.name == name))
            .map(|p| &p.value)
            .ok_or_else(|| NnError::MissingParam {
                layer: layer.to_string(),
                param: name.to_string(),
            })
    }

    pub fn get_mut(&mut self, layer: &str, name: &str) -> Result<&mut Tensor<T>, NnError> {
        self.layer_mut(layer)
            .and_then(|l| l.params.iter_mut().find(|p| p.name == name))
            .map(|p| &mut p.value)
            .ok_or_else(|| NnError::MissingParam {
                layer: layer.to_string(),
                param: name.to_string(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Param<T>)> {
        self.layers
            .iter()
            .flat_map(|l| l.params.iter().map(move |p| (l.layer.as_str(), p)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Param<T>)> {
        self.layers.iter_mut().flat_map(|l| {
            let LayerParams { layer, params } = l;
            let layer = layer.as_str();
            params.iter_mut().map(move |p| (layer, p))
        })
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    layer: l.layer.clone(),
                    params: l
                        .params
                        .iter()
                        .map(|p| param(&p.name, p.role, p.value.cast()))
                        .collect(),
                })
                .collect(),
        }
    }

    /// Verifies that this set holds exactly the tensors `model` needs.
    pub fn check_against(&self, model: &ModelSpec) -> Result<(), NnError> {
        let expected = ParamSet::<T>::init(model, 0)?;
        if expected.layers.len() != self.layers.len() {
            return Err(NnError::shape(
                "params",
                format!(
                    "{} parameterised layers, model needs {}",
                    self.layers.len(),
                    expected.layers.len()
                ),
            ));
        }
        for (want, have) in expected.layers.iter().zip(&self.layers) {
            let names_match = want.layer == have.layer
                && want.params.len() == have.params.len()
                && want
                    .params
                    .iter()
                    .zip(&have.params)
                    .all(|(a, b)| a.name == b.name && a.value.shape() == b.value.shape());
            if !names_match {
                return Err(NnError::shape(
                    "params",
                    format!("parameters of layer '{}' do not match the model", want.layer),
                ));
            }
        }
        for (layer, p) in self.iter() {
            if p.name == "running_var" && p.value.data().iter().any(|&v| v.partial_cmp(&T::zero()) != Some(std::cmp::Ordering::Greater)) {
                return Err(NnError::invalid(format!(
                    "layer '{layer}': running variance must be strictly positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum LayerCache<T> {
    Conv(ConvCache<T>),
    BatchNorm(BatchNormCache<T>),
    Relu(Tensor<T>),
    Flatten(Vec<usize>),
    Dense(Tensor<T>),
    None,
}

/// Activations retained by [`model_forward`] for [`model_backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T = f32> {
    layers: Vec<LayerCache<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Which relu inputs were strictly positive, over every relu layer.
    pub fn relu_pattern(&self) -> Vec<bool> {
        self.layers
            .iter()
            .filter_map(|c| match c {
                LayerCache::Relu(input) => Some(input.data().iter().map(|&v| v > T::zero())),
                _ => None,
            })
            .flatten()
            .collect()
    }

    /// Fresh batch statistics `(layer, mean, unbiased variance)` from every
    /// batch-norm layer that ran in train mode.
    pub fn batch_stats(&self, model: &ModelSpec) -> Vec<(String, &[T], &[T])> {
        model
            .layers
            .iter()
            .zip(&self.layers)
            .filter_map(|(spec, cache)| match cache {
                LayerCache::BatchNorm(bn) => bn
                    .batch_stats
                    .as_ref()
                    .map(|(m, v)| (spec.name.clone(), m.as_slice(), v.as_slice())),
                _ => None,
            })
            .collect()
    }
}

fn check_batch<T: Scalar>(model: &ModelSpec, batch: &Tensor<T>) -> Result<(), NnError> {
    let (n, h, w, c) = batch.dims4("model_forward")?;
    if [h, w, c] != model.input_shape || n == 0 {
        return Err(NnError::shape(
            "model_forward",
            format!(
                "batch {:?} does not match model input {:?}",
                batch.shape(),
                model.input_shape
            ),
        ));
    }
    Ok(())
}

/// Runs the network up to (not including) the softmax layer and returns the
/// logits. Batch-norm layers named in `bn_frozen` use running statistics even
/// in train mode.
pub fn model_forward_with<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    mode: Mode,
    bn_frozen: &BTreeSet<String>,
) -> Result<(Tensor<T>, ForwardCache<T>), NnError> {
    check_batch(model, batch)?;
    let mut x = batch.clone();
    let mut caches = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let (next, cache) = match layer.kind {
            LayerKind::Conv2d { stride, .. } => {
                let (y, c) = ops::conv2d_forward(
                    &x,
                    params.get(&layer.name, "weights")?,
                    params.get(&layer.name, "bias")?,
                    (stride, stride),
                )?;
                (y, LayerCache::Conv(c))
            }
            LayerKind::BatchNorm => {
                let bn = BatchNormParams {
                    gamma: params.get(&layer.name, "gamma")?,
                    beta: params.get(&layer.name, "beta")?,
                    running_mean: params.get(&layer.name, "running_mean")?,
                    running_var: params.get(&layer.name, "running_var")?,
                };
                let m = if bn_frozen.contains(&layer.name) {
                    Mode::Infer
                } else {
                    mode
                };
                let (y, c) = ops::batch_norm(&x, &bn, m)?;
                (y, LayerCache::BatchNorm(c))
            }
            LayerKind::Relu => (ops::relu(&x), LayerCache::Relu(x)),
            LayerKind::Flatten => {
                let shape = x.shape().to_vec();
                let n = shape[0];
                let f = x.len() / n;
                (x.reshape(vec![n, f])?, LayerCache::Flatten(shape))
            }
            LayerKind::Dense { .. } => {
                let y = ops::dense(
                    &x,
                    params.get(&layer.name, "weights")?,
                    params.get(&layer.name, "bias")?,
                )?;
                (y, LayerCache::Dense(x))
            }
            LayerKind::Softmax => {
                caches.push(LayerCache::None);
                break;
            }
        };
        caches.push(cache);
        x = next;
    }
    Ok((x, ForwardCache { layers: caches }))
}

pub fn model_forward<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    mode: Mode,
) -> Result<(Tensor<T>, ForwardCache<T>), NnError> {
    model_forward_with(model, params, batch, mode, &BTreeSet::new())
}

/// Class probabilities in inference mode.
pub fn predict_proba<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (logits, _) = model_forward(model, params, batch, Mode::Infer)?;
    ops::softmax(&logits)
}

/// Backpropagates an upstream gradient on the logits. The returned set is
/// congruent with `params`; statistic entries are zero.
pub fn backward_from_logits<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    cache: &ForwardCache<T>,
    grad_logits: Tensor<T>,
) -> Result<ParamSet<T>, NnError> {
    let mut grads = params.zeros_like();
    let mut g = grad_logits;
    let depth = cache.layers.len();
    for (layer, lc) in model.layers[..depth].iter().zip(&cache.layers).rev() {
        g = match (layer.kind, lc) {
            (LayerKind::Softmax, _) => g,
            (LayerKind::Conv2d { .. }, LayerCache::Conv(c)) => {
                let r = ops::conv2d_backward(c, params.get(&layer.name, "weights")?, &g)?;
                *grads.get_mut(&layer.name, "weights")? = r.weights;
                *grads.get_mut(&layer.name, "bias")? = r.bias;
                r.input
            }
            (LayerKind::BatchNorm, LayerCache::BatchNorm(c)) => {
                let r = ops::batch_norm_backward(c, params.get(&layer.name, "gamma")?, &g)?;
                *grads.get_mut(&layer.name, "gamma")? = r.gamma;
                *grads.get_mut(&layer.name, "beta")? = r.beta;
                r.input
            }
            (LayerKind::Relu, LayerCache::Relu(input)) => ops::relu_backward(input, &g)?,
            (LayerKind::Flatten, LayerCache::Flatten(shape)) => g.reshape(shape.clone())?,
            (LayerKind::Dense { .. }, LayerCache::Dense(input)) => {
                let r = ops::dense_backward(input, params.get(&layer.name, "weights")?, &g)?;
                *grads.get_mut(&layer.name, "weights")? = r.weights;
                *grads.get_mut(&layer.name, "bias")? = r.bias;
                r.input
            }
            _ => {
                return Err(NnError::invalid(format!(
                    "forward cache does not belong to this model (layer '{}')",
                    layer.name
                )))
            }
        };
    }
    Ok(grads)
}

/// Cross-entropy loss against `labels` and the full parameter gradient.
pub fn model_backward<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    logits: &Tensor<T>,
    cache: &ForwardCache<T>,
    labels: &[usize],
) -> Result<(T, ParamSet<T>), NnError> {
    let (loss, grad) = ops::softmax_cross_entropy(logits, labels)?;
    let grads = backward_from_logits(model, params, cache, grad)?;
    Ok((loss, grads))
}

/// Folds the batch statistics of a train-mode forward pass into the running
/// mean/variance with momentum 0.9.
pub fn apply_running_stats<T: Scalar>(
    model: &ModelSpec,
    params: &mut ParamSet<T>,
    cache: &ForwardCache<T>,
) -> Result<(), NnError> {
    let momentum = T::from_f64_lossy(BN_MOMENTUM);
    let keep = T::one() - momentum;
    for (layer, mean, var) in cache.batch_stats(model) {
        for (name, fresh) in [("running_mean", mean), ("running_var", var)] {
            let running = params.get_mut(&layer, name)?;
            for (r, &b) in running.data_mut().iter_mut().zip(fresh) {
                *r = momentum * *r + keep * b;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_shapes_at_64() {
        let model = build_baseline_model([64, 64, 3], 2).unwrap();
        let shapes = model.layer_output_shapes().unwrap();
        let conv4 = model.layer_index("conv4").unwrap();
        assert_eq!(shapes[conv4], vec![8, 8, 256]);
        assert_eq!(model.weight_layers(), ["conv1", "conv2", "conv3", "conv4", "fc1", "head"]);
        let params = ParamSet::<f32>::init(&model, 1).unwrap();
        let conv1: usize = ["weights", "bias"]
            .iter()
            .map(|n| params.get("conv1", n).unwrap().len())
            .sum();
        assert_eq!(conv1, 896);
        assert_eq!(params.get("fc1", "weights").unwrap().shape(), &[8 * 8 * 256, 512]);
        assert_eq!(params.get("head", "weights").unwrap().shape(), &[512, 2]);
    }

    #[test]
    fn baseline_style_head_and_small_input() {
        let model = build_baseline_model([64, 64, 3], 27).unwrap();
        let params = ParamSet::<f32>::init(&model, 1).unwrap();
        assert_eq!(params.get("head", "weights").unwrap().shape(), &[512, 27]);

        let small = build_baseline_model([16, 16, 1], 2).unwrap();
        let shapes = small.layer_output_shapes().unwrap();
        assert_eq!(shapes[small.layer_index("conv4").unwrap()], vec![2, 2, 256]);
    }

    #[test]
    fn baseline_rejects_bad_inputs() {
        assert!(build_baseline_model([15, 15, 3], 2).is_err());
        assert!(build_baseline_model([32, 16, 3], 2).is_err());
    }

    #[test]
    fn model_validation() {
        let dense = |n: &str, u| LayerSpec::new(n, LayerKind::Dense { units: u });
        let flat = LayerSpec::new("flat", LayerKind::Flatten);
        let sm = LayerSpec::new("sm", LayerKind::Softmax);
        assert!(ModelSpec::new([2, 2, 1], 3, vec![flat.clone(), dense("d", 3), sm.clone()]).is_ok());
        // wrong class count
        assert!(ModelSpec::new([2, 2, 1], 2, vec![flat.clone(), dense("d", 3), sm.clone()]).is_err());
        // duplicate names
        assert!(ModelSpec::new(
            [2, 2, 1],
            3,
            vec![flat.clone(), dense("d", 3), dense("d", 3), sm.clone()]
        )
        .is_err());
        // missing softmax
        assert!(ModelSpec::new([2, 2, 1], 3, vec![flat.clone(), dense("d", 3)]).is_err());
        // dense on an image without flatten
        assert!(ModelSpec::new([2, 2, 1], 3, vec![dense("d", 3), sm.clone()]).is_err());
        // zero stride
        let conv = LayerSpec::new(
            "c",
            LayerKind::Conv2d {
                filters: 1,
                kernel: 3,
                stride: 0,
            },
        );
        assert!(ModelSpec::new([2, 2, 1], 3, vec![conv, flat, dense("d", 3), sm]).is_err());
    }

    #[test]
    fn softmax_rows_sum_to_one_and_zero_grad_gives_zero() {
        let model = build_baseline_model([16, 16, 3], 4).unwrap();
        let params = ParamSet::<f32>::init(&model, 3).unwrap();
        let batch = Tensor::from_fn(vec![3, 16, 16, 3], |i| ((i * 37) % 11) as f32 / 11.0);
        let p = predict_proba(&model, &params, &batch).unwrap();
        for row in p.data().chunks(4) {
            assert!((row.iter().sum::<f32>() - 1.0).abs() <= 1e-6);
        }
        let (logits, cache) = model_forward(&model, &params, &batch, Mode::Train).unwrap();
        let grads = backward_from_logits(&model, &params, &cache, Tensor::zeros(logits.shape().to_vec()))
            .unwrap();
        assert!(grads.iter().all(|(_, p)| p.value.data().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn forward_rejects_wrong_batch_shape() {
        let model = build_baseline_model([16, 16, 3], 2).unwrap();
        let params = ParamSet::<f32>::init(&model, 3).unwrap();
        let err = model_forward(&model, &params, &Tensor::zeros(vec![2, 16, 16, 1]), Mode::Infer)
            .unwrap_err();
        assert!(matches!(err, NnError::ShapeMismatch { .. }));
    }

    #[test]
    fn running_stats_follow_momentum() {
        let model = build_baseline_model([16, 16, 1], 2).unwrap();
        let mut params = ParamSet::<f64>::init(&model, 5).unwrap();
        let batch = Tensor::from_fn(vec![2, 16, 16, 1], |i| (i % 7) as f64);
        let (_, cache) = model_forward(&model, &params, &batch, Mode::Train).unwrap();
        let (_, mean, _) = cache.batch_stats(&model).into_iter().next().unwrap();
        let expected: Vec<f64> = mean.iter().map(|m| (1.0 - 0.9) * m).collect();
        apply_running_stats(&model, &mut params, &cache).unwrap();
        assert_eq!(params.get("bn1", "running_mean").unwrap().data(), expected.as_slice());
        assert!(params.check_against(&model).is_ok());
    }
}
