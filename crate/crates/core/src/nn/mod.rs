//! Dense-tensor CNN engine with a fixed layer vocabulary
//! (conv2d, batch-norm, relu, flatten, dense, softmax).

mod checkpoint;
mod gradcheck;
mod model;
mod ops;
mod tensor;

use thiserror::Error;

pub use checkpoint::{
    decode as decode_checkpoint, encode as encode_checkpoint, load_checkpoint, save_checkpoint,
    CheckpointError, FORMAT_VERSION, MAGIC,
};
pub use gradcheck::{gradient_check, relative_error, GradCheckReport, SAMPLES_PER_LAYER};
pub use model::{
    apply_running_stats, backward_from_logits, build_baseline_model, model_backward, model_forward,
    model_forward_with, predict_proba, ForwardCache, LayerKind, LayerParams, LayerSpec, ModelSpec,
    Param, ParamRole, ParamSet,
};
pub use ops::{
    batch_norm, batch_norm_backward, conv2d, conv2d_backward, conv2d_forward, dense,
    dense_backward, relu, relu_backward, same_output_side, softmax, softmax_cross_entropy,
    BatchNormCache, BatchNormGrads, BatchNormParams, ConvCache, ConvGrads, DenseGrads, Mode,
    BN_EPSILON, BN_MOMENTUM,
};
pub use tensor::{Scalar, Tensor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NnError {
    #[error("{op}: shape mismatch: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("batch norm in train mode needs at least 2 items, got {batch}")]
    BatchTooSmall { batch: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("missing parameter {layer}/{param}")]
    MissingParam { layer: String, param: String },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("{0}")]
    Invalid(String),
}

impl NnError {
    pub(crate) fn shape(op: &'static str, detail: String) -> Self {
        Self::ShapeMismatch { op, detail }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Self::Invalid(msg.into())
    }
}
