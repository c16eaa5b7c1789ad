use std::path::Path;

use crate::nn::{load_checkpoint, predict_proba, ModelSpec, ParamSet, Tensor};

use super::PipelineError;

/// A classifier the cascade can call: a preprocessed `(h, w, c)` image in,
/// one non-negative score per declared class out.
pub trait InferenceBackend: Send + Sync {
    /// Identifier reported in analyses.
    fn id(&self) -> &str;
    fn classes(&self) -> &[String];
    fn input_shape(&self) -> [usize; 3];
    fn scores(&self, input: &Tensor<f32>) -> Result<Vec<f64>, PipelineError>;
}

/// Checks the score contract and returns the scores normalised to sum 1.
pub fn checked_scores(backend: &dyn InferenceBackend, input: &Tensor<f32>) -> Result<Vec<f64>, PipelineError> {
    let scores = backend.scores(input)?;
    let bad = |msg: String| PipelineError::Backend {
        id: backend.id().to_string(),
        msg,
    };
    if scores.len() != backend.classes().len() {
        return Err(bad(format!(
            "returned {} scores for {} classes",
            scores.len(),
            backend.classes().len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return Err(bad(format!("scores must be finite and non-negative: {scores:?}")));
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(bad("scores sum to zero".into()));
    }
    Ok(scores.iter().map(|s| s / total).collect())
}

/// A network from this crate's engine, loaded from a checkpoint.
#[derive(Debug, Clone)]
pub struct CnnBackend {
    id: String,
    model: ModelSpec,
    params: ParamSet<f32>,
    classes: Vec<String>,
}

impl CnnBackend {
    pub fn new(
        id: impl Into<String>,
        model: ModelSpec,
        params: ParamSet<f32>,
        classes: Vec<String>,
    ) -> Result<Self, PipelineError> {
        let id = id.into();
        if classes.len() != model.n_classes {
            return Err(PipelineError::Backend {
                id,
                msg: format!(
                    "{} class names declared for a {}-way model",
                    classes.len(),
                    model.n_classes
                ),
            });
        }
        params.check_against(&model)?;
        Ok(Self {
            id,
            model,
            params,
            classes,
        })
    }

    pub fn load(id: impl Into<String>, path: impl AsRef<Path>, classes: Vec<String>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let (model, params) = load_checkpoint(path).map_err(|e| PipelineError::Checkpoint {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        Self::new(id, model, params, classes)
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn params(&self) -> &ParamSet<f32> {
        &self.params
    }
}

impl InferenceBackend for CnnBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn input_shape(&self) -> [usize; 3] {
        self.model.input_shape
    }

    fn scores(&self, input: &Tensor<f32>) -> Result<Vec<f64>, PipelineError> {
        let mut shape = vec![1];
        shape.extend_from_slice(input.shape());
        let batch = input.clone().reshape(shape)?;
        let probs = predict_proba(&self.model, &self.params, &batch)?;
        Ok(probs.data().iter().map(|&p| p as f64).collect())
    }
}

/// Returns the same scores for every input.
#[derive(Debug, Clone)]
pub struct FixedBackend {
    pub id: String,
    pub classes: Vec<String>,
    pub input_shape: [usize; 3],
    pub scores: Vec<f64>,
}

impl FixedBackend {
    pub fn new(id: &str, classes: &[&str], scores: &[f64]) -> Self {
        Self {
            id: id.to_string(),
            classes: classes.iter().map(|c| c.to_string()).collect(),
            input_shape: [16, 16, 3],
            scores: scores.to_vec(),
        }
    }
}

impl InferenceBackend for FixedBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    fn scores(&self, _input: &Tensor<f32>) -> Result<Vec<f64>, PipelineError> {
        Ok(self.scores.clone())
    }
}
