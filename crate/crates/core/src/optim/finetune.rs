use serde::{Deserialize, Serialize};

use crate::nn::{LayerKind, ModelSpec};

use super::OptimError;

pub const DEFAULT_HEAD_EPOCHS: usize = 2;
pub const DEFAULT_STAGE_EPOCHS: usize = 1;
pub const DEFAULT_STAGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stage {
    /// Trainable layer names in the order they were unfrozen, head first.
    pub trainable: Vec<String>,
    pub epochs: usize,
}

impl Stage {
    pub fn trains(&self, layer: &str) -> bool {
        self.trainable.iter().any(|l| l == layer)
    }
}

/// Staged unfreezing: the head alone first, then one more layer per stage
/// counting back from the output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FineTunePlan {
    pub stages: Vec<Stage>,
}

impl FineTunePlan {
    /// Plan over a model's conv/dense layers; the last one is the head.
    pub fn for_model(
        model: &ModelSpec,
        head_epochs: usize,
        stage_epochs: usize,
        n_stages: usize,
    ) -> Result<Self, OptimError> {
        let names: Vec<String> = model.weight_layers().iter().map(|s| s.to_string()).collect();
        make_finetune_plan(&names, head_epochs, stage_epochs, n_stages)
    }

    /// One stage training every conv/dense layer.
    pub fn all_layers(model: &ModelSpec, epochs: usize) -> Self {
        let trainable = model
            .layers
            .iter()
            .filter(|l| matches!(l.kind, LayerKind::Conv2d { .. } | LayerKind::Dense { .. }))
            .rev()
            .map(|l| l.name.clone())
            .collect();
        Self {
            stages: vec![Stage { trainable, epochs }],
        }
    }

    pub fn total_epochs(&self) -> usize {
        self.stages.iter().map(|s| s.epochs).sum()
    }
}

/// `layer_names` runs from input to output and ends with the head.
pub fn make_finetune_plan(
    layer_names: &[String],
    head_epochs: usize,
    stage_epochs: usize,
    n_stages: usize,
) -> Result<FineTunePlan, OptimError> {
    let Some((head, body)) = layer_names.split_last() else {
        return Err(OptimError::InvalidConfig("fine-tune plan needs at least a head layer".into()));
    };
    if n_stages > body.len() {
        return Err(OptimError::InvalidConfig(format!(
            "{n_stages} unfreezing stages requested but only {} layers precede the head",
            body.len()
        )));
    }
    let mut trainable = vec![head.clone()];
    let mut stages = vec![Stage {
        trainable: trainable.clone(),
        epochs: head_epochs,
    }];
    for layer in body.iter().rev().take(n_stages) {
        trainable.push(layer.clone());
        stages.push(Stage {
            trainable: trainable.clone(),
            epochs: stage_epochs,
        });
    }
    Ok(FineTunePlan { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::build_baseline_model;

    fn names(n: usize) -> Vec<String> {
        let mut v: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
        v.push("head".into());
        v
    }

    #[test]
    fn eight_conv_three_stages() {
        let plan = make_finetune_plan(&names(8), 2, 1, 3).unwrap();
        let got: Vec<(Vec<&str>, usize)> = plan
            .stages
            .iter()
            .map(|s| (s.trainable.iter().map(String::as_str).collect(), s.epochs))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec!["head"], 2),
                (vec!["head", "c8"], 1),
                (vec!["head", "c8", "c7"], 1),
                (vec!["head", "c8", "c7", "c6"], 1),
            ]
        );
        assert_eq!(plan.total_epochs(), 5);
    }

    #[test]
    fn zero_stages_is_linear_probe() {
        let plan = make_finetune_plan(&names(8), 3, 1, 0).unwrap();
        assert_eq!(plan.stages.len(), 1);
        assert_eq!(plan.stages[0].trainable, vec!["head".to_string()]);
    }

    #[test]
    fn too_many_stages() {
        assert!(make_finetune_plan(&names(8), 2, 1, 11).is_err());
        assert!(make_finetune_plan(&[], 2, 1, 0).is_err());
    }

    #[test]
    fn baseline_plan_unfreezes_fc1_first() {
        let m = build_baseline_model([16, 16, 3], 2).unwrap();
        let plan = FineTunePlan::for_model(&m, 2, 1, 5).unwrap();
        assert_eq!(plan.stages[1].trainable, vec!["head", "fc1"]);
        assert_eq!(plan.stages[5].trainable.last().unwrap(), "conv1");
        assert!(FineTunePlan::for_model(&m, 2, 1, 6).is_err());
        assert_eq!(FineTunePlan::all_layers(&m, 4).stages[0].trainable.len(), 6);
    }
}
