use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::nn::{ParamRole, ParamSet, Scalar};

use super::OptimError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moments for every parameter, plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T = f32> {
    pub config: AdamConfig,
    pub t: u64,
    pub m: ParamSet<T>,
    pub v: ParamSet<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>, config: AdamConfig) -> Self {
        Self {
            config,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }
}

/// One bias-corrected Adam step over every trainable parameter.
pub fn adam_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<(), OptimError> {
    adam_step_masked(params, grads, state, lr, &BTreeSet::new())
}

/// [`adam_step`] that leaves the layers in `frozen` (values and moments)
/// untouched. Statistic parameters are never updated.
pub fn adam_step_masked<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut AdamState<T>,
    lr: f64,
    frozen: &BTreeSet<String>,
) -> Result<(), OptimError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(OptimError::InvalidConfig(format!("learning rate must be positive, got {lr}")));
    }
    congruent(params, grads)?;
    congruent(params, &state.m)?;
    // Validate everything first so a bad gradient leaves the state untouched.
    for (layer, g) in grads.iter() {
        if !frozen.contains(layer) && g.role == ParamRole::Trainable && !g.value.all_finite() {
            return Err(OptimError::NonFiniteGradient {
                layer: layer.to_string(),
                param: g.name.clone(),
            });
        }
    }

    state.t += 1;
    let AdamConfig {
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(state.t as i32);
    let bc2 = 1.0 - beta2.powi(state.t as i32);

    let layers = params
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(state.m.layers.iter_mut().zip(state.v.layers.iter_mut()));
    for ((p_layer, g_layer), (m_layer, v_layer)) in layers {
        if frozen.contains(&p_layer.layer) {
            continue;
        }
        let params = p_layer.params.iter_mut().zip(&g_layer.params);
        for ((p, g), (m, v)) in params.zip(m_layer.params.iter_mut().zip(v_layer.params.iter_mut())) {
            if p.role != ParamRole::Trainable {
                continue;
            }
            let values = p.value.data_mut().iter_mut();
            let moments = m.value.data_mut().iter_mut().zip(v.value.data_mut().iter_mut());
            for ((w, &g), (m, v)) in values.zip(g.value.data()).zip(moments) {
                let g = g.to_f64().unwrap_or(0.0);
                let m_new = beta1 * m.to_f64().unwrap_or(0.0) + (1.0 - beta1) * g;
                let v_new = beta2 * v.to_f64().unwrap_or(0.0) + (1.0 - beta2) * g * g;
                *m = T::from_f64_lossy(m_new);
                *v = T::from_f64_lossy(v_new);
                let step = lr * (m_new / bc1) / ((v_new / bc2).sqrt() + epsilon);
                *w = T::from_f64_lossy(w.to_f64().unwrap_or(0.0) - step);
            }
        }
    }
    Ok(())
}

fn congruent<T: Scalar>(a: &ParamSet<T>, b: &ParamSet<T>) -> Result<(), OptimError> {
    let ok = a.layers.len() == b.layers.len()
        && a.layers.iter().zip(&b.layers).all(|(x, y)| {
            x.layer == y.layer
                && x.params.len() == y.params.len()
                && x.params
                    .iter()
                    .zip(&y.params)
                    .all(|(p, q)| p.name == q.name && p.value.shape() == q.value.shape())
        });
    if ok {
        Ok(())
    } else {
        Err(OptimError::InvalidConfig(
            "gradient or optimiser state is not congruent with the parameters".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{LayerParams, Param, Tensor};

    fn set(values: &[f64]) -> ParamSet<f64> {
        ParamSet {
            layers: vec![LayerParams {
                layer: "fc".into(),
                params: vec![Param {
                    name: "weights".into(),
                    role: ParamRole::Trainable,
                    value: Tensor::new(vec![values.len()], values.to_vec()).unwrap(),
                }],
            }],
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = set(&[1.0, -2.0, 3.0]);
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &set(&[0.0; 3]), &mut s, 1e-3).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn first_step_moves_by_lr_regardless_of_scale() {
        let lr = 1e-3;
        let mut p = set(&[0.0, 0.0, 0.0]);
        let mut s = AdamState::new(&p, AdamConfig::default());
        adam_step(&mut p, &set(&[0.5, 1.0, -3.0]), &mut s, lr).unwrap();
        let d = p.get("fc", "weights").unwrap().data().to_vec();
        // Oracle: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
        for (&x, g) in d.iter().zip([0.5f64, 1.0, -3.0]) {
            let want = -lr * g / (g.abs() + 1e-8);
            assert!((x - want).abs() < 1e-15, "{x} vs {want}");
            assert!(x.abs() <= lr);
        }
        assert!((d[0].abs() - d[1].abs()).abs() < 1e-10);
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut p = set(&[1.0, 2.0]);
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let err = adam_step(&mut p, &set(&[1.0, f64::NAN]), &mut s, 1e-3).unwrap_err();
        assert!(err.to_string().contains("fc/weights"), "{err}");
        assert_eq!(p, before);
        assert_eq!(s.t, 0);
    }

    #[test]
    fn frozen_layers_untouched() {
        let mut p = set(&[1.0]);
        let before = p.clone();
        let mut s = AdamState::new(&p, AdamConfig::default());
        let frozen = BTreeSet::from(["fc".to_string()]);
        adam_step_masked(&mut p, &set(&[1.0]), &mut s, 1e-2, &frozen).unwrap();
        assert_eq!(p, before);
        assert_eq!(s.m, set(&[0.0]));
    }

    #[test]
    fn rejects_bad_lr() {
        let mut p = set(&[1.0]);
        let mut s = AdamState::new(&p, AdamConfig::default());
        assert!(adam_step(&mut p, &set(&[1.0]), &mut s, 0.0).is_err());
    }
}
