use canvastune::nn::{
    build_baseline_model, gradient_check, LayerKind, LayerSpec, ModelSpec, Mode, ParamSet, Tensor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_batch(shape: Vec<usize>, seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(shape, |_| rng.gen_range(0.0..1.0))
}

#[test]
fn baseline_model_gradients_match_finite_differences() {
    let model = build_baseline_model([16, 16, 1], 2).unwrap();
    let params = ParamSet::<f64>::init(&model, 11).unwrap();
    let batch = random_batch(vec![2, 16, 16, 1], 12);
    let report = gradient_check(&model, &params, &batch, &[0, 1], 1e-5, Mode::Infer, 13).unwrap();
    println!("{report:?}");
    assert!(report.checked >= 20 * 6);
    assert!(report.max_relative_error <= 1e-4, "{report:?}");
}

#[test]
fn baseline_train_mode_batch_statistics() {
    let model = build_baseline_model([16, 16, 1], 2).unwrap();
    let params = ParamSet::<f64>::init(&model, 2).unwrap();
    let batch = random_batch(vec![4, 16, 16, 1], 102);
    let report = gradient_check(&model, &params, &batch, &[0, 1, 0, 1], 1e-5, Mode::Train, 2).unwrap();
    // conv1..conv4 and fc1 feed batch norms, so their biases are skipped.
    assert_eq!(report.skipped_invariant, 32 + 64 + 128 + 256 + 512);
    assert!(report.max_relative_error <= 1e-4, "{report:?}");
}

#[test]
fn dense_only_model_is_tight() {
    let model = ModelSpec::new(
        [3, 3, 2],
        3,
        vec![
            LayerSpec::new("flat", LayerKind::Flatten),
            LayerSpec::new("d1", LayerKind::Dense { units: 8 }),
            LayerSpec::new("d2", LayerKind::Dense { units: 3 }),
            LayerSpec::new("sm", LayerKind::Softmax),
        ],
    )
    .unwrap();
    let params = ParamSet::<f64>::init(&model, 1).unwrap();
    let batch = random_batch(vec![4, 3, 3, 2], 2);
    let report = gradient_check(&model, &params, &batch, &[0, 1, 2, 1], 1e-5, Mode::Train, 3).unwrap();
    assert!(report.max_relative_error <= 1e-7, "{report:?}");
}

#[test]
fn zero_step_is_rejected() {
    let model = build_baseline_model([16, 16, 1], 2).unwrap();
    let params = ParamSet::<f64>::init(&model, 11).unwrap();
    let batch = random_batch(vec![2, 16, 16, 1], 12);
    assert!(gradient_check(&model, &params, &batch, &[0, 1], 0.0, Mode::Infer, 1).is_err());
}
