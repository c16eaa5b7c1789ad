use std::time::Instant;

use canvastune::data::{Image, MediaType};
use canvastune::pipeline::fixtures::{build_fixture_registry, fixture_dataset, FixtureConfig};
use canvastune::pipeline::{analyze, ModelRegistry, Slot};

#[test]
fn fixture_registry_trains_loads_and_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let config = FixtureConfig::default();
    let start = Instant::now();
    let (registry, accuracy) = build_fixture_registry(dir.path(), &config).unwrap();
    eprintln!("fixtures trained in {:.1}s: {accuracy:?}", start.elapsed().as_secs_f64());
    for (slot, acc) in &accuracy {
        assert!(*acc >= 0.9, "{slot}: held-out accuracy {acc}");
    }

    let loaded = ModelRegistry::load(dir.path()).unwrap();
    assert!(loaded.is_complete());
    let styles = registry.styles().clone();
    let probe = fixture_dataset(Slot::MediaGate, &FixtureConfig { seed: 99, ..config }, &styles).unwrap();
    let images: Vec<&Image> = probe.images.iter().take(10).collect();
    for img in images {
        let a = analyze(img, &registry).unwrap();
        let b = analyze(img, &loaded).unwrap();
        assert_eq!(a, b);
        assert!(a.is_well_formed());
        assert_eq!(a.style.is_some(), a.media_type == MediaType::Artwork);
    }
}
