use canvastune::data::MediaType;
use canvastune::eval::{
    build_session, check_session, mos, paired_t_test, study_report, Condition, PoolImage, RatingRecord, RatingStore,
    DEFAULT_ALPHA,
};
use canvastune::metadata::EmotionQuadrant;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

fn oracle(a: &[f64], b: &[f64]) -> (f64, f64) {
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let ss: f64 = d.iter().map(|x| (x - mean) * (x - mean)).sum();
    let t = mean / ((ss / (n - 1.0)).sqrt() / n.sqrt());
    let dist = StudentsT::new(0.0, 1.0, n - 1.0).unwrap();
    (t, 2.0 * dist.cdf(-t.abs()))
}

#[test]
fn t_test_matches_oracle_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let n = rng.gen_range(2..=100);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..=5.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..=5.0)).collect();
        let r = paired_t_test(&a, &b, DEFAULT_ALPHA).unwrap();
        let (t, p) = oracle(&a, &b);
        assert!((r.t - t).abs() <= 1e-9, "n={n}: t {} vs {t}", r.t);
        assert!((r.p - p).abs() <= 1e-9, "n={n}: p {} vs {p}", r.p);
        assert_eq!(r.df, n - 1);
    }
}

/// Differences with exactly the given sample mean and sd.
fn differences(n: usize, mean: f64, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let m = raw.iter().sum::<f64>() / n as f64;
    let s = (raw.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    raw.iter().map(|x| mean + (x - m) / s * sd).collect()
}

#[test]
fn published_mos_summary_consistency() {
    let d = differences(74, 0.30, 0.388, 5);
    let b: Vec<f64> = vec![3.45; 74];
    let a: Vec<f64> = b.iter().zip(&d).map(|(x, y)| x + y).collect();
    let r = paired_t_test(&a, &b, DEFAULT_ALPHA).unwrap();
    assert!((r.t - 6.65).abs() <= 0.01, "t = {}", r.t);
    assert_eq!(r.df, 73);
    assert!(r.p < 0.001);
    assert!(r.reject);
}

fn pool() -> Vec<PoolImage> {
    let mut out = Vec::new();
    for q in EmotionQuadrant::ALL {
        for m in [MediaType::Artwork, MediaType::Photograph] {
            for k in 0..5 {
                out.push(PoolImage {
                    id: format!("{}-{}-{k}", m.as_str(), q.symbol()),
                    media_type: m,
                    quadrant: q,
                    style: None,
                });
            }
        }
    }
    out
}

fn simulate(store: &RatingStore, subjects: usize, seed: u64) {
    let pool = pool();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in 0..subjects {
        let subject = format!("s{s:03}");
        let plan = build_session(&pool, &subject, seed + s as u64).unwrap();
        check_session(&plan).unwrap();
        for item in &plan.items {
            for clip in &item.clips {
                store
                    .put(RatingRecord {
                        subject: subject.clone(),
                        image_id: item.image_id.clone(),
                        media_type: item.media_type,
                        condition: clip.condition,
                        rating: rng.gen_range(1..=5),
                        timestamp: 0,
                    })
                    .unwrap();
            }
        }
    }
}

#[test]
fn seventy_four_sessions_give_3552_records() {
    let store = RatingStore::in_memory();
    simulate(&store, 74, 11);
    assert_eq!(store.len(), 3552);
    let report = study_report(&store.snapshot(), DEFAULT_ALPHA).unwrap();
    assert_eq!(report.subjects, 74);
    assert!(report.tests.iter().all(|t| t.subjects == 74 && t.result.unwrap().df == 73));
    let photo_c = report.mos.photographs.our_approach;
    assert!(photo_c.is_none());
}

#[test]
fn store_round_trip_preserves_report() {
    let dir = tempfile::tempdir().unwrap();
    let store = RatingStore::open(dir.path().join("log.jsonl")).unwrap();
    simulate(&store, 5, 3);
    let before = mos(&store.snapshot());
    let out = dir.path().join("export.jsonl");
    store.export(&out).unwrap();
    let back = RatingStore::open(&out).unwrap();
    assert_eq!(mos(&back.snapshot()), before);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(mos(&RatingStore::import_jsonl(&text).unwrap().snapshot()), before);
}

fn record_strategy() -> impl Strategy<Value = RatingRecord> {
    (0u8..4, 0u8..6, any::<bool>(), 0usize..3, 1u8..=5).prop_map(|(s, i, art, c, rating)| {
        let media_type = if art { MediaType::Artwork } else { MediaType::Photograph };
        RatingRecord {
            subject: format!("s{s}"),
            image_id: format!("i{i}"),
            media_type,
            condition: Condition::for_media(media_type)[c],
            rating,
            timestamp: 0,
        }
    })
}

proptest! {
    #[test]
    fn t_test_self_is_null(a in prop::collection::vec(1.0f64..5.0, 2..40)) {
        let r = paired_t_test(&a, &a, DEFAULT_ALPHA).unwrap();
        prop_assert_eq!(r.t, 0.0);
        prop_assert_eq!(r.p, 1.0);
    }

    #[test]
    fn t_test_antisymmetric(pairs in prop::collection::vec((1.0f64..5.0, 1.0f64..5.0), 2..60)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let x = paired_t_test(&a, &b, DEFAULT_ALPHA).unwrap();
        let y = paired_t_test(&b, &a, DEFAULT_ALPHA).unwrap();
        prop_assert!((x.t + y.t).abs() <= 1e-9 * x.t.abs().max(1.0) || (x.t.is_infinite() && x.t == -y.t));
        prop_assert!((x.p - y.p).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&x.p));
    }

    #[test]
    fn mos_permutation_invariant(records in prop::collection::vec(record_strategy(), 0..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let report = mos(&records);
        prop_assert_eq!(report, mos(&shuffled));
        for row in [report.artworks, report.photographs] {
            for cell in [row.baseline, row.existing, row.our_approach].into_iter().flatten() {
                prop_assert!((1.0..=5.0).contains(&cell.mean));
            }
        }
    }

    #[test]
    fn sessions_pass_checker(seed in any::<u64>()) {
        let plan = build_session(&pool(), "subject", seed).unwrap();
        prop_assert!(check_session(&plan).is_ok());
        prop_assert_eq!(plan.slots(), 48);
    }
}
