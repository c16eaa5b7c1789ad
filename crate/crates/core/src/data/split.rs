use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, LabelKey};
use super::DataError;

/// Stratified split of item indices. Each class is shuffled with the seed and
/// `round(fraction * class_size)` of it goes to the train side. Both returned
/// index lists are ascending.
pub fn stratified_indices<K: Ord + Clone + std::fmt::Debug>(
    classes: &[K],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(train_fraction > 0.0 && train_fraction <= 1.0) {
        return Err(DataError::InvalidArgument(format!(
            "train fraction must be in (0, 1], got {train_fraction}"
        )));
    }
    let mut groups: BTreeMap<K, Vec<usize>> = BTreeMap::new();
    for (i, c) in classes.iter().enumerate() {
        groups.entry(c.clone()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, mut members) in groups {
        if train_fraction < 1.0 && members.len() < 2 {
            return Err(DataError::InvalidArgument(format!(
                "class {class:?} has {} item(s); at least 2 are needed to split",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n_train = ((members.len() as f64) * train_fraction).round() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits a manifest, stratified by `key` (records lacking that label form
/// their own stratum) or by the full label string when `key` is `None`.
pub fn split(
    manifest: &DatasetManifest,
    train_fraction: f64,
    seed: u64,
    key: Option<LabelKey>,
) -> Result<(DatasetManifest, DatasetManifest), DataError> {
    let classes: Vec<String> = manifest
        .records
        .iter()
        .map(|r| match key {
            Some(k) => r.class_of(k).unwrap_or_default(),
            None => format!("{}|{}", r.media_type, r.labels),
        })
        .collect();
    let (train_idx, test_idx) = stratified_indices(&classes, train_fraction, seed)?;
    let pick = |idx: &[usize], suffix: &str| DatasetManifest {
        name: if manifest.name.is_empty() {
            String::new()
        } else {
            format!("{}-{suffix}", manifest.name)
        },
        source: manifest.source.clone(),
        records: idx.iter().map(|&i| manifest.records[i].clone()).collect(),
    };
    Ok((pick(&train_idx, "train"), pick(&test_idx, "test")))
}
