use std::collections::HashSet;

use proptest::prelude::*;

use prognos::cohort::{parse_cohort, read_cohort, split_cohort, zscore_apply, zscore_fit, ColumnMap, SplitRatios};
use prognos::synth::AmdDesign;
use prognos::Error;

fn small(n: usize, with_features: bool, seed: u64) -> prognos::cohort::Cohort {
    AmdDesign {
        n,
        with_features,
        ..AmdDesign::default()
    }
    .generate(seed)
    .unwrap()
    .cohort
}

#[test]
fn file_round_trip_through_disk() {
    let cohort = small(40, true, 1);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cohort.csv");
    std::fs::write(&path, cohort.to_csv()).unwrap();
    let back = read_cohort(&path, None).unwrap();
    assert_eq!(back.participants(), cohort.participants());
}

#[test]
fn column_map_renames_headers() {
    let cohort = small(10, false, 2);
    let csv = cohort.to_csv().replacen("id,age", "PID,AGE_BL", 1);
    let map = ColumnMap::from_json(r#"{"id": "PID", "age": "AGE_BL"}"#).unwrap();
    assert_eq!(parse_cohort(&csv, &map).unwrap().participants(), cohort.participants());
    let err = parse_cohort(&csv, &ColumnMap::default()).unwrap_err();
    assert!(
        matches!(err, Error::MissingColumn { ref column } if column == "id"),
        "{err}"
    );
}

#[test]
fn missing_file_is_an_io_error() {
    let err = read_cohort(std::path::Path::new("/nonexistent/cohort.csv"), None).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn standardization_uses_training_statistics_only() {
    let cohort = small(300, true, 3);
    let split = split_cohort(&cohort, SplitRatios::default(), 5).unwrap();
    let norm = zscore_fit(&split.train).unwrap();
    let train = zscore_apply(&norm, &split.train).unwrap();
    let n = train.len() as f64;
    for j in [0, 7, 511] {
        let col: Vec<f64> = train
            .participants()
            .iter()
            .map(|p| p.deep_features.as_ref().unwrap()[j])
            .collect();
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
    }
    let test = zscore_apply(&norm, &split.test).unwrap();
    let raw = split.test.participants()[0].deep_features.as_ref().unwrap()[7];
    let z = test.participants()[0].deep_features.as_ref().unwrap()[7];
    assert!((z - norm.apply_one(7, raw)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_lossless(seed in 0u64..1000, n in 1usize..30, features in any::<bool>()) {
        let cohort = small(n, features, seed);
        let back = parse_cohort(&cohort.to_csv(), &ColumnMap::default()).unwrap();
        prop_assert_eq!(back.participants(), cohort.participants());
    }

    #[test]
    fn split_is_a_seeded_partition(seed in 0u64..1000, n in 1usize..200) {
        let cohort = small(n, false, 0);
        let split = split_cohort(&cohort, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(split.train.len() + split.dev.len() + split.test.len(), n);
        let ids: HashSet<&str> = split.train.ids().chain(split.dev.ids()).chain(split.test.ids()).collect();
        prop_assert_eq!(ids.len(), n);
        let again = split_cohort(&cohort, SplitRatios::default(), seed).unwrap();
        prop_assert_eq!(again.test.participants(), split.test.participants());
    }
}
