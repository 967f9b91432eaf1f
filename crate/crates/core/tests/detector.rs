use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tailbreak_core::changepoints::{
    batch_detect, calibrate_thresholds, calibrate_thresholds_cached, mann_whitney_statistic, max_statistic,
    sequential_detect, sequential_detect_transformed, DetectorError, MannWhitneyWindow,
};
use tailbreak_core::{DetectorConfig, ThresholdTable};
use tailbreak_oracles as oracle;

fn normal_sample(seed: u64, n: usize, shift_at: usize, shift: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|i| nd.sample(&mut rng) + if i >= shift_at { shift } else { 0.0 }).collect()
}

fn default_cfg() -> DetectorConfig {
    DetectorConfig::default()
}

proptest! {
    #[test]
    fn statistic_matches_oracle(x in prop::collection::vec(-4i32..4, 4..40), k in 2usize..38) {
        // Coarse integer values exercise the midrank path.
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        prop_assume!(k <= x.len() - 2);
        let got = mann_whitney_statistic(&x, k).unwrap();
        prop_assert!((got - oracle::mann_whitney(&x, k)).abs() < 1e-12);
    }

    #[test]
    fn incremental_window_matches_batch(x in prop::collection::vec(-100.0..100.0f64, 4..80)) {
        let mut w = MannWhitneyWindow::new();
        for (i, &v) in x.iter().enumerate() {
            w.push(v);
            prop_assert_eq!(w.max_statistic(), max_statistic(&x[..=i]));
        }
    }

    #[test]
    fn monotone_transform_keeps_statistic(x in prop::collection::vec(-3.0..3.0f64, 4..60), a in 0.1..5.0f64) {
        let y: Vec<f64> = x.iter().map(|v| (a * v).exp() + v.powi(3)).collect();
        prop_assert_eq!(max_statistic(&x), max_statistic(&y));
    }
}

#[test]
fn statistic_examples_and_errors() {
    assert_eq!(mann_whitney_statistic(&[1.0, 2.0, 2.0, 1.0], 2).unwrap(), 0.0);
    let d = mann_whitney_statistic(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
    assert!((d - 1.549).abs() < 1e-3);
    assert!(matches!(mann_whitney_statistic(&[1.0, 2.0, 3.0, 4.0], 1), Err(DetectorError::SplitOutOfRange { .. })));
    assert!(matches!(mann_whitney_statistic(&[1.0, 2.0, 3.0], 2), Err(DetectorError::InsufficientData { .. })));
}

#[test]
fn batch_locates_large_shift() {
    let cfg = default_cfg();
    let hits = (0..200)
        .filter(|&s| {
            let x = normal_sample(10_000 + s, 100, 50, 5.0);
            matches!(batch_detect(&x, 0.05, &cfg).unwrap(), Some(d) if (45..=55).contains(&d.location))
        })
        .count();
    assert!(hits >= 190, "located {hits}/200");
}

#[test]
fn batch_null_rate_near_alpha() {
    let cfg = default_cfg();
    let alarms = (0..2000)
        .filter(|&s| batch_detect(&normal_sample(20_000 + s, 200, 200, 0.0), 0.05, &cfg).unwrap().is_some())
        .count();
    let rate = alarms as f64 / 2000.0;
    assert!((0.03..=0.07).contains(&rate), "null rejection rate {rate}");
}

#[test]
fn batch_power_for_three_sigma_shift() {
    let cfg = default_cfg();
    let hits = (0..400)
        .filter(|&s| batch_detect(&normal_sample(30_000 + s, 200, 100, 3.0), 0.05, &cfg).unwrap().is_some())
        .count();
    assert!(hits as f64 / 400.0 >= 0.95, "power {hits}/400");
}

#[test]
fn batch_degenerate_inputs() {
    let cfg = default_cfg();
    assert_eq!(batch_detect(&[1.0; 60], 0.05, &cfg).unwrap(), None);
    assert!(matches!(
        batch_detect(&[1.0; 39], 0.05, &cfg),
        Err(DetectorError::InsufficientData { needed: 40, got: 39 })
    ));
}

fn quiet_table() -> ThresholdTable {
    let cfg = DetectorConfig { arl0: 5000.0, burn_in: 20, mc_replications: 10_000, rng_seed: 2020 };
    calibrate_thresholds(&cfg, 300).unwrap()
}

#[test]
fn sequential_behaviour() {
    let table = quiet_table();

    let empty = (0..200)
        .filter(|&s| sequential_detect("n", &normal_sample(40_000 + s, 300, 300, 0.0), &table).is_empty())
        .count();
    assert!(empty >= 180, "null runs without breaks: {empty}/200");

    assert!(sequential_detect("short", &[1.0; 19], &table).is_empty());

    // Breaks are valid for arbitrary input and invariant under monotone maps.
    for s in 0..100 {
        let x = normal_sample(50_000 + s, 300, 150, if s % 2 == 0 { 2.0 } else { 0.0 });
        let b = sequential_detect("x", &x, &table);
        assert!(b.breaks().windows(2).all(|w| w[0] < w[1]));
        assert!(b.breaks().iter().all(|&k| (1..=300).contains(&k)));
        let g = |v: f64| (0.3 * v).exp() * 7.0 - 2.0;
        let y = sequential_detect_transformed("x", &x, &table, |xs| xs.iter().map(|&v| g(v)).collect()).unwrap();
        assert_eq!(b.breaks(), y.breaks());
    }

    let err = sequential_detect_transformed("x", &[0.0; 30], &table, |xs| xs[1..].to_vec());
    assert!(matches!(err, Err(DetectorError::InvalidConfig(_))));
}

#[test]
fn calibration_cache_round_trip() {
    let cfg = DetectorConfig { arl0: 100.0, burn_in: 10, mc_replications: 1000, rng_seed: 11 };
    let dir = tempfile::tempdir().unwrap();
    let (fresh, path) = calibrate_thresholds_cached(&cfg, 50, dir.path()).unwrap();
    assert!(path.exists());
    let written = std::fs::read(&path).unwrap();
    let (cached, same_path) = calibrate_thresholds_cached(&cfg, 50, dir.path()).unwrap();
    assert_eq!(path, same_path);
    assert_eq!(fresh, cached);
    assert_eq!(std::fs::read(&path).unwrap(), written);
    assert_eq!(fresh, calibrate_thresholds(&cfg, 50).unwrap());

    let other_seed = DetectorConfig { rng_seed: 12, ..cfg };
    let (_, other_path) = calibrate_thresholds_cached(&other_seed, 50, dir.path()).unwrap();
    assert_ne!(path, other_path);
}

#[test]
fn depletion_is_reported() {
    // With arl0 = 1000 only 1000 replications exist, so survivors drop below
    // the 1000 needed at the second step.
    let cfg = DetectorConfig { arl0: 1000.0, burn_in: 10, mc_replications: 1000, rng_seed: 1 };
    assert!(matches!(calibrate_thresholds(&cfg, 40), Err(DetectorError::CalibrationQuality { .. })));
}
