use proptest::prelude::*;
use tailbreak_core::setdist::{break_distance_matrix, break_set_distance, mj_distance, SetDistError};
use tailbreak_core::BreakSet;
use tailbreak_oracles as oracle;

fn bs(ticker: &str, t: usize, b: &[usize]) -> BreakSet {
    BreakSet::new(ticker, b.to_vec(), t).unwrap()
}

/// Series length and a pair of sorted, deduplicated break sets within it.
fn pairs() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..=500).prop_flat_map(|t| {
        let set = prop::collection::btree_set(1..=t, 0..12).prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (Just(t), set.clone(), set)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn agrees_with_oracle((t, a, b) in pairs()) {
        let got: f64 = break_set_distance(&a, &b, t);
        prop_assert!((got - oracle::mj_distance(&a, &b, t)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_and_bounded((t, a, b) in pairs()) {
        let ab: f64 = break_set_distance(&a, &b, t);
        prop_assert_eq!(ab, break_set_distance(&b, &a, t));
        prop_assert!((0.0..1.0).contains(&ab));
        prop_assert_eq!(break_set_distance::<f64>(&a, &a, t), 0.0);
    }

    #[test]
    fn doubling_time_is_neutral((t, a, b) in pairs()) {
        let double = |s: &[usize]| s.iter().map(|x| 2 * x).collect::<Vec<_>>();
        let before: f64 = break_set_distance(&a, &b, t);
        let after: f64 = break_set_distance(&double(&a), &double(&b), 2 * t);
        prop_assert!((before - after).abs() < 1e-15);
    }

    #[test]
    fn singletons((a, b, t) in (1usize..500, 1usize..500, 500usize..1000)) {
        let d: f64 = break_set_distance(&[a], &[b], t);
        prop_assert!((d - a.abs_diff(b) as f64 / t as f64).abs() < 1e-15);
        prop_assert!(d <= 1.0 - 1.0 / t as f64);
    }
}

#[test]
fn worked_examples() {
    assert_eq!(mj_distance::<f64>(&bs("a", 100, &[10, 50]), &bs("b", 100, &[10, 50])).unwrap(), 0.0);
    assert_eq!(mj_distance::<f64>(&bs("a", 100, &[10]), &bs("b", 100, &[20])).unwrap(), 0.1);
    assert_eq!(mj_distance::<f64>(&bs("a", 100, &[10, 90]), &bs("b", 100, &[10])).unwrap(), 0.2);
}

#[test]
fn matrix_entries_are_pairwise_calls() {
    let sets = vec![bs("A", 300, &[40, 120]), bs("B", 300, &[]), bs("C", 300, &[100, 200, 250])];
    let d = break_distance_matrix::<f64>(&sets).unwrap();
    assert_eq!(d.labels(), &["A", "B", "C"]);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(d.get(i, j), mj_distance::<f64>(&sets[i], &sets[j]).unwrap());
        }
    }
    assert_eq!(d.get(0, 1), 0.5);
    assert_eq!(d.get(1, 2), 0.5);

    let same = vec![bs("A", 50, &[5]), bs("B", 50, &[5])];
    assert!(break_distance_matrix::<f64>(&same).unwrap().matrix().entries().iter().all(|v| *v == 0.0));
}

#[test]
fn mismatched_lengths_rejected() {
    let err = mj_distance::<f64>(&bs("A", 100, &[1]), &bs("B", 101, &[1])).unwrap_err();
    assert_eq!(err, SetDistError::LengthMismatch("A".into(), 100, "B".into(), 101));
    assert!(matches!(break_distance_matrix::<f64>(&[bs("A", 100, &[1])]), Err(SetDistError::TooFewSets(1))));
}
