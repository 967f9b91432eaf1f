use proptest::prelude::*;
use tailbreak_core::market_data::{Panel, SeriesKind};
use tailbreak_core::tails::{
    extremity_distance_matrix, restrict_two_sided, restrict_upper, restricted_mean, wasserstein1, TailError,
};
use tailbreak_core::{RestrictedMeasure, TailKind};
use tailbreak_oracles as oracle;

fn uniform(xs: &[f64], mass: f64) -> RestrictedMeasure {
    let w = mass / xs.len() as f64;
    RestrictedMeasure::from_atoms(xs.iter().map(|&x| (x, w)).collect(), TailKind::TwoSided).unwrap()
}

fn weighted(atoms: &[(f64, f64)], mass: f64) -> RestrictedMeasure {
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let scaled = atoms.iter().map(|&(x, w)| (x, w / total * mass)).collect();
    RestrictedMeasure::from_atoms(scaled, TailKind::TwoSided).unwrap()
}

fn locations() -> impl Strategy<Value = f64> {
    -50.0..50.0f64
}

fn atom_sets(max: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((locations(), 0.01..1.0f64), 1..=max)
}

fn same_mass(a: &RestrictedMeasure, b: &RestrictedMeasure) -> RestrictedMeasure {
    // Rescale b's weights so the masses agree bit for bit.
    let atoms: Vec<(f64, f64)> = b.atoms().to_vec();
    weighted(&atoms, a.total_mass())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_assignment_oracle(
        (xs, ys) in (1usize..=6).prop_flat_map(|k| (
            prop::collection::vec(locations(), k),
            prop::collection::vec(locations(), k),
        ))
    ) {
        let got = wasserstein1(&uniform(&xs, 0.1), &uniform(&ys, 0.1)).unwrap();
        prop_assert!((got - oracle::assignment_w1(&xs, &ys, 0.1)).abs() < 1e-9);
    }

    #[test]
    fn matches_cdf_integral(a in atom_sets(8), b in atom_sets(8)) {
        let (ma, mb) = (weighted(&a, 0.1), weighted(&b, 0.1));
        let mb = same_mass(&ma, &mb);
        let got = wasserstein1(&ma, &mb).unwrap();
        prop_assert!((got - oracle::cdf_w1(ma.atoms(), mb.atoms())).abs() < 1e-9);
    }

    #[test]
    fn metric_axioms(a in atom_sets(8), b in atom_sets(8), c in atom_sets(8)) {
        let ma = weighted(&a, 0.1);
        let (mb, mc) = (same_mass(&ma, &weighted(&b, 0.1)), same_mass(&ma, &weighted(&c, 0.1)));
        let ab = wasserstein1(&ma, &mb).unwrap();
        let ba = wasserstein1(&mb, &ma).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert_eq!(wasserstein1(&ma, &ma).unwrap(), 0.0);
        let ac = wasserstein1(&ma, &mc).unwrap();
        let cb = wasserstein1(&mc, &mb).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn translation_covariance(a in atom_sets(8), b in atom_sets(8), c in -100.0..100.0f64) {
        let ma = weighted(&a, 0.1);
        let mb = same_mass(&ma, &weighted(&b, 0.1));
        let shift = |m: &RestrictedMeasure| {
            RestrictedMeasure::from_atoms(m.atoms().iter().map(|&(x, w)| (x + c, w)).collect(), TailKind::TwoSided)
                .unwrap()
        };
        let before = wasserstein1(&ma, &mb).unwrap();
        let after = wasserstein1(&shift(&ma), &shift(&mb)).unwrap();
        prop_assert!((before - after).abs() < 1e-9);
    }

    #[test]
    fn shift_by_constant(xs in prop::collection::vec(locations(), 20..200), c in -10.0..10.0f64) {
        let ys: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let d = wasserstein1(&restrict_two_sided(&xs, 0.05).unwrap(), &restrict_two_sided(&ys, 0.05).unwrap()).unwrap();
        prop_assert!((d - 0.1 * c.abs()).abs() < 1e-9);
    }

    #[test]
    fn restriction_mass_is_exact(xs in prop::collection::vec(locations(), 20..400)) {
        let two = restrict_two_sided(&xs, 0.05).unwrap();
        let up = restrict_upper(&xs, 0.10).unwrap();
        prop_assert!((two.atoms().iter().map(|a| a.1).sum::<f64>() - 0.1).abs() < 1e-12);
        prop_assert!((up.atoms().iter().map(|a| a.1).sum::<f64>() - 0.1).abs() < 1e-12);
        prop_assert!((two.total_mass() - 0.1).abs() < 1e-12);
        prop_assert!(two.atoms().windows(2).all(|w| w[0].0 <= w[1].0));
    }

    #[test]
    fn restriction_ignores_order(xs in prop::collection::vec(-5i32..5, 20..200), seed in any::<u64>()) {
        // Small integer range forces plenty of ties at the tail boundary.
        let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
        let mut shuffled = xs.clone();
        let mut state = seed;
        for i in (1..shuffled.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (state >> 33) as usize % (i + 1));
        }
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assert_eq!(restrict_two_sided(&shuffled, 0.05).unwrap(), restrict_two_sided(&sorted, 0.05).unwrap());
        prop_assert_eq!(restrict_upper(&shuffled, 0.10).unwrap(), restrict_upper(&sorted, 0.10).unwrap());
    }
}

#[test]
fn worked_examples() {
    let one_to_100: Vec<f64> = (1..=100).map(f64::from).collect();
    let m = restrict_two_sided(&one_to_100, 0.05).unwrap();
    assert!((restricted_mean(&m) - 50.5).abs() < 1e-12);

    let a = uniform(&[0.0], 0.1);
    let b = uniform(&[1.0], 0.1);
    assert_eq!(wasserstein1(&a, &b).unwrap(), 0.1);
    assert_eq!(wasserstein1(&a, &a).unwrap(), 0.0);

    let upper = restrict_upper(&one_to_100, 0.10).unwrap();
    assert!(wasserstein1(&m, &upper).is_ok());
    let thin = uniform(&[0.0], 0.05);
    assert!(matches!(wasserstein1(&m, &thin), Err(TailError::MassMismatch(..))));
}

#[test]
fn matrix_matches_pairwise_calls() {
    let d0 = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let dates: Vec<_> = (0..60).map(|i| d0 + chrono::Days::new(i)).collect();
    let rows: Vec<Vec<f64>> =
        (0..3).map(|r| (0..60).map(|i| ((i * 37 + r * 11) % 23) as f64 * (r + 1) as f64 - 7.0).collect()).collect();
    let tickers = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    let panel = Panel::new(SeriesKind::LogReturn, tickers, dates.clone(), rows.clone()).unwrap();

    for kind in [TailKind::TwoSided, TailKind::Upper] {
        let q = kind.default_fraction();
        let d = extremity_distance_matrix(&panel, kind, q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mi = tailbreak_core::tails::restrict(&rows[i], kind, q).unwrap();
                let mj = tailbreak_core::tails::restrict(&rows[j], kind, q).unwrap();
                assert_eq!(d.get(i, j), wasserstein1(&mi, &mj).unwrap());
            }
        }
    }

    let shifted = Panel::new(
        SeriesKind::LogReturn,
        vec!["A".into(), "B".into()],
        dates.clone(),
        vec![rows[0].clone(), rows[0].iter().map(|x| x - 2.5).collect()],
    )
    .unwrap();
    let d = extremity_distance_matrix(&shifted, TailKind::TwoSided, 0.05).unwrap();
    assert!((d.get(0, 1) - 0.25).abs() < 1e-12);

    let identical =
        Panel::new(SeriesKind::LogReturn, vec!["A".into(), "B".into()], dates, vec![rows[1].clone(); 2]).unwrap();
    let d = extremity_distance_matrix(&identical, TailKind::Upper, 0.10).unwrap();
    assert!(d.matrix().entries().iter().all(|v| *v == 0.0));
}

#[test]
fn insufficient_sample_names_ticker() {
    let d0 = chrono::NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let dates: Vec<_> = (0..10).map(|i| d0 + chrono::Days::new(i)).collect();
    let panel =
        Panel::new(SeriesKind::LogReturn, vec!["AAA".into(), "BBB".into()], dates, vec![vec![0.0; 10], vec![1.0; 10]])
            .unwrap();
    match extremity_distance_matrix(&panel, TailKind::TwoSided, 0.05) {
        Err(TailError::InsufficientSample { ticker, n: 10, .. }) => assert_eq!(ticker, "AAA"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn single_precision_agrees() {
    let xs: Vec<f32> = (0..100).map(|i| (i as f32 * 0.37).sin()).collect();
    let ys: Vec<f32> = xs.iter().map(|x| x * 1.5 + 0.1).collect();
    let d32 = wasserstein1(&restrict_two_sided(&xs, 0.05).unwrap(), &restrict_two_sided(&ys, 0.05).unwrap()).unwrap();
    let x64: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
    let y64: Vec<f64> = ys.iter().map(|&x| f64::from(x)).collect();
    let d64 = wasserstein1(&restrict_two_sided(&x64, 0.05).unwrap(), &restrict_two_sided(&y64, 0.05).unwrap()).unwrap();
    assert!((f64::from(d32) - d64).abs() < 1e-5);
}
