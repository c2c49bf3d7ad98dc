use mugscreen::grouping::{adaptive_grouping, derive_trial_rng, random_grouping};
use mugscreen::metrics::{aggregate, TrialRecord};
use mugscreen::problem::normalize_matrix;
use mugscreen::screening::Method;
use mugscreen::{intersect_supports, Grouping, SupportSet};
use ndarray::Array2;
use proptest::prelude::*;

fn assert_partition(g: &Grouping, p: usize, m: usize) {
    let mut all: Vec<usize> = g.groups().iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..p).collect::<Vec<_>>());
    assert!(g.groups().iter().all(|grp| !grp.is_empty() && grp.len() <= m));
}

proptest! {
    #[test]
    fn random_groupings_partition(p in 1usize..200, m in 1usize..8, seed in any::<u64>()) {
        let g = random_grouping(p, m, &mut derive_trial_rng(seed, 0, 0));
        assert_partition(&g, p, m);
        prop_assert_eq!(g.d(), p.div_ceil(m));
    }

    #[test]
    fn adaptive_groupings_partition(
        p in 2usize..150,
        m in 1usize..6,
        picks in proptest::collection::vec(any::<prop::sample::Index>(), 0..40),
        seed in any::<u64>(),
    ) {
        let current = SupportSet::from_indices(picks.iter().map(|i| i.index(p)));
        let g = adaptive_grouping(p, m, &current, &mut derive_trial_rng(seed, 0, 1));
        assert_partition(&g, p, m);
        if p - current.len() >= current.len() * (m - 1) {
            for grp in g.groups() {
                prop_assert!(grp.iter().filter(|&&j| current.contains(j)).count() <= 1);
            }
        }
    }

    #[test]
    fn groupings_are_seed_deterministic(p in 1usize..100, m in 1usize..5, seed in any::<u64>()) {
        let a = random_grouping(p, m, &mut derive_trial_rng(seed, 3, 4));
        let b = random_grouping(p, m, &mut derive_trial_rng(seed, 3, 4));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn normalization_is_idempotent(values in proptest::collection::vec(0.1f64..10.0, 12)) {
        let x = Array2::from_shape_vec((4, 3), values).unwrap();
        let (once, _) = normalize_matrix(x).unwrap();
        let (twice, _) = normalize_matrix(once.clone()).unwrap();
        for (a, b) in once.iter().zip(twice.iter()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn intersection_is_order_invariant_and_shrinking(
        sets in proptest::collection::vec(proptest::collection::btree_set(0usize..50, 0..30), 1..6),
    ) {
        let sets: Vec<SupportSet> = sets.into_iter().map(SupportSet::from_indices).collect();
        let all = intersect_supports(&sets).unwrap();
        let mut rev = sets.clone();
        rev.reverse();
        prop_assert_eq!(&all, &intersect_supports(&rev).unwrap());
        for s in &sets {
            prop_assert!(all.is_subset_of(s));
        }
    }

    #[test]
    fn aggregation_ignores_record_order(fprs in proptest::collection::vec(0.0f64..1.0, 1..20), shift in 0usize..20) {
        let records: Vec<TrialRecord> = fprs
            .iter()
            .enumerate()
            .map(|(t, &f)| TrialRecord {
                method: Method::Mug,
                k_groupings: 5,
                m: 2,
                trial: t,
                cardinality: 4,
                fpr: f,
                fnr: 0.0,
                contains_truth: true,
                wall_time_s: 0.0,
                beta_min: None,
            })
            .collect();
        let mut rotated = records.clone();
        rotated.rotate_left(shift % records.len());
        let a = aggregate(&records).unwrap();
        let b = aggregate(&rotated).unwrap();
        prop_assert_eq!(a.len(), 1);
        prop_assert!((a[0].fpr_mean - b[0].fpr_mean).abs() <= 1e-12);
        prop_assert!((a[0].fpr_std - b[0].fpr_std).abs() <= 1e-12);
    }
}
