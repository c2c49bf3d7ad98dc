//! Construction of the groupings used by each multiple-grouping iteration.
//!
//! Two strategies are provided. A *random* grouping shuffles the variables and
//! cuts them into consecutive blocks. An *adaptive* grouping looks at the
//! current estimate `S`: each retained variable is placed in its own group
//! together with up to `m_max - 1` variables that were already discarded, so a
//! retained-but-null variable gets a chance to be dropped alongside known
//! nulls. Whatever is left of the discarded variables is grouped among itself.
//!
//! Randomness comes from a ChaCha20 stream keyed by a SHA-256 digest of
//! `(master_seed, trial, iteration)`, so every draw is reproducible on any
//! platform and independent of thread scheduling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::partition::Grouping;
use crate::support::SupportSet;

/// The random number generator used throughout the crate.
pub type TrialRng = ChaCha20Rng;

/// How groupings are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingKind {
    Random,
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupingStrategy {
    pub kind: GroupingKind,
    pub m_max: usize,
    pub seed: u64,
}

/// Derives an independent generator for one `(trial, iteration)` cell of an
/// experiment.
pub fn derive_trial_rng(master_seed: u64, trial: u64, iteration: u64) -> TrialRng {
    let mut hasher = Sha256::new();
    hasher.update(b"mugscreen/trial-rng/v1");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(trial.to_le_bytes());
    hasher.update(iteration.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha20Rng::from_seed(seed)
}

/// Shuffles `0..p` and cuts consecutive blocks of `m_max`; the final block
/// may be smaller.
pub fn random_grouping<R: rand::Rng + ?Sized>(p: usize, m_max: usize, rng: &mut R) -> Grouping {
    let m_max = m_max.max(1);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let groups = order.chunks(m_max).map(<[usize]>::to_vec).collect();
    Grouping::new(groups, p, m_max).expect("shuffled blocks always form a partition")
}

/// Adaptive grouping around the current estimate.
///
/// Each element of `current_estimate` gets its own group, padded with up to
/// `m_max - 1` elements of the complement drawn without replacement. If the
/// complement runs out, the remaining estimate elements become singletons, so
/// no group ever holds two estimate elements. Leftover complement elements
/// are grouped in blocks of at most `m_max`.
pub fn adaptive_grouping<R: rand::Rng + ?Sized>(
    p: usize,
    m_max: usize,
    current_estimate: &SupportSet,
    rng: &mut R,
) -> Grouping {
    let m_max = m_max.max(1);
    let mut retained: Vec<usize> = current_estimate.iter().filter(|&j| j < p).collect();
    let mut pool: Vec<usize> = current_estimate.complement(p).indices().to_vec();
    retained.shuffle(rng);
    pool.shuffle(rng);

    let mut groups = Vec::with_capacity(retained.len() + pool.len() / m_max + 1);
    let mut next = 0;
    for &v in &retained {
        let take = (m_max - 1).min(pool.len() - next);
        let mut group = Vec::with_capacity(1 + take);
        group.push(v);
        group.extend_from_slice(&pool[next..next + take]);
        next += take;
        groups.push(group);
    }
    groups.extend(pool[next..].chunks(m_max).map(<[usize]>::to_vec));
    Grouping::new(groups, p, m_max).expect("adaptive construction always forms a partition")
}

impl GroupingStrategy {
    /// Draws the grouping for one iteration given the current estimate.
    pub fn draw<R: rand::Rng + ?Sized>(&self, p: usize, current: &SupportSet, rng: &mut R) -> Grouping {
        match self.kind {
            GroupingKind::Random => random_grouping(p, self.m_max, rng),
            GroupingKind::Adaptive => adaptive_grouping(p, self.m_max, current, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn sorted_concat(g: &Grouping) -> Vec<usize> {
        let mut all: Vec<usize> = g.groups().iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    fn first_draws(mut rng: TrialRng) -> Vec<u64> {
        (0..100).map(|_| rng.next_u64()).collect()
    }

    #[test]
    fn eight_variables_in_pairs() {
        let mut rng = derive_trial_rng(1, 0, 0);
        let g = random_grouping(8, 2, &mut rng);
        assert_eq!(g.d(), 4);
        assert!(g.groups().iter().all(|grp| grp.len() == 2));
        assert_eq!(sorted_concat(&g), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn unit_blocks_are_singletons() {
        for seed in 0..5 {
            let g = random_grouping(6, 1, &mut derive_trial_rng(seed, 0, 0));
            assert_eq!(g.d(), 6);
            assert_eq!(g.largest_group(), 1);
        }
    }

    #[test]
    fn seven_variables_in_pairs_leave_one_single() {
        let g = random_grouping(7, 2, &mut derive_trial_rng(3, 0, 0));
        let mut sizes: Vec<usize> = g.groups().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 2, 2]);
    }

    #[test]
    fn adaptive_full_estimate_gives_singletons() {
        let g = adaptive_grouping(5, 3, &SupportSet::full(5), &mut derive_trial_rng(0, 0, 0));
        assert_eq!(g.d(), 5);
        assert_eq!(g.largest_group(), 1);
    }

    #[test]
    fn adaptive_empty_estimate_matches_random_draw() {
        // With nothing retained only the complement branch runs: one shuffle
        // of 0..p followed by blocks, consuming the stream like the random
        // strategy after an (empty) shuffle of the estimate.
        let g = adaptive_grouping(10, 3, &SupportSet::empty(), &mut derive_trial_rng(9, 1, 2));
        let r = random_grouping(10, 3, &mut derive_trial_rng(9, 1, 2));
        assert_eq!(g, r);
    }

    #[test]
    fn adaptive_structure_on_eight_variables() {
        let current = SupportSet::from_one_based(&[1, 5, 8]).unwrap();
        for seed in 0..20 {
            let g = adaptive_grouping(8, 2, &current, &mut derive_trial_rng(seed, 0, 0));
            assert_eq!(g.d(), 4);
            assert_eq!(sorted_concat(&g), (0..8).collect::<Vec<_>>());
            let mut mixed = 0;
            let mut pure = 0;
            for grp in g.groups() {
                assert_eq!(grp.len(), 2);
                let hits = grp.iter().filter(|&&j| current.contains(j)).count();
                match hits {
                    1 => mixed += 1,
                    0 => pure += 1,
                    _ => panic!("two retained variables share a group: {grp:?}"),
                }
            }
            assert_eq!((mixed, pure), (3, 1));
        }
    }

    #[test]
    fn adaptive_short_complement_leaves_singletons() {
        // Four retained, two discarded, m = 2: two mixed pairs, two singletons.
        let current = SupportSet::from_indices([0, 1, 2, 3]);
        let g = adaptive_grouping(6, 2, &current, &mut derive_trial_rng(4, 0, 0));
        let mut sizes: Vec<usize> = g.groups().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 2, 2]);
        for grp in g.groups() {
            assert!(grp.iter().filter(|&&j| current.contains(j)).count() <= 1);
        }
    }

    #[test]
    fn rng_is_deterministic_and_separated() {
        assert_eq!(first_draws(derive_trial_rng(7, 3, 5)), first_draws(derive_trial_rng(7, 3, 5)));
        assert_ne!(first_draws(derive_trial_rng(7, 3, 5)), first_draws(derive_trial_rng(7, 3, 6)));
        assert_ne!(first_draws(derive_trial_rng(7, 3, 5)), first_draws(derive_trial_rng(8, 3, 5)));
        assert_ne!(first_draws(derive_trial_rng(7, 3, 5)), first_draws(derive_trial_rng(7, 4, 5)));
    }

    #[test]
    fn rng_stream_is_pinned() {
        // Guards cross-platform stability of the derivation.
        let mut rng = derive_trial_rng(0, 0, 0);
        let a = rng.next_u64();
        let mut again = derive_trial_rng(0, 0, 0);
        assert_eq!(a, again.next_u64());
        assert_eq!(a, PINNED_FIRST_DRAW);
    }

    const PINNED_FIRST_DRAW: u64 = 11090088430901756143;

    proptest! {
        #[test]
        fn groupings_are_partitions(
            p in 1usize..60,
            m in 1usize..6,
            seed in any::<u64>(),
            picks in proptest::collection::vec(0usize..60, 0..40),
        ) {
            let mut rng = derive_trial_rng(seed, 0, 0);
            let r = random_grouping(p, m, &mut rng);
            prop_assert_eq!(sorted_concat(&r), (0..p).collect::<Vec<_>>());
            prop_assert!(r.largest_group() <= m);

            let current = SupportSet::from_indices(picks.into_iter().filter(|&j| j < p));
            let a = adaptive_grouping(p, m, &current, &mut rng);
            prop_assert_eq!(sorted_concat(&a), (0..p).collect::<Vec<_>>());
            prop_assert!(a.largest_group() <= m);
            for grp in a.groups() {
                prop_assert!(grp.iter().filter(|&&j| current.contains(j)).count() <= 1);
            }
        }
    }
}
