//! Listing SFS(2) lumpings.
//!
//! The exhaustive search starts from the admissible pairs (pairs whose
//! standalone merge is SFS(2)) and repeatedly merges blocks of the current
//! SFS(2) partitions along admissible pairs, keeping only SFS(2) results.
//! Every partition that fails SFS(2) has only failing coarsenings, so the
//! search never has to look past a failure.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::infotheory;
use crate::markov::{AdjacencyStructure, StationaryDistribution, TransitionModel};
use crate::partition::{Partition, SetPartitions};
use crate::scalar::Probability;
use crate::sfs::{is_sfs2, satisfies_sfs2, satisfies_sfs2_at};

/// Largest state count accepted by [`brute_force_sfs2`] (Bell(12) ~ 4.2e6).
pub const BRUTE_FORCE_MAX_STATES: usize = 12;

/// Unordered state pairs `(i, j)`, `i < j`, whose pairwise merge is SFS(2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissiblePairSet {
    n_states: usize,
    pairs: Vec<(usize, usize)>,
}

impl AdmissiblePairSet {
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.pairs.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// `N (N - 1) / 2`.
    pub fn possible_pairs(&self) -> usize {
        self.n_states * self.n_states.saturating_sub(1) / 2
    }

    /// The partitions obtained by merging exactly one admissible pair.
    pub fn partitions(&self) -> Vec<Partition> {
        let id = Partition::identity(self.n_states);
        self.pairs
            .iter()
            .map(|&(a, b)| id.merge_states(a, b))
            .collect()
    }
}

/// Admissible pairs in `O(sum_i d_i^2 + N^2)`.
///
/// Merging `{i, j}` (all else singletons) violates SFS(2) exactly when some
/// state reaches both `i` and `j`, or when `i` and `j` are both reachable
/// from the merged block itself.
pub fn admissible_pairs(adj: &AdjacencyStructure) -> AdmissiblePairSet {
    let n = adj.n_states();
    let mut conflict = vec![false; n * n];
    for x in 0..n {
        let succ = adj.successors(x);
        for (k, &a) in succ.iter().enumerate() {
            for &b in &succ[k + 1..] {
                conflict[a * n + b] = true;
            }
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if conflict[i * n + j] {
                continue;
            }
            let reaches_i = adj.has_edge(i, i) || adj.has_edge(j, i);
            let reaches_j = adj.has_edge(i, j) || adj.has_edge(j, j);
            if !(reaches_i && reaches_j) {
                pairs.push((i, j));
            }
        }
    }
    AdmissiblePairSet { n_states: n, pairs }
}

/// Admissible pairs by running [`is_sfs2`] on every pairwise merge.
pub fn admissible_pairs_by_merge(adj: &AdjacencyStructure) -> AdmissiblePairSet {
    let n = adj.n_states();
    let id = Partition::identity(n);
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| is_sfs2(adj, &id.merge_states(i, j)).holds)
        .collect();
    AdmissiblePairSet { n_states: n, pairs }
}

/// One level of the exhaustive search: partitions with `N - n_merges` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationLevel {
    pub n_merges: usize,
    /// Sorted, duplicate free.
    pub partitions: Vec<Partition>,
}

impl EnumerationLevel {
    pub fn n_blocks(&self) -> usize {
        self.partitions.first().map_or(0, |p| p.n_blocks())
    }
}

/// Every SFS(2) partition other than the identity, grouped by number of merges.
pub fn list_all_sfs2(adj: &AdjacencyStructure) -> Vec<EnumerationLevel> {
    list_all_sfs2_with(adj, &admissible_pairs(adj), 1)
}

/// [`list_all_sfs2`] with explicit admissible pairs and worker count. Each
/// level is computed from the previous one; with `threads > 1` the parents of
/// a level are split among workers and their results are sorted and
/// deduplicated at the level boundary, so the output does not depend on
/// `threads`.
pub fn list_all_sfs2_with(
    adj: &AdjacencyStructure,
    pairs: &AdmissiblePairSet,
    threads: usize,
) -> Vec<EnumerationLevel> {
    let first: BTreeSet<Partition> = pairs
        .partitions()
        .into_iter()
        .filter(|p| satisfies_sfs2(adj, p))
        .collect();
    let mut levels = Vec::new();
    let mut current: Vec<Partition> = first.into_iter().collect();
    let pool = (threads > 1).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
    });
    let mut n_merges = 1;
    while !current.is_empty() {
        let mut next: Vec<Partition> = match &pool {
            Some(pool) => pool.install(|| {
                let mut v: Vec<Partition> = current
                    .par_iter()
                    .flat_map_iter(|h| coarsenings(adj, pairs, h))
                    .collect();
                v.par_sort_unstable();
                v
            }),
            None => {
                let mut v: Vec<Partition> = current
                    .iter()
                    .flat_map(|h| coarsenings(adj, pairs, h))
                    .collect();
                v.sort_unstable();
                v
            }
        };
        next.dedup();
        levels.push(EnumerationLevel {
            n_merges,
            partitions: current,
        });
        current = next;
        n_merges += 1;
    }
    levels
}

/// SFS(2) partitions obtained from the SFS(2) partition `h` by one
/// admissible merge.
fn coarsenings(
    adj: &AdjacencyStructure,
    pairs: &AdmissiblePairSet,
    h: &Partition,
) -> BTreeSet<Partition> {
    let mut tried = BTreeSet::new();
    let mut found = BTreeSet::new();
    for &(a, b) in pairs.pairs() {
        let (ba, bb) = (h.block_of(a), h.block_of(b));
        if ba == bb || !tried.insert((ba.min(bb), ba.max(bb))) {
            continue;
        }
        let g = h.merge_states(a, b);
        if satisfies_sfs2_at(adj, &g, g.block_of(a)) {
            found.insert(g);
        }
    }
    found
}

/// Exhaustive oracle: all SFS(2) partitions with at least
/// `max(min_blocks, 2)` blocks, identity included.
pub fn brute_force_sfs2(
    adj: &AdjacencyStructure,
    min_blocks: usize,
) -> Result<BTreeSet<Partition>> {
    let n = adj.n_states();
    if n > BRUTE_FORCE_MAX_STATES {
        return Err(Error::SizeGuard {
            n,
            max: BRUTE_FORCE_MAX_STATES,
        });
    }
    let floor = min_blocks.max(2);
    Ok(SetPartitions::new(n)
        .filter(|p| p.n_blocks() >= floor && satisfies_sfs2(adj, p))
        .collect())
}

/// Criterion used to pick the best partition of a level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Objective {
    /// Entropy of the stationary block distribution (smaller is better).
    #[default]
    MarginalEntropy,
    /// `H-rate(X) - H(Y3 | Y1 Y2)` (smaller is better).
    EntropyRateGap,
}

impl Objective {
    pub fn score<T: Probability>(
        self,
        model: &TransitionModel<T>,
        mu: &StationaryDistribution<T>,
        p: &Partition,
    ) -> f64 {
        match self {
            Objective::MarginalEntropy => infotheory::marginal_entropy(mu, p).as_f64(),
            Objective::EntropyRateGap => {
                let report = infotheory::lumped_entropy_report(model, mu, p);
                report.h_cond_rate.as_f64()
            }
        }
    }
}

/// Keeps only the best SFS(2) coarsening at every level and descends until
/// no admissible merge passes. Returns the chosen partition per level.
pub fn greedy_sfs2<T: Probability>(
    model: &TransitionModel<T>,
    objective: Objective,
) -> Result<Vec<Partition>> {
    let mu = model.stationary()?;
    let pairs = admissible_pairs(model.adjacency());
    Ok(descend(model, &mu, &pairs, objective, |live| live.to_vec()))
}

/// Like [`greedy_sfs2`] but each level only evaluates `sample_size` admissible
/// pairs (among those still joining two distinct blocks), drawn without
/// replacement from a ChaCha8 stream seeded with `seed`. Stops at the first
/// level where no sampled merge is SFS(2).
pub fn randomized_sfs2<T: Probability>(
    model: &TransitionModel<T>,
    objective: Objective,
    sample_size: usize,
    seed: u64,
) -> Result<Vec<Partition>> {
    if sample_size == 0 {
        return Err(Error::InvalidInput("sample size must be at least 1".into()));
    }
    let mu = model.stationary()?;
    let pairs = admissible_pairs(model.adjacency());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(descend(model, &mu, &pairs, objective, |live| {
        if sample_size >= live.len() {
            live.to_vec()
        } else {
            let mut picked = index::sample(&mut rng, live.len(), sample_size).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|k| live[k]).collect()
        }
    }))
}

fn descend<T, S>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    pairs: &AdmissiblePairSet,
    objective: Objective,
    mut select: S,
) -> Vec<Partition>
where
    T: Probability,
    S: FnMut(&[(usize, usize)]) -> Vec<(usize, usize)>,
{
    let adj = model.adjacency();
    let mut path = Vec::new();
    let mut current = Partition::identity(adj.n_states());
    loop {
        let live: Vec<(usize, usize)> = pairs
            .pairs()
            .iter()
            .copied()
            .filter(|&(a, b)| current.block_of(a) != current.block_of(b))
            .collect();
        if live.is_empty() {
            break;
        }
        let candidates: BTreeSet<(Partition, usize)> = select(&live)
            .into_iter()
            .map(|(a, b)| {
                let g = current.merge_states(a, b);
                let block = g.block_of(a);
                (g, block)
            })
            .collect();
        let best = candidates
            .into_iter()
            .filter(|(g, block)| satisfies_sfs2_at(adj, g, *block))
            .map(|(g, _)| g)
            .map(|g| (objective.score(model, mu, &g), g))
            .min_by(|(sa, ga), (sb, gb)| sa.total_cmp(sb).then_with(|| ga.cmp(gb)));
        match best {
            Some((_, g)) => {
                path.push(g.clone());
                current = g;
            }
            None => break,
        }
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{full_adjacency, toy_adjacency, toy_model, toy_solution};

    fn one_based(pairs: &AdmissiblePairSet) -> Vec<(usize, usize)> {
        pairs.pairs().iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }

    #[test]
    fn toy_admissible_pairs() {
        let adj = toy_adjacency();
        let pairs = admissible_pairs(&adj);
        assert_eq!(
            one_based(&pairs),
            vec![(1, 2), (1, 3), (1, 5), (2, 3), (4, 5)]
        );
        assert_eq!(pairs, admissible_pairs_by_merge(&adj));
        assert_eq!(pairs.possible_pairs(), 15);
    }

    #[test]
    fn full_graph_has_no_admissible_pairs() {
        let adj = full_adjacency(5);
        assert!(admissible_pairs(&adj).is_empty());
        assert!(list_all_sfs2(&adj).is_empty());
    }

    #[test]
    fn two_cycle_pair_is_not_admissible() {
        // the merged block reaches both of its members
        let adj = AdjacencyStructure::from_successors(vec![vec![1], vec![0]]).unwrap();
        assert!(admissible_pairs(&adj).is_empty());
        assert_eq!(admissible_pairs(&adj), admissible_pairs_by_merge(&adj));
    }

    #[test]
    fn toy_levels_match_table() {
        let levels = list_all_sfs2(&toy_adjacency());
        let counts: Vec<(usize, usize)> = levels
            .iter()
            .map(|l| (l.n_blocks(), l.partitions.len()))
            .collect();
        assert_eq!(counts, vec![(5, 5), (4, 4), (3, 1)]);
        assert_eq!(levels[2].partitions, vec![toy_solution()]);
    }

    #[test]
    fn parallel_levels_equal_serial() {
        let adj = toy_adjacency();
        let pairs = admissible_pairs(&adj);
        assert_eq!(
            list_all_sfs2_with(&adj, &pairs, 1),
            list_all_sfs2_with(&adj, &pairs, 4)
        );
    }

    #[test]
    fn brute_force_on_toy_and_full() {
        let adj = toy_adjacency();
        let brute = brute_force_sfs2(&adj, 3).unwrap();
        assert_eq!(brute.len(), 11);
        assert!(brute.contains(&Partition::identity(6)));
        let full = brute_force_sfs2(&full_adjacency(3), 0).unwrap();
        assert_eq!(
            full.into_iter().collect::<Vec<_>>(),
            vec![Partition::identity(3)]
        );
        assert!(matches!(
            brute_force_sfs2(&full_adjacency(13), 2),
            Err(Error::SizeGuard { n: 13, .. })
        ));
    }

    #[test]
    fn greedy_on_toy_reaches_three_blocks() {
        let path = greedy_sfs2(&toy_model::<f64>(), Objective::MarginalEntropy).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path.last().unwrap(), &toy_solution());
        let gap_path = greedy_sfs2(&toy_model::<f64>(), Objective::EntropyRateGap).unwrap();
        assert_eq!(gap_path.last().unwrap(), &toy_solution());
    }

    #[test]
    fn randomized_is_deterministic_and_exhaustive_sampling_is_greedy() {
        let model = toy_model::<f64>();
        let a = randomized_sfs2(&model, Objective::MarginalEntropy, 2, 7).unwrap();
        let b = randomized_sfs2(&model, Objective::MarginalEntropy, 2, 7).unwrap();
        assert_eq!(a, b);
        let all = randomized_sfs2(&model, Objective::MarginalEntropy, 5, 1).unwrap();
        assert_eq!(
            all,
            greedy_sfs2(&model, Objective::MarginalEntropy).unwrap()
        );
        assert!(randomized_sfs2(&model, Objective::MarginalEntropy, 0, 1).is_err());
    }
}
