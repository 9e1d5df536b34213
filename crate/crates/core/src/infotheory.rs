//! Entropies of a chain and of its lumped process, preimage counts and
//! trajectory simulation. All entropies are in bits.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::markov::{AdjacencyStructure, StationaryDistribution, TransitionModel};
use crate::partition::Partition;
use crate::scalar::{xlog2x, Probability};
use crate::sfs::satisfies_sfs2;

/// Shortest trace accepted by [`growth_rate_estimate`].
pub const MIN_TRACE_LEN: usize = 100;

/// Saturation value of integer preimage counts, `2^63 - 1`.
pub const COUNT_CAP: u64 = i64::MAX as u64;

/// Entropy of a probability vector.
pub fn entropy_bits<T: Probability, I: IntoIterator<Item = T>>(probs: I) -> T {
    -probs.into_iter().map(xlog2x).sum::<T>()
}

/// Stationary mass of every block.
pub fn block_masses<T: Probability>(mu: &StationaryDistribution<T>, p: &Partition) -> Vec<T> {
    let mut masses = vec![T::zero(); p.n_blocks()];
    for (x, &m) in mu.probs().iter().enumerate() {
        let b = p.block_of(x);
        masses[b] = masses[b] + m;
    }
    masses
}

/// `H(Y)` for the stationary lumped process.
pub fn marginal_entropy<T: Probability>(mu: &StationaryDistribution<T>, p: &Partition) -> T {
    entropy_bits(block_masses(mu, p))
}

pub type BlockTriple = (usize, usize, usize);

/// `Pr(Y1 Y2 Y3 = y1 y2 y3) = sum mu_x1 P_x1x2 P_x2x3` over preimages,
/// accumulated path by path. Only positive entries are present.
pub fn block_triple_distribution<T: Probability>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    p: &Partition,
) -> HashMap<BlockTriple, T> {
    let mut joint = HashMap::new();
    for (x1, &m) in mu.probs().iter().enumerate() {
        let y1 = p.block_of(x1);
        for &(x2, p12) in model.row(x1) {
            let y2 = p.block_of(x2);
            let w = m * p12;
            for &(x3, p23) in model.row(x2) {
                let e = joint
                    .entry((y1, y2, p.block_of(x3)))
                    .or_insert_with(T::zero);
                *e = *e + w * p23;
            }
        }
    }
    joint
}

/// Same distribution as [`block_triple_distribution`], computed through the
/// lifted chain on `(previous block, current state)` pairs: first the
/// forward weights `f(y1, x2) = sum_{x1 in y1} mu_x1 P_x1x2`, then one more
/// transition of the original chain.
pub fn block_triple_distribution_lifted<T: Probability>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    p: &Partition,
) -> HashMap<BlockTriple, T> {
    let mut forward: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (x1, &m) in mu.probs().iter().enumerate() {
        for &(x2, p12) in model.row(x1) {
            let e = forward.entry((p.block_of(x1), x2)).or_insert_with(T::zero);
            *e = *e + m * p12;
        }
    }
    let mut joint = HashMap::new();
    for (&(y1, x2), &f) in &forward {
        let mut onward: BTreeMap<usize, T> = BTreeMap::new();
        for &(x3, p23) in model.row(x2) {
            let e = onward.entry(p.block_of(x3)).or_insert_with(T::zero);
            *e = *e + p23;
        }
        for (y3, q) in onward {
            let e = joint
                .entry((y1, p.block_of(x2), y3))
                .or_insert_with(T::zero);
            *e = *e + f * q;
        }
    }
    joint
}

/// `H(Y3 | Y1 Y2)` from a triple distribution.
pub fn order2_conditional_entropy<T: Probability>(triples: &HashMap<BlockTriple, T>) -> T {
    let mut entries: Vec<(&BlockTriple, &T)> = triples.iter().collect();
    entries.sort_unstable_by_key(|(k, _)| **k);
    let mut pairs: BTreeMap<(usize, usize), T> = BTreeMap::new();
    for (&(y1, y2, _), &q) in &entries {
        let e = pairs.entry((y1, y2)).or_insert_with(T::zero);
        *e = *e + q;
    }
    let h_triple = entropy_bits(entries.iter().map(|(_, &q)| q));
    let h_pair = entropy_bits(pairs.values().copied());
    h_triple - h_pair
}

/// `Pr(Y3 = y3 | Y1 Y2 = y1 y2)` for every realizable conditioning pair,
/// as a dense vector over `y3`.
pub fn conditional_block_distribution<T: Probability>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    p: &Partition,
) -> BTreeMap<(usize, usize), Vec<T>> {
    let m = p.n_blocks();
    let mut cond: BTreeMap<(usize, usize), Vec<T>> = BTreeMap::new();
    for ((y1, y2, y3), q) in block_triple_distribution(model, mu, p) {
        cond.entry((y1, y2)).or_insert_with(|| vec![T::zero(); m])[y3] = q;
    }
    for dist in cond.values_mut() {
        let total: T = dist.iter().copied().sum();
        dist.iter_mut().for_each(|v| *v = *v / total);
    }
    cond
}

/// Entropy accounting of a lumping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropyReport<T> {
    /// Entropy rate of the original chain.
    pub h_rate_x: T,
    /// Entropy of the stationary block distribution.
    pub h_marginal_y: T,
    /// `H(Y3 | Y1 Y2)`; the true rate of `Y` when it is second-order Markov,
    /// otherwise an upper bound on it.
    pub h_rate_y_order2: T,
    /// `h_rate_x - h_rate_y_order2`.
    pub h_cond_rate: T,
    /// Set when the lumping is SFS(2), so `h_rate_y_order2` is the exact rate
    /// and `h_cond_rate` the exact information loss rate.
    pub order2_exact: bool,
}

impl<T: Probability> EntropyReport<T> {
    /// Information preserving within `tol` bits, with an exact order-2 rate.
    pub fn preserved(&self, tol: f64) -> bool {
        self.order2_exact && self.h_cond_rate.abs().as_f64() < tol
    }
}

pub fn lumped_entropy_report<T: Probability>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    p: &Partition,
) -> EntropyReport<T> {
    let h_rate_x = model.entropy_rate(mu);
    let h_rate_y_order2 = order2_conditional_entropy(&block_triple_distribution(model, mu, p));
    EntropyReport {
        h_rate_x,
        h_marginal_y: marginal_entropy(mu, p),
        h_rate_y_order2,
        h_cond_rate: h_rate_x - h_rate_y_order2,
        order2_exact: satisfies_sfs2(model.adjacency(), p),
    }
}

/// Preimage counts `t_1..t_n` of a block sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimageCountTrace {
    /// Counts saturating at [`COUNT_CAP`].
    pub counts: Vec<u64>,
    /// `log2 t_n`, tracked separately in floating point so that it stays
    /// meaningful after the integer counts saturate.
    pub log2_counts: Vec<f64>,
    pub capped: bool,
}

impl PreimageCountTrace {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max(&self) -> u64 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

/// Number of realizable state sequences mapping onto each prefix of `ys`:
/// `c_1(x) = [g(x) = y_1][x in support]`,
/// `c_{t+1}(x') = [g(x') = y_{t+1}] sum_{x -> x'} c_t(x)`, `t_n = sum_x c_n(x)`.
///
/// `support` restricts the first state; `None` means every state (which is
/// the stationary support of an irreducible chain).
pub fn preimage_count(
    adj: &AdjacencyStructure,
    p: &Partition,
    ys: &[usize],
    support: Option<&[bool]>,
) -> Result<PreimageCountTrace> {
    let n = adj.n_states();
    if ys.is_empty() {
        return Err(Error::InvalidInput("block sequence is empty".into()));
    }
    if let Some(&y) = ys.iter().find(|&&y| y >= p.n_blocks()) {
        return Err(Error::InvalidInput(format!("block {y} out of range")));
    }
    let mut exact: Vec<u64> = (0..n)
        .map(|x| u64::from(p.block_of(x) == ys[0] && support.is_none_or(|s| s[x])))
        .collect();
    let mut scaled: Vec<f64> = exact.iter().map(|&c| c as f64).collect();
    let mut log_scale = 0.0f64;
    let mut trace = PreimageCountTrace {
        counts: Vec::with_capacity(ys.len()),
        log2_counts: Vec::with_capacity(ys.len()),
        capped: false,
    };
    let mut next_exact = vec![0u64; n];
    let mut next_scaled = vec![0f64; n];
    for (t, &y) in ys.iter().enumerate() {
        if t > 0 {
            next_exact.iter_mut().for_each(|c| *c = 0);
            next_scaled.iter_mut().for_each(|c| *c = 0.0);
            for x in 0..n {
                if exact[x] == 0 && scaled[x] == 0.0 {
                    continue;
                }
                for &x2 in adj.successors(x) {
                    if p.block_of(x2) == y {
                        next_exact[x2] = next_exact[x2].saturating_add(exact[x]).min(COUNT_CAP);
                        next_scaled[x2] += scaled[x];
                    }
                }
            }
            std::mem::swap(&mut exact, &mut next_exact);
            std::mem::swap(&mut scaled, &mut next_scaled);
        }
        let total_scaled: f64 = scaled.iter().sum();
        if total_scaled == 0.0 {
            return Err(Error::UnrealizableSequence { position: t });
        }
        log_scale += total_scaled.log2();
        scaled.iter_mut().for_each(|c| *c /= total_scaled);
        let total = exact
            .iter()
            .fold(0u64, |acc, &c| acc.saturating_add(c).min(COUNT_CAP));
        if total == COUNT_CAP {
            trace.capped = true;
        }
        trace.counts.push(total);
        trace.log2_counts.push(log_scale);
    }
    Ok(trace)
}

/// Least-squares slope of `log2 t_n` against `n` over the final half of the
/// trace, in bits per symbol.
pub fn growth_rate_estimate(trace: &PreimageCountTrace) -> Result<f64> {
    let len = trace.log2_counts.len();
    if len < MIN_TRACE_LEN {
        return Err(Error::InsufficientData {
            len,
            needed: MIN_TRACE_LEN,
        });
    }
    let start = len / 2;
    let points: Vec<(f64, f64)> = trace.log2_counts[start..]
        .iter()
        .enumerate()
        .map(|(i, &v)| ((start + i + 1) as f64, v))
        .collect();
    let k = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / k;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in &points {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    Ok(sxy / sxx)
}

/// Stationary-start trajectory of length `n` from a ChaCha8 stream seeded
/// with `seed`; states are drawn by inverse CDF.
pub fn simulate<T: Probability>(
    model: &TransitionModel<T>,
    mu: &StationaryDistribution<T>,
    n: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    if n == 0 {
        return xs;
    }
    let initial: Vec<(usize, T)> = mu.probs().iter().copied().enumerate().collect();
    let mut x = sample(&initial, &mut rng);
    xs.push(x);
    for _ in 1..n {
        x = sample(model.row(x), &mut rng);
        xs.push(x);
    }
    xs
}

fn sample<T: Probability, R: Rng>(dist: &[(usize, T)], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(j, p) in dist {
        acc += p.as_f64();
        if u < acc {
            return j;
        }
    }
    dist.iter()
        .rev()
        .find(|(_, p)| *p > T::zero())
        .map_or(0, |e| e.0)
}
