//! Finite, irreducible, aperiodic Markov chains.
//!
//! A [`TransitionModel`] stores the transition matrix sparsely: structural
//! zeros are simply absent, so every stored entry is strictly positive and
//! the [`AdjacencyStructure`] is exactly the set of stored coordinates.

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph;
use crate::scalar::{xlog2x, Probability};

/// Default iteration cap for the power-iteration solvers.
pub const DEFAULT_MAX_ITERATIONS: usize = 100_000;

const SPECTRAL_TOLERANCE: f64 = 1e-10;

/// Directed graph `A[i][j] = [P[i][j] > 0]`, kept as sorted successor and
/// predecessor lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyStructure {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl AdjacencyStructure {
    /// Builds the structure from successor lists. Every state needs at least
    /// one successor; duplicates and out-of-range targets are rejected.
    pub fn from_successors(mut succ: Vec<Vec<usize>>) -> Result<Self> {
        let n = succ.len();
        if n == 0 {
            return Err(Error::InvalidModel("no states".into()));
        }
        let mut pred = vec![Vec::new(); n];
        for (i, row) in succ.iter_mut().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidModel(format!("state {i} has no successor")));
            }
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidModel(format!("duplicate edge in row {i}")));
            }
            if let Some(&j) = row.iter().find(|&&j| j >= n) {
                return Err(Error::InvalidModel(format!("edge {i}->{j} out of range")));
            }
            for &j in row.iter() {
                pred[j].push(i);
            }
        }
        Ok(Self { succ, pred })
    }

    /// Builds the structure from a dense 0/1 matrix.
    pub fn from_dense(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("adjacency matrix is not square".into()));
        }
        Self::from_successors(
            rows.iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &a)| a != 0)
                        .map(|(j, _)| j)
                        .collect()
                })
                .collect(),
        )
    }

    pub fn n_states(&self) -> usize {
        self.succ.len()
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.succ[i]
    }

    pub fn predecessors(&self, j: usize) -> &[usize] {
        &self.pred[j]
    }

    pub fn successor_lists(&self) -> &[Vec<usize>] {
        &self.succ
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.succ[i].binary_search(&j).is_ok()
    }

    pub fn n_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        self.succ.iter().map(Vec::len).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        graph::strongly_connected_components(&self.succ).len() == 1
    }

    /// Period of the graph; only meaningful when irreducible.
    pub fn period(&self) -> usize {
        graph::period(&self.succ)
    }

    /// Checks irreducibility and aperiodicity.
    pub fn check_ergodic(&self) -> Result<()> {
        let components = graph::strongly_connected_components(&self.succ).len();
        if components != 1 {
            return Err(Error::ReducibleChain { components });
        }
        match self.period() {
            1 => Ok(()),
            period => Err(Error::PeriodicChain { period }),
        }
    }

    /// Perron root of `A` via power iteration on `A + I`, bracketed by the
    /// Collatz-Wielandt bounds `min_i (Ax)_i / x_i <= lambda <= max_i (Ax)_i / x_i`.
    pub fn spectral_radius(&self) -> Result<f64> {
        self.spectral_radius_with(DEFAULT_MAX_ITERATIONS)
    }

    pub fn spectral_radius_with(&self, max_iterations: usize) -> Result<f64> {
        let n = self.n_states();
        let mut x = vec![1.0f64; n];
        let mut ax = vec![0.0f64; n];
        let mut gap = f64::INFINITY;
        for _ in 0..max_iterations {
            for (i, row) in self.succ.iter().enumerate() {
                ax[i] = row.iter().map(|&j| x[j]).sum();
            }
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for i in 0..n {
                let r = ax[i] / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            gap = hi - lo;
            if gap <= SPECTRAL_TOLERANCE * hi.max(1.0) {
                return Ok(0.5 * (lo + hi));
            }
            // shifted step keeps every coordinate positive and the iteration primitive
            let mut norm = 0.0f64;
            for i in 0..n {
                x[i] += ax[i];
                norm = norm.max(x[i]);
            }
            if norm == 0.0 || !norm.is_finite() {
                break;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            if x.iter().any(|&v| v < f64::MIN_POSITIVE) {
                break;
            }
        }
        Err(Error::Convergence {
            what: "spectral radius",
            iterations: max_iterations,
            residual: gap,
        })
    }

    /// Number of length-`k` state sequences with positive probability,
    /// `1^T A^(k-1) 1`. Every state has positive stationary mass, so every
    /// walk in the graph is realizable.
    pub fn count_realizable_sequences(&self, k: usize) -> BigUint {
        if k == 0 {
            return BigUint::one();
        }
        let n = self.n_states();
        let mut walks: Vec<BigUint> = vec![BigUint::one(); n];
        for _ in 1..k {
            walks = self
                .succ
                .iter()
                .map(|row| row.iter().fold(BigUint::zero(), |acc, &j| acc + &walks[j]))
                .collect();
        }
        walks.into_iter().fold(BigUint::zero(), |acc, w| acc + w)
    }

    /// Lower bounds on the number of blocks of a lumping.
    pub fn lower_bounds(&self) -> Result<DegreeBounds> {
        let degrees = self.out_degrees();
        Ok(DegreeBounds {
            min_degree: degrees.iter().copied().min().unwrap_or(0),
            max_degree: degrees.iter().copied().max().unwrap_or(0),
            spectral: self.spectral_radius()?,
        })
    }
}

/// `min_degree` and `spectral` bound any information-preserving lumping;
/// `max_degree` bounds SFS(2) lumpings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeBounds {
    pub min_degree: usize,
    pub max_degree: usize,
    pub spectral: f64,
}

/// A validated row-stochastic, irreducible, aperiodic transition matrix.
#[derive(Clone, Debug)]
pub struct TransitionModel<T> {
    rows: Vec<Vec<(usize, T)>>,
    labels: Vec<String>,
    adjacency: AdjacencyStructure,
}

impl<T: Probability> TransitionModel<T> {
    /// Validates and normalizes sparse rows of `(column, probability)`.
    ///
    /// Rows within `T::ROW_SUM_TOLERANCE` of one are renormalized; others are
    /// rejected. Labels default to the 1-based state numbers.
    pub fn new(rows: Vec<Vec<(usize, T)>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::InvalidModel(format!(
                    "{} labels for {n} states",
                    l.len()
                )))
            }
            Some(l) => l,
            None => (1..=n).map(|i| i.to_string()).collect(),
        };
        let mut normalized = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            for &(j, p) in &row {
                if !(p > T::zero() && p <= T::one()) {
                    return Err(Error::InvalidModel(format!(
                        "P[{i}][{j}] = {p} is not in (0, 1]"
                    )));
                }
            }
            row.sort_by_key(|&(j, _)| j);
            let sum: T = row.iter().map(|&(_, p)| p).sum();
            if (sum - T::one()).abs().as_f64() > T::ROW_SUM_TOLERANCE {
                return Err(Error::RowSum {
                    row: i,
                    sum: sum.as_f64(),
                });
            }
            row.iter_mut().for_each(|e| e.1 = e.1 / sum);
            normalized.push(row);
        }
        let adjacency = AdjacencyStructure::from_successors(
            normalized
                .iter()
                .map(|r| r.iter().map(|&(j, _)| j).collect())
                .collect(),
        )?;
        adjacency.check_ergodic()?;
        Ok(Self {
            rows: normalized,
            labels,
            adjacency,
        })
    }

    /// Dense convenience constructor; zeros are dropped.
    pub fn from_dense(matrix: &[Vec<T>], labels: Option<Vec<String>>) -> Result<Self> {
        let n = matrix.len();
        if matrix.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidModel("matrix is not square".into()));
        }
        let rows = matrix
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &p)| p != T::zero())
                    .map(|(j, &p)| (j, p))
                    .collect()
            })
            .collect();
        Self::new(rows, labels)
    }

    /// Uniform transition probabilities on a given adjacency pattern.
    pub fn uniform_on(adjacency: &AdjacencyStructure, labels: Option<Vec<String>>) -> Result<Self> {
        let rows = adjacency
            .successor_lists()
            .iter()
            .map(|row| {
                let p = T::one() / T::from_usize(row.len()).expect("row length fits scalar");
                row.iter().map(|&j| (j, p)).collect()
            })
            .collect();
        Self::new(rows, labels)
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(usize, T)>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn adjacency(&self) -> &AdjacencyStructure {
        &self.adjacency
    }

    /// `P[i][j]`, zero when the edge is absent.
    pub fn prob(&self, i: usize, j: usize) -> T {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or_else(|_| T::zero())
    }

    /// Stationary distribution by power iteration from the uniform vector.
    pub fn stationary(&self) -> Result<StationaryDistribution<T>> {
        self.stationary_with(DEFAULT_MAX_ITERATIONS)
    }

    pub fn stationary_with(&self, max_iterations: usize) -> Result<StationaryDistribution<T>> {
        let n = self.n_states();
        let uniform = T::one() / T::from_usize(n).expect("state count fits scalar");
        let mut mu = vec![uniform; n];
        let mut next = vec![T::zero(); n];
        let mut residual = f64::INFINITY;
        for _ in 0..max_iterations {
            self.left_multiply(&mu, &mut next);
            let total: T = next.iter().copied().sum();
            next.iter_mut().for_each(|v| *v = *v / total);
            residual = mu
                .iter()
                .zip(&next)
                .map(|(&a, &b)| (a - b).abs().as_f64())
                .fold(0.0, f64::max);
            std::mem::swap(&mut mu, &mut next);
            if residual < T::STATIONARY_TOLERANCE {
                return Ok(StationaryDistribution { probs: mu });
            }
        }
        Err(Error::Convergence {
            what: "stationary distribution",
            iterations: max_iterations,
            residual,
        })
    }

    /// `out = v P`.
    pub fn left_multiply(&self, v: &[T], out: &mut [T]) {
        out.iter_mut().for_each(|o| *o = T::zero());
        for (i, row) in self.rows.iter().enumerate() {
            let vi = v[i];
            for &(j, p) in row {
                out[j] = out[j] + vi * p;
            }
        }
    }

    /// Entropy rate in bits per symbol, `-sum_i mu_i sum_j P_ij log2 P_ij`.
    pub fn entropy_rate(&self, mu: &StationaryDistribution<T>) -> T {
        self.rows
            .iter()
            .zip(mu.probs())
            .map(|(row, &m)| -m * row.iter().map(|&(_, p)| xlog2x(p)).sum::<T>())
            .sum()
    }
}

/// Invariant distribution `mu = mu P` of a [`TransitionModel`].
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution<T> {
    probs: Vec<T>,
}

impl<T: Probability> StationaryDistribution<T> {
    pub fn probs(&self) -> &[T] {
        &self.probs
    }

    /// `max_j |(mu P)_j - mu_j|`.
    pub fn residual(&self, model: &TransitionModel<T>) -> f64 {
        let mut out = vec![T::zero(); self.probs.len()];
        model.left_multiply(&self.probs, &mut out);
        out.iter()
            .zip(&self.probs)
            .map(|(&a, &b)| (a - b).abs().as_f64())
            .fold(0.0, f64::max)
    }
}
