//! Reference chains used by tests, examples and the CLI demo.

use rand::Rng;

use crate::markov::{AdjacencyStructure, TransitionModel};
use crate::partition::Partition;
use crate::scalar::Probability;

/// The six-state toy transition graph; every state has out-degree 3.
pub const TOY_ADJACENCY: [[u8; 6]; 6] = [
    [0, 1, 0, 0, 1, 1],
    [0, 1, 0, 0, 1, 1],
    [0, 1, 0, 0, 1, 1],
    [0, 0, 1, 1, 0, 1],
    [0, 0, 1, 1, 0, 1],
    [1, 0, 0, 1, 0, 1],
];

pub fn toy_adjacency() -> AdjacencyStructure {
    AdjacencyStructure::from_dense(&TOY_ADJACENCY.map(|r| r.to_vec())).expect("toy graph is valid")
}

pub fn toy_labels() -> Vec<String> {
    (1..=6).map(|i| i.to_string()).collect()
}

/// Toy chain with probability 1/3 on every edge.
pub fn toy_model<T: Probability>() -> TransitionModel<T> {
    TransitionModel::uniform_on(&toy_adjacency(), Some(toy_labels())).expect("toy chain is ergodic")
}

/// The three-block SFS(2) lumping `{1,2,3}{4,5}{6}` of the toy chain.
pub fn toy_solution() -> Partition {
    Partition::canonicalize(&[0, 0, 0, 1, 1, 2])
}

pub fn full_adjacency(n: usize) -> AdjacencyStructure {
    AdjacencyStructure::from_successors(vec![(0..n).collect(); n]).expect("full graph is valid")
}

/// Rejection-samples an irreducible, aperiodic graph on `n` states where each
/// off-cycle edge is present with probability `density`. A Hamiltonian cycle
/// through a random permutation guarantees irreducibility; graphs that come
/// out periodic are redrawn.
pub fn random_ergodic_adjacency<R: Rng + ?Sized>(
    n: usize,
    density: f64,
    rng: &mut R,
) -> AdjacencyStructure {
    loop {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut dense = vec![vec![0u8; n]; n];
        for w in 0..n {
            dense[order[w]][order[(w + 1) % n]] = 1;
        }
        for row in dense.iter_mut() {
            for a in row.iter_mut() {
                if rng.random_bool(density) {
                    *a = 1;
                }
            }
        }
        let adj = AdjacencyStructure::from_dense(&dense).expect("every row has a cycle edge");
        if adj.check_ergodic().is_ok() {
            return adj;
        }
    }
}

/// Random positive probabilities on a given adjacency pattern.
pub fn random_model_on<T: Probability, R: Rng + ?Sized>(
    adj: &AdjacencyStructure,
    rng: &mut R,
) -> TransitionModel<T> {
    let rows = adj
        .successor_lists()
        .iter()
        .map(|row| {
            let weights: Vec<f64> = row.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            row.iter()
                .zip(weights)
                .map(|(&j, w)| (j, T::lit(w / total)))
                .collect()
        })
        .collect();
    TransitionModel::new(rows, None).expect("random weights on an ergodic graph")
}
