//! Information-preserving lumpings of finite Markov chains.
//!
//! A lumping merges states of an irreducible, aperiodic chain through a
//! surjective function `g`. When the lumping has the single-forward-sequence
//! property SFS(2), the lumped process is second-order Markov, has the same
//! entropy rate as the original chain, and the original trajectory can be
//! recovered from the lumped one (all but its first state) with a decoder
//! that remembers the last two blocks.
//!
//! The crate provides:
//!
//! * [`markov`]: validated sparse chains, stationary distribution, degree and
//!   spectral lower bounds on the number of blocks;
//! * [`partition`] and [`sfs`]: lumping functions in canonical form and the
//!   SFS(2) / SFS(k) checks;
//! * [`enumerate`]: admissible pairs and the exhaustive, greedy and
//!   randomized searches for SFS(2) lumpings, plus a brute-force oracle;
//! * [`infotheory`]: entropies, preimage counts and simulation;
//! * [`codec`]: symbol-by-symbol encoder and finite-memory decoder;
//! * [`ngram`]: character bi-/tri-gram training and the experiment pipeline.
//!
//! Probability-carrying types are generic over [`Probability`] (`f64` or
//! `f32`); the aliases below fix `f64`.
//!
//! ```
//! use lumpkit::{enumerate, fixtures};
//!
//! let levels = enumerate::list_all_sfs2(&fixtures::toy_adjacency());
//! let sizes: Vec<usize> = levels.iter().map(|l| l.partitions.len()).collect();
//! assert_eq!(sizes, [5, 4, 1]);
//! ```

pub mod codec;
pub mod enumerate;
mod error;
pub mod fixtures;
pub mod graph;
pub mod infotheory;
pub mod io;
pub mod markov;
pub mod ngram;
pub mod partition;
mod scalar;
pub mod sfs;

pub use error::{Error, Result};
pub use markov::{AdjacencyStructure, DegreeBounds};
pub use partition::Partition;
pub use scalar::Probability;
pub use sfs::{SfsVerdict, SfsWitness};

pub type TransitionModel = markov::TransitionModel<f64>;
pub type StationaryDistribution = markov::StationaryDistribution<f64>;
pub type EntropyReport = infotheory::EntropyReport<f64>;
pub type TrainedModel = ngram::TrainedModel<f64>;

pub type TransitionModelF32 = markov::TransitionModel<f32>;
pub type StationaryDistributionF32 = markov::StationaryDistribution<f32>;
pub type EntropyReportF32 = infotheory::EntropyReport<f32>;
