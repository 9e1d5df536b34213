//! Character n-gram models trained by maximum likelihood, without smoothing.
//!
//! Text is preprocessed into a symbol stream, bi-gram counts give a
//! first-order chain on symbols, and tri-gram counts give a second-order
//! chain lifted to a first-order chain on occurring symbol pairs. Raw counts
//! rarely give an irreducible aperiodic chain, so training keeps only the
//! largest strongly connected component.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::enumerate::{self, AdmissiblePairSet, Objective};
use crate::error::{Error, Result};
use crate::graph;
use crate::infotheory::{self, EntropyReport};
use crate::markov::{DegreeBounds, TransitionModel};
use crate::partition::Partition;
use crate::scalar::Probability;

/// Tolerance on `h_cond_rate` for calling a lumping information preserving.
pub const PRESERVATION_TOLERANCE: f64 = 1e-9;

/// Text normalization rules, applied in field order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PreprocessPolicy {
    pub lowercase: bool,
    /// Every decimal digit becomes `#`.
    pub digits_to_hash: bool,
    /// When false, punctuation and symbols are dropped (except the `#`
    /// produced by `digits_to_hash`).
    pub keep_punctuation: bool,
    /// Every maximal whitespace run becomes a single `\n` if it contains a
    /// line break and a single space otherwise.
    pub collapse_whitespace: bool,
    /// `\r\n`, `\r` and `\n` each become one line-break symbol.
    pub newline_token: bool,
}

impl PreprocessPolicy {
    /// Lowercase letters, digits as `#`, punctuation kept, whitespace
    /// collapsed, line breaks as their own symbol.
    pub fn gatsby() -> Self {
        Self {
            lowercase: true,
            digits_to_hash: true,
            keep_punctuation: true,
            collapse_whitespace: true,
            newline_token: true,
        }
    }

    /// Every character is its own token.
    pub fn raw() -> Self {
        Self {
            lowercase: false,
            digits_to_hash: false,
            keep_punctuation: true,
            collapse_whitespace: false,
            newline_token: false,
        }
    }
}

/// Preprocessed symbol stream over an ordered alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Corpus {
    symbols: Vec<usize>,
    alphabet: Vec<char>,
}

impl Corpus {
    /// A corpus from symbol indices into `alphabet`.
    pub fn new(symbols: Vec<usize>, alphabet: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if alphabet.len() < 2 || alphabet.iter().collect::<BTreeSet<_>>().len() != alphabet.len() {
            return Err(Error::InvalidInput(
                "alphabet needs at least 2 distinct symbols".into(),
            ));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet.len()) {
            return Err(Error::InvalidInput(format!(
                "symbol index {s} outside the alphabet"
            )));
        }
        Ok(Self { symbols, alphabet })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Printable names: `LB` for a line break, `SP` for a space, and
    /// spelled-out names for characters that clash with the `{a,b}` partition syntax.
    pub fn display_names(&self) -> Vec<String> {
        self.alphabet.iter().map(|&c| symbol_name(c)).collect()
    }
}

pub fn symbol_name(c: char) -> String {
    match c {
        '\n' => "LB".into(),
        '\r' => "CR".into(),
        ' ' => "SP".into(),
        '\t' => "TAB".into(),
        ',' => "COMMA".into(),
        '{' => "LBRACE".into(),
        '}' => "RBRACE".into(),
        c if c.is_control() => format!("U+{:04X}", c as u32),
        c => c.to_string(),
    }
}

/// Applies `policy` to UTF-8 text. Tokenization is per Unicode scalar value.
/// The alphabet is ordered line break, space, then by code point.
pub fn preprocess(raw: &[u8], policy: PreprocessPolicy) -> Result<Corpus> {
    let text = std::str::from_utf8(raw)?;
    let mut chars: Vec<char> = if policy.lowercase {
        text.chars().flat_map(char::to_lowercase).collect()
    } else {
        text.chars().collect()
    };
    if policy.digits_to_hash {
        chars
            .iter_mut()
            .filter(|c| c.is_ascii_digit())
            .for_each(|c| *c = '#');
    }
    if !policy.keep_punctuation {
        chars.retain(|&c| {
            c.is_alphanumeric() || c.is_whitespace() || (policy.digits_to_hash && c == '#')
        });
    }
    if policy.collapse_whitespace {
        let mut out = Vec::with_capacity(chars.len());
        let mut run: Option<bool> = None; // Some(contains line break)
        for c in chars {
            if c.is_whitespace() {
                let lb = c == '\n' || c == '\r';
                run = Some(run.unwrap_or(false) || lb);
            } else {
                if let Some(lb) = run.take() {
                    out.push(if lb { '\n' } else { ' ' });
                }
                out.push(c);
            }
        }
        if let Some(lb) = run {
            out.push(if lb { '\n' } else { ' ' });
        }
        chars = out;
    }
    if policy.newline_token {
        let mut out = Vec::with_capacity(chars.len());
        let mut i = 0;
        while i < chars.len() {
            match chars[i] {
                '\r' => {
                    out.push('\n');
                    if chars.get(i + 1) == Some(&'\n') {
                        i += 1;
                    }
                }
                c => out.push(c),
            }
            i += 1;
        }
        chars = out;
    }
    if chars.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut alphabet: Vec<char> = chars
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    alphabet.sort_by_key(|&c| match c {
        '\n' => (0, 0),
        ' ' => (1, 0),
        c => (2, c as u32),
    });
    let index: BTreeMap<char, usize> = alphabet.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let symbols = chars.iter().map(|c| index[c]).collect();
    Ok(Corpus { symbols, alphabet })
}

/// Occurrence counts of symbol tuples of a fixed order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NgramCounts {
    pub order: usize,
    pub counts: BTreeMap<Vec<usize>, u64>,
}

const SHARD_LEN: usize = 1 << 16;

/// Counts every window of `order` consecutive symbols. Shards are counted in
/// parallel and merged; shard boundaries overlap by `order - 1` symbols so
/// no window is lost or counted twice.
pub fn count_ngrams(corpus: &Corpus, order: usize) -> NgramCounts {
    let symbols = corpus.symbols();
    let windows = symbols.len().saturating_sub(order.saturating_sub(1));
    let counts = (0..windows.div_ceil(SHARD_LEN))
        .into_par_iter()
        .map(|shard| {
            let start = shard * SHARD_LEN;
            let end = (start + SHARD_LEN).min(windows);
            let mut local: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
            for w in symbols[start..end + order - 1].windows(order) {
                *local.entry(w.to_vec()).or_default() += 1;
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_default() += v;
            }
            a
        });
    NgramCounts { order, counts }
}

/// A trained chain and the bookkeeping of what training removed.
#[derive(Clone, Debug)]
pub struct TrainedModel<T> {
    pub model: TransitionModel<T>,
    /// Labels of states outside the retained strongly connected component.
    pub dropped: Vec<String>,
}

/// Maximum-likelihood chain over the states `labels`, given transition
/// counts `(from, to) -> count`, restricted to the largest strongly
/// connected component and renormalized there.
fn train_from_counts<T: Probability>(
    n: usize,
    labels: Vec<String>,
    transitions: &BTreeMap<(usize, usize), u64>,
) -> Result<TrainedModel<T>> {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in transitions.keys() {
        succ[a].push(b);
    }
    let keep = graph::strongly_connected_components(&succ)
        .into_iter()
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
        .unwrap_or_default();
    if keep.len() < 2 {
        return Err(Error::DegenerateChain(format!(
            "largest strongly connected component has {} state(s)",
            keep.len()
        )));
    }
    let mut new_index = vec![usize::MAX; n];
    for (k, &s) in keep.iter().enumerate() {
        new_index[s] = k;
    }
    let mut rows: Vec<Vec<(usize, u64)>> = vec![Vec::new(); keep.len()];
    for (&(a, b), &c) in transitions {
        if new_index[a] != usize::MAX && new_index[b] != usize::MAX {
            rows[new_index[a]].push((new_index[b], c));
        }
    }
    let rows = rows
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().map(|e| e.1).sum();
            row.into_iter()
                .map(|(j, c)| (j, T::from_u64(c).unwrap() / T::from_u64(total).unwrap()))
                .collect()
        })
        .collect();
    let dropped = (0..n)
        .filter(|&s| new_index[s] == usize::MAX)
        .map(|s| labels[s].clone())
        .collect();
    let kept_labels = keep.iter().map(|&s| labels[s].clone()).collect();
    let model = TransitionModel::new(rows, Some(kept_labels))?;
    Ok(TrainedModel { model, dropped })
}

/// Bi-gram chain: `P[i][j] = count(ij) / count(i.)`. The final symbol of the
/// corpus contributes no outgoing transition.
pub fn train_bigram<T: Probability>(corpus: &Corpus) -> Result<TrainedModel<T>> {
    if corpus.len() < 2 {
        return Err(Error::DegenerateChain(
            "corpus needs at least 2 symbols".into(),
        ));
    }
    let counts = count_ngrams(corpus, 2);
    let transitions = counts
        .counts
        .iter()
        .map(|(k, &c)| ((k[0], k[1]), c))
        .collect();
    train_from_counts(
        corpus.alphabet().len(),
        corpus.display_names(),
        &transitions,
    )
}

/// Separator between the two symbol names of a lifted pair state.
pub const PAIR_SEPARATOR: char = '\u{b7}';

/// Tri-gram chain lifted to occurring symbol pairs:
/// `(a,b) -> (b,c)` with probability `count(abc) / count(ab.)`.
pub fn train_trigram_lifted<T: Probability>(corpus: &Corpus) -> Result<TrainedModel<T>> {
    if corpus.len() < 3 {
        return Err(Error::DegenerateChain(
            "corpus needs at least 3 symbols".into(),
        ));
    }
    let pair_counts = count_ngrams(corpus, 2);
    let triple_counts = count_ngrams(corpus, 3);
    let pairs: Vec<&Vec<usize>> = pair_counts.counts.keys().collect();
    let pair_index: BTreeMap<&[usize], usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    let names = corpus.display_names();
    let labels = pairs
        .iter()
        .map(|p| format!("{}{PAIR_SEPARATOR}{}", names[p[0]], names[p[1]]))
        .collect();
    let transitions = triple_counts
        .counts
        .iter()
        .map(|(t, &c)| ((pair_index[&t[0..2]], pair_index[&t[1..3]]), c))
        .collect();
    train_from_counts(pairs.len(), labels, &transitions)
}

/// How the experiment explores SFS(2) lumpings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive { threads: usize },
    Greedy,
    Randomized { sample_size: usize, seed: u64 },
}

/// One lumping in an experiment report.
#[derive(Clone, Debug, PartialEq)]
pub struct LumpingRecord {
    pub m: usize,
    pub partition: Partition,
    pub marginal_entropy_bits: f64,
    pub entropy_rate_bits: f64,
    pub preserved: bool,
}

impl LumpingRecord {
    fn new<T: Probability>(partition: Partition, report: &EntropyReport<T>) -> Self {
        Self {
            m: partition.n_blocks(),
            marginal_entropy_bits: report.h_marginal_y.as_f64(),
            entropy_rate_bits: report.h_rate_y_order2.as_f64(),
            preserved: report.preserved(PRESERVATION_TOLERANCE),
            partition,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub n_states: usize,
    pub bounds: DegreeBounds,
    pub entropy_rate_bits: f64,
    pub baseline_marginal_entropy_bits: f64,
    pub admissible_pairs: AdmissiblePairSet,
    /// `(number of blocks, number of lumpings)` per level, in search order.
    pub level_counts: Vec<(usize, usize)>,
    pub records: Vec<LumpingRecord>,
    /// Record with the smallest marginal entropy (ties: smaller partition).
    pub best: Option<LumpingRecord>,
}

impl ExperimentReport {
    /// Non-singleton blocks of the best lumping, as label lists.
    pub fn merged_sets(&self, labels: &[String]) -> Vec<Vec<String>> {
        self.best.as_ref().map_or_else(Vec::new, |best| {
            best.partition
                .blocks()
                .into_iter()
                .filter(|b| b.len() > 1)
                .map(|b| b.into_iter().map(|x| labels[x].clone()).collect())
                .collect()
        })
    }
}

/// Bounds, admissible pairs, the chosen enumeration and an entropy report
/// for every lumping found.
pub fn experiment_report<T: Probability>(
    model: &TransitionModel<T>,
    strategy: Strategy,
    objective: Objective,
) -> Result<ExperimentReport> {
    let adj = model.adjacency();
    let mu = model.stationary()?;
    let bounds = adj.lower_bounds()?;
    let pairs = enumerate::admissible_pairs(adj);
    let (level_counts, partitions): (Vec<(usize, usize)>, Vec<Partition>) = match strategy {
        Strategy::Exhaustive { threads } => {
            let levels = enumerate::list_all_sfs2_with(adj, &pairs, threads);
            let counts = levels
                .iter()
                .map(|l| (l.n_blocks(), l.partitions.len()))
                .collect();
            (
                counts,
                levels.into_iter().flat_map(|l| l.partitions).collect(),
            )
        }
        Strategy::Greedy => {
            let path = enumerate::greedy_sfs2(model, objective)?;
            (path.iter().map(|p| (p.n_blocks(), 1)).collect(), path)
        }
        Strategy::Randomized { sample_size, seed } => {
            let path = enumerate::randomized_sfs2(model, objective, sample_size, seed)?;
            (path.iter().map(|p| (p.n_blocks(), 1)).collect(), path)
        }
    };
    let records: Vec<LumpingRecord> = partitions
        .into_par_iter()
        .map(|p| {
            let report = infotheory::lumped_entropy_report(model, &mu, &p);
            LumpingRecord::new(p, &report)
        })
        .collect();
    let best = records
        .iter()
        .min_by(|a, b| {
            a.marginal_entropy_bits
                .total_cmp(&b.marginal_entropy_bits)
                .then_with(|| a.partition.cmp(&b.partition))
        })
        .cloned();
    Ok(ExperimentReport {
        n_states: model.n_states(),
        bounds,
        entropy_rate_bits: model.entropy_rate(&mu).as_f64(),
        baseline_marginal_entropy_bits: infotheory::entropy_bits(mu.probs().iter().copied())
            .as_f64(),
        admissible_pairs: pairs,
        level_counts,
        records,
        best,
    })
}
