//! Set partitions of the state space in restricted-growth form.
//!
//! A [`Partition`] is a lumping function `g` stored as block labels with
//! `block_of[0] = 0` and `block_of[i] <= 1 + max(block_of[..i])`. Two label
//! arrays induce the same set partition iff their canonical forms are equal,
//! so derived `Eq`/`Hash`/`Ord` are set-partition equality and a total order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::Hash;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    block_of: Vec<usize>,
    n_blocks: usize,
}

impl Partition {
    /// Relabels by first occurrence.
    pub fn canonicalize<L: Eq + Hash>(raw: &[L]) -> Self {
        let mut seen: HashMap<&L, usize> = HashMap::with_capacity(raw.len());
        let block_of = raw
            .iter()
            .map(|label| {
                let next = seen.len();
                *seen.entry(label).or_insert(next)
            })
            .collect();
        Self {
            block_of,
            n_blocks: seen.len(),
        }
    }

    fn from_usize_labels(raw: &[usize]) -> Self {
        let mut map = vec![usize::MAX; raw.iter().copied().max().map_or(0, |m| m + 1)];
        let mut n_blocks = 0;
        let block_of = raw
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = n_blocks;
                    n_blocks += 1;
                }
                map[l]
            })
            .collect();
        Self { block_of, n_blocks }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            block_of: (0..n).collect(),
            n_blocks: n,
        }
    }

    pub fn single_block(n: usize) -> Self {
        Self {
            block_of: vec![0; n],
            n_blocks: usize::from(n > 0),
        }
    }

    /// Builds a partition from explicit blocks that must cover `0..n` exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &x in block {
                if x >= n {
                    return Err(Error::InvalidPartition(format!("state {x} out of range")));
                }
                if labels[x] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {x} listed twice")));
                }
                labels[x] = b;
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {x} is in no block")));
        }
        Ok(Self::from_usize_labels(&labels))
    }

    /// Blocks listed explicitly; states not mentioned become singletons.
    pub fn from_partial_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut all = blocks.to_vec();
        let mut covered = vec![false; n];
        for &x in blocks.iter().flatten() {
            if x < n {
                covered[x] = true;
            }
        }
        all.extend((0..n).filter(|&x| !covered[x]).map(|x| vec![x]));
        Self::from_blocks(n, &all)
    }

    pub fn n_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.block_of[x]
    }

    pub fn labels(&self) -> &[usize] {
        &self.block_of
    }

    pub fn is_identity(&self) -> bool {
        self.n_blocks == self.block_of.len()
    }

    /// Members of every block; blocks and members are in ascending order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.n_blocks];
        for (x, &b) in self.block_of.iter().enumerate() {
            blocks[b].push(x);
        }
        blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_blocks];
        for &b in &self.block_of {
            sizes[b] += 1;
        }
        sizes
    }

    /// Coordinate-wise image of a state sequence.
    pub fn apply(&self, xs: &[usize]) -> Vec<usize> {
        xs.iter().map(|&x| self.block_of[x]).collect()
    }

    /// Merges the blocks containing `a` and `b`. Returns `self` unchanged
    /// (cloned) when they already share a block.
    pub fn merge_states(&self, a: usize, b: usize) -> Self {
        let (ba, bb) = (self.block_of[a], self.block_of[b]);
        if ba == bb {
            return self.clone();
        }
        let (keep, gone) = (ba.min(bb), ba.max(bb));
        let block_of = self
            .block_of
            .iter()
            .map(|&l| match l {
                l if l == gone => keep,
                l if l > gone => l - 1,
                l => l,
            })
            .collect();
        // the merged block keeps its first occurrence and later labels shift
        // down uniformly, so the result is already in restricted-growth form
        Self {
            block_of,
            n_blocks: self.n_blocks - 1,
        }
    }

    /// True iff every block of `self` lies inside a single block of `coarser`.
    pub fn is_refinement_of(&self, coarser: &Partition) -> bool {
        if self.n_states() != coarser.n_states() {
            return false;
        }
        let mut image = vec![usize::MAX; self.n_blocks];
        for (x, &b) in self.block_of.iter().enumerate() {
            let target = coarser.block_of[x];
            if image[b] == usize::MAX {
                image[b] = target;
            } else if image[b] != target {
                return false;
            }
        }
        true
    }

    /// Text form `{a,b,c}{d,e}{f}` using the given state labels.
    pub fn format_with_labels(&self, labels: &[String]) -> String {
        let mut out = String::new();
        for block in self.blocks() {
            out.push('{');
            for (k, &x) in block.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", labels[x]);
            }
            out.push('}');
        }
        out
    }

    /// Parses `{a,b}{c}` where entries are state labels or, failing that,
    /// 1-based state numbers. States not mentioned become singletons.
    pub fn parse_text(text: &str, labels: &[String]) -> Result<Self> {
        let n = labels.len();
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let resolve = |tok: &str| -> Result<usize> {
            if let Some(&i) = index.get(tok) {
                return Ok(i);
            }
            match tok.parse::<usize>() {
                Ok(k) if (1..=n).contains(&k) => Ok(k - 1),
                _ => Err(Error::InvalidPartition(format!("unknown state '{tok}'"))),
            }
        };
        let mut blocks = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('{')
                .ok_or_else(|| Error::InvalidPartition(format!("expected '{{' at '{rest}'")))?;
            let close = body
                .find('}')
                .ok_or_else(|| Error::InvalidPartition("unterminated block".into()))?;
            let block = body[..close]
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(resolve)
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
            rest = body[close + 1..].trim_start_matches([',', ' ']).trim();
        }
        Self::from_partial_blocks(n, &blocks)
    }
}

/// Iterator over every set partition of `{0..n}` in restricted-growth
/// (lexicographic) order.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    rgs: Vec<usize>,
    // max of rgs[..=i]
    prefix_max: Vec<usize>,
    done: bool,
}

impl SetPartitions {
    pub fn new(n: usize) -> Self {
        Self {
            rgs: vec![0; n],
            prefix_max: vec![0; n],
            done: false,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        for i in (1..n).rev() {
            if self.rgs[i] <= self.prefix_max[i - 1] {
                self.rgs[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.rgs[i]);
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SetPartitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        if self.done {
            return None;
        }
        let n_blocks = self.prefix_max.last().map_or(0, |&m| m + 1);
        let item = Partition {
            block_of: self.rgs.clone(),
            n_blocks,
        };
        self.done = !self.advance();
        Some(item)
    }
}
