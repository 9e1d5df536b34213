//! Symbol-by-symbol lossless coding through an SFS(k) lumping.
//!
//! Encoding is the lumping function itself. Decoding looks up every window
//! of `k` consecutive blocks in a table mapping it to the unique realizable
//! state path `x2..xk`; only the first original state stays ambiguous.

use std::collections::{HashMap, VecDeque};
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::markov::AdjacencyStructure;
use crate::partition::Partition;
use crate::sfs::{walk_block_sequences, SfsWitness};

/// Encoder: coordinate-wise application of the lumping function.
pub fn encode(p: &Partition, xs: &[usize]) -> Vec<usize> {
    p.apply(xs)
}

/// Decoding table for an SFS(k) lumping.
#[derive(Clone, Debug)]
pub struct Decoder {
    adjacency: AdjacencyStructure,
    partition: Partition,
    order: usize,
    /// realizable block k-tuple -> unique tail `x2..xk`
    lookup: HashMap<Vec<usize>, Vec<usize>>,
}

/// What is known about the first original state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FirstSample {
    Known(usize),
    /// Every member of the first block is possible.
    Ambiguous(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedSequence {
    pub first: FirstSample,
    /// `x2..xn`.
    pub tail: Vec<usize>,
}

/// Builds the decoding table, failing with [`Error::NotSfs`] when some
/// realizable block k-tuple has more than one preimage tail.
pub fn build_decoder(
    adj: &AdjacencyStructure,
    p: &Partition,
    k: usize,
    budget: u64,
) -> Result<Decoder> {
    if p.n_states() != adj.n_states() {
        return Err(Error::InvalidPartition(
            "partition and model sizes differ".into(),
        ));
    }
    let mut lookup = HashMap::new();
    let mut witness = None;
    walk_block_sequences(adj, p, k, budget, |blocks, paths| {
        if paths.len() > 1 {
            witness = Some(SfsWitness {
                blocks: blocks.to_vec(),
                first: paths[0].clone(),
                second: paths[1].clone(),
            });
            return ControlFlow::Break(());
        }
        lookup.insert(blocks.to_vec(), paths[0][1..].to_vec());
        ControlFlow::Continue(())
    })?;
    if let Some(witness) = witness {
        return Err(Error::NotSfs {
            order: k,
            witness: Box::new(witness),
        });
    }
    Ok(Decoder {
        adjacency: adj.clone(),
        partition: p.clone(),
        order: k,
        lookup,
    })
}

impl Decoder {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Number of realizable block k-tuples.
    pub fn table_len(&self) -> usize {
        self.lookup.len()
    }

    pub fn lookup(&self, blocks: &[usize]) -> Option<&[usize]> {
        self.lookup.get(blocks).map(Vec::as_slice)
    }

    /// Decodes a whole block sequence. `x1_hint`, when given, must lie in the
    /// first block and have an edge to the decoded second state.
    pub fn decode(&self, ys: &[usize], x1_hint: Option<usize>) -> Result<DecodedSequence> {
        let mut stream = self.stream();
        let mut tail = stream.push_all(ys)?;
        tail.extend(stream.finish()?);
        let Some(&y1) = ys.first() else {
            return Ok(DecodedSequence {
                first: FirstSample::Ambiguous(Vec::new()),
                tail,
            });
        };
        let members: Vec<usize> = (0..self.partition.n_states())
            .filter(|&x| self.partition.block_of(x) == y1)
            .collect();
        let first = match x1_hint {
            Some(x1) => {
                let consistent = self.partition.block_of(x1) == y1
                    && tail
                        .first()
                        .is_none_or(|&x2| self.adjacency.has_edge(x1, x2));
                if !consistent {
                    return Err(Error::InvalidInput(format!(
                        "hint {x1} is inconsistent with the decoded sequence"
                    )));
                }
                FirstSample::Known(x1)
            }
            None if members.len() == 1 => FirstSample::Known(members[0]),
            None => FirstSample::Ambiguous(members),
        };
        Ok(DecodedSequence { first, tail })
    }

    /// Incremental decoder holding the last `k - 1` blocks.
    pub fn stream(&self) -> DecoderStream<'_> {
        DecoderStream {
            decoder: self,
            window: VecDeque::with_capacity(self.order),
            seen: 0,
            prefix: Vec::new(),
        }
    }
}

/// Streaming decoder state. Feeding a block sequence in any number of pieces
/// yields the same output as feeding it at once.
#[derive(Debug)]
pub struct DecoderStream<'a> {
    decoder: &'a Decoder,
    window: VecDeque<usize>,
    seen: usize,
    // blocks received before the first full window
    prefix: Vec<usize>,
}

impl DecoderStream<'_> {
    /// Consumes one block, returning the original states it determines:
    /// nothing during warm-up, `x2..xk` when the first window completes,
    /// one state per block afterwards.
    pub fn push(&mut self, y: usize) -> Result<Vec<usize>> {
        let k = self.decoder.order;
        self.seen += 1;
        self.window.push_back(y);
        if self.seen < k {
            self.prefix.push(y);
            return Ok(Vec::new());
        }
        let key: Vec<usize> = self.window.iter().copied().collect();
        let tail = self
            .decoder
            .lookup
            .get(&key)
            .ok_or(Error::UnrealizableSequence {
                position: self.seen - 1,
            })?;
        self.window.pop_front();
        if self.seen == k {
            self.prefix.clear();
            Ok(tail.clone())
        } else {
            Ok(vec![*tail.last().expect("k >= 2")])
        }
    }

    pub fn push_all(&mut self, ys: &[usize]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(ys.len());
        for &y in ys {
            out.extend(self.push(y)?);
        }
        Ok(out)
    }

    /// Flushes a stream shorter than `k` blocks: its tail is decoded when all
    /// realizable continuations agree on it.
    pub fn finish(self) -> Result<Vec<usize>> {
        if self.seen >= self.decoder.order || self.prefix.len() < 2 {
            return Ok(Vec::new());
        }
        let len = self.prefix.len();
        let mut tail: Option<&[usize]> = None;
        for (blocks, path) in &self.decoder.lookup {
            if blocks[..len] != self.prefix[..] {
                continue;
            }
            let candidate = &path[..len - 1];
            match tail {
                None => tail = Some(candidate),
                Some(t) if t != candidate => {
                    return Err(Error::Ambiguous(format!(
                        "{len} blocks are too few to fix the tail at order {}",
                        self.decoder.order
                    )))
                }
                Some(_) => {}
            }
        }
        tail.map(<[usize]>::to_vec)
            .ok_or(Error::UnrealizableSequence { position: len - 1 })
    }
}
