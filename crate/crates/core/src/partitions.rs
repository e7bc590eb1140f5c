//! Set partitions of `{0, .., k-1}` in canonical block form, enumerated
//! lazily through restricted growth strings.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Largest ground set enumerated without an explicit override.
pub const DEFAULT_PARTITION_CAP: usize = 12;

/// A partition of `{0, .., k-1}`. Blocks are sorted internally and ordered
/// by their least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SetPartition {
    k: usize,
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    /// Builds a partition from a restricted growth string: `rgs[0] == 0` and
    /// `rgs[i] <= 1 + max(rgs[..i])`.
    pub fn from_rgs(rgs: &[usize]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (i, &b) in rgs.iter().enumerate() {
            if b == blocks.len() {
                blocks.push(Vec::new());
            }
            blocks[b].push(i);
        }
        Self {
            k: rgs.len(),
            blocks,
        }
    }

    /// Validates and canonicalises arbitrary blocks.
    pub fn from_blocks(k: usize, mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; k];
        for block in blocks.iter_mut() {
            if block.is_empty() {
                return Err(Error::InvalidParameter("empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i >= k || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::InvalidParameter(format!(
                        "index {i} out of range or repeated"
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("blocks do not cover the ground set".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { k, blocks })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    /// Block label of every element, labels in order of first appearance.
    pub fn to_rgs(&self) -> Vec<usize> {
        let mut rgs = vec![0; self.k];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                rgs[i] = b;
            }
        }
        rgs
    }

    pub fn is_canonical(&self) -> bool {
        let mut seen = vec![false; self.k];
        for block in &self.blocks {
            if block.is_empty() || block.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &i in block {
                if i >= self.k || std::mem::replace(&mut seen[i], true) {
                    return false;
                }
            }
        }
        seen.iter().all(|&s| s) && self.blocks.windows(2).all(|w| w[0][0] < w[1][0])
    }
}

/// Groups positions carrying equal labels: `[a, b, a]` gives `{{0, 2}, {1}}`.
pub fn partition_of<T: Eq + Hash>(labels: &[T]) -> Result<SetPartition> {
    if labels.is_empty() {
        return Err(Error::InvalidParameter("labels must be nonempty".into()));
    }
    let mut slot: HashMap<&T, usize> = HashMap::new();
    let rgs: Vec<usize> = labels
        .iter()
        .map(|l| {
            let next = slot.len();
            *slot.entry(l).or_insert(next)
        })
        .collect();
    Ok(SetPartition::from_rgs(&rgs))
}

/// Bell numbers through the Bell triangle.
pub fn bell_number(k: usize) -> u128 {
    let mut row = vec![1u128];
    for _ in 1..=k {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &x in &row {
            let last = *next.last().unwrap();
            next.push(last.saturating_add(x));
        }
        row = next;
    }
    row[0]
}

/// Lazy enumeration of all partitions of `{0, .., k-1}` in lexicographic
/// order of their restricted growth strings, refusing `k` above
/// [`DEFAULT_PARTITION_CAP`].
pub fn enumerate_partitions(k: usize) -> Result<Partitions> {
    enumerate_partitions_capped(k, DEFAULT_PARTITION_CAP)
}

pub fn enumerate_partitions_capped(k: usize, cap: usize) -> Result<Partitions> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if k > cap {
        return Err(Error::PartitionCap {
            k,
            cap,
            bell: bell_number(k),
        });
    }
    Ok(Partitions::new(k))
}

/// Iterator over restricted growth strings of length `k`.
#[derive(Debug, Clone)]
pub struct RgsIter {
    rgs: Vec<usize>,
    // prefix maxima: max_before[i] = max(rgs[..i])
    max_before: Vec<usize>,
    first: bool,
    done: bool,
}

impl RgsIter {
    pub fn new(k: usize) -> Self {
        Self {
            rgs: vec![0; k],
            max_before: vec![0; k],
            first: true,
            done: k == 0,
        }
    }

    /// Advances to the next string and returns it with its block count.
    pub fn advance(&mut self) -> Option<(&[usize], usize)> {
        if self.done {
            return None;
        }
        let k = self.rgs.len();
        if self.first {
            self.first = false;
        } else {
            // rightmost position that can still grow
            let mut i = k;
            loop {
                if i <= 1 {
                    self.done = true;
                    return None;
                }
                i -= 1;
                if self.rgs[i] <= self.max_before[i] {
                    break;
                }
            }
            self.rgs[i] += 1;
            for j in i + 1..k {
                self.rgs[j] = 0;
                self.max_before[j] = self.max_before[j - 1].max(self.rgs[j - 1]);
            }
        }
        let blocks = 1 + self.max_before[k - 1].max(self.rgs[k - 1]);
        Some((&self.rgs, blocks))
    }
}

/// Streaming partition enumerator returned by [`enumerate_partitions`].
#[derive(Debug, Clone)]
pub struct Partitions {
    inner: RgsIter,
}

impl Partitions {
    fn new(k: usize) -> Self {
        Self {
            inner: RgsIter::new(k),
        }
    }
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        self.inner
            .advance()
            .map(|(rgs, _)| SetPartition::from_rgs(rgs))
    }
}
