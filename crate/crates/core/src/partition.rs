//! Canonical partitions of `{0..n-1}`.
//!
//! Blocks are ordered by their least member and elements are ascending inside
//! a block, so two partitions are equal iff their label vectors are equal.

use std::fmt;
use std::str::FromStr;

use crate::algebra::Elem;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    /// `labels[x]` is the index of the block containing `x`.
    labels: Vec<u32>,
    block_count: usize,
}

impl Partition {
    /// The discrete partition (every element alone).
    pub fn discrete(n: usize) -> Self {
        Partition {
            labels: (0..n as u32).collect(),
            block_count: n,
        }
    }

    /// The one-block partition.
    pub fn full(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            block_count: usize::from(n > 0),
        }
    }

    /// Builds the canonical partition from an arbitrary labelling: `x` and
    /// `y` share a block iff `keys[x] == keys[y]`.
    pub fn from_keys<K: Eq + std::hash::Hash + Clone>(keys: &[K]) -> Self {
        let mut seen = std::collections::HashMap::new();
        let labels: Vec<u32> = keys
            .iter()
            .map(|k| {
                let next = seen.len() as u32;
                *seen.entry(k.clone()).or_insert(next)
            })
            .collect();
        Partition {
            block_count: seen.len(),
            labels,
        }
    }

    /// Partition given by explicit blocks. Every element of `0..n` must occur
    /// exactly once.
    pub fn from_blocks(n: usize, blocks: &[Vec<Elem>]) -> Result<Self> {
        let mut keys = vec![u32::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Validation("empty block in partition".into()));
            }
            for &x in block {
                let slot = keys.get_mut(x as usize).ok_or(Error::ElementOutOfRange {
                    element: x as u64,
                    size: n,
                })?;
                if *slot != u32::MAX {
                    return Err(Error::Validation(format!(
                        "element {x} occurs in more than one block"
                    )));
                }
                *slot = b as u32;
            }
        }
        if let Some(missing) = keys.iter().position(|&k| k == u32::MAX) {
            return Err(Error::Validation(format!(
                "element {missing} is missing from the partition"
            )));
        }
        Ok(Self::from_keys(&keys))
    }

    /// Parses the `"0,2|1,3"` form against a carrier of size `n`.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Self::from_blocks(n, &[]);
        }
        let mut blocks = Vec::new();
        for chunk in text.split('|') {
            let block = chunk
                .split(',')
                .map(|t| {
                    t.trim().parse::<Elem>().map_err(|_| {
                        Error::Validation(format!("bad element `{}` in partition", t.trim()))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
        }
        Self::from_blocks(n, &blocks)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: Elem) -> u32 {
        self.labels[x as usize]
    }

    pub fn same_block(&self, x: Elem, y: Elem) -> bool {
        self.labels[x as usize] == self.labels[y as usize]
    }

    pub fn blocks(&self) -> Vec<Vec<Elem>> {
        let mut blocks = vec![Vec::new(); self.block_count];
        for (x, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(x as Elem);
        }
        blocks
    }

    /// Least member of each block, in block order.
    pub fn representatives(&self) -> Vec<Elem> {
        let mut reps = vec![Elem::MAX; self.block_count];
        for (x, &l) in self.labels.iter().enumerate() {
            if reps[l as usize] == Elem::MAX {
                reps[l as usize] = x as Elem;
            }
        }
        reps
    }

    pub fn is_discrete(&self) -> bool {
        self.block_count == self.labels.len()
    }

    pub fn is_full(&self) -> bool {
        self.block_count <= 1
    }

    /// `self` refines `other`.
    pub fn leq(&self, other: &Partition) -> bool {
        debug_assert_eq!(self.len(), other.len());
        let reps = self.representatives();
        self.labels
            .iter()
            .enumerate()
            .all(|(x, &l)| other.same_block(x as Elem, reps[l as usize]))
    }

    pub fn meet(&self, other: &Partition) -> Partition {
        let keys: Vec<(u32, u32)> = self
            .labels
            .iter()
            .zip(&other.labels)
            .map(|(&a, &b)| (a, b))
            .collect();
        Self::from_keys(&keys)
    }

    /// Join in the lattice of equivalence relations.
    pub fn join(&self, other: &Partition) -> Partition {
        let mut uf = UnionFind::new(self.len());
        for p in [self, other] {
            let reps = p.representatives();
            for (x, &l) in p.labels.iter().enumerate() {
                uf.union(x as Elem, reps[l as usize]);
            }
        }
        uf.into_partition()
    }

    /// The `[[0,2],[1,3]]` list-of-blocks form.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::from(self.blocks())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks().iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            for (j, x) in block.iter().enumerate() {
                if j > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
        }
        Ok(())
    }
}

/// Parses with the carrier size inferred from the largest element.
impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let max = s
            .split(['|', ','])
            .filter_map(|t| t.trim().parse::<usize>().ok())
            .max();
        Self::parse(max.map_or(0, |m| m + 1), s)
    }
}

/// Union-find over `0..n` with path halving.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn find(&mut self, mut x: Elem) -> Elem {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns `true` if two distinct classes were merged.
    pub fn union(&mut self, a: Elem, b: Elem) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // keep the smaller element as root
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else {
            self.parent[ra as usize] = rb;
        }
        true
    }

    pub fn into_partition(mut self) -> Partition {
        let keys: Vec<Elem> = (0..self.parent.len() as Elem).map(|x| self.find(x)).collect();
        Partition::from_keys(&keys)
    }
}
