//! Slaloms and k-trees: the two finite localizer shapes.
//!
//! A slalom has `n + 1` permitted values at position `n`; a k-tree is a
//! prefix-closed set of finite sequences with at most `k` immediate
//! successors per node.  A function prefix is localized when every value
//! (respectively every initial segment) stays inside the localizer.
//! `ktree_to_slalom_cover` turns a sufficiently thin tree into a slalom that
//! captures all of its branches, padding each cell with the smallest unused
//! naturals.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LocalizerError {
    #[error("cell {index} has {have} values, expected exactly {want}")]
    WrongCellSize { index: usize, have: usize, want: usize },
    #[error("cell {0} repeats the value {1}")]
    DuplicateInCell(usize, u64),
    #[error("function prefix of length {flen} exceeds the slalom length {slen}")]
    PrefixTooLong { flen: usize, slen: usize },
    #[error("branching bound k must be at least 2, got {0}")]
    KTooSmall(u64),
    #[error("tree is not prefix-closed: missing parent of {0:?}")]
    NotPrefixClosed(Vec<u64>),
    #[error("node {0:?} has {1} immediate successors, more than k = {2}")]
    TooManySuccessors(Vec<u64>, usize, u64),
    #[error("tree repeats the node {0:?}")]
    DuplicateNode(Vec<u64>),
    #[error("level {level} carries {count} distinct values, more than {capacity} fit a slalom cell")]
    CellOverflow { level: usize, count: usize, capacity: usize },
}

/// A localizer with exactly `n + 1` permitted values at position `n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSlalom", into = "RawSlalom")]
pub struct Slalom {
    cells: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSlalom {
    cells: Vec<Vec<u64>>,
}

impl TryFrom<RawSlalom> for Slalom {
    type Error = LocalizerError;
    fn try_from(raw: RawSlalom) -> Result<Self, LocalizerError> {
        Slalom::new(raw.cells)
    }
}

impl From<Slalom> for RawSlalom {
    fn from(s: Slalom) -> RawSlalom {
        RawSlalom { cells: s.cells }
    }
}

impl Slalom {
    /// Builds a slalom; cell `n` must hold exactly `n + 1` distinct values.
    pub fn new(cells: Vec<Vec<u64>>) -> Result<Self, LocalizerError> {
        let mut cells = cells;
        for (n, cell) in cells.iter_mut().enumerate() {
            cell.sort_unstable();
            for pair in cell.windows(2) {
                if pair[0] == pair[1] {
                    return Err(LocalizerError::DuplicateInCell(n, pair[0]));
                }
            }
            if cell.len() != n + 1 {
                return Err(LocalizerError::WrongCellSize {
                    index: n,
                    have: cell.len(),
                    want: n + 1,
                });
            }
        }
        Ok(Slalom { cells })
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// True when `f(n)` lies in cell `n` for every position of the prefix.
/// The prefix may be shorter than the slalom but not longer.
pub fn slalom_localizes(f: &[u64], s: &Slalom) -> Result<bool, LocalizerError> {
    if f.len() > s.len() {
        return Err(LocalizerError::PrefixTooLong { flen: f.len(), slen: s.len() });
    }
    Ok(f.iter()
        .zip(s.cells())
        .all(|(v, cell)| cell.binary_search(v).is_ok()))
}

/// A finite prefix-closed set of sequences with at most `k` immediate
/// successors per node, `k >= 2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawKTree", into = "RawKTree")]
pub struct KTree {
    k: u64,
    nodes: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct RawKTree {
    k: u64,
    nodes: Vec<Vec<u64>>,
}

impl TryFrom<RawKTree> for KTree {
    type Error = LocalizerError;
    fn try_from(raw: RawKTree) -> Result<Self, LocalizerError> {
        KTree::new(raw.k, raw.nodes)
    }
}

impl From<KTree> for RawKTree {
    fn from(t: KTree) -> RawKTree {
        RawKTree { k: t.k, nodes: t.nodes }
    }
}

impl KTree {
    pub fn new(k: u64, nodes: Vec<Vec<u64>>) -> Result<Self, LocalizerError> {
        if k < 2 {
            return Err(LocalizerError::KTooSmall(k));
        }
        let mut nodes = nodes;
        nodes.sort_unstable_by(|a, b| (a.len(), a.as_slice()).cmp(&(b.len(), b.as_slice())));
        for pair in nodes.windows(2) {
            if pair[0] == pair[1] {
                return Err(LocalizerError::DuplicateNode(pair[0].clone()));
            }
        }
        let set: BTreeSet<&[u64]> = nodes.iter().map(|n| n.as_slice()).collect();
        let mut successors: BTreeMap<&[u64], usize> = BTreeMap::new();
        for node in &nodes {
            if !node.is_empty() {
                let parent = &node[..node.len() - 1];
                if !set.contains(parent) {
                    return Err(LocalizerError::NotPrefixClosed(node.clone()));
                }
                *successors.entry(parent).or_insert(0) += 1;
            }
        }
        for (parent, count) in successors {
            if count as u64 > k {
                return Err(LocalizerError::TooManySuccessors(parent.to_vec(), count, k));
            }
        }
        Ok(KTree { k, nodes })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn nodes(&self) -> &[Vec<u64>] {
        &self.nodes
    }

    pub fn contains(&self, node: &[u64]) -> bool {
        self.nodes
            .binary_search_by(|probe| (probe.len(), probe.as_slice()).cmp(&(node.len(), node)))
            .is_ok()
    }

    /// Distinct values occurring at position `level` over all nodes, i.e. the
    /// last entries of the nodes of length `level + 1`.
    pub fn level_values(&self, level: usize) -> BTreeSet<u64> {
        self.nodes
            .iter()
            .filter(|n| n.len() == level + 1)
            .map(|n| n[level])
            .collect()
    }

    /// The full binary tree of all 0/1 sequences of length at most `depth`.
    pub fn full_binary(depth: usize) -> Self {
        let mut nodes = vec![vec![]];
        let mut frontier: Vec<Vec<u64>> = vec![vec![]];
        for _ in 0..depth {
            let mut next = Vec::new();
            for node in &frontier {
                for bit in 0..2u64 {
                    let mut child = node.clone();
                    child.push(bit);
                    nodes.push(child.clone());
                    next.push(child);
                }
            }
            frontier = next;
        }
        KTree::new(2, nodes).expect("full binary tree is a valid 2-tree")
    }
}

/// True when every initial segment of `f` (including `f` itself) is a node.
pub fn ktree_localizes(f: &[u64], t: &KTree) -> bool {
    (0..=f.len()).all(|i| t.contains(&f[..i]))
}

/// Covers the branches of `t` through positions `0..depth` by a slalom:
/// cell `n` contains every value a branch can take at position `n`, padded
/// with the smallest unused naturals up to size `n + 1`.  Fails when some
/// level carries more distinct values than its cell can hold.
pub fn ktree_to_slalom_cover(t: &KTree, depth: usize) -> Result<Slalom, LocalizerError> {
    let mut cells = Vec::with_capacity(depth);
    for n in 0..depth {
        let values = t.level_values(n);
        if values.len() > n + 1 {
            return Err(LocalizerError::CellOverflow {
                level: n,
                count: values.len(),
                capacity: n + 1,
            });
        }
        let mut cell: Vec<u64> = values.into_iter().collect();
        let mut candidate = 0u64;
        while cell.len() < n + 1 {
            if !cell.contains(&candidate) {
                cell.push(candidate);
            }
            candidate += 1;
        }
        cell.sort_unstable();
        cells.push(cell);
    }
    Slalom::new(cells)
}
