//! Windowed finite stand-ins for infinite sets of naturals.
//!
//! A [`WSet`] is a strictly increasing list of naturals together with the
//! horizon below which membership is fully known.  A [`BlockFamily`] is a
//! finite sequence of pairwise disjoint finite blocks, canonically ordered by
//! minimum element; its `covering` flag asserts that the blocks tile a
//! contiguous interval with no gaps.  An [`IntervalPartition`] is the special
//! case cut out of `0 = k_0 < k_1 < ...` by consecutive cutpoints.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors for windowed-set construction and enumeration.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum FinsetError {
    #[error("window horizon must be at least 1")]
    EmptyWindow,
    #[error("elements must be strictly increasing ({0} is followed by {1})")]
    NotIncreasing(u64, u64),
    #[error("element {element} is at or beyond the horizon {horizon}")]
    BeyondHorizon { element: u64, horizon: u64 },
    #[error("enumeration index {index} out of window ({len} elements known)")]
    IndexBeyondWindow { index: usize, len: usize },
    #[error("need at least {need} elements, have {have}")]
    TooFewElements { need: usize, have: usize },
    #[error("block {0} is empty")]
    EmptyBlock(usize),
    #[error("block {0} repeats the element {1}")]
    DuplicateInBlock(usize, u64),
    #[error("blocks {0} and {1} are not disjoint")]
    OverlappingBlocks(usize, usize),
    #[error("covering family skips the point {0}")]
    CoveringGap(u64),
    #[error("cutpoints must start at 0")]
    CutpointsStart,
}

/// An initial segment `[0, N)` of the naturals, `N >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Window(u64);

impl Window {
    pub fn new(horizon: u64) -> Result<Self, FinsetError> {
        if horizon == 0 {
            return Err(FinsetError::EmptyWindow);
        }
        Ok(Window(horizon))
    }

    /// The exclusive upper bound of the window.
    pub fn horizon(self) -> u64 {
        self.0
    }
}

/// A finite set of naturals known exactly below a horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawWSet", into = "RawWSet")]
pub struct WSet {
    window: Window,
    elements: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawWSet {
    horizon: u64,
    elements: Vec<u64>,
}

impl TryFrom<RawWSet> for WSet {
    type Error = FinsetError;
    fn try_from(raw: RawWSet) -> Result<Self, FinsetError> {
        WSet::new(raw.horizon, raw.elements)
    }
}

impl From<WSet> for RawWSet {
    fn from(x: WSet) -> RawWSet {
        RawWSet { horizon: x.window.horizon(), elements: x.elements }
    }
}

impl WSet {
    /// Builds a windowed set; elements must be strictly increasing and below
    /// the horizon.
    pub fn new(horizon: u64, elements: Vec<u64>) -> Result<Self, FinsetError> {
        let window = Window::new(horizon)?;
        for pair in elements.windows(2) {
            if pair[0] >= pair[1] {
                return Err(FinsetError::NotIncreasing(pair[0], pair[1]));
            }
        }
        if let Some(&last) = elements.last() {
            if last >= horizon {
                return Err(FinsetError::BeyondHorizon { element: last, horizon });
            }
        }
        Ok(WSet { window, elements })
    }

    /// The full window `[0, N)` as a set.
    pub fn full(horizon: u64) -> Result<Self, FinsetError> {
        Self::new(horizon, (0..horizon).collect())
    }

    /// Collects an iterator of strictly increasing values.
    pub fn from_sorted_iter<I: IntoIterator<Item = u64>>(
        horizon: u64,
        iter: I,
    ) -> Result<Self, FinsetError> {
        Self::new(horizon, iter.into_iter().collect())
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn horizon(&self) -> u64 {
        self.window.horizon()
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.elements.binary_search(&v).is_ok()
    }

    /// Number of elements in the half-open range `[lo, hi)`.
    pub fn count_in(&self, lo: u64, hi: u64) -> usize {
        if lo >= hi {
            return 0;
        }
        let a = self.elements.partition_point(|&x| x < lo);
        let b = self.elements.partition_point(|&x| x < hi);
        b - a
    }

    /// Elements in the half-open range `[lo, hi)`.
    pub fn slice_in(&self, lo: u64, hi: u64) -> &[u64] {
        if lo >= hi {
            return &[];
        }
        let a = self.elements.partition_point(|&x| x < lo);
        let b = self.elements.partition_point(|&x| x < hi);
        &self.elements[a..b]
    }
}

/// `mu(X, n)`: the n-th smallest element of `X` (0-based), or an error when
/// the window holds fewer than `n + 1` elements.
pub fn mu(x: &WSet, n: usize) -> Result<u64, FinsetError> {
    x.elements
        .get(n)
        .copied()
        .ok_or(FinsetError::IndexBeyondWindow { index: n, len: x.elements.len() })
}

/// A finite sequence of pairwise disjoint nonempty blocks, ordered by their
/// minimum elements.  `covering = true` asserts the blocks tile a contiguous
/// interval of naturals with no internal gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockFamily", into = "RawBlockFamily")]
pub struct BlockFamily {
    window: Window,
    covering: bool,
    blocks: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct RawBlockFamily {
    horizon: u64,
    covering: bool,
    blocks: Vec<Vec<u64>>,
}

impl TryFrom<RawBlockFamily> for BlockFamily {
    type Error = FinsetError;
    fn try_from(raw: RawBlockFamily) -> Result<Self, FinsetError> {
        BlockFamily::new(raw.horizon, raw.blocks, raw.covering)
    }
}

impl From<BlockFamily> for RawBlockFamily {
    fn from(f: BlockFamily) -> RawBlockFamily {
        RawBlockFamily {
            horizon: f.window.horizon(),
            covering: f.covering,
            blocks: f.blocks,
        }
    }
}

impl BlockFamily {
    /// Builds a family, sorting each block and the block list into canonical
    /// order.  Rejects empty or overlapping blocks, elements at or beyond the
    /// horizon, and a `covering` claim that leaves gaps.
    pub fn new(
        horizon: u64,
        blocks: Vec<Vec<u64>>,
        covering: bool,
    ) -> Result<Self, FinsetError> {
        let window = Window::new(horizon)?;
        let mut blocks = blocks;
        for (i, b) in blocks.iter_mut().enumerate() {
            if b.is_empty() {
                return Err(FinsetError::EmptyBlock(i));
            }
            b.sort_unstable();
            for pair in b.windows(2) {
                if pair[0] == pair[1] {
                    return Err(FinsetError::DuplicateInBlock(i, pair[0]));
                }
            }
            let last = *b.last().unwrap();
            if last >= horizon {
                return Err(FinsetError::BeyondHorizon { element: last, horizon });
            }
        }
        blocks.sort_by_key(|b| b[0]);
        // Disjointness across all blocks: merge all elements and look for a
        // duplicate, remembering which blocks they came from.
        let mut tagged: Vec<(u64, usize)> = Vec::new();
        for (i, b) in blocks.iter().enumerate() {
            for &v in b {
                tagged.push((v, i));
            }
        }
        tagged.sort_unstable();
        for pair in tagged.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(FinsetError::OverlappingBlocks(pair[0].1, pair[1].1));
            }
        }
        if covering && !tagged.is_empty() {
            for pair in tagged.windows(2) {
                if pair[1].0 != pair[0].0 + 1 {
                    return Err(FinsetError::CoveringGap(pair[0].0 + 1));
                }
            }
        }
        Ok(BlockFamily { window, covering, blocks })
    }

    /// Builds a family and computes the covering flag from the blocks
    /// themselves: `true` exactly when they tile a contiguous interval.
    pub fn with_computed_covering(
        horizon: u64,
        blocks: Vec<Vec<u64>>,
    ) -> Result<Self, FinsetError> {
        let f = BlockFamily::new(horizon, blocks, false)?;
        if f.union_is_contiguous() {
            BlockFamily::new(f.horizon(), f.blocks.clone(), true)
        } else {
            Ok(f)
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn horizon(&self) -> u64 {
        self.window.horizon()
    }

    pub fn covering(&self) -> bool {
        self.covering
    }

    pub fn blocks(&self) -> &[Vec<u64>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Largest element over all blocks, if any.
    pub fn max_element(&self) -> Option<u64> {
        self.blocks.iter().filter_map(|b| b.last().copied()).max()
    }

    /// True when the union of blocks is a contiguous run of naturals.
    pub fn union_is_contiguous(&self) -> bool {
        let mut all: Vec<u64> = self.blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        all.windows(2).all(|p| p[1] == p[0] + 1)
    }
}

/// True when every block of `f` has more than `k` elements (the family lives
/// in the class `P_k`).
pub fn in_p_k(f: &BlockFamily, k: usize) -> bool {
    f.blocks().iter().all(|b| b.len() > k)
}

/// The consecutive-gap family of `x`: blocks `[mu(x,n), mu(x,n+1))` for
/// `n < |x| - 1`.  Needs at least two elements; the result tiles
/// `[mu(x,0), mu(x,last))` and carries `covering = true`.
pub fn intervals_of(x: &WSet) -> Result<BlockFamily, FinsetError> {
    if x.len() < 2 {
        return Err(FinsetError::TooFewElements { need: 2, have: x.len() });
    }
    let blocks: Vec<Vec<u64>> = x
        .elements()
        .windows(2)
        .map(|p| (p[0]..p[1]).collect())
        .collect();
    BlockFamily::new(x.horizon(), blocks, true)
}

/// Cutpoints `0 = k_0 < k_1 < ... < k_n` inducing blocks `[k_i, k_{i+1})`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCutpoints", into = "RawCutpoints")]
pub struct IntervalPartition {
    cutpoints: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawCutpoints {
    cutpoints: Vec<u64>,
}

impl TryFrom<RawCutpoints> for IntervalPartition {
    type Error = FinsetError;
    fn try_from(raw: RawCutpoints) -> Result<Self, FinsetError> {
        IntervalPartition::new(raw.cutpoints)
    }
}

impl From<IntervalPartition> for RawCutpoints {
    fn from(p: IntervalPartition) -> RawCutpoints {
        RawCutpoints { cutpoints: p.cutpoints }
    }
}

impl IntervalPartition {
    pub fn new(cutpoints: Vec<u64>) -> Result<Self, FinsetError> {
        match cutpoints.first() {
            Some(0) => {}
            _ => return Err(FinsetError::CutpointsStart),
        }
        for pair in cutpoints.windows(2) {
            if pair[0] >= pair[1] {
                return Err(FinsetError::NotIncreasing(pair[0], pair[1]));
            }
        }
        Ok(IntervalPartition { cutpoints })
    }

    pub fn cutpoints(&self) -> &[u64] {
        &self.cutpoints
    }

    /// Number of induced blocks.
    pub fn len(&self) -> usize {
        self.cutpoints.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Materializes the induced covering block family over `[0, k_last)`.
    pub fn to_block_family(&self) -> Result<BlockFamily, FinsetError> {
        let horizon = self.cutpoints.last().copied().unwrap_or(0).max(1);
        let blocks: Vec<Vec<u64>> = self
            .cutpoints
            .windows(2)
            .map(|p| (p[0]..p[1]).collect())
            .collect();
        BlockFamily::new(horizon, blocks, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_enumerates_in_order() {
        let x = WSet::new(10, vec![2, 3, 7]).unwrap();
        assert_eq!(mu(&x, 0), Ok(2));
        assert_eq!(mu(&x, 1), Ok(3));
        assert_eq!(mu(&x, 2), Ok(7));
        assert_eq!(
            mu(&x, 3),
            Err(FinsetError::IndexBeyondWindow { index: 3, len: 3 })
        );
    }

    #[test]
    fn wset_rejects_disorder_and_overflow() {
        assert!(matches!(
            WSet::new(10, vec![3, 3]),
            Err(FinsetError::NotIncreasing(3, 3))
        ));
        assert!(matches!(
            WSet::new(5, vec![1, 5]),
            Err(FinsetError::BeyondHorizon { element: 5, horizon: 5 })
        ));
        assert!(WSet::new(0, vec![]).is_err());
    }

    #[test]
    fn intervals_of_consecutive() {
        let x = WSet::new(10, vec![0, 3, 6]).unwrap();
        let f = intervals_of(&x).unwrap();
        assert_eq!(f.blocks(), &[vec![0, 1, 2], vec![3, 4, 5]]);
        assert!(f.covering());
    }

    #[test]
    fn intervals_of_pair_is_single_block() {
        let x = WSet::new(3, vec![1, 2]).unwrap();
        let f = intervals_of(&x).unwrap();
        assert_eq!(f.blocks(), &[vec![1]]);
        assert!(f.covering());
    }

    #[test]
    fn intervals_of_singleton_fails() {
        let x = WSet::new(3, vec![1]).unwrap();
        assert_eq!(
            intervals_of(&x),
            Err(FinsetError::TooFewElements { need: 2, have: 1 })
        );
    }

    #[test]
    fn p_k_membership_counts_block_sizes() {
        let f = BlockFamily::new(10, vec![vec![0, 1], vec![4, 5, 6]], false).unwrap();
        assert!(in_p_k(&f, 1));
        assert!(!in_p_k(&f, 2));
        let singleton = BlockFamily::new(10, vec![vec![3]], false).unwrap();
        assert!(in_p_k(&singleton, 0));
        assert!(!in_p_k(&singleton, 1));
    }

    #[test]
    fn family_rejects_overlap_and_validates_covering() {
        assert!(matches!(
            BlockFamily::new(10, vec![vec![0, 2], vec![2, 3]], false),
            Err(FinsetError::OverlappingBlocks(0, 1))
        ));
        // {0,2},{1,3} tiles [0,4) even though blocks interleave.
        let f = BlockFamily::new(10, vec![vec![0, 2], vec![1, 3]], true).unwrap();
        assert!(f.union_is_contiguous());
        assert!(matches!(
            BlockFamily::new(10, vec![vec![0], vec![2, 3]], true),
            Err(FinsetError::CoveringGap(1))
        ));
        // Same family is fine when it does not claim to cover.
        assert!(BlockFamily::new(10, vec![vec![0], vec![2, 3]], false).is_ok());
    }

    #[test]
    fn family_canonical_order_is_by_min() {
        let f = BlockFamily::new(20, vec![vec![7, 9], vec![1, 3]], false).unwrap();
        assert_eq!(f.blocks(), &[vec![1, 3], vec![7, 9]]);
    }

    #[test]
    fn interval_partition_round_trip() {
        let p = IntervalPartition::new(vec![0, 3, 12]).unwrap();
        let f = p.to_block_family().unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f.blocks()[0], (0..3).collect::<Vec<_>>());
        assert_eq!(f.blocks()[1], (3..12).collect::<Vec<_>>());
        assert!(f.covering());
        assert_eq!(IntervalPartition::new(vec![1, 2]), Err(FinsetError::CutpointsStart));
    }

    #[test]
    fn json_round_trips() {
        let x = WSet::new(7, vec![2, 4, 5, 6]).unwrap();
        let s = serde_json::to_string(&x).unwrap();
        assert_eq!(s, r#"{"horizon":7,"elements":[2,4,5,6]}"#);
        let back: WSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, x);

        let f = BlockFamily::new(8, vec![vec![0, 1], vec![2, 3]], true).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"horizon":8,"covering":true,"blocks":[[0,1],[2,3]]}"#);
        let back: BlockFamily = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);

        // Invalid payloads are rejected at parse time.
        assert!(serde_json::from_str::<WSet>(r#"{"horizon":3,"elements":[5]}"#).is_err());
        assert!(serde_json::from_str::<BlockFamily>(
            r#"{"horizon":9,"covering":false,"blocks":[[1],[1]]}"#
        )
        .is_err());
    }

    #[test]
    fn count_in_matches_naive() {
        let x = WSet::new(50, (0..50).filter(|v| v % 3 == 0).collect()).unwrap();
        for lo in 0..20 {
            for hi in lo..25 {
                let naive = (lo..hi).filter(|&v| x.contains(v)).count();
                assert_eq!(x.count_in(lo, hi), naive);
            }
        }
    }
}
