//! Largeness of a set against a finite universe of block families, the
//! counting equivalence behind largeness transfer, the 2/3-splitting
//! construction, and the derived index set of a family.
//!
//! A set `X` is `(l,k)`-large against a universe of `l`-block families when
//! every family meets `X` in more than `k` points per block from some index
//! on.  The transfer oracle checks, by exhaustive enumeration, that per-block
//! largeness of all position-selected subfamilies is exactly complement
//! smallness.

use crate::finsets::{BlockFamily, FinsetError, WSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LargenessError {
    #[error("need k < l, got l={l}, k={k}")]
    KNotBelowL { l: usize, k: usize },
    #[error("family {family} block {block} has {size} elements, expected {expected}")]
    WrongBlockSize { family: usize, block: usize, size: usize, expected: usize },
    #[error("family {family} block {block} reaches {element}, beyond the set horizon {horizon}")]
    HorizonMismatch { family: usize, block: usize, element: u64, horizon: u64 },
    #[error("positions must be a strictly increasing nonempty list")]
    BadPositions,
    #[error("block {block} has {size} elements, positions reach index {max_position}")]
    PositionOutOfRange { block: usize, size: usize, max_position: usize },
    #[error("family has {have} blocks, need at least {need}")]
    TooFewBlocks { need: usize, have: usize },
    #[error("l must be at least 1")]
    LZero,
    #[error("base set must be strictly increasing")]
    BaseNotIncreasing,
    #[error("base set has {size} elements, not a positive multiple of l={l}")]
    SizeNotMultiple { size: usize, l: usize },
    #[error("need k+1 < l, got l={l}, k={k}")]
    KPlusOneNotBelowL { l: usize, k: usize },
    #[error("cannot split {size} points into at least {min_pieces} pieces of size 2 or 3")]
    SplitInfeasible { size: usize, min_pieces: usize },
    #[error("f must be defined on all {blocks} block indices, got {have} values")]
    FTooShort { blocks: usize, have: usize },
    #[error(transparent)]
    Finset(#[from] FinsetError),
}

/// A finite collection of block families standing in for every ground
/// sequence the largeness definition quantifies over.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyUniverse {
    pub label: String,
    pub families: Vec<BlockFamily>,
}

impl FamilyUniverse {
    pub fn new(label: impl Into<String>, families: Vec<BlockFamily>) -> Self {
        FamilyUniverse { label: label.into(), families }
    }
}

/// The offending position when a largeness check fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargenessCounterexample {
    pub family: usize,
    pub block: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargenessVerdict {
    pub large: bool,
    pub counterexample: Option<LargenessCounterexample>,
}

/// Is `X` `(l,k)`-large against `U` from `tail_start` on?  Every family must
/// consist of `l`-element blocks below the horizon of `X`; failure reports
/// the first family and block where `|K_n ∩ X| <= k`.
pub fn is_lk_large(
    x: &WSet,
    u: &FamilyUniverse,
    l: usize,
    k: usize,
    tail_start: usize,
) -> Result<LargenessVerdict, LargenessError> {
    if k >= l {
        return Err(LargenessError::KNotBelowL { l, k });
    }
    for (fi, fam) in u.families.iter().enumerate() {
        for (bi, block) in fam.blocks().iter().enumerate() {
            if block.len() != l {
                return Err(LargenessError::WrongBlockSize {
                    family: fi,
                    block: bi,
                    size: block.len(),
                    expected: l,
                });
            }
            let last = *block.last().expect("blocks are nonempty");
            if last >= x.horizon() {
                return Err(LargenessError::HorizonMismatch {
                    family: fi,
                    block: bi,
                    element: last,
                    horizon: x.horizon(),
                });
            }
        }
    }
    for (fi, fam) in u.families.iter().enumerate() {
        for (bi, block) in fam.blocks().iter().enumerate().skip(tail_start) {
            let count = block.iter().filter(|&&v| x.contains(v)).count();
            if count <= k {
                return Ok(LargenessVerdict {
                    large: false,
                    counterexample: Some(LargenessCounterexample {
                        family: fi,
                        block: bi,
                        count,
                    }),
                });
            }
        }
    }
    Ok(LargenessVerdict { large: true, counterexample: None })
}

/// Selects the `positions`-indexed elements (under increasing enumeration)
/// out of every block.  Positions must be strictly increasing; every block
/// must be long enough.
pub fn subset_family(
    f: &BlockFamily,
    positions: &[usize],
) -> Result<BlockFamily, LargenessError> {
    if positions.is_empty() || positions.windows(2).any(|p| p[0] >= p[1]) {
        return Err(LargenessError::BadPositions);
    }
    let max_position = *positions.last().expect("nonempty");
    let mut blocks = Vec::with_capacity(f.len());
    for (bi, block) in f.blocks().iter().enumerate() {
        if block.len() <= max_position {
            return Err(LargenessError::PositionOutOfRange {
                block: bi,
                size: block.len(),
                max_position,
            });
        }
        blocks.push(positions.iter().map(|&i| block[i]).collect());
    }
    Ok(BlockFamily::with_computed_covering(f.horizon(), blocks)?)
}

/// Replaces blocks `ln .. ln+l-1` by their union, for each complete group of
/// `l` consecutive blocks in canonical order; a trailing incomplete group is
/// dropped.
pub fn concat_family(f: &BlockFamily, l: usize) -> Result<BlockFamily, LargenessError> {
    if l == 0 {
        return Err(LargenessError::LZero);
    }
    if f.len() < l {
        return Err(LargenessError::TooFewBlocks { need: l, have: f.len() });
    }
    let blocks: Vec<Vec<u64>> = f
        .blocks()
        .chunks_exact(l)
        .map(|group| {
            let mut merged: Vec<u64> = group.iter().flatten().copied().collect();
            merged.sort_unstable();
            merged
        })
        .collect();
    Ok(BlockFamily::with_computed_covering(f.horizon(), blocks)?)
}

/// Outcome of the exhaustive transfer check on one base set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferOutcome {
    /// Every `l`-subset of the base meets `X` in more than `k` points.
    pub all_selections_large: bool,
    /// `|base \ X| < l - k`.
    pub complement_small: bool,
    /// An `l`-subset meeting `X` in at most `k` points, when one exists.
    pub failing_selection: Option<Vec<u64>>,
}

impl TransferOutcome {
    /// The two sides agree — the counting equivalence held on this instance.
    pub fn equivalent(&self) -> bool {
        self.all_selections_large == self.complement_small
    }
}

/// Exhaustively compares, over all `l`-subsets `A` of `base`, the statement
/// "every `A` meets `X` in more than `k` points" with the counting bound
/// `|base \ X| < l - k`.
pub fn transfer_counting_check(
    base: &[u64],
    x: &WSet,
    l: usize,
    k: usize,
) -> Result<TransferOutcome, LargenessError> {
    if base.windows(2).any(|p| p[0] >= p[1]) {
        return Err(LargenessError::BaseNotIncreasing);
    }
    if k + 1 >= l {
        return Err(LargenessError::KPlusOneNotBelowL { l, k });
    }
    if base.is_empty() || base.len() % l != 0 {
        return Err(LargenessError::SizeNotMultiple { size: base.len(), l });
    }
    let in_x: Vec<bool> = base.iter().map(|&v| x.contains(v)).collect();
    let outside = in_x.iter().filter(|&&b| !b).count();
    let complement_small = outside < l - k;

    let mut failing_selection = None;
    let mut indices: Vec<usize> = (0..l).collect();
    'combos: loop {
        let hits = indices.iter().filter(|&&i| in_x[i]).count();
        if hits <= k {
            failing_selection = Some(indices.iter().map(|&i| base[i]).collect());
            break;
        }
        let n = base.len();
        let mut i = l;
        loop {
            if i == 0 {
                break 'combos;
            }
            i -= 1;
            if indices[i] != i + n - l {
                break;
            }
            if i == 0 {
                break 'combos;
            }
        }
        indices[i] += 1;
        for j in i + 1..l {
            indices[j] = indices[j - 1] + 1;
        }
    }
    Ok(TransferOutcome {
        all_selections_large: failing_selection.is_none(),
        complement_small,
        failing_selection,
    })
}

/// Summary of an exhaustive transfer sweep over all base sizes and sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferSweep {
    pub instances_checked: u64,
    pub failures: Vec<TransferSweepFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferSweepFailure {
    pub l: usize,
    pub k: usize,
    pub base_size: usize,
    pub x_mask: u64,
    pub outcome: TransferOutcome,
}

/// Runs [`transfer_counting_check`] for every `l <= l_max`, every `k` with
/// `k + 1 < l`, every base `[0, l*m)` with `l*m <= base_cap`, and every
/// subset `X` of the base.  The equivalence must hold on all of them.
pub fn transfer_exhaustive_sweep(l_max: usize, base_cap: usize) -> TransferSweep {
    let mut sweep = TransferSweep { instances_checked: 0, failures: Vec::new() };
    for l in 2..=l_max {
        for k in 0..l.saturating_sub(1) {
            for m in 1.. {
                let size = l * m;
                if size > base_cap {
                    break;
                }
                let base: Vec<u64> = (0..size as u64).collect();
                for x_mask in 0u64..(1u64 << size) {
                    let elements: Vec<u64> =
                        (0..size as u64).filter(|&v| x_mask & (1 << v) != 0).collect();
                    let x = WSet::new(size as u64, elements).expect("mask is sorted");
                    let outcome = transfer_counting_check(&base, &x, l, k)
                        .expect("parameters are in range");
                    sweep.instances_checked += 1;
                    if !outcome.equivalent() {
                        sweep.failures.push(TransferSweepFailure {
                            l,
                            k,
                            base_size: size,
                            x_mask,
                            outcome,
                        });
                    }
                }
            }
        }
    }
    sweep
}

/// Splits a set into pieces of size 2 and 3: consecutive pairs in increasing
/// order, with the final pair widened to a triple when the size is odd.
pub fn split_into_2_3(
    k_set: &[u64],
    min_pieces: usize,
) -> Result<Vec<Vec<u64>>, LargenessError> {
    if k_set.windows(2).any(|p| p[0] >= p[1]) {
        return Err(LargenessError::BaseNotIncreasing);
    }
    let size = k_set.len();
    if size < 2 || size / 2 < min_pieces {
        return Err(LargenessError::SplitInfeasible { size, min_pieces });
    }
    let mut pieces: Vec<Vec<u64>> = k_set.chunks(2).map(|c| c.to_vec()).collect();
    if size % 2 == 1 {
        let leftover = pieces.pop().expect("odd size leaves a singleton chunk");
        pieces
            .last_mut()
            .expect("size >= 3 when odd")
            .extend(leftover);
    }
    Ok(pieces)
}

/// The indices of the blocks meeting `X`, as a windowed set over the number
/// of blocks (horizon at least 1 so the empty family stays representable).
pub fn derived_y(f: &BlockFamily, x: &WSet) -> WSet {
    let indices = f
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, block)| block.iter().any(|&v| x.contains(v)))
        .map(|(n, _)| n as u64);
    WSet::from_sorted_iter(f.len().max(1) as u64, indices)
        .expect("indices are increasing and below the block count")
}

/// Which disjunct of the f-largeness alternative holds on the window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FLargeVerdict {
    /// Some block is too small: `|K_n| < f(n) + 2`.
    SizeViolation { block: usize, size: usize, bound: u64 },
    /// Blocks from `tail_start` on where `|K_n ∩ X| > f(n)`.
    Witnesses { indices: Vec<usize> },
    /// All blocks are big enough yet none meets `X` often enough.
    Neither { first_block: usize, count: usize, bound: u64 },
}

/// Checks the size/meeting alternative: either some block has fewer than
/// `f(n) + 2` elements, or blocks past `tail_start` meet `X` in more than
/// `f(n)` points.  `f` must cover every block index.
pub fn f_large_check(
    x: &WSet,
    fam: &BlockFamily,
    f: &[u64],
    tail_start: usize,
) -> Result<FLargeVerdict, LargenessError> {
    if f.len() < fam.len() {
        return Err(LargenessError::FTooShort { blocks: fam.len(), have: f.len() });
    }
    for (n, block) in fam.blocks().iter().enumerate() {
        if (block.len() as u64) < f[n] + 2 {
            return Ok(FLargeVerdict::SizeViolation {
                block: n,
                size: block.len(),
                bound: f[n],
            });
        }
    }
    let indices: Vec<usize> = fam
        .blocks()
        .iter()
        .enumerate()
        .skip(tail_start)
        .filter(|(n, block)| {
            block.iter().filter(|&&v| x.contains(v)).count() as u64 > f[*n]
        })
        .map(|(n, _)| n)
        .collect();
    if !indices.is_empty() {
        return Ok(FLargeVerdict::Witnesses { indices });
    }
    let first_block = tail_start.min(fam.len().saturating_sub(1));
    let count = fam
        .blocks()
        .get(first_block)
        .map_or(0, |b| b.iter().filter(|&&v| x.contains(v)).count());
    Ok(FLargeVerdict::Neither {
        first_block,
        count,
        bound: f.get(first_block).copied().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wset(h: u64, v: &[u64]) -> WSet {
        WSet::new(h, v.to_vec()).unwrap()
    }

    fn fam(h: u64, blocks: &[&[u64]], covering: bool) -> BlockFamily {
        BlockFamily::new(h, blocks.iter().map(|b| b.to_vec()).collect(), covering).unwrap()
    }

    #[test]
    fn full_set_is_large_against_anything() {
        let x = WSet::full(12).unwrap();
        let u = FamilyUniverse::new(
            "pairs",
            vec![
                fam(12, &[&[0, 1], &[2, 3], &[4, 5]], true),
                fam(12, &[&[6, 11], &[7, 9]], false),
            ],
        );
        let v = is_lk_large(&x, &u, 2, 0, 0).unwrap();
        assert!(v.large);
        assert_eq!(v.counterexample, None);
    }

    #[test]
    fn evens_fail_against_odd_blocks() {
        let x = WSet::from_sorted_iter(8, (0..8).step_by(2)).unwrap();
        let u = FamilyUniverse::new("odds", vec![fam(8, &[&[1, 3], &[5, 7]], false)]);
        let v = is_lk_large(&x, &u, 2, 0, 0).unwrap();
        assert!(!v.large);
        assert_eq!(
            v.counterexample,
            Some(LargenessCounterexample { family: 0, block: 0, count: 0 })
        );
    }

    #[test]
    fn tail_start_skips_early_failures() {
        let x = wset(9, &[3, 4, 5, 6, 7, 8]);
        let u = FamilyUniverse::new(
            "mixed",
            vec![fam(9, &[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]], true)],
        );
        assert!(!is_lk_large(&x, &u, 3, 1, 0).unwrap().large);
        assert!(is_lk_large(&x, &u, 3, 1, 1).unwrap().large);
    }

    #[test]
    fn wrong_block_size_rejected() {
        let x = WSet::full(6).unwrap();
        let u = FamilyUniverse::new("bad", vec![fam(6, &[&[0, 1, 2]], false)]);
        assert_eq!(
            is_lk_large(&x, &u, 2, 0, 0),
            Err(LargenessError::WrongBlockSize { family: 0, block: 0, size: 3, expected: 2 })
        );
        assert_eq!(
            is_lk_large(&x, &u, 2, 2, 0),
            Err(LargenessError::KNotBelowL { l: 2, k: 2 })
        );
    }

    #[test]
    fn subset_family_selects_positions() {
        let f = fam(10, &[&[0, 1, 2], &[5, 7, 9]], false);
        let g = subset_family(&f, &[0, 2]).unwrap();
        assert_eq!(g.blocks(), &[vec![0, 2], vec![5, 9]]);
        assert!(!g.covering());

        let all = subset_family(&f, &[0, 1, 2]).unwrap();
        assert_eq!(all.blocks(), f.blocks());

        let minima = subset_family(&f, &[0]).unwrap();
        assert_eq!(minima.blocks(), &[vec![0], vec![5]]);

        assert_eq!(
            subset_family(&f, &[0, 3]),
            Err(LargenessError::PositionOutOfRange { block: 0, size: 3, max_position: 3 })
        );
    }

    #[test]
    fn subset_family_reorders_interleaved_results() {
        let f = fam(11, &[&[0, 10], &[1, 2]], false);
        let g = subset_family(&f, &[1]).unwrap();
        // Selected blocks {10} and {2} re-sort by minimum.
        assert_eq!(g.blocks(), &[vec![2], vec![10]]);
    }

    #[test]
    fn concat_family_groups_consecutive_blocks() {
        let f = fam(4, &[&[0], &[1], &[2], &[3]], true);
        let g = concat_family(&f, 2).unwrap();
        assert_eq!(g.blocks(), &[vec![0, 1], vec![2, 3]]);
        assert!(g.covering());

        let id = concat_family(&f, 1).unwrap();
        assert_eq!(id.blocks(), f.blocks());

        let five = fam(5, &[&[0], &[1], &[2], &[3], &[4]], true);
        let g = concat_family(&five, 2).unwrap();
        assert_eq!(g.len(), 2);
        // Dropping the trailing singleton still leaves a contiguous tile [0,4).
        assert!(g.covering());

        let sparse = fam(10, &[&[0, 1], &[4, 5], &[8, 9]], false);
        let g = concat_family(&sparse, 3).unwrap();
        assert_eq!(g.blocks(), &[vec![0, 1, 4, 5, 8, 9]]);
        assert!(!g.covering());
    }

    #[test]
    fn transfer_check_matches_hand_counts() {
        // Base [0,6), X misses only 5: both sides true for l=3, k=1.
        let base: Vec<u64> = (0..6).collect();
        let x = wset(6, &[0, 1, 2, 3, 4]);
        let out = transfer_counting_check(&base, &x, 3, 1).unwrap();
        assert!(out.all_selections_large && out.complement_small && out.equivalent());

        // X misses {4,5}: selections such as {3,4,5} meet X once, both sides
        // false.  The reported witness is the lexicographically first one.
        let x = wset(6, &[0, 1, 2, 3]);
        let out = transfer_counting_check(&base, &x, 3, 1).unwrap();
        assert!(!out.all_selections_large && !out.complement_small && out.equivalent());
        let witness = out.failing_selection.as_deref().unwrap();
        assert_eq!(witness.len(), 3);
        assert!(witness.iter().filter(|&&v| x.contains(v)).count() <= 1);
        assert_eq!(witness, &[0, 4, 5]);

        // Base inside X: trivially both sides true.
        let x = WSet::full(6).unwrap();
        let out = transfer_counting_check(&base, &x, 3, 1).unwrap();
        assert!(out.all_selections_large && out.complement_small);
    }

    #[test]
    fn transfer_sweep_small_parameters() {
        let sweep = transfer_exhaustive_sweep(3, 6);
        assert!(sweep.failures.is_empty());
        // l=2,k=0: sizes 2,4,6 -> 4+16+64 masks; l=3,k in {0,1}: sizes 3,6 ->
        // 2*(8+64) masks.
        assert_eq!(sweep.instances_checked, 4 + 16 + 64 + 2 * (8 + 64));
    }

    #[test]
    fn split_examples() {
        assert_eq!(
            split_into_2_3(&[0, 1, 2, 3, 4, 5, 6], 3).unwrap(),
            vec![vec![0, 1], vec![2, 3], vec![4, 5, 6]]
        );
        assert_eq!(split_into_2_3(&[4, 9], 1).unwrap(), vec![vec![4, 9]]);
        assert_eq!(
            split_into_2_3(&[0, 1, 2, 3], 3),
            Err(LargenessError::SplitInfeasible { size: 4, min_pieces: 3 })
        );
        assert_eq!(
            split_into_2_3(&[0, 1, 2], 1).unwrap(),
            vec![vec![0, 1, 2]]
        );
    }

    #[test]
    fn derived_y_examples() {
        let f = fam(6, &[&[0, 1], &[2, 3], &[4, 5]], true);
        assert_eq!(derived_y(&f, &wset(6, &[2])).elements(), &[1]);
        assert_eq!(derived_y(&f, &WSet::full(6).unwrap()).elements(), &[0, 1, 2]);
        assert_eq!(derived_y(&f, &wset(6, &[1, 4])).elements(), &[0, 2]);
        assert_eq!(derived_y(&f, &wset(6, &[])).elements(), &[] as &[u64]);
        assert_eq!(derived_y(&f, &wset(6, &[2])).horizon(), 3);
    }

    #[test]
    fn f_large_verdicts() {
        let f = fam(9, &[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]], true);
        // f(n) = 2 forces size >= 4: size violation at block 0.
        assert_eq!(
            f_large_check(&WSet::full(9).unwrap(), &f, &[2, 2, 2], 0).unwrap(),
            FLargeVerdict::SizeViolation { block: 0, size: 3, bound: 2 }
        );
        // f(n) = 1, X = everything: every block meets X three times > 1.
        assert_eq!(
            f_large_check(&WSet::full(9).unwrap(), &f, &[1, 1, 1], 0).unwrap(),
            FLargeVerdict::Witnesses { indices: vec![0, 1, 2] }
        );
        // f(n) = 1, X empty: sizes fine, no witnesses.
        assert_eq!(
            f_large_check(&wset(9, &[]), &f, &[1, 1, 1], 0).unwrap(),
            FLargeVerdict::Neither { first_block: 0, count: 0, bound: 1 }
        );
        assert_eq!(
            f_large_check(&wset(9, &[]), &f, &[1, 1], 0),
            Err(LargenessError::FTooShort { blocks: 3, have: 2 })
        );
    }

    proptest! {
        /// Concatenated blocks contain their constituents, so complement
        /// smallness transfers down to every constituent block.
        #[test]
        fn concat_transfers_complement_smallness(
            seed_blocks in proptest::collection::vec(1u64..4, 4..9),
            mask in proptest::collection::vec(any::<bool>(), 40),
            l in 2usize..4,
        ) {
            // Build consecutive blocks with the given sizes.
            let mut blocks = Vec::new();
            let mut next = 0u64;
            for &size in &seed_blocks {
                blocks.push((next..next + size).collect::<Vec<u64>>());
                next += size;
            }
            let horizon = next.max(1);
            let f = BlockFamily::new(horizon, blocks, true).unwrap();
            prop_assume!(f.len() >= l);
            let elements: Vec<u64> =
                (0..horizon).filter(|&v| mask[v as usize % mask.len()]).collect();
            let x = WSet::new(horizon, elements).unwrap();
            let g = concat_family(&f, l).unwrap();
            for (n, merged) in g.blocks().iter().enumerate() {
                let missing = merged.iter().filter(|&&v| !x.contains(v)).count();
                for j in 0..l {
                    let constituent = &f.blocks()[n * l + j];
                    let constituent_missing =
                        constituent.iter().filter(|&&v| !x.contains(v)).count();
                    prop_assert!(constituent_missing <= missing);
                }
            }
        }

        /// If a union over a 2-element index block meets X at all, the
        /// derived index set meets that index block.
        #[test]
        fn derived_y_meets_index_blocks(
            sizes in proptest::collection::vec(1u64..4, 4..8),
            mask in proptest::collection::vec(any::<bool>(), 30),
        ) {
            let mut blocks = Vec::new();
            let mut next = 0u64;
            for &size in &sizes {
                blocks.push((next..next + size).collect::<Vec<u64>>());
                next += size;
            }
            let horizon = next.max(1);
            let f = BlockFamily::new(horizon, blocks, true).unwrap();
            let elements: Vec<u64> =
                (0..horizon).filter(|&v| mask[v as usize % mask.len()]).collect();
            let x = WSet::new(horizon, elements).unwrap();
            let y = derived_y(&f, &x);
            // Index blocks {0,1}, {2,3}, ...
            let pairs = f.len() / 2;
            for p in 0..pairs {
                let union_meets = f.blocks()[2 * p].iter().chain(&f.blocks()[2 * p + 1])
                    .any(|&v| x.contains(v));
                let y_meets = y.contains(2 * p as u64) || y.contains(2 * p as u64 + 1);
                prop_assert_eq!(union_meets, y_meets);
            }
        }

        /// Splitting yields only 2/3-sized disjoint pieces covering the set.
        #[test]
        fn split_pieces_cover(set in proptest::collection::btree_set(0u64..50, 2..20)) {
            let k_set: Vec<u64> = set.into_iter().collect();
            let pieces = split_into_2_3(&k_set, k_set.len() / 2).unwrap();
            prop_assert_eq!(pieces.len(), k_set.len() / 2);
            for piece in &pieces {
                prop_assert!(piece.len() == 2 || piece.len() == 3);
            }
            let mut flat: Vec<u64> = pieces.iter().flatten().copied().collect();
            flat.sort_unstable();
            prop_assert_eq!(flat, k_set);
        }
    }
}
