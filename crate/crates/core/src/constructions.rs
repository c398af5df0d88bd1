//! Witness-building pipelines: the branch-complement diagnostic with its
//! chain-restriction certificate, the escaping-function / interval-partition
//! round trip with the crowding function, the guessed-pairs repartition, and
//! the staged gap-run pipeline.
//!
//! Finite 0/1 sequences are coded by the length-then-lexicographic bijection:
//! a sequence `s` gets code `2^|s| - 1 + value(s)` with `s[0]` as the most
//! significant bit.

use crate::finsets::{BlockFamily, FinsetError, IntervalPartition, WSet};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("code {code} decodes to a length-{length} sequence, but only {have} bits of the branch are known")]
    PrefixTooShort { code: u64, length: usize, have: usize },
    #[error("block {block} has {size} elements, need more than {k}")]
    BlockTooSmall { block: usize, size: usize, k: usize },
    #[error("the family must be covering")]
    NotCovering,
    #[error("g must be non-decreasing (violated at index {at})")]
    GNotIncreasing { at: usize },
    #[error("the recurrence reached {point}, beyond the domain of g")]
    GUndefinedAt { point: u64 },
    #[error("fewer than {need} points of X remain past {at} on the window")]
    WindowExhausted { at: u64, need: usize },
    #[error("g must assign a set to each of the {expected} blocks, got {have}")]
    GWrongLength { expected: usize, have: usize },
    #[error("g({block}) contains {value}, which is not in block {block}")]
    GNotSubset { block: usize, value: u64 },
    #[error("g({block}) has {size} elements, need at least 2")]
    GTooSmall { block: usize, size: usize },
    #[error("phi must be strictly increasing (violated at index {at})")]
    PhiNotIncreasing { at: usize },
    #[error("phi must be defined at {needed}, got {have} values")]
    PhiDomainTooShort { needed: usize, have: usize },
    #[error("X is too thin to build point {at} of the inner set")]
    DensityInsufficient { at: usize },
    #[error("gap endpoint {element} is beyond the set horizon {horizon}")]
    HorizonMismatch { element: u64, horizon: u64 },
    #[error(transparent)]
    Finset(#[from] FinsetError),
}

/// Code of a finite 0/1 sequence under the length-then-lexicographic
/// bijection.  The empty sequence has code 0.
pub fn code_of(bits: &[bool]) -> u64 {
    let value = bits.iter().fold(0u64, |v, &b| (v << 1) | b as u64);
    (1u64 << bits.len()) - 1 + value
}

/// Inverse of [`code_of`] (defined for codes below `2^63 - 1`).
pub fn decode(code: u64) -> Vec<bool> {
    let len = (63 - (code + 1).leading_zeros()) as usize;
    let value = code - ((1u64 << len) - 1);
    (0..len).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// A known initial segment of an infinite 0/1 branch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawBranch", into = "RawBranch")]
pub struct BranchPrefix {
    bits: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawBranch {
    bits: Vec<u8>,
}

impl TryFrom<RawBranch> for BranchPrefix {
    type Error = String;
    fn try_from(raw: RawBranch) -> Result<Self, String> {
        raw.bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(format!("bit must be 0 or 1, got {other}")),
            })
            .collect::<Result<Vec<bool>, String>>()
            .map(|bits| BranchPrefix { bits })
    }
}

impl From<BranchPrefix> for RawBranch {
    fn from(b: BranchPrefix) -> RawBranch {
        RawBranch { bits: b.bits.iter().map(|&x| x as u8).collect() }
    }
}

impl BranchPrefix {
    pub fn new(bits: Vec<bool>) -> Self {
        BranchPrefix { bits }
    }

    /// All-zero prefix of the given length.
    pub fn zeros(len: usize) -> Self {
        BranchPrefix { bits: vec![false; len] }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Does `code` decode to an initial segment of this branch?  Errors when
    /// the decoded sequence is longer than the known prefix.
    pub fn chain_contains(&self, code: u64) -> Result<bool, ConstructionError> {
        let s = decode(code);
        if s.len() > self.bits.len() {
            return Err(ConstructionError::PrefixTooShort {
                code,
                length: s.len(),
                have: self.bits.len(),
            });
        }
        Ok(s == self.bits[..s.len()])
    }
}

/// Codes below `horizon` of all 0/1 sequences that are not initial segments
/// of the branch.
pub fn branch_complement(x: &BranchPrefix, horizon: u64) -> Result<WSet, ConstructionError> {
    let mut elements = Vec::new();
    for code in 0..horizon {
        if !x.chain_contains(code)? {
            elements.push(code);
        }
    }
    Ok(WSet::from_sorted_iter(horizon, elements)?)
}

/// The contradiction certificate produced when no block holds enough points
/// off the branch chain: per-block length extremes, a selected subsequence of
/// blocks whose length ranges are pairwise separated, and the length-`d`
/// restrictions of each selected block (at most `k + 1` distinct ones each).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LematTrace {
    /// Per-block maximum decoded length.
    pub u: Vec<u64>,
    /// Per-block minimum decoded length.
    pub d: Vec<u64>,
    /// Indices `n_0 < n_1 < ...` chosen greedily so `u(n_i) < d(n_{i+1})`.
    pub selected_indices: Vec<usize>,
    /// For each selected block, the codes of its members restricted to the
    /// block's minimum length, deduplicated.
    pub f_sets: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LematOutcome {
    /// Least block index with at least `k + 1` points off the chain.
    Witness(usize),
    /// No block qualifies on the window; the restriction certificate.
    Trace(LematTrace),
}

/// Looks for a block with at least `k + 1` members off the chain of `x`.
/// Blocks hold codes of 0/1 sequences; every block must have more than `k`
/// elements and every member must be decidable against the known prefix.
pub fn lemat_witness(
    x: &BranchPrefix,
    f: &BlockFamily,
    k: usize,
) -> Result<LematOutcome, ConstructionError> {
    for (n, block) in f.blocks().iter().enumerate() {
        if block.len() <= k {
            return Err(ConstructionError::BlockTooSmall { block: n, size: block.len(), k });
        }
    }
    let off_chain: Vec<Vec<bool>> = f
        .blocks()
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|&code| x.chain_contains(code).map(|c| !c))
                .collect::<Result<Vec<bool>, ConstructionError>>()
        })
        .collect::<Result<_, _>>()?;
    for (n, flags) in off_chain.iter().enumerate() {
        if flags.iter().filter(|&&b| b).count() >= k + 1 {
            return Ok(LematOutcome::Witness(n));
        }
    }
    let u: Vec<u64> = f
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&c| decode(c).len() as u64).max().expect("nonempty"))
        .collect();
    let d: Vec<u64> = f
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&c| decode(c).len() as u64).min().expect("nonempty"))
        .collect();
    let mut selected_indices = Vec::new();
    let mut next_min = 0u64;
    for n in 0..f.len() {
        if selected_indices.is_empty() || d[n] > next_min {
            selected_indices.push(n);
            next_min = u[n];
        }
    }
    let f_sets: Vec<Vec<u64>> = selected_indices
        .iter()
        .map(|&n| {
            let cut = d[n] as usize;
            let mut restricted: Vec<u64> = f.blocks()[n]
                .iter()
                .map(|&c| code_of(&decode(c)[..cut]))
                .collect();
            restricted.sort_unstable();
            restricted.dedup();
            restricted
        })
        .collect();
    Ok(LematOutcome::Trace(LematTrace { u, d, selected_indices, f_sets }))
}

/// From a covering family, the function jumping past each block: at each
/// block minimum, one past the block maximum; zero elsewhere.  Domain is
/// `[0, max element + 1)`.
pub fn partition_to_escaping_g(f: &BlockFamily) -> Result<Vec<u64>, ConstructionError> {
    if !f.covering() {
        return Err(ConstructionError::NotCovering);
    }
    let len = f.max_element().map_or(0, |m| m as usize + 1);
    let mut g = vec![0u64; len];
    for block in f.blocks() {
        let min = block[0];
        let max = *block.last().expect("nonempty");
        g[min as usize] = max + 1;
    }
    Ok(g)
}

/// Builds the interval partition driven by a non-decreasing `g`: cutpoints
/// `c_0 = 0`, `c_{n+1} = k + 1 + c_n + g(c_n)`, for `length` blocks.
pub fn g_to_interval_partition(
    g: &[u64],
    k: u64,
    length: usize,
) -> Result<IntervalPartition, ConstructionError> {
    if let Some(at) = g.windows(2).position(|p| p[0] > p[1]) {
        return Err(ConstructionError::GNotIncreasing { at });
    }
    let mut cutpoints = vec![0u64];
    for _ in 0..length {
        let cur = *cutpoints.last().expect("nonempty");
        let gv = *g
            .get(cur as usize)
            .ok_or(ConstructionError::GUndefinedAt { point: cur })?;
        cutpoints.push(k + 1 + cur + gv);
    }
    Ok(IntervalPartition::new(cutpoints)?)
}

/// The crowding function of `X` at level `k`: `f(n)` is the least `m > n`
/// with more than `2k` points of `X` in `[n, m)`, computed for
/// `n = 0 .. len`.  Errors when the window holds too few points past some
/// `n`.
pub fn crowding_function(
    x: &WSet,
    k: usize,
    len: usize,
) -> Result<Vec<u64>, ConstructionError> {
    let need = 2 * k + 1;
    let mut f = Vec::with_capacity(len);
    for n in 0..len as u64 {
        let pts = x.slice_in(n, x.horizon());
        if pts.len() < need {
            return Err(ConstructionError::WindowExhausted { at: n, need });
        }
        f.push(pts[need - 1] + 1);
    }
    Ok(f)
}

/// Repartitions a family around per-block guessed pairs: the sets `g(n)`
/// become blocks verbatim and all remaining elements are paired greedily in
/// increasing order across block boundaries (a final odd element joins the
/// last pair).  When exactly one element is left over, it joins a guessed
/// block: the last one meeting `X`, or the last one overall if none does.
pub fn meabou_partition(
    x: &WSet,
    f: &BlockFamily,
    g: &[Vec<u64>],
) -> Result<BlockFamily, ConstructionError> {
    if g.len() != f.len() {
        return Err(ConstructionError::GWrongLength { expected: f.len(), have: g.len() });
    }
    let mut g_blocks: Vec<Vec<u64>> = Vec::with_capacity(g.len());
    let mut leftovers: Vec<u64> = Vec::new();
    for (n, (block, gv)) in f.blocks().iter().zip(g).enumerate() {
        let mut gs = gv.clone();
        gs.sort_unstable();
        gs.dedup();
        if gs.len() < 2 {
            return Err(ConstructionError::GTooSmall { block: n, size: gs.len() });
        }
        if let Some(&value) = gs.iter().find(|v| block.binary_search(v).is_err()) {
            return Err(ConstructionError::GNotSubset { block: n, value });
        }
        leftovers.extend(block.iter().filter(|v| gs.binary_search(v).is_err()));
        g_blocks.push(gs);
    }
    leftovers.sort_unstable();
    let mut blocks = g_blocks;
    if leftovers.len() == 1 {
        let lone = leftovers[0];
        let target = blocks
            .iter()
            .rposition(|b| b.iter().any(|&v| x.contains(v)))
            .unwrap_or(blocks.len() - 1);
        blocks[target].push(lone);
        blocks[target].sort_unstable();
    } else {
        let mut pairs: Vec<Vec<u64>> = leftovers.chunks(2).map(|c| c.to_vec()).collect();
        if leftovers.len() % 2 == 1 {
            let odd = pairs.pop().expect("odd count leaves a singleton chunk");
            pairs.last_mut().expect("count >= 3 when odd").extend(odd);
        }
        blocks.extend(pairs);
    }
    Ok(BlockFamily::with_computed_covering(f.horizon(), blocks)?)
}

/// Every intermediate object of the staged gap-run pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SPlusPhiTrace {
    /// Greedily thinned subset of `X`: consecutive points enclose more than
    /// `3 * phi(p + 4) + 6` points of `X`.
    pub x0: WSet,
    /// Starts of `Y0`-gaps holding at least two points of `x0`.
    pub x1: WSet,
    /// For each `x1` point, the trace of `X` on its `Y0`-gap.
    pub f_map: Vec<(u64, Vec<u64>)>,
    /// The `x1` points where the supplied guess equals the trace.
    pub matched: Vec<u64>,
    /// Union of the matched traces.
    pub y1: WSet,
    /// Every third element of `y1` — the pipeline's output set.
    pub y: WSet,
}

/// Runs the staged construction of a set `Y` whose gaps carry long rich
/// runs: thin `X` down to `x0`, locate `Y0`-gaps rich in `x0`, compare the
/// guess `g` against the true traces, and keep every third point of the
/// matched union.  With a perfect guess on at least one gap, the run
/// evaluator on `(X, Y, phi)` finds a witness.
pub fn s_plus_phi_pipeline(
    x: &WSet,
    phi: &[u64],
    y0: &WSet,
    g: &BTreeMap<u64, Vec<u64>>,
) -> Result<SPlusPhiTrace, ConstructionError> {
    if let Some(at) = phi.windows(2).position(|p| p[0] >= p[1]) {
        return Err(ConstructionError::PhiNotIncreasing { at });
    }
    if let Some(&last) = y0.elements().last() {
        if last > x.horizon() {
            return Err(ConstructionError::HorizonMismatch {
                element: last,
                horizon: x.horizon(),
            });
        }
    }
    let xs = x.elements();
    if xs.is_empty() {
        return Err(ConstructionError::DensityInsufficient { at: 0 });
    }
    let mut x0_elems = vec![xs[0]];
    let mut j = 0usize;
    loop {
        let p = xs[j];
        let idx = (p + 4) as usize;
        let phi_p = *phi
            .get(idx)
            .ok_or(ConstructionError::PhiDomainTooShort { needed: idx, have: phi.len() })?;
        let jump = 3 * phi_p as usize + 6 + 1;
        match j.checked_add(jump).filter(|&jn| jn < xs.len()) {
            Some(jn) => {
                x0_elems.push(xs[jn]);
                j = jn;
            }
            None => break,
        }
    }
    if x0_elems.len() < 2 {
        return Err(ConstructionError::DensityInsufficient { at: x0_elems.len() });
    }
    let x0 = WSet::new(x.horizon(), x0_elems)?;

    let mut x1_elems = Vec::new();
    let mut f_map: Vec<(u64, Vec<u64>)> = Vec::new();
    for w in y0.elements().windows(2) {
        let (p, q) = (w[0], w[1]);
        if x0.count_in(p, q) >= 2 {
            x1_elems.push(p);
            f_map.push((p, x.slice_in(p, q).to_vec()));
        }
    }
    let x1 = WSet::new(x.horizon(), x1_elems)?;

    let mut matched = Vec::new();
    let mut y1_set: BTreeSet<u64> = BTreeSet::new();
    for (p, fv) in &f_map {
        if let Some(gv) = g.get(p) {
            let mut gs = gv.clone();
            gs.sort_unstable();
            gs.dedup();
            if gs == *fv {
                matched.push(*p);
                y1_set.extend(fv.iter().copied());
            }
        }
    }
    let y1 = WSet::from_sorted_iter(x.horizon(), y1_set.iter().copied())?;
    let y = WSet::from_sorted_iter(x.horizon(), y1.elements().iter().copied().step_by(3))?;
    Ok(SPlusPhiTrace { x0, x1, f_map, matched, y1, y })
}
