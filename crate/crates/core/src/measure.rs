//! Exact and sampled analysis of a block-structured random set.
//!
//! The model: the naturals below `l_depth` are cut into blocks
//! `[l_k, l_{k+1})` with `l_0 = 0` and `l_{k+1} = l_k + 2^{k²}`, and a
//! random set is drawn by removing exactly one uniformly chosen point
//! from each block, independently across blocks.  This module computes
//! exact probabilities of miss events in that model (arbitrary-precision
//! rationals), the closed-form geometric tail bound `(1/3)·2^{1−2m}`
//! together with its partial sums, the exact union bound on the
//! probability that some block of a given family is missed entirely, and
//! deterministic seeded Monte Carlo estimates of the same frequency.
//!
//! Verified here: the recurrence and its frozen values, multiplicativity
//! and the doubly-hit-block zero of [`empty_meet_probability`], per-block
//! normalization, the closed form versus partial sums with the exact
//! geometric remainder, the union-bound sum against the tail bound,
//! determinism of sampling, and agreement of Monte Carlo rates with the
//! exact arithmetic within three binomial standard deviations.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finsets::{BlockFamily, WSet};

/// Largest supported number of blocks: the next block length, `2^{8²}`,
/// no longer fits the point type.
pub const DEPTH_CAP: usize = 8;

/// Largest depth whose full point set is small enough to list
/// explicitly; beyond it, work with the missing points instead.
pub const MATERIALIZE_DEPTH_CAP: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeasureError {
    #[error("depth {depth} exceeds the supported cap {cap}")]
    DepthTooLarge { depth: usize, cap: usize },
    #[error("point {point} lies at or beyond the modeled horizon {limit}")]
    PointBeyondDepth { point: u64, limit: u64 },
    #[error("family block {index} reaches {element}, beyond the modeled horizon {limit}")]
    BlockBeyondDepth { index: usize, element: u64, limit: u64 },
    #[error("family block {index} has {size} points, need at least 2")]
    BlockTooSmall { index: usize, size: usize },
    #[error("depth {depth} is too large to list the full point set (cap {cap})")]
    DepthTooLargeToMaterialize { depth: usize, cap: usize },
    #[error("at least one trial is required")]
    ZeroTrials,
}

// ---------------------------------------------------------------------------
// exact rationals
// ---------------------------------------------------------------------------

/// Arbitrary-precision rational in lowest terms with positive
/// denominator, wire-formatted as `{"num": "...", "den": "..."}` with
/// decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawRational", into = "RawRational")]
pub struct ExactRational {
    inner: BigRational,
}

#[derive(Serialize, Deserialize)]
struct RawRational {
    num: String,
    den: String,
}

impl TryFrom<RawRational> for ExactRational {
    type Error = String;

    fn try_from(raw: RawRational) -> Result<Self, String> {
        let num: BigInt = raw.num.parse().map_err(|e| format!("bad numerator: {e}"))?;
        let den: BigInt = raw.den.parse().map_err(|e| format!("bad denominator: {e}"))?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(ExactRational { inner: BigRational::new(num, den) })
    }
}

impl From<ExactRational> for RawRational {
    fn from(r: ExactRational) -> RawRational {
        RawRational {
            num: r.inner.numer().to_string(),
            den: r.inner.denom().to_string(),
        }
    }
}

impl fmt::Display for ExactRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.inner.numer(), self.inner.denom())
    }
}

impl ExactRational {
    pub fn zero() -> Self {
        ExactRational { inner: BigRational::zero() }
    }

    pub fn one() -> Self {
        ExactRational { inner: BigRational::one() }
    }

    /// `num / den` in lowest terms.  Panics if `den == 0`.
    pub fn ratio(num: i64, den: i64) -> Self {
        ExactRational { inner: BigRational::new(BigInt::from(num), BigInt::from(den)) }
    }

    /// Exact power of two, negative exponents included.
    pub fn pow2(exp: i64) -> Self {
        let shifted = BigInt::one() << exp.unsigned_abs() as usize;
        let inner = if exp >= 0 {
            BigRational::from_integer(shifted)
        } else {
            BigRational::new(BigInt::one(), shifted)
        };
        ExactRational { inner }
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    pub fn numer_string(&self) -> String {
        self.inner.numer().to_string()
    }

    pub fn denom_string(&self) -> String {
        self.inner.denom().to_string()
    }

    /// Nearest double; exact values here are far from the limits of
    /// double range, so this is only used for Monte Carlo comparisons.
    pub fn to_f64(&self) -> f64 {
        self.inner.to_f64().unwrap_or(f64::NAN)
    }

    pub fn abs(&self) -> Self {
        ExactRational { inner: self.inner.abs() }
    }
}

impl Add for ExactRational {
    type Output = ExactRational;
    fn add(self, rhs: ExactRational) -> ExactRational {
        ExactRational { inner: self.inner + rhs.inner }
    }
}

impl AddAssign for ExactRational {
    fn add_assign(&mut self, rhs: ExactRational) {
        self.inner += rhs.inner;
    }
}

impl Sub for ExactRational {
    type Output = ExactRational;
    fn sub(self, rhs: ExactRational) -> ExactRational {
        ExactRational { inner: self.inner - rhs.inner }
    }
}

impl Mul for ExactRational {
    type Output = ExactRational;
    fn mul(self, rhs: ExactRational) -> ExactRational {
        ExactRational { inner: self.inner * rhs.inner }
    }
}

// ---------------------------------------------------------------------------
// the block scale
// ---------------------------------------------------------------------------

/// The cut points `l_0 < l_1 < … < l_depth` of the block scale:
/// `l_0 = 0`, `l_{k+1} = l_k + 2^{k²}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LSequence {
    values: Vec<u64>,
}

impl LSequence {
    pub fn depth(&self) -> usize {
        self.values.len() - 1
    }

    /// All cut points, `l_0` through `l_depth` inclusive.
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// One past the last modeled point, `l_depth`.
    pub fn horizon(&self) -> u64 {
        *self.values.last().unwrap()
    }

    /// Index `k` of the block `[l_k, l_{k+1})` containing `point`, if
    /// the point is below the horizon.
    pub fn block_of(&self, point: u64) -> Option<usize> {
        if point >= self.horizon() {
            return None;
        }
        Some(self.values.partition_point(|&v| v <= point) - 1)
    }

    /// Bounds `(l_k, l_{k+1})` of block `k`.
    pub fn block_bounds(&self, k: usize) -> (u64, u64) {
        (self.values[k], self.values[k + 1])
    }

    /// Number of points in block `k`, `2^{k²}`.
    pub fn block_len(&self, k: usize) -> u64 {
        self.values[k + 1] - self.values[k]
    }
}

/// Builds the cut-point sequence up to `l_depth`.
pub fn l_sequence(depth: usize) -> Result<LSequence, MeasureError> {
    if depth > DEPTH_CAP {
        return Err(MeasureError::DepthTooLarge { depth, cap: DEPTH_CAP });
    }
    let mut values = vec![0u64];
    for k in 0..depth {
        values.push(values[k] + (1u64 << (k * k)));
    }
    Ok(LSequence { values })
}

/// The random-set model at a fixed depth: one uniformly chosen point of
/// each block `[l_k, l_{k+1})` is missing, independently across blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameModel {
    lseq: LSequence,
}

impl NameModel {
    pub fn new(depth: usize) -> Result<Self, MeasureError> {
        Ok(NameModel { lseq: l_sequence(depth)? })
    }

    pub fn depth(&self) -> usize {
        self.lseq.depth()
    }

    pub fn lseq(&self) -> &LSequence {
        &self.lseq
    }
}

// ---------------------------------------------------------------------------
// exact event probabilities
// ---------------------------------------------------------------------------

/// Probability that every point of `points` is missing from the random
/// set: zero as soon as two points share a block (only one point per
/// block is missing), otherwise the product of `2^{−k²}` over the
/// blocks touched.  The empty set gives 1.
pub fn empty_meet_probability(
    points: &[u64],
    model: &NameModel,
) -> Result<ExactRational, MeasureError> {
    let limit = model.lseq.horizon();
    let mut touched: Vec<usize> = Vec::with_capacity(points.len());
    for &p in points {
        match model.lseq.block_of(p) {
            Some(k) => touched.push(k),
            None => return Err(MeasureError::PointBeyondDepth { point: p, limit }),
        }
    }
    touched.sort_unstable();
    if touched.windows(2).any(|w| w[0] == w[1]) {
        return Ok(ExactRational::zero());
    }
    let mut prob = ExactRational::one();
    for k in touched {
        prob = prob * ExactRational::pow2(-((k * k) as i64));
    }
    Ok(prob)
}

/// Closed form `(1/3)·2^{1−2m} = 2/(3·4^m)` of the geometric series
/// `Σ_{r≥m} 2^{−(2r+1)}`.
pub fn tail_bound(m: usize) -> ExactRational {
    let denom = BigInt::from(3) * (BigInt::one() << (2 * m));
    ExactRational { inner: BigRational::new(BigInt::from(2), denom) }
}

/// Exact partial sum `Σ_{r=m}^{r_max} 2^{−(2r+1)}`; each term equals
/// `2^{r²}·2^{−(r+1)²}`.  Empty when `r_max < m`.
pub fn tail_partial_sum(m: usize, r_max: usize) -> ExactRational {
    let mut sum = ExactRational::zero();
    for r in m..=r_max {
        sum += ExactRational::pow2(-((2 * r + 1) as i64));
    }
    sum
}

fn validated_blocks<'f>(
    family: &'f BlockFamily,
    model: &NameModel,
) -> Result<&'f [Vec<u64>], MeasureError> {
    let limit = model.lseq.horizon();
    for (index, block) in family.blocks().iter().enumerate() {
        if block.len() < 2 {
            return Err(MeasureError::BlockTooSmall { index, size: block.len() });
        }
        let last = *block.last().unwrap();
        if last >= limit {
            return Err(MeasureError::BlockBeyondDepth { index, element: last, limit });
        }
    }
    Ok(family.blocks())
}

/// Least modeled point from which stage `m` starts; blocks whose
/// minimum lies below it are ignored by the failure analysis.
fn stage_threshold(m: usize, model: &NameModel) -> u64 {
    if m <= model.depth() {
        model.lseq.values()[m]
    } else {
        u64::MAX
    }
}

/// Exact union-bound sum of [`empty_meet_probability`] over the blocks
/// of `family` whose minimum is at least `l_m`.  Blocks must have at
/// least two points each and lie below the modeled horizon.  The sum
/// never exceeds [`tail_bound`]`(m)`: distinct blocks have distinct
/// minima, so at most `2^{r²}` of them start in scale block `r`, and
/// each such block is missed with probability at most
/// `2^{−r²}·2^{−(r+1)²}`.
pub fn localization_failure_bound(
    family: &BlockFamily,
    m: usize,
    model: &NameModel,
) -> Result<ExactRational, MeasureError> {
    let blocks = validated_blocks(family, model)?;
    let threshold = stage_threshold(m, model);
    let mut sum = ExactRational::zero();
    for block in blocks {
        if block[0] >= threshold {
            sum += empty_meet_probability(block, model)?;
        }
    }
    debug_assert!(sum <= tail_bound(m));
    Ok(sum)
}

// ---------------------------------------------------------------------------
// sampling
// ---------------------------------------------------------------------------

/// The missing points of one realization, one per block in block order;
/// deterministic in the seed.
pub fn sample_missing(model: &NameModel, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..model.depth())
        .map(|k| {
            let (lo, hi) = model.lseq.block_bounds(k);
            rng.gen_range(lo..hi)
        })
        .collect()
}

/// One realization of the random set, listed in full: all points below
/// the horizon except the sampled missing ones.  Only available at
/// depths whose point count is small enough to list.
pub fn sample_name(model: &NameModel, seed: u64) -> Result<WSet, MeasureError> {
    if model.depth() > MATERIALIZE_DEPTH_CAP {
        return Err(MeasureError::DepthTooLargeToMaterialize {
            depth: model.depth(),
            cap: MATERIALIZE_DEPTH_CAP,
        });
    }
    let horizon = model.lseq.horizon().max(1);
    let missing = sample_missing(model, seed);
    Ok(WSet::from_sorted_iter(
        horizon,
        (0..model.lseq.horizon()).filter(|p| missing.binary_search(p).is_err()),
    )
    .expect("complement of the missing points is sorted and below the horizon"))
}

/// Monte Carlo estimate of a block-miss frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRate {
    /// Trials in which some eligible block was missed entirely.
    pub failures: u64,
    pub trials: u64,
    /// `failures / trials`.
    pub rate: f64,
    /// Three binomial standard deviations at the empirical rate.
    pub radius3: f64,
}

/// Samples `trials` independent realizations (seed fixed, one stream
/// per trial, order-independent) and counts those in which some block
/// of `family` with minimum at least `l_m` is disjoint from the
/// realization — equivalently, consists entirely of missing points.
pub fn mc_localization_rate(
    family: &BlockFamily,
    m: usize,
    model: &NameModel,
    trials: u64,
    seed: u64,
) -> Result<McRate, MeasureError> {
    if trials == 0 {
        return Err(MeasureError::ZeroTrials);
    }
    let blocks = validated_blocks(family, model)?;
    let threshold = stage_threshold(m, model);
    let eligible: Vec<&Vec<u64>> =
        blocks.iter().filter(|b| b[0] >= threshold).collect();
    // A block can only be all-missing if each of its points is one of
    // the ≤ depth missing points, so index blocks by their points and
    // examine only the owners of this trial's missing points.
    let mut owner: HashMap<u64, usize> = HashMap::new();
    for (i, block) in eligible.iter().enumerate() {
        for &p in block.iter() {
            owner.insert(p, i);
        }
    }
    let depth = model.depth();
    let failures: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            let missing: Vec<u64> = (0..depth)
                .map(|k| {
                    let (lo, hi) = model.lseq.block_bounds(k);
                    rng.gen_range(lo..hi)
                })
                .collect();
            let mut checked: Vec<usize> = Vec::new();
            for &p in &missing {
                if let Some(&b) = owner.get(&p) {
                    if !checked.contains(&b) {
                        checked.push(b);
                        if eligible[b]
                            .iter()
                            .all(|q| missing.binary_search(q).is_ok())
                        {
                            return 1u64;
                        }
                    }
                }
            }
            0u64
        })
        .sum();
    let rate = failures as f64 / trials as f64;
    let radius3 = 3.0 * (rate * (1.0 - rate) / trials as f64).sqrt();
    Ok(McRate { failures, trials, rate, radius3 })
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
