//! Windowed evaluation of counting relations between sets of naturals, and
//! exact dominating/unbounding numbers of finite two-sorted relations.
//!
//! The block-count relations ask how often `|X ∩ K_n| <= k` holds along a
//! block family; the gap relations ask for runs of consecutive gaps of `Y`
//! each holding at least two points of `X`.  All evaluators return a
//! [`QuantifierReport`] (or a witness struct) that separates what was proved
//! on the window from what the window cannot decide.

use crate::finsets::{BlockFamily, WSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RelationError {
    #[error("block {index} reaches {element}, beyond the set horizon {horizon}")]
    HorizonMismatch { index: usize, element: u64, horizon: u64 },
    #[error("gap endpoint {element} is beyond the set horizon {horizon}")]
    GapBeyondHorizon { element: u64, horizon: u64 },
    #[error("need |Y| >= {need} to evaluate any index, got {have}")]
    WindowTooShort { need: usize, have: usize },
    #[error("k must be at least 1")]
    KZero,
    #[error("phi must be strictly increasing ({0} is followed by {1})")]
    PhiNotIncreasing(u64, u64),
    #[error("relation table is {have_rows}x{have_cols}, expected {rows}x{cols}")]
    TableShape { rows: usize, cols: usize, have_rows: usize, have_cols: usize },
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("universe has {0} points, exhaustive search is capped at {1}")]
    UniverseTooLarge(usize, usize),
    #[error("no dominating set exists: row {0} relates to nothing")]
    NoDominatingSet(usize),
    #[error("no unbounded set exists: column {0} is related to everything")]
    NoUnboundedSet(usize),
}

/// Outcome of evaluating a per-index predicate along a window.
///
/// `witnesses` are the indices where the predicate held; `evaluated_up_to` is
/// the largest index whose verdict the window fully determines (`None` when
/// nothing was evaluable); `tail_holds_from` is the least `t` such that the
/// predicate holds at every evaluated index from `t` on (`None` when it fails
/// at the last evaluated index).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantifierReport {
    pub witnesses: Vec<usize>,
    pub evaluated_up_to: Option<usize>,
    pub tail_holds_from: Option<usize>,
}

impl QuantifierReport {
    /// Assembles a report from per-index verdicts `holds[0..=up_to]`.
    fn from_verdicts(holds: &[bool]) -> Self {
        let witnesses: Vec<usize> = holds
            .iter()
            .enumerate()
            .filter_map(|(i, &h)| h.then_some(i))
            .collect();
        let evaluated_up_to = holds.len().checked_sub(1);
        let tail_holds_from = match evaluated_up_to {
            None => None,
            Some(last) => {
                if !holds[last] {
                    None
                } else {
                    let mut t = last;
                    while t > 0 && holds[t - 1] {
                        t -= 1;
                    }
                    Some(t)
                }
            }
        };
        QuantifierReport { witnesses, evaluated_up_to, tail_holds_from }
    }

    /// Cofinite-style reading: the predicate held from some index on.
    pub fn holds_cofinitely(&self) -> bool {
        self.tail_holds_from.is_some()
    }

    /// Infinitely-often reading at finite scale: at least `threshold`
    /// witnesses were found.
    pub fn holds_often(&self, threshold: usize) -> bool {
        self.witnesses.len() >= threshold
    }
}

fn block_count_report(
    x: &WSet,
    f: &BlockFamily,
    k: usize,
) -> Result<QuantifierReport, RelationError> {
    for (index, block) in f.blocks().iter().enumerate() {
        let last = *block.last().expect("blocks are nonempty");
        if last >= x.horizon() {
            return Err(RelationError::HorizonMismatch {
                index,
                element: last,
                horizon: x.horizon(),
            });
        }
    }
    let holds: Vec<bool> = f
        .blocks()
        .iter()
        .map(|block| block.iter().filter(|&&v| x.contains(v)).count() <= k)
        .collect();
    Ok(QuantifierReport::from_verdicts(&holds))
}

/// Along the family `F`, where does `|X ∩ K_n| <= k` hold?  The tail reading
/// of the report is the "for all large n" relation.
pub fn eval_r_forall_k(
    x: &WSet,
    f: &BlockFamily,
    k: usize,
) -> Result<QuantifierReport, RelationError> {
    block_count_report(x, f, k)
}

/// Same witness set as [`eval_r_forall_k`]; callers read it existentially
/// (enough witnesses) rather than as a tail condition.
pub fn eval_r_exists_k(
    x: &WSet,
    f: &BlockFamily,
    k: usize,
) -> Result<QuantifierReport, RelationError> {
    block_count_report(x, f, k)
}

/// Gap `n` of `Y` is the half-open interval `[mu(Y,n), mu(Y,n+1))`.
/// `rich[n]` says whether it holds at least two points of `X`.
fn rich_gaps(x: &WSet, y: &WSet) -> Result<Vec<bool>, RelationError> {
    if let Some(&last) = y.elements().last() {
        if last > x.horizon() {
            return Err(RelationError::GapBeyondHorizon {
                element: last,
                horizon: x.horizon(),
            });
        }
    }
    Ok(y.elements()
        .windows(2)
        .map(|p| x.count_in(p[0], p[1]) >= 2)
        .collect())
}

/// Where do `k` consecutive gaps of `Y` starting at `n` all hold two or more
/// points of `X`?  Index `n` is evaluable when gap `n + k - 1` still lies in
/// the window, so `evaluated_up_to = |Y| - 1 - k`.
pub fn eval_s_k(x: &WSet, y: &WSet, k: usize) -> Result<QuantifierReport, RelationError> {
    if k == 0 {
        return Err(RelationError::KZero);
    }
    if y.len() < k + 1 {
        return Err(RelationError::WindowTooShort { need: k + 1, have: y.len() });
    }
    let rich = rich_gaps(x, y)?;
    let holds: Vec<bool> = (0..=(rich.len() - k))
        .map(|n| rich[n..n + k].iter().all(|&r| r))
        .collect();
    Ok(QuantifierReport::from_verdicts(&holds))
}

/// Witness outcome for the run-start relations: the least index opening a
/// qualifying run, plus how far the window could look.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunWitness {
    pub witness: Option<usize>,
    pub evaluated_up_to: Option<usize>,
}

impl RunWitness {
    pub fn holds(&self) -> bool {
        self.witness.is_some()
    }
}

/// Least `n` starting `m` consecutive rich gaps of `Y`, if the window shows
/// one.
pub fn eval_s_plus(x: &WSet, y: &WSet, m: usize) -> Result<RunWitness, RelationError> {
    let report = eval_s_k(x, y, m)?;
    Ok(RunWitness {
        witness: report.witnesses.first().copied(),
        evaluated_up_to: report.evaluated_up_to,
    })
}

/// Witnesses `n` such that all `2^n` gaps starting at gap `2^n` are rich.
/// Index `n` is evaluable only when gap `2^(n+1) - 1` fits the window, so
/// the report stops at the largest such `n`.
pub fn eval_s_plus_eps(x: &WSet, y: &WSet) -> Result<QuantifierReport, RelationError> {
    let rich = rich_gaps(x, y)?;
    let mut holds = Vec::new();
    let mut n = 0usize;
    loop {
        let lo = 1usize << n;
        let hi = 2 * lo; // one past the last required gap index
        if hi > rich.len() {
            break;
        }
        holds.push(rich[lo..hi].iter().all(|&r| r));
        n += 1;
    }
    Ok(QuantifierReport::from_verdicts(&holds))
}

/// Witnesses `n` with `n + phi(n) < |Y|` such that the `phi(n)` gaps starting
/// at `n` are all rich.  `phi` must be strictly increasing on its domain, so
/// the evaluable indices form an initial segment.
pub fn eval_s_plus_phi(
    x: &WSet,
    y: &WSet,
    phi: &[u64],
) -> Result<QuantifierReport, RelationError> {
    for pair in phi.windows(2) {
        if pair[0] >= pair[1] {
            return Err(RelationError::PhiNotIncreasing(pair[0], pair[1]));
        }
    }
    let rich = rich_gaps(x, y)?;
    let mut holds = Vec::new();
    for (n, &p) in phi.iter().enumerate() {
        let p = p as usize;
        // Gaps n .. n+p-1 must fit the window: need n + p <= |gaps| i.e.
        // n + phi(n) < |Y|.
        if n + p > rich.len() {
            break;
        }
        holds.push(rich[n..n + p].iter().all(|&r| r));
    }
    Ok(QuantifierReport::from_verdicts(&holds))
}

/// A total boolean relation between two finite opaque universes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRelation", into = "RawRelation")]
pub struct FiniteRelationInstance {
    left: Vec<String>,
    right: Vec<String>,
    holds: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct RawRelation {
    left: Vec<String>,
    right: Vec<String>,
    holds: Vec<Vec<bool>>,
}

impl TryFrom<RawRelation> for FiniteRelationInstance {
    type Error = RelationError;
    fn try_from(raw: RawRelation) -> Result<Self, RelationError> {
        FiniteRelationInstance::new(raw.left, raw.right, raw.holds)
    }
}

impl From<FiniteRelationInstance> for RawRelation {
    fn from(r: FiniteRelationInstance) -> RawRelation {
        RawRelation { left: r.left, right: r.right, holds: r.holds }
    }
}

/// Exhaustive-search cap on universe sizes for [`d_fin`] and [`b_fin`].
pub const EXHAUSTIVE_CAP: usize = 24;

impl FiniteRelationInstance {
    pub fn new(
        left: Vec<String>,
        right: Vec<String>,
        holds: Vec<Vec<bool>>,
    ) -> Result<Self, RelationError> {
        if left.is_empty() || right.is_empty() {
            return Err(RelationError::EmptyUniverse);
        }
        if holds.len() != left.len() || holds.iter().any(|row| row.len() != right.len()) {
            return Err(RelationError::TableShape {
                rows: left.len(),
                cols: right.len(),
                have_rows: holds.len(),
                have_cols: holds.first().map_or(0, |r| r.len()),
            });
        }
        Ok(FiniteRelationInstance { left, right, holds })
    }

    /// Anonymous universes `x0..` / `y0..` over a bare table.
    pub fn from_table(holds: Vec<Vec<bool>>) -> Result<Self, RelationError> {
        let rows = holds.len();
        let cols = holds.first().map_or(0, |r| r.len());
        Self::new(
            (0..rows).map(|i| format!("x{i}")).collect(),
            (0..cols).map(|j| format!("y{j}")).collect(),
            holds,
        )
    }

    pub fn left(&self) -> &[String] {
        &self.left
    }

    pub fn right(&self) -> &[String] {
        &self.right
    }

    pub fn holds(&self) -> &[Vec<bool>] {
        &self.holds
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.holds[i][j]
    }

    /// The four support conditions that make the dominating and unbounding
    /// numbers nontrivial: every row and every column holds a `true` and a
    /// `false`.
    pub fn satisfies_support_conditions(&self) -> bool {
        let rows_ok = self
            .holds
            .iter()
            .all(|row| row.iter().any(|&b| b) && row.iter().any(|&b| !b));
        let cols_ok = (0..self.right.len()).all(|j| {
            self.holds.iter().any(|row| row[j]) && self.holds.iter().any(|row| !row[j])
        });
        rows_ok && cols_ok
    }

    /// The complement of the inverse: `(y, x)` related iff `(x, y)` was not.
    pub fn complement_inverse(&self) -> FiniteRelationInstance {
        let holds = (0..self.right.len())
            .map(|j| (0..self.left.len()).map(|i| !self.holds[i][j]).collect())
            .collect();
        FiniteRelationInstance {
            left: self.right.clone(),
            right: self.left.clone(),
            holds,
        }
    }
}

/// Exact dominating number: the least size of `D ⊆ right` such that every
/// left point relates to some member of `D`.  Exhaustive search in
/// increasing size order; also returns the first minimum witness found.
pub fn d_fin(inst: &FiniteRelationInstance) -> Result<(usize, Vec<usize>), RelationError> {
    let n = inst.right.len();
    if n > EXHAUSTIVE_CAP {
        return Err(RelationError::UniverseTooLarge(n, EXHAUSTIVE_CAP));
    }
    // Row masks: bit j set iff (i, j) in the relation.
    let rows: Vec<u32> = inst
        .holds
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold(0u32, |m, (j, &b)| if b { m | (1 << j) } else { m })
        })
        .collect();
    if let Some(i) = rows.iter().position(|&m| m == 0) {
        return Err(RelationError::NoDominatingSet(i));
    }
    for size in 1..=n {
        if let Some(mask) = first_subset_where(n, size, |mask| {
            rows.iter().all(|&r| r & mask != 0)
        }) {
            return Ok((size, mask_to_indices(mask)));
        }
    }
    unreachable!("the full right universe dominates once every row is nonzero")
}

/// Exact unbounding number: the least size of `B ⊆ left` such that no right
/// point relates to all of `B`.  Independent exhaustive search, not routed
/// through [`d_fin`], so the duality identities are genuine cross-checks.
pub fn b_fin(inst: &FiniteRelationInstance) -> Result<(usize, Vec<usize>), RelationError> {
    let n = inst.left.len();
    if n > EXHAUSTIVE_CAP {
        return Err(RelationError::UniverseTooLarge(n, EXHAUSTIVE_CAP));
    }
    // Column masks: bit i set iff (i, j) in the relation.
    let cols: Vec<u32> = (0..inst.right.len())
        .map(|j| {
            (0..inst.left.len())
                .fold(0u32, |m, i| if inst.holds[i][j] { m | (1 << i) } else { m })
        })
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    if let Some(j) = cols.iter().position(|&c| c == full) {
        return Err(RelationError::NoUnboundedSet(j));
    }
    for size in 1..=n {
        if let Some(mask) = first_subset_where(n, size, |mask| {
            // B is unbounded iff every column misses some member of B.
            cols.iter().all(|&c| c & mask != mask)
        }) {
            return Ok((size, mask_to_indices(mask)));
        }
    }
    unreachable!("the full left universe is unbounded once no column is full")
}

fn mask_to_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|&i| mask & (1 << i) != 0).collect()
}

/// First `size`-subset of `0..n` (in lexicographic index order) whose bitmask
/// satisfies `pred`.
fn first_subset_where<F: FnMut(u32) -> bool>(n: usize, size: usize, mut pred: F) -> Option<u32> {
    let mut indices: Vec<usize> = (0..size).collect();
    loop {
        let mask = indices.iter().fold(0u32, |m, &i| m | (1 << i));
        if pred(mask) {
            return Some(mask);
        }
        // Advance the combination.
        let mut i = size;
        loop {
            if i == 0 {
                return None;
            }
            i -= 1;
            if indices[i] != i + n - size {
                break;
            }
            if i == 0 {
                return None;
            }
        }
        indices[i] += 1;
        for j in i + 1..size {
            indices[j] = indices[j - 1] + 1;
        }
    }
}
