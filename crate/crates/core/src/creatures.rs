//! Normed branching-tree conditions and their shrinking calculus.
//!
//! A [`Creature`] is a finite tree whose nodes carry closed integer
//! intervals.  Every node has zero, exactly `k`, or more than `k`
//! children; the widely splitting nodes carry a [`NiceNorm`], a monotone
//! set measure obeying a bisection law (splitting a set costs at most
//! one unit on the better half).  On top of the raw trees this module
//! provides
//!
//! * norm validation with explicit counterexample witnesses
//!   ([`validate_norm`]),
//! * the structural operations: [`refines`], [`upper_half`],
//!   [`build_s_h`] (new root norm over parts), [`glue_s`] (unnormed
//!   `k`-way root), exact-decomposition testing ([`sigma_member`]) and a
//!   bounded derivation search with replayable certificates
//!   ([`sigma_star_member`]),
//! * [`ConditionFragment`]: a finite stem plus an increasing run of
//!   creatures, with the extension order [`fragment_leq`],
//! * [`PairCondition`] with the literal three-clause order
//!   [`pair_leq`], and
//! * [`sparse_shrink`]: thinning a creature against a marker set so
//!   that among any `k + 1` consecutive marker gaps some gap holds
//!   fewer than two leaf labels, while the weight drops by at most 14;
//!   [`shrink_condition`] lifts this to fragments.
//!
//! Inline tests freeze hand-computed witnesses for every operation and
//! check the shrink's three-part contract (refinement, weight loss
//! ≤ 14, gap sparsity) by independent scans of the output.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::finsets::WSet;

/// Largest base size for which norm tables are stored and validated
/// exhaustively; larger bases must use the logarithmic norm.
pub const NORM_TABLE_BASE_CAP: usize = 16;

/// Search depth used by [`fragment_leq`] when deriving creatures.
pub const DERIVE_DEPTH_CAP: usize = 5;

/// Errors raised by norm construction, creature validation, the
/// structural operations, and the shrinking pipeline.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CreatureError {
    /// The branching parameter `k` must be at least 1.
    #[error("branching parameter k must be positive")]
    KZero,
    /// A creature must contain at least its root.
    #[error("a creature needs at least one node")]
    EmptyTree,
    /// The same tree address was listed twice.
    #[error("duplicate node path {path:?}")]
    DuplicatePath { path: Vec<u64> },
    /// A node's parent address is missing from the tree.
    #[error("node path {path:?} has no parent in the tree")]
    OrphanPath { path: Vec<u64> },
    /// A node splits into a number of children that is neither 0, nor
    /// `k`, nor above `k`.
    #[error("node {path:?} has {count} children; every node needs 0, {k}, or more than {k} of them")]
    BadBranching { path: Vec<u64>, count: usize, k: usize },
    /// A `k`-splitting node has a `k`-splitting child.
    #[error("node {parent:?} and one of its children both split exactly k ways")]
    SuccessiveK { parent: Vec<u64> },
    /// A widely splitting node carries no norm.
    #[error("node {path:?} splits more than k ways but carries no norm")]
    NormMissing { path: Vec<u64> },
    /// A norm sits on a node that does not split more than `k` ways.
    #[error("node {path:?} carries a norm but does not split more than k ways")]
    NormUnexpected { path: Vec<u64> },
    /// A norm's base size disagrees with the node's child count.
    #[error("norm at {path:?} measures a {base}-point base but the node has {children} children")]
    NormBaseMismatch { path: Vec<u64>, base: usize, children: usize },
    /// A norm fails one of the four axioms.
    #[error("norm at {path:?} violates an axiom: {violation}")]
    InvalidNorm { path: Vec<u64>, violation: NormViolation },
    /// Two norm entries target the same node.
    #[error("two norms attached to path {path:?}")]
    DuplicateNorm { path: Vec<u64> },
    /// A norm entry targets a node that does not exist.
    #[error("norm attached to unknown node {path:?}")]
    NormForUnknownNode { path: Vec<u64> },
    /// A serialized norm gives both or neither of a table and a kind.
    #[error("norm spec at {path:?} must give exactly one of a table or a kind")]
    NormSpecConflict { path: Vec<u64> },
    /// A serialized norm names an unsupported kind.
    #[error("unknown norm kind {kind:?}")]
    UnknownNormKind { kind: String },
    /// A node interval has its left end above its right end.
    #[error("node {path:?} has its left label above its right label")]
    IntervalInverted { path: Vec<u64> },
    /// A leaf must carry a single point.
    #[error("leaf {path:?} must carry a single point (left = right)")]
    LeafIntervalNotPoint { path: Vec<u64> },
    /// A child interval leaves its parent's interval.
    #[error("interval of {path:?} leaves its parent's interval")]
    IntervalOutsideParent { path: Vec<u64> },
    /// Two sibling intervals intersect.
    #[error("sibling intervals at {left:?} and {right:?} overlap")]
    IntervalOverlap { left: Vec<u64>, right: Vec<u64> },
    /// Norm tables beyond the cap cannot be validated exhaustively.
    #[error("norm table on {base} points exceeds the exhaustive-validation cap {cap}")]
    TableTooLarge { base: usize, cap: usize },
    /// A direct table must have power-of-two length.
    #[error("norm table length {len} is not a power of two")]
    TableWrongSize { len: usize },
    /// A sparse table misses a subset.
    #[error("norm table on a {base}-point base lists no value for subset mask {missing_mask}")]
    TableNotTotal { base: usize, missing_mask: u64 },
    /// A sparse table repeats a subset.
    #[error("norm table repeats subset mask {mask}")]
    TableDuplicateMask { mask: u64 },
    /// A sparse table addresses a subset outside the base.
    #[error("norm table mask {mask} addresses no subset of a {base}-point base")]
    TableMaskOutOfRange { mask: u64, base: usize },
    /// A logarithmic norm needs a base large enough for positive value.
    #[error("logarithmic norm needs at least {need} points, got {base}")]
    LogBaseTooSmall { base: usize, need: u64 },
    /// Building over a root norm needs more than `k` parts.
    #[error("building over a root norm needs at least k+1 = {need} parts, got {got}")]
    TooFewParts { got: usize, need: usize },
    /// Gluing takes exactly `k` parts.
    #[error("gluing takes exactly k = {need} parts, got {got}")]
    ArityMismatch { got: usize, need: usize },
    /// Parts disagree on the branching parameter.
    #[error("parts carry different branching parameters")]
    KMismatch,
    /// Part root intervals must be strictly increasing.
    #[error("part {index} does not start strictly after its predecessor ends")]
    PartsNotIncreasing { index: usize },
    /// Gluing must not stack two `k`-splits.
    #[error("part {index} has a root splitting exactly k ways; gluing would stack two k-splits")]
    RootKSplitting { index: usize },
    /// The shrink needs a minimum weight to have room for its losses.
    #[error("weight {weight} is below the required minimum {need}")]
    WeightTooSmall { weight: u32, need: u32 },
    /// The marker set must start at or below the span.
    #[error("marker set starts at {first} which is above the span's left end {left}")]
    MarkersDontCoverSpan { first: u64, left: u64 },
    /// The marker set must continue past the span.
    #[error("need at least 2 markers beyond the span's right end, found {have}")]
    MarkersBeyondSpanTooFew { have: usize },
    /// Fragment shrinking needs markers between consecutive spans.
    #[error("need more than 2 markers between consecutive spans (pair starting at creature {index}), found {count}")]
    MarkersBetweenSpansTooFew { index: usize, count: usize },
    /// No admissible subset exists at some selection step.  For valid
    /// nice norms this is impossible, so the error doubles as a
    /// validator of the norms actually attached to the tree.
    #[error("no admissible subset for the shrink: {detail}")]
    NormAxiomViolation { detail: String },
    /// Thinning would demote a widely splitting node.
    #[error("shrinking node {path:?} would leave {kept} children, not above k = {k}")]
    KindUnpreservable { path: Vec<u64>, kept: usize, k: usize },
    /// The stem must sit strictly below the first creature.
    #[error("stem value {w_max} is not below the first creature's left end {left}")]
    FragmentWNotBelow { w_max: u64, left: u64 },
    /// Fragment creatures must occupy increasing intervals.
    #[error("creature {index} of the fragment does not start strictly after its predecessor")]
    FragmentSpansNotIncreasing { index: usize },
    /// Fragment creatures must share one branching parameter.
    #[error("fragment mixes creatures with different branching parameters")]
    FragmentKMismatch,
    /// A pair must consist of two distinct points.
    #[error("pair ({a}, {a}) is degenerate")]
    PairDegenerate { a: u64 },
    /// Pairs within one family must be disjoint.
    #[error("family {family} reuses point {value} across pairs")]
    PairOverlap { family: usize, value: u64 },
}

// ---------------------------------------------------------------------------
// norms
// ---------------------------------------------------------------------------

/// Witness for a failed norm axiom; masks address subsets of the base.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormViolation {
    /// The base must be nonempty.
    #[error("the base is empty")]
    BaseEmpty,
    /// The full base must have positive value.
    #[error("the full base has value 0")]
    BaseNotPositive,
    /// Every singleton must have value at most 1.
    #[error("singleton at position {index} has value above 1")]
    SingletonTooBig { index: usize },
    /// Removing a point must not increase the value.
    #[error("mask {sub_mask} exceeds its superset mask {sup_mask}")]
    NotMonotone { sub_mask: u64, sup_mask: u64 },
    /// Some split loses more than one unit on both sides.
    #[error("mask {set_mask} splits into {part_mask} and its complement with both sides cheaper by more than 1")]
    BisectionFails { set_mask: u64, part_mask: u64 },
}

/// Internal representation of a norm: an exhaustive table over a small
/// base, or the cardinality-logarithm (optionally shifted down).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormRepr {
    /// `values[mask]` for every subset mask of the base.
    Table(Vec<u32>),
    /// `max(0, floor(log2 max(1, |A|)) - shift)`.
    Log {
        /// Amount subtracted from the cardinality logarithm.
        shift: u32,
    },
}

/// A monotone set measure with the bisection law, explicit on small
/// bases and cardinality-logarithmic on large ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NiceNorm {
    base: usize,
    repr: NormRepr,
}

fn floor_log2(n: usize) -> u32 {
    debug_assert!(n >= 1);
    usize::BITS - 1 - n.leading_zeros()
}

fn log_value(count: usize, shift: u32) -> u32 {
    floor_log2(count.max(1)).saturating_sub(shift)
}

impl NiceNorm {
    /// Wraps an exhaustive value table; `values[mask]` is the value of
    /// the subset with that bitmask.  Length must be a power of two.
    pub fn table(values: Vec<u32>) -> Result<Self, CreatureError> {
        let len = values.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(CreatureError::TableWrongSize { len });
        }
        let base = len.trailing_zeros() as usize;
        if base > NORM_TABLE_BASE_CAP {
            return Err(CreatureError::TableTooLarge { base, cap: NORM_TABLE_BASE_CAP });
        }
        Ok(NiceNorm { base, repr: NormRepr::Table(values) })
    }

    /// Builds a table from `(mask, value)` pairs, requiring every subset
    /// of the `base`-point base to appear exactly once.
    pub fn from_pairs(base: usize, pairs: &[(u64, u32)]) -> Result<Self, CreatureError> {
        if base > NORM_TABLE_BASE_CAP {
            return Err(CreatureError::TableTooLarge { base, cap: NORM_TABLE_BASE_CAP });
        }
        let size = 1usize << base;
        let mut values: Vec<Option<u32>> = vec![None; size];
        for &(mask, value) in pairs {
            if mask >= size as u64 {
                return Err(CreatureError::TableMaskOutOfRange { mask, base });
            }
            let slot = &mut values[mask as usize];
            if slot.is_some() {
                return Err(CreatureError::TableDuplicateMask { mask });
            }
            *slot = Some(value);
        }
        if let Some(missing) = values.iter().position(|v| v.is_none()) {
            return Err(CreatureError::TableNotTotal { base, missing_mask: missing as u64 });
        }
        NiceNorm::table(values.into_iter().map(|v| v.expect("checked total")).collect())
    }

    /// The cardinality-logarithm norm on a base of the given size.
    pub fn log(base: usize) -> Result<Self, CreatureError> {
        NiceNorm::log_shifted(base, 0)
    }

    /// The cardinality-logarithm norm lowered by `shift`; the base must
    /// be large enough to keep the full value positive.
    pub fn log_shifted(base: usize, shift: u32) -> Result<Self, CreatureError> {
        let need = 1u64 << (shift + 1).min(63);
        if base == 0 || log_value(base, shift) == 0 {
            return Err(CreatureError::LogBaseTooSmall { base, need });
        }
        Ok(NiceNorm { base, repr: NormRepr::Log { shift } })
    }

    /// Number of points in the measured base.
    pub fn base_size(&self) -> usize {
        self.base
    }

    /// Access to the representation (table or logarithm).
    pub fn repr(&self) -> &NormRepr {
        &self.repr
    }

    /// Value of the subset given by sorted member positions.
    pub fn value_of_subset(&self, positions: &[usize]) -> u32 {
        match &self.repr {
            NormRepr::Log { shift } => {
                if positions.is_empty() {
                    0
                } else {
                    log_value(positions.len(), *shift)
                }
            }
            NormRepr::Table(values) => {
                let mask = positions.iter().fold(0u64, |m, &p| {
                    debug_assert!(p < self.base);
                    m | (1u64 << p)
                });
                values[mask as usize]
            }
        }
    }

    /// Value of the whole base.
    pub fn full_value(&self) -> u32 {
        match &self.repr {
            NormRepr::Log { shift } => log_value(self.base, *shift),
            NormRepr::Table(values) => values[values.len() - 1],
        }
    }

    /// Restriction to the subset given by sorted member positions; the
    /// result measures exactly those points.
    pub fn restrict(&self, kept: &[usize]) -> Result<NiceNorm, CreatureError> {
        debug_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        match &self.repr {
            NormRepr::Log { shift } => NiceNorm::log_shifted(kept.len(), *shift),
            NormRepr::Table(values) => {
                let nb = kept.len();
                let mut out = Vec::with_capacity(1 << nb);
                for new_mask in 0..(1u64 << nb) {
                    let mut old_mask = 0u64;
                    for (bit, &pos) in kept.iter().enumerate() {
                        if new_mask & (1 << bit) != 0 {
                            old_mask |= 1 << pos;
                        }
                    }
                    out.push(values[old_mask as usize]);
                }
                NiceNorm::table(out)
            }
        }
    }

    /// Subtracts `h` from every value, clamping at zero.
    pub fn subtract_clamp(&self, h: u32) -> NiceNorm {
        let repr = match &self.repr {
            NormRepr::Log { shift } => NormRepr::Log { shift: shift + h },
            NormRepr::Table(values) => {
                NormRepr::Table(values.iter().map(|&v| v.saturating_sub(h)).collect())
            }
        };
        NiceNorm { base: self.base, repr }
    }
}

/// Checks the four norm axioms, returning the first violation found:
/// positive full value, singletons at most 1, monotonicity, and the
/// bisection law.  Tables are scanned exhaustively over all subset
/// pairs; the logarithmic norm satisfies the last three structurally,
/// so only positivity is examined.
pub fn validate_norm(norm: &NiceNorm) -> Result<(), NormViolation> {
    if norm.base == 0 {
        return Err(NormViolation::BaseEmpty);
    }
    if norm.full_value() == 0 {
        return Err(NormViolation::BaseNotPositive);
    }
    let values = match &norm.repr {
        NormRepr::Log { .. } => return Ok(()),
        NormRepr::Table(values) => values,
    };
    for index in 0..norm.base {
        if values[1usize << index] > 1 {
            return Err(NormViolation::SingletonTooBig { index });
        }
    }
    let size = values.len() as u64;
    for mask in 0..size {
        let mut bits = mask;
        while bits != 0 {
            let bit = bits & bits.wrapping_neg();
            let sub = mask ^ bit;
            if values[sub as usize] > values[mask as usize] {
                return Err(NormViolation::NotMonotone { sub_mask: sub, sup_mask: mask });
            }
            bits ^= bit;
        }
    }
    for set in 1..size {
        let value = values[set as usize];
        if value < 2 {
            continue;
        }
        let mut part = set;
        loop {
            let rest = set ^ part;
            if values[part as usize] + 1 < value && values[rest as usize] + 1 < value {
                return Err(NormViolation::BisectionFails { set_mask: set, part_mask: part });
            }
            if part == 0 {
                break;
            }
            part = (part - 1) & set;
        }
    }
    Ok(())
}

/// True when the two norms define the same function on a shared base.
fn norm_fn_eq(a: &NiceNorm, b: &NiceNorm) -> bool {
    if a.base != b.base {
        return false;
    }
    match (&a.repr, &b.repr) {
        (NormRepr::Log { shift: s }, NormRepr::Log { shift: t }) => s == t,
        (NormRepr::Table(x), NormRepr::Table(y)) => x == y,
        (NormRepr::Table(values), NormRepr::Log { shift })
        | (NormRepr::Log { shift }, NormRepr::Table(values)) => values
            .iter()
            .enumerate()
            .all(|(mask, &v)| {
                let count = (mask as u64).count_ones() as usize;
                let lv = if count == 0 { 0 } else { log_value(count, *shift) };
                v == lv
            }),
    }
}

// ---------------------------------------------------------------------------
// creatures
// ---------------------------------------------------------------------------

/// One node of a creature: tree address (via parent and label), closed
/// interval, sorted child list, and the norm on widely splitting nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreatureNode {
    /// Arena index of the parent; `None` for the root.
    pub parent: Option<usize>,
    /// Last component of the node's tree address.
    pub label: u64,
    /// Arena indices of the children, sorted by label.
    pub children: Vec<usize>,
    /// Left end of the node's interval.
    pub left: u64,
    /// Right end of the node's interval.
    pub right: u64,
    /// Set measure on the children, present exactly on nodes with more
    /// than `k` children.
    pub norm: Option<NiceNorm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Leaf,
    Exact,
    Wide,
}

fn kind_of(count: usize, k: usize) -> NodeKind {
    if count == 0 {
        NodeKind::Leaf
    } else if count == k {
        NodeKind::Exact
    } else {
        NodeKind::Wide
    }
}

/// Tree address with interval, used to assemble creatures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    /// Tree address; the root is the empty path.
    pub path: Vec<u64>,
    /// Left end of the interval.
    pub left: u64,
    /// Right end of the interval.
    pub right: u64,
}

/// Norm attachment for assembly: an explicit table or a logarithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormSpec {
    /// Exhaustive `(mask, value)` pairs for the node at `path`.
    Table {
        /// Address of the measured node.
        path: Vec<u64>,
        /// One entry per subset of the node's children.
        pairs: Vec<(u64, u32)>,
    },
    /// Cardinality-logarithm norm for the node at `path`.
    Log {
        /// Address of the measured node.
        path: Vec<u64>,
        /// Downward shift of the logarithm.
        shift: u32,
    },
}

/// A finite normed interval tree; see the module documentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCreature", into = "RawCreature")]
pub struct Creature {
    k: usize,
    nodes: Vec<CreatureNode>,
}

impl Creature {
    /// Assembles and fully validates a creature from node and norm
    /// specifications.  Paths may come in any order; every non-root
    /// path's parent must be present.
    pub fn assemble(
        k: usize,
        mut node_specs: Vec<NodeSpec>,
        norm_specs: Vec<NormSpec>,
    ) -> Result<Self, CreatureError> {
        if k == 0 {
            return Err(CreatureError::KZero);
        }
        if node_specs.is_empty() {
            return Err(CreatureError::EmptyTree);
        }
        node_specs.sort_by(|a, b| a.path.cmp(&b.path));
        for pair in node_specs.windows(2) {
            if pair[0].path == pair[1].path {
                return Err(CreatureError::DuplicatePath { path: pair[0].path.clone() });
            }
        }
        if !node_specs[0].path.is_empty() {
            return Err(CreatureError::OrphanPath { path: node_specs[0].path.clone() });
        }
        let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(node_specs.len());
        let mut nodes: Vec<CreatureNode> = Vec::with_capacity(node_specs.len());
        for spec in &node_specs {
            let parent = if spec.path.is_empty() {
                None
            } else {
                let parent_path = &spec.path[..spec.path.len() - 1];
                match index.get(parent_path) {
                    Some(&p) => Some(p),
                    None => return Err(CreatureError::OrphanPath { path: spec.path.clone() }),
                }
            };
            let idx = nodes.len();
            if let Some(p) = parent {
                nodes[p].children.push(idx);
            }
            index.insert(spec.path.clone(), idx);
            nodes.push(CreatureNode {
                parent,
                label: spec.path.last().copied().unwrap_or(0),
                children: Vec::new(),
                left: spec.left,
                right: spec.right,
                norm: None,
            });
        }
        for spec in norm_specs {
            let (path, shiftless_table) = match spec {
                NormSpec::Table { path, pairs } => (path, Some(pairs)),
                NormSpec::Log { path, shift } => {
                    let idx = *index
                        .get(&path)
                        .ok_or(CreatureError::NormForUnknownNode { path: path.clone() })?;
                    let base = nodes[idx].children.len();
                    if nodes[idx].norm.is_some() {
                        return Err(CreatureError::DuplicateNorm { path });
                    }
                    nodes[idx].norm = Some(NiceNorm::log_shifted(base, shift)?);
                    continue;
                }
            };
            let pairs = shiftless_table.expect("table branch");
            let idx = *index
                .get(&path)
                .ok_or(CreatureError::NormForUnknownNode { path: path.clone() })?;
            let base = nodes[idx].children.len();
            if nodes[idx].norm.is_some() {
                return Err(CreatureError::DuplicateNorm { path });
            }
            nodes[idx].norm = Some(NiceNorm::from_pairs(base, &pairs)?);
        }
        let creature = Creature { k, nodes };
        creature.validate(true)?;
        Ok(creature)
    }

    /// A single-leaf creature carrying one point.
    pub fn leaf(k: usize, point: u64) -> Result<Self, CreatureError> {
        Creature::assemble(k, vec![NodeSpec { path: vec![], left: point, right: point }], vec![])
    }

    /// Branching parameter `k`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of tree nodes.
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// The node arena; index 0 is the root and parents precede children.
    pub fn nodes(&self) -> &[CreatureNode] {
        &self.nodes
    }

    /// The root node.
    pub fn root(&self) -> &CreatureNode {
        &self.nodes[0]
    }

    /// Root interval `(left, right)`.
    pub fn span(&self) -> (u64, u64) {
        (self.nodes[0].left, self.nodes[0].right)
    }

    /// Tree address of the node at an arena index.
    pub fn path_of(&self, mut idx: usize) -> Vec<u64> {
        let mut path = Vec::new();
        while let Some(parent) = self.nodes[idx].parent {
            path.push(self.nodes[idx].label);
            idx = parent;
        }
        path.reverse();
        path
    }

    /// Arena index of the node at a tree address, if present.
    pub fn find(&self, path: &[u64]) -> Option<usize> {
        let mut idx = 0usize;
        for &label in path {
            let node = &self.nodes[idx];
            let pos = node
                .children
                .binary_search_by_key(&label, |&c| self.nodes[c].label)
                .ok()?;
            idx = node.children[pos];
        }
        Some(idx)
    }

    /// Re-checks every structural invariant; `check_axioms` additionally
    /// re-runs the exhaustive norm validation.
    pub fn validate(&self, check_axioms: bool) -> Result<(), CreatureError> {
        if self.k == 0 {
            return Err(CreatureError::KZero);
        }
        if self.nodes.is_empty() {
            return Err(CreatureError::EmptyTree);
        }
        for (idx, node) in self.nodes.iter().enumerate() {
            let count = node.children.len();
            let kind = kind_of(count, self.k);
            if count > 0 && count < self.k {
                return Err(CreatureError::BadBranching {
                    path: self.path_of(idx),
                    count,
                    k: self.k,
                });
            }
            if kind == NodeKind::Exact {
                for &c in &node.children {
                    if kind_of(self.nodes[c].children.len(), self.k) == NodeKind::Exact {
                        return Err(CreatureError::SuccessiveK { parent: self.path_of(idx) });
                    }
                }
            }
            match (&node.norm, kind) {
                (None, NodeKind::Wide) => {
                    return Err(CreatureError::NormMissing { path: self.path_of(idx) })
                }
                (Some(_), NodeKind::Leaf) | (Some(_), NodeKind::Exact) => {
                    return Err(CreatureError::NormUnexpected { path: self.path_of(idx) })
                }
                (Some(norm), NodeKind::Wide) => {
                    if norm.base_size() != count {
                        return Err(CreatureError::NormBaseMismatch {
                            path: self.path_of(idx),
                            base: norm.base_size(),
                            children: count,
                        });
                    }
                    if check_axioms {
                        validate_norm(norm).map_err(|violation| CreatureError::InvalidNorm {
                            path: self.path_of(idx),
                            violation,
                        })?;
                    } else if norm.full_value() == 0 {
                        return Err(CreatureError::InvalidNorm {
                            path: self.path_of(idx),
                            violation: NormViolation::BaseNotPositive,
                        });
                    }
                }
                (None, _) => {}
            }
            if node.left > node.right {
                return Err(CreatureError::IntervalInverted { path: self.path_of(idx) });
            }
            if kind == NodeKind::Leaf && node.left != node.right {
                return Err(CreatureError::LeafIntervalNotPoint { path: self.path_of(idx) });
            }
            let mut spans: Vec<(u64, u64, usize)> = Vec::with_capacity(count);
            for &c in &node.children {
                let child = &self.nodes[c];
                if child.left < node.left || child.right > node.right {
                    return Err(CreatureError::IntervalOutsideParent { path: self.path_of(c) });
                }
                spans.push((child.left, child.right, c));
            }
            spans.sort_unstable();
            for pair in spans.windows(2) {
                if pair[0].1 >= pair[1].0 {
                    return Err(CreatureError::IntervalOverlap {
                        left: self.path_of(pair[0].2),
                        right: self.path_of(pair[1].2),
                    });
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawNode {
    path: Vec<u64>,
    #[serde(rename = "L")]
    left: u64,
    #[serde(rename = "R")]
    right: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawNorm {
    path: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table: Option<Vec<(u64, u32)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    shift: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawCreature {
    k: usize,
    nodes: Vec<RawNode>,
    norms: Vec<RawNorm>,
}

impl TryFrom<RawCreature> for Creature {
    type Error = CreatureError;

    fn try_from(raw: RawCreature) -> Result<Self, CreatureError> {
        let node_specs = raw
            .nodes
            .into_iter()
            .map(|n| NodeSpec { path: n.path, left: n.left, right: n.right })
            .collect();
        let mut norm_specs = Vec::with_capacity(raw.norms.len());
        for norm in raw.norms {
            match (norm.table, norm.kind) {
                (Some(pairs), None) => {
                    if norm.shift.is_some() {
                        return Err(CreatureError::NormSpecConflict { path: norm.path });
                    }
                    norm_specs.push(NormSpec::Table { path: norm.path, pairs });
                }
                (None, Some(kind)) => {
                    if kind != "log" {
                        return Err(CreatureError::UnknownNormKind { kind });
                    }
                    norm_specs
                        .push(NormSpec::Log { path: norm.path, shift: norm.shift.unwrap_or(0) });
                }
                _ => return Err(CreatureError::NormSpecConflict { path: norm.path }),
            }
        }
        Creature::assemble(raw.k, node_specs, norm_specs)
    }
}

impl From<Creature> for RawCreature {
    fn from(c: Creature) -> RawCreature {
        let mut nodes = Vec::with_capacity(c.nodes.len());
        let mut norms = Vec::new();
        for idx in 0..c.nodes.len() {
            let path = c.path_of(idx);
            let node = &c.nodes[idx];
            if let Some(norm) = &node.norm {
                norms.push(match norm.repr() {
                    NormRepr::Table(values) => RawNorm {
                        path: path.clone(),
                        table: Some(
                            values.iter().enumerate().map(|(m, &v)| (m as u64, v)).collect(),
                        ),
                        kind: None,
                        shift: None,
                    },
                    NormRepr::Log { shift } => RawNorm {
                        path: path.clone(),
                        table: None,
                        kind: Some("log".to_owned()),
                        shift: if *shift == 0 { None } else { Some(*shift) },
                    },
                });
            }
            nodes.push(RawNode { path, left: node.left, right: node.right });
        }
        RawCreature { k: c.k, nodes, norms }
    }
}

// ---------------------------------------------------------------------------
// basic operations
// ---------------------------------------------------------------------------

/// Minimum over widely splitting nodes of the full-base norm value;
/// zero when no node carries a norm.
pub fn weight(t: &Creature) -> u32 {
    t.nodes
        .iter()
        .filter_map(|n| n.norm.as_ref().map(NiceNorm::full_value))
        .min()
        .unwrap_or(0)
}

/// Sorted leaf labels of the creature.
pub fn contribution(t: &Creature) -> Vec<u64> {
    let mut points: Vec<u64> = t
        .nodes
        .iter()
        .filter(|n| n.children.is_empty())
        .map(|n| n.left)
        .collect();
    points.sort_unstable();
    points
}

/// True when `t1` refines `t0`: the tree embeds as a subtree, interval
/// labels restrict, every node keeps its splitting kind, and each norm
/// is the restriction of the original norm to the kept children.
pub fn refines(t0: &Creature, t1: &Creature) -> bool {
    if t0.k != t1.k {
        return false;
    }
    let mut index0: HashMap<Vec<u64>, usize> = HashMap::with_capacity(t0.nodes.len());
    for idx in 0..t0.nodes.len() {
        index0.insert(t0.path_of(idx), idx);
    }
    for idx1 in 0..t1.nodes.len() {
        let path = t1.path_of(idx1);
        let idx0 = match index0.get(&path) {
            Some(&i) => i,
            None => return false,
        };
        let n0 = &t0.nodes[idx0];
        let n1 = &t1.nodes[idx1];
        if n0.left != n1.left || n0.right != n1.right {
            return false;
        }
        if kind_of(n0.children.len(), t0.k) != kind_of(n1.children.len(), t1.k) {
            return false;
        }
        match (&n0.norm, &n1.norm) {
            (None, None) => {}
            (Some(norm0), Some(norm1)) => {
                let mut kept_positions = Vec::with_capacity(n1.children.len());
                for &c1 in &n1.children {
                    let label = t1.nodes[c1].label;
                    match n0
                        .children
                        .binary_search_by_key(&label, |&c| t0.nodes[c].label)
                    {
                        Ok(pos) => kept_positions.push(pos),
                        Err(_) => return false,
                    }
                }
                match norm0.restrict(&kept_positions) {
                    Ok(restricted) => {
                        if !norm_fn_eq(&restricted, norm1) {
                            return false;
                        }
                    }
                    Err(_) => return false,
                }
            }
            _ => return false,
        }
    }
    true
}

/// Same tree, every norm value lowered by half the weight (clamped at
/// zero).  The weight of the result is `w - floor(w / 2)` and the
/// contribution is unchanged.
pub fn upper_half(t: &Creature) -> Creature {
    let h = weight(t) / 2;
    if h == 0 {
        return t.clone();
    }
    let nodes = t
        .nodes
        .iter()
        .map(|n| CreatureNode {
            parent: n.parent,
            label: n.label,
            children: n.children.clone(),
            left: n.left,
            right: n.right,
            norm: n.norm.as_ref().map(|norm| norm.subtract_clamp(h)),
        })
        .collect();
    let out = Creature { k: t.k, nodes };
    debug_assert!(out.validate(false).is_ok());
    out
}

fn copy_subtree(
    dst: &mut Vec<CreatureNode>,
    src: &Creature,
    src_idx: usize,
    parent: Option<usize>,
    label: u64,
) {
    let node = &src.nodes[src_idx];
    let new_idx = dst.len();
    if let Some(p) = parent {
        dst[p].children.push(new_idx);
    }
    dst.push(CreatureNode {
        parent,
        label,
        children: Vec::with_capacity(node.children.len()),
        left: node.left,
        right: node.right,
        norm: node.norm.clone(),
    });
    for &c in &node.children {
        copy_subtree(dst, src, c, Some(new_idx), src.nodes[c].label);
    }
}

fn check_parts_increasing(parts: &[Creature]) -> Result<(), CreatureError> {
    for i in 1..parts.len() {
        if parts[i - 1].root().right >= parts[i].root().left {
            return Err(CreatureError::PartsNotIncreasing { index: i });
        }
    }
    Ok(())
}

/// Joins more than `k` parts under a fresh root carrying the norm `h`;
/// part `i` becomes the child with label `i`.  The root interval spans
/// the parts.
pub fn build_s_h(parts: &[Creature], h: &NiceNorm) -> Result<Creature, CreatureError> {
    let k = parts.first().map(|p| p.k).ok_or(CreatureError::TooFewParts { got: 0, need: 1 })?;
    if parts.iter().any(|p| p.k != k) {
        return Err(CreatureError::KMismatch);
    }
    if parts.len() < k + 1 {
        return Err(CreatureError::TooFewParts { got: parts.len(), need: k + 1 });
    }
    if h.base_size() != parts.len() {
        return Err(CreatureError::NormBaseMismatch {
            path: vec![],
            base: h.base_size(),
            children: parts.len(),
        });
    }
    validate_norm(h)
        .map_err(|violation| CreatureError::InvalidNorm { path: vec![], violation })?;
    check_parts_increasing(parts)?;
    let mut nodes = vec![CreatureNode {
        parent: None,
        label: 0,
        children: Vec::with_capacity(parts.len()),
        left: parts[0].root().left,
        right: parts[parts.len() - 1].root().right,
        norm: Some(h.clone()),
    }];
    for (i, part) in parts.iter().enumerate() {
        copy_subtree(&mut nodes, part, 0, Some(0), i as u64);
    }
    let out = Creature { k, nodes };
    debug_assert!(out.validate(false).is_ok());
    Ok(out)
}

/// Glues exactly `k` parts under a fresh unnormed `k`-splitting root;
/// no part may itself have a `k`-splitting root.
pub fn glue_s(parts: &[Creature]) -> Result<Creature, CreatureError> {
    let k = parts.first().map(|p| p.k).ok_or(CreatureError::ArityMismatch { got: 0, need: 1 })?;
    if parts.iter().any(|p| p.k != k) {
        return Err(CreatureError::KMismatch);
    }
    if parts.len() != k {
        return Err(CreatureError::ArityMismatch { got: parts.len(), need: k });
    }
    for (i, part) in parts.iter().enumerate() {
        if kind_of(part.root().children.len(), k) == NodeKind::Exact {
            return Err(CreatureError::RootKSplitting { index: i });
        }
    }
    check_parts_increasing(parts)?;
    let mut nodes = vec![CreatureNode {
        parent: None,
        label: 0,
        children: Vec::with_capacity(parts.len()),
        left: parts[0].root().left,
        right: parts[parts.len() - 1].root().right,
        norm: None,
    }];
    for (i, part) in parts.iter().enumerate() {
        copy_subtree(&mut nodes, part, 0, Some(0), i as u64);
    }
    let out = Creature { k, nodes };
    debug_assert!(out.validate(false).is_ok());
    Ok(out)
}

/// Extracts the cone above a node as a creature of its own.
pub fn cone_creature(t: &Creature, idx: usize) -> Creature {
    let mut nodes = Vec::new();
    copy_subtree(&mut nodes, t, idx, None, 0);
    nodes[0].label = 0;
    Creature { k: t.k, nodes }
}

/// True when the cone above `t_idx` equals `part` exactly: same child
/// labels, intervals, and norms (as functions), recursively.
fn cone_matches(t: &Creature, t_idx: usize, part: &Creature, part_idx: usize) -> bool {
    let a = &t.nodes[t_idx];
    let b = &part.nodes[part_idx];
    if a.left != b.left || a.right != b.right {
        return false;
    }
    if a.children.len() != b.children.len() {
        return false;
    }
    match (&a.norm, &b.norm) {
        (None, None) => {}
        (Some(x), Some(y)) => {
            if !norm_fn_eq(x, y) {
                return false;
            }
        }
        _ => return false,
    }
    a.children.iter().zip(&b.children).all(|(&ca, &cb)| {
        t.nodes[ca].label == part.nodes[cb].label && cone_matches(t, ca, part, cb)
    })
}

fn same_creature(a: &Creature, b: &Creature) -> bool {
    a.k == b.k && cone_matches(a, 0, b, 0)
}

/// Searches for a maximal antichain of `t` whose cones are exact copies
/// of the given parts; returns the antichain as `(path, part index)`
/// pairs, topmost cuts first.
pub fn sigma_member(t: &Creature, parts: &[Creature]) -> Option<Vec<(Vec<u64>, usize)>> {
    fn cover(
        t: &Creature,
        idx: usize,
        parts: &[Creature],
        acc: &mut Vec<(Vec<u64>, usize)>,
    ) -> bool {
        for (i, part) in parts.iter().enumerate() {
            if part.k == t.k && cone_matches(t, idx, part, 0) {
                acc.push((t.path_of(idx), i));
                return true;
            }
        }
        if t.nodes[idx].children.is_empty() {
            return false;
        }
        let children = t.nodes[idx].children.clone();
        children.iter().all(|&c| cover(t, c, parts, acc))
    }
    let mut acc = Vec::new();
    if cover(t, 0, parts, &mut acc) {
        Some(acc)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// derivation search
// ---------------------------------------------------------------------------

/// Replayable certificate for a derivation from a list of parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Derivation {
    /// The creature is part `i` itself.
    Part(usize),
    /// The creature is the upper half of the derived one.
    UpperHalf(Box<Derivation>),
    /// The creature refines the derived one.
    Refine(Box<Derivation>),
    /// The creature decomposes along a maximal antichain; each entry
    /// derives the cone above the listed path.
    Build(Vec<(Vec<u64>, Derivation)>),
}

/// Outcome of the bounded derivation search: a certificate, or an
/// honest "not found" that never claims impossibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SigmaStarVerdict {
    /// A derivation within the cap was found.
    Derivable(Derivation),
    /// No derivation was found within the depth cap.
    NotFoundWithinCap,
}

fn derive(t: &Creature, parts: &[Creature], depth: usize) -> Option<Derivation> {
    for (i, part) in parts.iter().enumerate() {
        if same_creature(t, part) {
            return Some(Derivation::Part(i));
        }
    }
    if depth == 0 {
        return None;
    }
    for (i, part) in parts.iter().enumerate() {
        if part.k != t.k {
            continue;
        }
        let mut u = part.clone();
        let mut cert = Derivation::Part(i);
        for step in 0..=depth {
            if refines(&u, t) {
                return Some(if u.nodes.len() == t.nodes.len() {
                    cert
                } else {
                    Derivation::Refine(Box::new(cert))
                });
            }
            if step == depth || weight(&u) <= 1 {
                break;
            }
            u = upper_half(&u);
            cert = Derivation::UpperHalf(Box::new(cert));
        }
    }
    if !t.nodes[0].children.is_empty() {
        fn cover(
            t: &Creature,
            idx: usize,
            parts: &[Creature],
            depth: usize,
            pieces: &mut Vec<(Vec<u64>, Derivation)>,
        ) -> bool {
            let cone = cone_creature(t, idx);
            if let Some(d) = derive(&cone, parts, depth) {
                pieces.push((t.path_of(idx), d));
                return true;
            }
            if t.nodes[idx].children.is_empty() {
                return false;
            }
            let children = t.nodes[idx].children.clone();
            children.iter().all(|&c| cover(t, c, parts, depth, pieces))
        }
        let mut pieces = Vec::new();
        let children = t.nodes[0].children.clone();
        if children.iter().all(|&c| cover(t, c, parts, depth - 1, &mut pieces)) {
            return Some(Derivation::Build(pieces));
        }
    }
    None
}

/// Bounded search for a derivation of `t` from `parts` by refinement,
/// upper halves, and antichain builds.
pub fn sigma_star_member(t: &Creature, parts: &[Creature], depth_cap: usize) -> SigmaStarVerdict {
    match derive(t, parts, depth_cap) {
        Some(d) => SigmaStarVerdict::Derivable(d),
        None => SigmaStarVerdict::NotFoundWithinCap,
    }
}

/// Replays a value-determining certificate (`Part` and `UpperHalf`
/// chains); `Refine` and `Build` nodes need a target and yield `None`.
pub fn replay_value(cert: &Derivation, parts: &[Creature]) -> Option<Creature> {
    match cert {
        Derivation::Part(i) => parts.get(*i).cloned(),
        Derivation::UpperHalf(inner) => replay_value(inner, parts).map(|u| upper_half(&u)),
        _ => None,
    }
}

/// Audits a certificate against a target creature.
pub fn check_derivation(cert: &Derivation, target: &Creature, parts: &[Creature]) -> bool {
    match cert {
        Derivation::Part(i) => parts.get(*i).is_some_and(|p| same_creature(target, p)),
        Derivation::UpperHalf(inner) => replay_value(inner, parts)
            .is_some_and(|u| same_creature(target, &upper_half(&u))),
        Derivation::Refine(inner) => {
            replay_value(inner, parts).is_some_and(|u| refines(&u, target))
        }
        Derivation::Build(pieces) => {
            let mut covered = vec![false; target.nodes.len()];
            for (path, piece) in pieces {
                let idx = match target.find(path) {
                    Some(i) => i,
                    None => return false,
                };
                let mut stack = vec![idx];
                while let Some(n) = stack.pop() {
                    if covered[n] {
                        return false;
                    }
                    covered[n] = true;
                    stack.extend(&target.nodes[n].children);
                }
                if !check_derivation(piece, &cone_creature(target, idx), parts) {
                    return false;
                }
            }
            target
                .nodes
                .iter()
                .enumerate()
                .all(|(i, n)| !n.children.is_empty() || covered[i])
        }
    }
}

// ---------------------------------------------------------------------------
// condition fragments
// ---------------------------------------------------------------------------

/// A finite stem set together with an increasing run of creatures.  The
/// stem sits strictly below the first creature's interval and the
/// creature intervals strictly increase.  Weights are advisory only;
/// no growth condition is imposed on a finite fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFragment", into = "RawFragment")]
pub struct ConditionFragment {
    k: usize,
    w: Vec<u64>,
    creatures: Vec<Creature>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFragment {
    k: usize,
    w: Vec<u64>,
    creatures: Vec<Creature>,
}

impl TryFrom<RawFragment> for ConditionFragment {
    type Error = CreatureError;

    fn try_from(raw: RawFragment) -> Result<Self, CreatureError> {
        ConditionFragment::new(raw.k, raw.w, raw.creatures)
    }
}

impl From<ConditionFragment> for RawFragment {
    fn from(f: ConditionFragment) -> RawFragment {
        RawFragment { k: f.k, w: f.w, creatures: f.creatures }
    }
}

impl ConditionFragment {
    /// Validates ordering and assembles a fragment; the stem is sorted
    /// and deduplicated.
    pub fn new(
        k: usize,
        mut w: Vec<u64>,
        creatures: Vec<Creature>,
    ) -> Result<Self, CreatureError> {
        if k == 0 {
            return Err(CreatureError::KZero);
        }
        w.sort_unstable();
        w.dedup();
        if creatures.iter().any(|c| c.k != k) {
            return Err(CreatureError::FragmentKMismatch);
        }
        if let (Some(&w_max), Some(first)) = (w.last(), creatures.first()) {
            if w_max >= first.root().left {
                return Err(CreatureError::FragmentWNotBelow {
                    w_max,
                    left: first.root().left,
                });
            }
        }
        for i in 1..creatures.len() {
            if creatures[i - 1].root().right >= creatures[i].root().left {
                return Err(CreatureError::FragmentSpansNotIncreasing { index: i });
            }
        }
        Ok(ConditionFragment { k, w, creatures })
    }

    /// Branching parameter shared by the creatures.
    pub fn k(&self) -> usize {
        self.k
    }

    /// The sorted stem set.
    pub fn w(&self) -> &[u64] {
        &self.w
    }

    /// The creatures in interval order.
    pub fn creatures(&self) -> &[Creature] {
        &self.creatures
    }

    /// Advisory weight run of the creatures.
    pub fn weights(&self) -> Vec<u32> {
        self.creatures.iter().map(weight).collect()
    }
}

/// Optional grouping hint for [`fragment_leq`]: the increasing index
/// sequence `n_0 < n_1 < …` delimiting the groups of the weaker
/// fragment's creatures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FragmentHints {
    /// `n_seq[0]` creatures are consumed into the stem; group `i` is
    /// `n_seq[i]..n_seq[i + 1]`.
    pub n_seq: Vec<usize>,
}

/// Verdict of the fragment extension test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FragmentVerdict {
    /// The extension clauses hold; the grouping and per-creature
    /// derivation certificates are returned.
    Holds {
        /// Group boundaries: `n_seq[0]` dropped creatures, then one
        /// group per creature of the stronger fragment.
        n_seq: Vec<usize>,
        /// One derivation per creature of the stronger fragment.
        derivations: Vec<Derivation>,
    },
    /// Some clause fails outright.
    Fails {
        /// Description of the failed clause.
        reason: String,
    },
    /// No grouping worked, but at least one derivation search hit its
    /// depth cap, so failure is not certain.
    CapLimited {
        /// Description of the capped searches.
        reason: String,
    },
}

fn is_subset(sub: &[u64], sup: &[u64]) -> bool {
    sub.iter().all(|x| sup.binary_search(x).is_ok())
}

/// Tests whether `q` extends `p`: the stem may grow only into the
/// contributions of an initial run of dropped creatures, and every
/// creature of `q` must be derivable from a consecutive group of `p`'s
/// creatures.  Hints, when given, pin the grouping.
pub fn fragment_leq(
    p: &ConditionFragment,
    q: &ConditionFragment,
    hints: Option<&FragmentHints>,
) -> FragmentVerdict {
    if p.k != q.k {
        return FragmentVerdict::Fails { reason: "branching parameters differ".to_owned() };
    }
    if !is_subset(&p.w, &q.w) {
        return FragmentVerdict::Fails { reason: "stem lost points".to_owned() };
    }
    let growth: Vec<u64> = q.w.iter().copied().filter(|x| p.w.binary_search(x).is_err()).collect();
    let conts: Vec<Vec<u64>> = p.creatures.iter().map(contribution).collect();
    let covers = |n0: usize| -> bool {
        growth
            .iter()
            .all(|x| conts[..n0].iter().any(|c| c.binary_search(x).is_ok()))
    };
    let n0_min = match (0..=p.creatures.len()).find(|&n0| covers(n0)) {
        Some(n0) => n0,
        None => {
            return FragmentVerdict::Fails {
                reason: "stem growth is not covered by dropped contributions".to_owned(),
            }
        }
    };
    if let Some(hints) = hints {
        let seq = &hints.n_seq;
        let ok_shape = seq.len() == q.creatures.len() + 1
            && seq.windows(2).all(|w| w[0] < w[1])
            && seq.last().copied().unwrap_or(0) <= p.creatures.len()
            && seq.first().is_some_and(|&n0| covers(n0));
        if !ok_shape {
            return FragmentVerdict::Fails { reason: "hinted grouping is malformed".to_owned() };
        }
        let mut derivations = Vec::with_capacity(q.creatures.len());
        let mut capped = false;
        for (i, qc) in q.creatures.iter().enumerate() {
            match sigma_star_member(qc, &p.creatures[seq[i]..seq[i + 1]], DERIVE_DEPTH_CAP) {
                SigmaStarVerdict::Derivable(d) => derivations.push(d),
                SigmaStarVerdict::NotFoundWithinCap => {
                    capped = true;
                    break;
                }
            }
        }
        if !capped {
            return FragmentVerdict::Holds { n_seq: seq.clone(), derivations };
        }
        return FragmentVerdict::CapLimited {
            reason: "hinted grouping not derivable within the cap".to_owned(),
        };
    }
    let mut capped = false;
    fn assign(
        p: &ConditionFragment,
        q: &ConditionFragment,
        qi: usize,
        pi: usize,
        capped: &mut bool,
    ) -> Option<(Vec<usize>, Vec<Derivation>)> {
        if qi == q.creatures.len() {
            return Some((vec![], vec![]));
        }
        for pe in (pi + 1)..=p.creatures.len() {
            match sigma_star_member(&q.creatures[qi], &p.creatures[pi..pe], DERIVE_DEPTH_CAP) {
                SigmaStarVerdict::Derivable(d) => {
                    if let Some((mut seq, mut certs)) = assign(p, q, qi + 1, pe, capped) {
                        seq.insert(0, pe);
                        certs.insert(0, d);
                        return Some((seq, certs));
                    }
                }
                SigmaStarVerdict::NotFoundWithinCap => *capped = true,
            }
        }
        None
    }
    for n0 in n0_min..=p.creatures.len() {
        if !covers(n0) {
            continue;
        }
        if let Some((mut seq, derivations)) = assign(p, q, 0, n0, &mut capped) {
            seq.insert(0, n0);
            return FragmentVerdict::Holds { n_seq: seq, derivations };
        }
    }
    if capped {
        FragmentVerdict::CapLimited { reason: "derivation searches hit the depth cap".to_owned() }
    } else {
        FragmentVerdict::Fails { reason: "no grouping derives every creature".to_owned() }
    }
}

// ---------------------------------------------------------------------------
// pair conditions
// ---------------------------------------------------------------------------

/// A finite decided set `u` together with families of disjoint pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPairCondition", into = "RawPairCondition")]
pub struct PairCondition {
    u: Vec<u64>,
    families: Vec<Vec<(u64, u64)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawPairCondition {
    u: Vec<u64>,
    families: Vec<Vec<(u64, u64)>>,
}

impl TryFrom<RawPairCondition> for PairCondition {
    type Error = CreatureError;

    fn try_from(raw: RawPairCondition) -> Result<Self, CreatureError> {
        PairCondition::new(raw.u, raw.families)
    }
}

impl From<PairCondition> for RawPairCondition {
    fn from(p: PairCondition) -> RawPairCondition {
        RawPairCondition { u: p.u, families: p.families }
    }
}

impl PairCondition {
    /// Canonicalizes and validates: `u` sorted, each family's pairs
    /// ordered and mutually disjoint, families deduplicated.
    pub fn new(
        mut u: Vec<u64>,
        families: Vec<Vec<(u64, u64)>>,
    ) -> Result<Self, CreatureError> {
        u.sort_unstable();
        u.dedup();
        let mut canon = Vec::with_capacity(families.len());
        for (fi, family) in families.into_iter().enumerate() {
            let mut pairs = Vec::with_capacity(family.len());
            let mut seen = BTreeSet::new();
            for (a, b) in family {
                if a == b {
                    return Err(CreatureError::PairDegenerate { a });
                }
                let pair = (a.min(b), a.max(b));
                for value in [pair.0, pair.1] {
                    if !seen.insert(value) {
                        return Err(CreatureError::PairOverlap { family: fi, value });
                    }
                }
                pairs.push(pair);
            }
            pairs.sort_unstable();
            canon.push(pairs);
        }
        canon.sort();
        canon.dedup();
        Ok(PairCondition { u, families: canon })
    }

    /// The sorted decided set.
    pub fn u(&self) -> &[u64] {
        &self.u
    }

    /// The canonicalized families.
    pub fn families(&self) -> &[Vec<(u64, u64)>] {
        &self.families
    }
}

/// The literal three-clause extension test: the decided set grows only
/// above its old maximum, families are retained, and a retained pair
/// that lands inside the new decided set must already have been inside
/// the old one.
pub fn pair_leq(p0: &PairCondition, p1: &PairCondition) -> bool {
    let below_max: Vec<u64> = match p0.u.last() {
        Some(&mx) => p1.u.iter().copied().filter(|&x| x <= mx).collect(),
        None => vec![],
    };
    if below_max != p0.u {
        return false;
    }
    if !p0.families.iter().all(|f| p1.families.binary_search(f).is_ok()) {
        return false;
    }
    for family in &p0.families {
        for &(a, b) in family {
            let in_u1 = p1.u.binary_search(&a).is_ok() && p1.u.binary_search(&b).is_ok();
            if in_u1 {
                let in_u0 = p0.u.binary_search(&a).is_ok() && p0.u.binary_search(&b).is_ok();
                if !in_u0 {
                    return false;
                }
            }
        }
    }
    true
}

/// Joins two conditions sharing the same decided set by uniting their
/// families; `None` when the decided sets differ.
pub fn pair_join(p0: &PairCondition, p1: &PairCondition) -> Option<PairCondition> {
    if p0.u != p1.u {
        return None;
    }
    let mut families = p0.families.clone();
    families.extend(p1.families.iter().cloned());
    PairCondition::new(p0.u.clone(), families).ok()
}

// ---------------------------------------------------------------------------
// sparsifying shrink
// ---------------------------------------------------------------------------

/// Classification of a child interval against the marker list: it fits
/// inside one closed marker cell (possibly two when it is a single
/// point on a marker), or some marker lies strictly inside it.
#[derive(Debug, Clone, Copy)]
enum GapClass {
    Fits { lo: usize, hi: usize },
    Straddles,
}

fn classify(markers: &[u64], left: u64, right: u64) -> GapClass {
    let m = markers.partition_point(|&x| x <= left) - 1;
    debug_assert!(m + 1 < markers.len());
    if right <= markers[m + 1] {
        let lo = if m >= 1 && left == markers[m] && right == left { m - 1 } else { m };
        GapClass::Fits { lo, hi: m }
    } else {
        GapClass::Straddles
    }
}

fn fits_even(class: GapClass) -> bool {
    match class {
        GapClass::Fits { lo, hi } => lo < hi || lo % 2 == 0,
        GapClass::Straddles => false,
    }
}

fn fits_odd(class: GapClass) -> bool {
    match class {
        GapClass::Fits { lo, hi } => lo == hi && lo % 2 == 1,
        GapClass::Straddles => false,
    }
}

struct ShrinkCtx<'a> {
    t: &'a Creature,
    markers: &'a [u64],
    k: usize,
    keep: Vec<bool>,
    min_cone: Vec<u32>,
}

impl<'a> ShrinkCtx<'a> {
    fn new(t: &'a Creature, markers: &'a [u64]) -> Self {
        let n = t.nodes.len();
        let mut min_cone = vec![u32::MAX; n];
        for idx in (0..n).rev() {
            let node = &t.nodes[idx];
            let mut m = node.norm.as_ref().map_or(u32::MAX, NiceNorm::full_value);
            for &c in &node.children {
                m = m.min(min_cone[c]);
            }
            min_cone[idx] = m;
        }
        ShrinkCtx { t, markers, k: t.k, keep: vec![false; n], min_cone }
    }

    fn keep_subtree(&mut self, idx: usize) {
        let mut stack = vec![idx];
        while let Some(n) = stack.pop() {
            self.keep[n] = true;
            stack.extend(&self.t.nodes[n].children);
        }
    }

    fn child_classes(&self, idx: usize) -> Vec<GapClass> {
        self.t.nodes[idx]
            .children
            .iter()
            .map(|&c| classify(self.markers, self.t.nodes[c].left, self.t.nodes[c].right))
            .collect()
    }

    fn norm_of(&self, idx: usize) -> &NiceNorm {
        self.t.nodes[idx].norm.as_ref().expect("widely splitting node carries a norm")
    }

    /// Every fourth member (by interval order) of the straddler set,
    /// first residue whose norm clears the threshold.
    fn pick_quarter(
        &self,
        idx: usize,
        straddlers: &[usize],
        threshold: u32,
    ) -> Result<Vec<usize>, CreatureError> {
        let node = &self.t.nodes[idx];
        let mut by_left: Vec<usize> = straddlers.to_vec();
        by_left.sort_by_key(|&pos| self.t.nodes[node.children[pos]].left);
        let norm = self.norm_of(idx);
        for residue in 0..4usize {
            let mut quarter: Vec<usize> =
                by_left.iter().copied().skip(residue).step_by(4).collect();
            quarter.sort_unstable();
            if norm.value_of_subset(&quarter) >= threshold {
                return Ok(quarter);
            }
        }
        Err(CreatureError::NormAxiomViolation {
            detail: format!(
                "no quarter of the {}-member straddler set at {:?} reaches value {}",
                straddlers.len(),
                self.t.path_of(idx),
                threshold
            ),
        })
    }

    fn shrink_cone(&mut self, idx: usize) -> Result<(), CreatureError> {
        if self.min_cone[idx] == u32::MAX {
            // No norm anywhere in the cone: at most max(1, k) leaf
            // labels, which can never doubly fill k + 1 gaps.
            self.keep_subtree(idx);
            return Ok(());
        }
        let w = self.min_cone[idx];
        let count = self.t.nodes[idx].children.len();
        match kind_of(count, self.k) {
            NodeKind::Leaf => {
                self.keep[idx] = true;
                Ok(())
            }
            NodeKind::Exact => self.exact_split_case(idx, w),
            NodeKind::Wide => self.wide_split_case(idx, w),
        }
    }

    /// Root splits more than `k` ways: keep a parity class of children
    /// fitting closed marker cells when one is heavy enough (its leaves
    /// then leak at most one endpoint label into each opposite-parity
    /// gap), else thin the straddlers to every fourth member and
    /// recurse above each survivor.
    fn wide_split_case(&mut self, idx: usize, w: u32) -> Result<(), CreatureError> {
        self.keep[idx] = true;
        let classes = self.child_classes(idx);
        let even: Vec<usize> =
            (0..classes.len()).filter(|&p| fits_even(classes[p])).collect();
        let odd: Vec<usize> = (0..classes.len()).filter(|&p| fits_odd(classes[p])).collect();
        let straddlers: Vec<usize> = (0..classes.len())
            .filter(|&p| matches!(classes[p], GapClass::Straddles))
            .collect();
        let norm = self.norm_of(idx);
        if norm.value_of_subset(&even) >= w - 3 {
            return self.keep_group_whole(idx, &even);
        }
        if norm.value_of_subset(&odd) >= w - 3 {
            return self.keep_group_whole(idx, &odd);
        }
        if norm.value_of_subset(&straddlers) + 1 < w {
            return Err(CreatureError::NormAxiomViolation {
                detail: format!(
                    "at {:?} both parity classes fall below {} yet the straddlers fall below {}",
                    self.t.path_of(idx),
                    w - 3,
                    w - 1
                ),
            });
        }
        let kept = self.pick_quarter(idx, &straddlers, w - 7)?;
        self.guard_kind(idx, kept.len())?;
        let children = self.t.nodes[idx].children.clone();
        for &pos in &kept {
            self.shrink_cone(children[pos])?;
        }
        Ok(())
    }

    fn keep_group_whole(&mut self, idx: usize, positions: &[usize]) -> Result<(), CreatureError> {
        self.guard_kind(idx, positions.len())?;
        let children = self.t.nodes[idx].children.clone();
        for &pos in positions {
            self.keep_subtree(children[pos]);
        }
        Ok(())
    }

    fn guard_kind(&self, idx: usize, kept: usize) -> Result<(), CreatureError> {
        if kept <= self.k {
            return Err(CreatureError::KindUnpreservable {
                path: self.t.path_of(idx),
                kept,
                k: self.k,
            });
        }
        Ok(())
    }

    /// Root splits exactly `k` ways: leaves stay; each widely splitting
    /// child is narrowed to a subset confined to one closed cell or to
    /// a marker-separated span, thinned by the wide-split step, and the
    /// recursion continues above each survivor.
    fn exact_split_case(&mut self, idx: usize, w: u32) -> Result<(), CreatureError> {
        self.keep[idx] = true;
        let children = self.t.nodes[idx].children.clone();
        for &c in &children {
            if self.min_cone[c] == u32::MAX {
                self.keep_subtree(c);
            } else if self.t.nodes[c].children.len() > self.k {
                self.narrow_wide_child(c, w)?;
            } else {
                self.shrink_cone(c)?;
            }
        }
        Ok(())
    }

    fn narrow_wide_child(&mut self, idx: usize, w: u32) -> Result<(), CreatureError> {
        self.keep[idx] = true;
        let node = &self.t.nodes[idx];
        let children = node.children.clone();
        let classes = self.child_classes(idx);
        let norm = self.norm_of(idx);
        let full = norm.full_value();
        let fitters: Vec<usize> = (0..classes.len())
            .filter(|&p| matches!(classes[p], GapClass::Fits { .. }))
            .collect();
        let a_set: Vec<usize> = if norm.value_of_subset(&fitters) + 1 >= full {
            // Most of the mass fits closed cells.  Either one cell's
            // fitters alone are heavy, or peeling the two extreme cell
            // classes on each side leaves a heavy, marker-separated
            // middle.
            // A fitter fits exactly one cell, or two adjacent ones when
            // it is a point on the marker between them; bucketing by
            // cell therefore costs at most two entries per fitter.
            let mut by_cell: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for &p in &fitters {
                if let GapClass::Fits { lo, hi } = classes[p] {
                    by_cell.entry(lo).or_default().push(p);
                    if hi != lo {
                        by_cell.entry(hi).or_default().push(p);
                    }
                }
            }
            let mut single = None;
            for fitting in by_cell.values() {
                if norm.value_of_subset(fitting) >= w - 7 {
                    let mut set = fitting.clone();
                    set.sort_unstable();
                    single = Some(set);
                    break;
                }
            }
            match single {
                Some(set) => set,
                None => {
                    let min_cells: Vec<usize> = {
                        let distinct: BTreeSet<usize> = fitters
                            .iter()
                            .map(|&p| match classes[p] {
                                GapClass::Fits { lo, .. } => lo,
                                GapClass::Straddles => unreachable!("fitters only"),
                            })
                            .collect();
                        distinct.into_iter().collect()
                    };
                    if min_cells.len() < 5 {
                        return Err(CreatureError::NormAxiomViolation {
                            detail: format!(
                                "fitters at {:?} occupy only {} cells yet no cell is heavy",
                                self.t.path_of(idx),
                                min_cells.len()
                            ),
                        });
                    }
                    let lo_cell = min_cells[2];
                    let hi_cell = min_cells[min_cells.len() - 3];
                    let middle: Vec<usize> = fitters
                        .iter()
                        .copied()
                        .filter(|&p| match classes[p] {
                            GapClass::Fits { lo, .. } => lo_cell <= lo && lo <= hi_cell,
                            GapClass::Straddles => false,
                        })
                        .collect();
                    if norm.value_of_subset(&middle) < w - 7 {
                        return Err(CreatureError::NormAxiomViolation {
                            detail: format!(
                                "peeled middle at {:?} falls below {}",
                                self.t.path_of(idx),
                                w - 7
                            ),
                        });
                    }
                    middle
                }
            }
        } else {
            // The straddlers carry the mass; drop the two extreme
            // members on each side so that their interior markers
            // separate the rest from every sibling.
            let straddlers: Vec<usize> = (0..classes.len())
                .filter(|&p| matches!(classes[p], GapClass::Straddles))
                .collect();
            if norm.value_of_subset(&straddlers) + 1 < full {
                return Err(CreatureError::NormAxiomViolation {
                    detail: format!(
                        "neither the fitters nor the straddlers at {:?} reach value {}",
                        self.t.path_of(idx),
                        full - 1
                    ),
                });
            }
            if straddlers.len() < 5 {
                return Err(CreatureError::NormAxiomViolation {
                    detail: format!(
                        "only {} straddlers at {:?}, too few to trim",
                        straddlers.len(),
                        self.t.path_of(idx)
                    ),
                });
            }
            let mut by_left = straddlers;
            by_left.sort_by_key(|&pos| self.t.nodes[children[pos]].left);
            let mut trimmed: Vec<usize> = by_left[2..by_left.len() - 2].to_vec();
            trimmed.sort_unstable();
            if norm.value_of_subset(&trimmed) < w - 7 {
                return Err(CreatureError::NormAxiomViolation {
                    detail: format!(
                        "trimmed straddlers at {:?} fall below {}",
                        self.t.path_of(idx),
                        w - 7
                    ),
                });
            }
            trimmed
        };
        // Wide-split step relative to the narrowed set, then recursion
        // above every survivor.
        let w2 = norm.value_of_subset(&a_set);
        let even: Vec<usize> =
            a_set.iter().copied().filter(|&p| fits_even(classes[p])).collect();
        let odd: Vec<usize> = a_set.iter().copied().filter(|&p| fits_odd(classes[p])).collect();
        let straddlers: Vec<usize> = a_set
            .iter()
            .copied()
            .filter(|&p| matches!(classes[p], GapClass::Straddles))
            .collect();
        let kept = if norm.value_of_subset(&even) >= w2 - 3 {
            even
        } else if norm.value_of_subset(&odd) >= w2 - 3 {
            odd
        } else {
            if norm.value_of_subset(&straddlers) + 1 < w2 {
                return Err(CreatureError::NormAxiomViolation {
                    detail: format!(
                        "narrowed parity classes at {:?} fall below {} yet the straddlers fall below {}",
                        self.t.path_of(idx),
                        w2 - 3,
                        w2 - 1
                    ),
                });
            }
            self.pick_quarter(idx, &straddlers, w2 - 7)?
        };
        if norm.value_of_subset(&kept) + 14 < w {
            return Err(CreatureError::NormAxiomViolation {
                detail: format!(
                    "kept set at {:?} loses more than 14 from weight {}",
                    self.t.path_of(idx),
                    w
                ),
            });
        }
        self.guard_kind(idx, kept.len())?;
        for &pos in &kept {
            self.shrink_cone(children[pos])?;
        }
        Ok(())
    }
}

fn materialize(t: &Creature, keep: &[bool]) -> Result<Creature, CreatureError> {
    let mut map = vec![usize::MAX; t.nodes.len()];
    let mut nodes: Vec<CreatureNode> = Vec::new();
    for idx in 0..t.nodes.len() {
        if !keep[idx] {
            continue;
        }
        let src = &t.nodes[idx];
        map[idx] = nodes.len();
        let parent = src.parent.map(|p| {
            debug_assert!(keep[p], "kept node under a dropped parent");
            map[p]
        });
        let kept_positions: Vec<usize> = src
            .children
            .iter()
            .enumerate()
            .filter(|&(_, &c)| keep[c])
            .map(|(pos, _)| pos)
            .collect();
        let norm = match &src.norm {
            None => None,
            Some(norm) => {
                if kept_positions.len() == src.children.len() {
                    Some(norm.clone())
                } else {
                    Some(norm.restrict(&kept_positions)?)
                }
            }
        };
        let new_idx = nodes.len();
        if let Some(p) = parent {
            nodes[p].children.push(new_idx);
        }
        nodes.push(CreatureNode {
            parent,
            label: src.label,
            children: Vec::with_capacity(kept_positions.len()),
            left: src.left,
            right: src.right,
            norm,
        });
    }
    let out = Creature { k: t.k, nodes };
    debug_assert!(out.validate(false).is_ok());
    Ok(out)
}

/// Thins a creature of weight at least 15 against the marker set so
/// that the result refines the input, loses at most 14 weight, and its
/// leaf labels meet some gap of every `k + 1` consecutive marker gaps
/// in fewer than two points.  The markers must start at or below the
/// creature's span and continue at least two points beyond it.
pub fn sparse_shrink(t: &Creature, markers: &WSet) -> Result<Creature, CreatureError> {
    let w = weight(t);
    if w < 15 {
        return Err(CreatureError::WeightTooSmall { weight: w, need: 15 });
    }
    let ms = markers.elements();
    let (left, right) = t.span();
    match ms.first() {
        Some(&first) if first <= left => {}
        Some(&first) => return Err(CreatureError::MarkersDontCoverSpan { first, left }),
        None => return Err(CreatureError::MarkersDontCoverSpan { first: 0, left }),
    }
    let beyond = ms.len() - ms.partition_point(|&x| x <= right);
    if beyond < 2 {
        return Err(CreatureError::MarkersBeyondSpanTooFew { have: beyond });
    }
    let mut ctx = ShrinkCtx::new(t, ms);
    ctx.shrink_cone(0)?;
    materialize(t, &ctx.keep)
}

/// Independent scan of the gap-sparsity contract: for every window of
/// `k + 1` consecutive marker gaps (entirely inside the marker list),
/// some gap holds fewer than two of the given sorted points.
pub fn gap_sparsity_holds(points: &[u64], markers: &WSet, k: usize) -> bool {
    debug_assert!(points.windows(2).all(|p| p[0] <= p[1]));
    let ms = markers.elements();
    if ms.len() < k + 2 {
        return true;
    }
    let count_in = |lo: u64, hi: u64| -> usize {
        points.partition_point(|&x| x < hi) - points.partition_point(|&x| x < lo)
    };
    for n in 0..=(ms.len() - 2 - k) {
        let ok = (0..=k).any(|i| count_in(ms[n + i], ms[n + i + 1]) < 2);
        if !ok {
            return false;
        }
    }
    true
}

/// Applies [`sparse_shrink`] creature-wise to a fragment whose
/// creatures all have weight above 15, requiring more than two markers
/// between consecutive spans, and re-checks the union of the shrunken
/// contributions above the stem: any per-creature selection of leaf
/// labels inherits the gap property from the union by monotonicity.
pub fn shrink_condition(
    p: &ConditionFragment,
    markers: &WSet,
) -> Result<ConditionFragment, CreatureError> {
    for t in &p.creatures {
        let wt = weight(t);
        if wt <= 15 {
            return Err(CreatureError::WeightTooSmall { weight: wt, need: 16 });
        }
    }
    let ms = markers.elements();
    for i in 1..p.creatures.len() {
        let lo = p.creatures[i - 1].root().right;
        let hi = p.creatures[i].root().left;
        let count = ms.partition_point(|&x| x < hi) - ms.partition_point(|&x| x < lo);
        if count <= 2 {
            return Err(CreatureError::MarkersBetweenSpansTooFew { index: i - 1, count });
        }
    }
    let shrunk: Vec<Creature> =
        p.creatures.iter().map(|t| sparse_shrink(t, markers)).collect::<Result<_, _>>()?;
    let mut union: Vec<u64> = shrunk.iter().flat_map(|t| contribution(t)).collect();
    union.sort_unstable();
    let start = match p.w.last() {
        Some(&w_max) => ms.partition_point(|&x| x <= w_max),
        None => 0,
    };
    let k = p.k;
    if ms.len() >= k + 2 {
        let count_in = |lo: u64, hi: u64| -> usize {
            union.partition_point(|&x| x < hi) - union.partition_point(|&x| x < lo)
        };
        for n in start..=(ms.len() - 2 - k) {
            if !(0..=k).any(|i| count_in(ms[n + i], ms[n + i + 1]) < 2) {
                return Err(CreatureError::NormAxiomViolation {
                    detail: format!("union gap check failed at window {n}"),
                });
            }
        }
    }
    ConditionFragment::new(p.k, p.w.clone(), shrunk)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn wset(horizon: u64, elements: Vec<u64>) -> WSet {
        WSet::new(horizon, elements).expect("valid marker set")
    }

    /// Root with `n` leaf children at `start`, `start + step`, …,
    /// carrying the cardinality-logarithm norm.
    fn flat_log_creature(k: usize, n: usize, start: u64, step: u64) -> Creature {
        let mut nodes = vec![NodeSpec {
            path: vec![],
            left: start,
            right: start + (n as u64 - 1) * step,
        }];
        for i in 0..n {
            let point = start + i as u64 * step;
            nodes.push(NodeSpec { path: vec![i as u64], left: point, right: point });
        }
        Creature::assemble(k, nodes, vec![NormSpec::Log { path: vec![], shift: 0 }])
            .expect("valid flat creature")
    }

    /// Exhaustive `(mask, value)` pairs computed from a function.
    fn table_pairs(base: usize, f: impl Fn(u64) -> u32) -> Vec<(u64, u32)> {
        (0..1u64 << base).map(|m| (m, f(m))).collect()
    }

    fn cardinality_log(mask: u64) -> u32 {
        let c = mask.count_ones();
        if c == 0 {
            0
        } else {
            31 - c.leading_zeros()
        }
    }

    #[test]
    fn log_norm_valid_on_eight_points() {
        let norm = NiceNorm::log(8).unwrap();
        assert_eq!(validate_norm(&norm), Ok(()));
        assert_eq!(norm.full_value(), 3);
        assert_eq!(norm.value_of_subset(&[0, 3, 5]), 1);
        assert_eq!(norm.value_of_subset(&[]), 0);
    }

    #[test]
    fn cardinality_norm_breaks_bisection() {
        let norm = NiceNorm::from_pairs(4, &table_pairs(4, |m| m.count_ones())).unwrap();
        assert_eq!(
            validate_norm(&norm),
            Err(NormViolation::BisectionFails { set_mask: 15, part_mask: 12 })
        );
    }

    #[test]
    fn constant_zero_norm_rejected() {
        let norm = NiceNorm::table(vec![0; 4]).unwrap();
        assert_eq!(validate_norm(&norm), Err(NormViolation::BaseNotPositive));
    }

    #[test]
    fn norm_tables_must_be_total() {
        assert_eq!(
            NiceNorm::from_pairs(2, &[(0, 0), (1, 1), (3, 1)]),
            Err(CreatureError::TableNotTotal { base: 2, missing_mask: 2 })
        );
        assert_eq!(
            NiceNorm::from_pairs(2, &[(0, 0), (1, 1), (1, 0), (3, 1)]),
            Err(CreatureError::TableDuplicateMask { mask: 1 })
        );
        assert_eq!(
            NiceNorm::from_pairs(2, &[(0, 0), (1, 1), (2, 1), (4, 1)]),
            Err(CreatureError::TableMaskOutOfRange { mask: 4, base: 2 })
        );
    }

    #[test]
    fn log_norm_needs_room_for_positive_value() {
        assert!(NiceNorm::log(1).is_err());
        assert!(NiceNorm::log_shifted(3, 1).is_err());
        assert!(NiceNorm::log_shifted(4, 1).is_ok());
    }

    #[test]
    fn weight_conventions() {
        let leaf = Creature::leaf(2, 5).unwrap();
        assert_eq!(weight(&leaf), 0);
        let glued = glue_s(&[Creature::leaf(2, 3).unwrap(), Creature::leaf(2, 7).unwrap()])
            .unwrap();
        assert_eq!(weight(&glued), 0);

        let flat = flat_log_creature(2, 8, 0, 10);
        assert_eq!(weight(&flat), 3);

        // Two normed nodes with values 3 and 5: the minimum wins.
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 160 }];
        for i in 0..7u64 {
            nodes.push(NodeSpec { path: vec![i], left: 10 * i, right: 10 * i });
        }
        nodes.push(NodeSpec { path: vec![7], left: 100, right: 160 });
        for j in 0..32u64 {
            nodes.push(NodeSpec { path: vec![7, j], left: 100 + j, right: 100 + j });
        }
        let nested = Creature::assemble(
            2,
            nodes,
            vec![
                NormSpec::Log { path: vec![], shift: 0 },
                NormSpec::Log { path: vec![7], shift: 0 },
            ],
        )
        .unwrap();
        let values: Vec<u32> = nested
            .nodes()
            .iter()
            .filter_map(|n| n.norm.as_ref().map(NiceNorm::full_value))
            .collect();
        assert_eq!(values, vec![3, 5]);
        assert_eq!(weight(&nested), 3);
    }

    #[test]
    fn contribution_collects_leaf_labels() {
        let flat = flat_log_creature(2, 3, 2, 3);
        assert_eq!(contribution(&flat), vec![2, 5, 8]);
        assert_eq!(contribution(&Creature::leaf(3, 7).unwrap()), vec![7]);
        assert_eq!(contribution(&upper_half(&flat)), vec![2, 5, 8]);
    }

    #[test]
    fn upper_half_weight_identity() {
        let heavy = flat_log_creature(2, 1 << 15, 0, 1);
        assert_eq!(weight(&heavy), 15);
        let uh = upper_half(&heavy);
        assert_eq!(weight(&uh), 8);
        assert!(uh.validate(true).is_ok());
        assert!(contribution(&uh) == contribution(&heavy));

        let light = flat_log_creature(2, 3, 0, 1);
        assert_eq!(weight(&light), 1);
        assert_eq!(upper_half(&light), light);
        let leaf = Creature::leaf(2, 4).unwrap();
        assert_eq!(upper_half(&leaf), leaf);
    }

    #[test]
    fn upper_half_of_table_norms() {
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 30 }];
        for i in 0..4u64 {
            nodes.push(NodeSpec { path: vec![i], left: 10 * i, right: 10 * i });
        }
        let t = Creature::assemble(
            2,
            nodes,
            vec![NormSpec::Table { path: vec![], pairs: table_pairs(4, cardinality_log) }],
        )
        .unwrap();
        assert_eq!(weight(&t), 2);
        let uh = upper_half(&t);
        assert_eq!(weight(&uh), 1);
        assert!(uh.validate(true).is_ok());
    }

    #[test]
    fn refines_checks_structure_and_norms() {
        let t0 = flat_log_creature(2, 4, 0, 10);
        assert!(refines(&t0, &t0));

        // Dropping one child of a widely splitting node refines.
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 30 }];
        for i in 0..3u64 {
            nodes.push(NodeSpec { path: vec![i], left: 10 * i, right: 10 * i });
        }
        let t1 = Creature::assemble(2, nodes, vec![NormSpec::Log { path: vec![], shift: 0 }])
            .unwrap();
        assert!(refines(&t0, &t1));
        assert!(!refines(&t1, &t0));

        // Dropping the only child of an exactly-k node changes its kind.
        let chain = Creature::assemble(
            1,
            vec![
                NodeSpec { path: vec![], left: 5, right: 5 },
                NodeSpec { path: vec![0], left: 5, right: 5 },
            ],
            vec![],
        )
        .unwrap();
        let alone = Creature::leaf(1, 5).unwrap();
        assert!(!refines(&chain, &alone));
    }

    #[test]
    fn build_joins_parts_under_a_fresh_norm() {
        let parts = vec![
            Creature::leaf(2, 1).unwrap(),
            Creature::leaf(2, 5).unwrap(),
            Creature::leaf(2, 9).unwrap(),
        ];
        let h = NiceNorm::log(3).unwrap();
        let built = build_s_h(&parts, &h).unwrap();
        assert_eq!(contribution(&built), vec![1, 5, 9]);
        assert_eq!(built.span(), (1, 9));
        assert_eq!(weight(&built), 1);
        assert_eq!(built.node_count(), 4);
        assert_eq!(
            sigma_member(&built, &parts),
            Some(vec![(vec![0], 0), (vec![1], 1), (vec![2], 2)])
        );

        // The weight is the minimum over the root norm and the parts'
        // normed nodes.
        let wide_parts: Vec<Creature> =
            (0..4).map(|i| flat_log_creature(2, 8, 100 * i, 1)).collect();
        let built2 = build_s_h(&wide_parts, &NiceNorm::log(4).unwrap()).unwrap();
        assert_eq!(weight(&built2), 2);

        assert_eq!(
            build_s_h(&parts[..2], &NiceNorm::log(2).unwrap()),
            Err(CreatureError::TooFewParts { got: 2, need: 3 })
        );
        let overlapping = vec![
            Creature::leaf(2, 5).unwrap(),
            Creature::leaf(2, 5).unwrap(),
            Creature::leaf(2, 9).unwrap(),
        ];
        assert_eq!(
            build_s_h(&overlapping, &h),
            Err(CreatureError::PartsNotIncreasing { index: 1 })
        );
        assert_eq!(
            build_s_h(&parts, &NiceNorm::log(4).unwrap()),
            Err(CreatureError::NormBaseMismatch { path: vec![], base: 4, children: 3 })
        );
        assert_eq!(
            build_s_h(&parts, &NiceNorm::table(vec![0; 8]).unwrap()),
            Err(CreatureError::InvalidNorm {
                path: vec![],
                violation: NormViolation::BaseNotPositive
            })
        );
    }

    #[test]
    fn glue_stacks_exactly_k_parts() {
        let wide0 = flat_log_creature(2, 3, 0, 5);
        let wide1 = flat_log_creature(2, 3, 100, 5);
        let glued = glue_s(&[wide0.clone(), wide1.clone()]).unwrap();
        assert_eq!(weight(&glued), 1);
        assert!(glued.root().norm.is_none());
        assert_eq!(glued.node_count(), 9);
        assert!(sigma_member(&glued, &[wide0.clone(), wide1.clone()]).is_some());

        let leafy = glue_s(&[Creature::leaf(2, 3).unwrap(), Creature::leaf(2, 7).unwrap()])
            .unwrap();
        assert_eq!(weight(&leafy), 0);

        assert_eq!(
            glue_s(&[leafy, Creature::leaf(2, 50).unwrap()]),
            Err(CreatureError::RootKSplitting { index: 0 })
        );
        assert_eq!(
            glue_s(&[wide0.clone(), wide1, flat_log_creature(2, 3, 200, 5)]),
            Err(CreatureError::ArityMismatch { got: 3, need: 2 })
        );
    }

    #[test]
    fn sigma_membership_and_strict_refinement() {
        let parts: Vec<Creature> = (0..3).map(|i| flat_log_creature(2, 4, 100 * i, 1)).collect();
        assert_eq!(sigma_member(&parts[0], &parts), Some(vec![(vec![], 0)]));

        let built = build_s_h(&parts, &NiceNorm::log(3).unwrap()).unwrap();
        assert!(sigma_member(&built, &parts).is_some());

        // A strict refinement of the build is no longer an exact
        // antichain of copies.
        let mut nodes = Vec::new();
        let mut norms = vec![NormSpec::Log { path: vec![], shift: 0 }];
        nodes.push(NodeSpec { path: vec![], left: 0, right: 203 });
        for i in 0..3u64 {
            let keep = if i == 0 { 3 } else { 4 };
            nodes.push(NodeSpec {
                path: vec![i],
                left: 100 * i,
                right: 100 * i + 3,
            });
            norms.push(NormSpec::Log { path: vec![i], shift: 0 });
            for j in 0..keep {
                nodes.push(NodeSpec {
                    path: vec![i, j],
                    left: 100 * i + j,
                    right: 100 * i + j,
                });
            }
        }
        let refined = Creature::assemble(2, nodes, norms).unwrap();
        assert!(refines(&built, &refined));
        assert!(refined.node_count() < built.node_count());
        assert_eq!(sigma_member(&refined, &parts), None);
    }

    #[test]
    fn derivation_search_returns_replayable_certificates() {
        let parts: Vec<Creature> = (0..3).map(|i| flat_log_creature(2, 8, 100 * i, 1)).collect();
        let uh = upper_half(&parts[0]);
        let verdict = sigma_star_member(&uh, &parts, 3);
        assert_eq!(
            verdict,
            SigmaStarVerdict::Derivable(Derivation::UpperHalf(Box::new(Derivation::Part(0))))
        );
        if let SigmaStarVerdict::Derivable(cert) = verdict {
            assert!(check_derivation(&cert, &uh, &parts));
        }

        // A pruned build decomposes into a refinement piece and an
        // exact piece.
        let small: Vec<Creature> = (0..2)
            .map(|i| flat_log_creature(1, 4, 100 * i, 2))
            .collect();
        let built = build_s_h(&small, &NiceNorm::log(2).unwrap()).unwrap();
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 106 }];
        let mut norms = vec![NormSpec::Log { path: vec![], shift: 0 }];
        for i in 0..2u64 {
            let keep = if i == 0 { 3 } else { 4 };
            nodes.push(NodeSpec { path: vec![i], left: 100 * i, right: 100 * i + 6 });
            norms.push(NormSpec::Log { path: vec![i], shift: 0 });
            for j in 0..keep {
                nodes.push(NodeSpec {
                    path: vec![i, j],
                    left: 100 * i + 2 * j,
                    right: 100 * i + 2 * j,
                });
            }
        }
        let pruned = Creature::assemble(1, nodes, norms).unwrap();
        assert!(refines(&built, &pruned));
        let verdict = sigma_star_member(&pruned, &small, 3);
        assert_eq!(
            verdict,
            SigmaStarVerdict::Derivable(Derivation::Build(vec![
                (vec![0], Derivation::Refine(Box::new(Derivation::Part(0)))),
                (vec![1], Derivation::Part(1)),
            ]))
        );
        if let SigmaStarVerdict::Derivable(cert) = verdict {
            assert!(check_derivation(&cert, &pruned, &small));
        }

        let stranger = Creature::leaf(1, 999).unwrap();
        assert_eq!(
            sigma_star_member(&stranger, &small, 2),
            SigmaStarVerdict::NotFoundWithinCap
        );
    }

    #[test]
    fn fragment_extension_order() {
        let c0 = flat_log_creature(2, 4, 10, 2);
        let c1 = flat_log_creature(2, 4, 30, 2);
        let p = ConditionFragment::new(2, vec![1], vec![c0.clone(), c1.clone()]).unwrap();

        match fragment_leq(&p, &p, None) {
            FragmentVerdict::Holds { n_seq, derivations } => {
                assert_eq!(n_seq, vec![0, 1, 2]);
                assert_eq!(derivations, vec![Derivation::Part(0), Derivation::Part(0)]);
            }
            other => panic!("expected reflexivity, got {other:?}"),
        }

        // Growing the stem into a dropped creature's contribution.
        let q = ConditionFragment::new(2, vec![1, 10], vec![c1.clone()]).unwrap();
        match fragment_leq(&p, &q, None) {
            FragmentVerdict::Holds { n_seq, .. } => assert_eq!(n_seq, vec![1, 2]),
            other => panic!("expected extension, got {other:?}"),
        }
        match fragment_leq(&p, &q, Some(&FragmentHints { n_seq: vec![1, 2] })) {
            FragmentVerdict::Holds { n_seq, .. } => assert_eq!(n_seq, vec![1, 2]),
            other => panic!("expected hinted extension, got {other:?}"),
        }

        // Growth outside any dropped contribution fails.
        let bad = ConditionFragment::new(2, vec![1, 11], vec![c1.clone()]).unwrap();
        assert!(matches!(fragment_leq(&p, &bad, None), FragmentVerdict::Fails { .. }));

        // Losing stem points fails.
        assert!(matches!(fragment_leq(&q, &p, None), FragmentVerdict::Fails { .. }));

        // Transitivity along upper halves.
        let r = ConditionFragment::new(2, vec![1, 10], vec![upper_half(&c1)]).unwrap();
        assert!(matches!(fragment_leq(&q, &r, None), FragmentVerdict::Holds { .. }));
        assert!(matches!(fragment_leq(&p, &r, None), FragmentVerdict::Holds { .. }));
    }

    #[test]
    fn pair_condition_order() {
        let p0 = PairCondition::new(vec![0, 1, 2], vec![vec![(5, 9), (6, 7)]]).unwrap();
        assert!(pair_leq(&p0, &p0));

        // Deciding both points of a retained pair without having
        // decided them before breaks the third clause.
        let p1 = PairCondition::new(vec![0, 1, 2, 5, 9], vec![vec![(5, 9), (6, 7)]]).unwrap();
        assert!(!pair_leq(&p0, &p1));

        // Adding families over the same decided set extends.
        let p2 = PairCondition::new(
            vec![0, 1, 2],
            vec![vec![(5, 9), (6, 7)], vec![(10, 11)]],
        )
        .unwrap();
        assert!(pair_leq(&p0, &p2));

        // Growing the decided set below its old maximum fails.
        let gap = PairCondition::new(vec![0, 2], vec![vec![(5, 9), (6, 7)]]).unwrap();
        assert!(!pair_leq(&gap, &p0));

        // Deciding only one point of a pair is allowed.
        let p3 = PairCondition::new(vec![0, 1, 2, 5], vec![vec![(5, 9), (6, 7)]]).unwrap();
        assert!(pair_leq(&p0, &p3));

        // Same decided set: the family union is a common extension.
        let join = pair_join(&p0, &p2).unwrap();
        assert!(pair_leq(&p0, &join));
        assert!(pair_leq(&p2, &join));
        assert_eq!(pair_join(&p0, &p1), None);
    }

    #[test]
    fn pair_families_must_be_disjoint() {
        assert_eq!(
            PairCondition::new(vec![], vec![vec![(3, 3)]]),
            Err(CreatureError::PairDegenerate { a: 3 })
        );
        assert_eq!(
            PairCondition::new(vec![], vec![vec![(3, 5), (5, 8)]]),
            Err(CreatureError::PairOverlap { family: 0, value: 5 })
        );
    }

    #[test]
    fn shrink_keeps_creature_inside_one_marker_gap() {
        let t = flat_log_creature(2, 1 << 15, 1000, 1);
        assert_eq!(weight(&t), 15);
        let markers = wset(70_001, vec![0, 50_000, 60_000, 70_000]);
        let shrunk = sparse_shrink(&t, &markers).unwrap();
        assert_eq!(shrunk, t);
        assert!(gap_sparsity_holds(&contribution(&shrunk), &markers, 2));
    }

    #[test]
    fn shrink_against_alternating_markers_keeps_a_parity_class() {
        let t = flat_log_creature(2, 1 << 15, 0, 2);
        let mut marks: Vec<u64> = (0..=65_532u64).step_by(4).collect();
        marks.extend([65_600, 65_700]);
        let markers = wset(65_701, marks);
        let shrunk = sparse_shrink(&t, &markers).unwrap();
        assert!(refines(&t, &shrunk));
        assert_eq!(weight(&shrunk), 14);
        let cont = contribution(&shrunk);
        assert_eq!(cont.len(), 24_576);
        assert!(cont.iter().all(|&x| x % 8 != 6));
        assert!(gap_sparsity_holds(&cont, &markers, 2));
    }

    #[test]
    fn shrink_rejects_low_weight() {
        let t = flat_log_creature(2, 1 << 14, 0, 1);
        assert_eq!(weight(&t), 14);
        let markers = wset(40_001, vec![0, 20_000, 30_000, 40_000]);
        assert_eq!(
            sparse_shrink(&t, &markers),
            Err(CreatureError::WeightTooSmall { weight: 14, need: 15 })
        );
    }

    #[test]
    fn shrink_checks_marker_coverage() {
        let t = flat_log_creature(2, 1 << 15, 1000, 1);
        let late = wset(80_001, vec![2000, 50_000, 60_000, 80_000]);
        assert_eq!(
            sparse_shrink(&t, &late),
            Err(CreatureError::MarkersDontCoverSpan { first: 2000, left: 1000 })
        );
        let short = wset(50_001, vec![0, 50_000]);
        assert_eq!(
            sparse_shrink(&t, &short),
            Err(CreatureError::MarkersBeyondSpanTooFew { have: 1 })
        );
    }

    /// Exactly-k root over two widely splitting children whose
    /// grandchildren all straddle markers: the straddler-trimming path
    /// keeps every fourth grandchild.
    #[test]
    fn shrink_trims_straddlers_under_exact_split() {
        let n = 1usize << 15;
        let offset = 140_000u64;
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: offset + 131_070 }];
        for (child, base) in [(0u64, 0u64), (1u64, offset)] {
            nodes.push(NodeSpec {
                path: vec![child],
                left: base,
                right: base + 131_070,
            });
            for i in 0..n as u64 {
                nodes.push(NodeSpec {
                    path: vec![child, i],
                    left: base + 4 * i,
                    right: base + 4 * i + 2,
                });
                nodes.push(NodeSpec {
                    path: vec![child, i, 0],
                    left: base + 4 * i,
                    right: base + 4 * i,
                });
                nodes.push(NodeSpec {
                    path: vec![child, i, 1],
                    left: base + 4 * i + 2,
                    right: base + 4 * i + 2,
                });
            }
        }
        let t = Creature::assemble(
            2,
            nodes,
            vec![
                NormSpec::Log { path: vec![0], shift: 0 },
                NormSpec::Log { path: vec![1], shift: 0 },
            ],
        )
        .unwrap();
        assert_eq!(weight(&t), 15);

        let mut marks = vec![0u64];
        for base in [0u64, offset] {
            marks.extend((0..n as u64).map(|i| base + 4 * i + 1));
        }
        marks.extend([300_000, 300_010]);
        let markers = wset(300_011, marks);

        let shrunk = sparse_shrink(&t, &markers).unwrap();
        assert!(refines(&t, &shrunk));
        assert_eq!(weight(&shrunk), 12);
        for child in [0u64, 1] {
            let idx = shrunk.find(&[child]).unwrap();
            assert_eq!(shrunk.nodes()[idx].children.len(), 8191);
        }
        let cont = contribution(&shrunk);
        assert_eq!(cont.len(), 4 * 8191);
        assert!(gap_sparsity_holds(&cont, &markers, 2));
    }

    #[test]
    fn shrink_condition_thins_a_fragment() {
        let c = flat_log_creature(2, 1 << 16, 0, 2);
        assert_eq!(weight(&c), 16);
        let mut marks: Vec<u64> = (0..=131_068u64).step_by(4).collect();
        marks.extend([131_200, 131_300]);
        let markers = wset(131_301, marks);
        let p = ConditionFragment::new(2, vec![], vec![c.clone()]).unwrap();
        let q = shrink_condition(&p, &markers).unwrap();
        assert_eq!(q.weights(), vec![15]);
        assert!(matches!(
            fragment_leq(&p, &q, Some(&FragmentHints { n_seq: vec![0, 1] })),
            FragmentVerdict::Holds { .. }
        ));
    }

    #[test]
    fn shrink_condition_needs_markers_between_spans() {
        let c0 = flat_log_creature(2, 1 << 16, 0, 2);
        let c1 = flat_log_creature(2, 1 << 16, 200_000, 2);
        let p = ConditionFragment::new(2, vec![], vec![c0.clone(), c1.clone()]).unwrap();

        let mut dense: Vec<u64> = (0..=131_068u64).step_by(4).collect();
        dense.extend([150_000, 150_010, 150_020]);
        dense.extend((200_000..=331_068u64).step_by(4));
        dense.extend([331_200, 331_300]);
        let markers = wset(331_301, dense);
        let q = shrink_condition(&p, &markers).unwrap();
        assert_eq!(q.weights(), vec![15, 15]);
        let mut union: Vec<u64> = q.creatures().iter().flat_map(contribution).collect();
        union.sort_unstable();
        assert!(gap_sparsity_holds(&union, &markers, 2));

        let mut thin: Vec<u64> = (0..=131_068u64).step_by(4).collect();
        thin.extend([150_000, 150_010]);
        thin.extend((200_000..=331_068u64).step_by(4));
        thin.extend([331_200, 331_300]);
        let thin_markers = wset(331_301, thin);
        assert_eq!(
            shrink_condition(&p, &thin_markers),
            Err(CreatureError::MarkersBetweenSpansTooFew { index: 0, count: 2 })
        );
    }

    #[test]
    fn shrink_condition_needs_weight_above_fifteen() {
        let c = flat_log_creature(2, 1 << 15, 0, 2);
        let p = ConditionFragment::new(2, vec![], vec![c]).unwrap();
        let markers = wset(200_001, vec![0, 100_000, 150_000, 200_000]);
        assert_eq!(
            shrink_condition(&p, &markers),
            Err(CreatureError::WeightTooSmall { weight: 15, need: 16 })
        );
    }

    /// The fragment-level gap check on the union of contributions is
    /// sound for arbitrary per-creature selections: dropping points
    /// can only shrink gap counts.
    #[test]
    fn selector_subsets_inherit_gap_property() {
        let markers = wset(25, vec![0, 4, 8, 12, 16, 20, 24]);
        let conts: [&[u64]; 2] = [&[1, 3, 9], &[13, 21]];
        let union: Vec<u64> = {
            let mut v: Vec<u64> = conts.iter().flat_map(|c| c.iter().copied()).collect();
            v.sort_unstable();
            v
        };
        assert!(gap_sparsity_holds(&union, &markers, 1));
        for mask0 in 0u32..1 << conts[0].len() {
            for mask1 in 0u32..1 << conts[1].len() {
                let mut pick: Vec<u64> = Vec::new();
                for (i, &x) in conts[0].iter().enumerate() {
                    if mask0 & (1 << i) != 0 {
                        pick.push(x);
                    }
                }
                for (i, &x) in conts[1].iter().enumerate() {
                    if mask1 & (1 << i) != 0 {
                        pick.push(x);
                    }
                }
                pick.sort_unstable();
                assert!(gap_sparsity_holds(&pick, &markers, 1));
            }
        }
    }

    /// Bisection consequence used by the shrink: splitting a set into
    /// four parts loses at most two units on the best part.  Checked
    /// exhaustively over all subsets and all 4-colourings on bases up
    /// to 8 for the logarithmic norms.
    #[test]
    fn quartering_loses_at_most_two() {
        let mut norms = Vec::new();
        for base in 2..=8usize {
            norms.push(NiceNorm::log(base).unwrap());
            if base >= 4 {
                norms.push(NiceNorm::log_shifted(base, 1).unwrap());
            }
        }
        for norm in norms {
            let base = norm.base_size();
            let members: Vec<usize> = (0..base).collect();
            for set_mask in 1u64..1 << base {
                let set: Vec<usize> = members
                    .iter()
                    .copied()
                    .filter(|&i| set_mask & (1 << i) != 0)
                    .collect();
                let value = norm.value_of_subset(&set);
                if value == 0 {
                    continue;
                }
                let m = set.len();
                let mut colouring = vec![0u8; m];
                loop {
                    let mut parts: [Vec<usize>; 4] = Default::default();
                    for (i, &member) in set.iter().enumerate() {
                        parts[colouring[i] as usize].push(member);
                    }
                    let best = parts.iter().map(|p| norm.value_of_subset(p)).max().unwrap();
                    assert!(
                        best + 2 >= value,
                        "base {base}: quartering {set:?} lost more than 2"
                    );
                    let mut pos = 0;
                    loop {
                        if pos == m {
                            break;
                        }
                        colouring[pos] += 1;
                        if colouring[pos] < 4 {
                            break;
                        }
                        colouring[pos] = 0;
                        pos += 1;
                    }
                    if pos == m {
                        break;
                    }
                }
            }
        }
    }

    #[test]
    fn creature_json_wire_format() {
        let flat = flat_log_creature(2, 3, 1, 4);
        let json = serde_json::to_string(&flat).unwrap();
        assert_eq!(
            json,
            concat!(
                r#"{"k":2,"nodes":[{"path":[],"L":1,"R":9},{"path":[0],"L":1,"R":1},"#,
                r#"{"path":[1],"L":5,"R":5},{"path":[2],"L":9,"R":9}],"#,
                r#""norms":[{"path":[],"kind":"log"}]}"#
            )
        );
        let back: Creature = serde_json::from_str(&json).unwrap();
        assert_eq!(back, flat);

        // A nonzero shift is serialized; zero is omitted.
        let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 3 }];
        for i in 0..4u64 {
            nodes.push(NodeSpec { path: vec![i], left: i, right: i });
        }
        let shifted =
            Creature::assemble(2, nodes, vec![NormSpec::Log { path: vec![], shift: 1 }]).unwrap();
        let json = serde_json::to_string(&shifted).unwrap();
        assert!(json.contains(r#""kind":"log","shift":1"#));
        let back: Creature = serde_json::from_str(&json).unwrap();
        assert_eq!(back, shifted);

        // Table norms round-trip through (mask, value) pairs.
        let table_json = concat!(
            r#"{"k":2,"nodes":[{"path":[],"L":0,"R":30},{"path":[0],"L":0,"R":0},"#,
            r#"{"path":[1],"L":10,"R":10},{"path":[2],"L":20,"R":20},{"path":[3],"L":30,"R":30}],"#,
            r#""norms":[{"path":[],"table":[[0,0],[1,0],[2,0],[3,1],[4,0],[5,1],[6,1],[7,1],"#,
            r#"[8,0],[9,1],[10,1],[11,1],[12,1],[13,1],[14,1],[15,2]]}]}"#
        );
        let t: Creature = serde_json::from_str(table_json).unwrap();
        assert_eq!(weight(&t), 2);
        let again: Creature = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(again, t);

        // Fragment and pair-condition wrappers.
        let frag = ConditionFragment::new(2, vec![0], vec![flat_log_creature(2, 3, 5, 1)])
            .unwrap();
        let json = serde_json::to_string(&frag).unwrap();
        assert!(json.starts_with(r#"{"k":2,"w":[0],"creatures":["#));
        let back: ConditionFragment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, frag);

        let pair = PairCondition::new(vec![3, 1], vec![vec![(9, 5)]]).unwrap();
        let json = serde_json::to_string(&pair).unwrap();
        assert_eq!(json, r#"{"u":[1,3],"families":[[[5,9]]]}"#);
        let back: PairCondition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, pair);
    }

    #[test]
    fn assembly_rejects_bad_structure() {
        assert_eq!(
            Creature::leaf(0, 3),
            Err(CreatureError::KZero)
        );
        // One child where k = 2 is a forbidden splitting.
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 0 },
                    NodeSpec { path: vec![0], left: 0, right: 0 },
                ],
                vec![],
            ),
            Err(CreatureError::BadBranching { count: 1, .. })
        ));
        // Two stacked exactly-k splittings.
        assert!(matches!(
            Creature::assemble(
                1,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 0 },
                    NodeSpec { path: vec![0], left: 0, right: 0 },
                    NodeSpec { path: vec![0, 0], left: 0, right: 0 },
                ],
                vec![],
            ),
            Err(CreatureError::SuccessiveK { .. })
        ));
        // A widely splitting node must carry a norm.
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 2 },
                    NodeSpec { path: vec![0], left: 0, right: 0 },
                    NodeSpec { path: vec![1], left: 1, right: 1 },
                    NodeSpec { path: vec![2], left: 2, right: 2 },
                ],
                vec![],
            ),
            Err(CreatureError::NormMissing { .. })
        ));
        // Sibling intervals must be disjoint.
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 5, right: 9 },
                    NodeSpec { path: vec![0], left: 5, right: 5 },
                    NodeSpec { path: vec![1], left: 5, right: 5 },
                    NodeSpec { path: vec![2], left: 9, right: 9 },
                ],
                vec![NormSpec::Log { path: vec![], shift: 0 }],
            ),
            Err(CreatureError::IntervalOverlap { .. })
        ));
        // An exactly-k splitting carries no norm.
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 9 },
                    NodeSpec { path: vec![0], left: 0, right: 0 },
                    NodeSpec { path: vec![1], left: 9, right: 9 },
                ],
                vec![NormSpec::Log { path: vec![], shift: 0 }],
            ),
            Err(CreatureError::NormUnexpected { .. })
        ));
        // Leaves carry single points.
        assert!(matches!(
            Creature::assemble(2, vec![NodeSpec { path: vec![], left: 1, right: 2 }], vec![]),
            Err(CreatureError::LeafIntervalNotPoint { .. })
        ));
        // Orphan and duplicate paths.
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 0 },
                    NodeSpec { path: vec![1, 0], left: 0, right: 0 },
                ],
                vec![],
            ),
            Err(CreatureError::OrphanPath { .. })
        ));
        assert!(matches!(
            Creature::assemble(
                2,
                vec![
                    NodeSpec { path: vec![], left: 0, right: 0 },
                    NodeSpec { path: vec![], left: 0, right: 0 },
                ],
                vec![],
            ),
            Err(CreatureError::DuplicatePath { .. })
        ));
    }

    /// Seeded random small creatures: upper half keeps the tree and
    /// contribution, lowers the weight by exactly half, and stays
    /// valid; refinement is reflexive.
    #[test]
    fn random_small_creatures_respect_upper_half_identity() {
        fn gen_tree(
            rng: &mut ChaCha8Rng,
            k: usize,
            depth: usize,
            parent_exact: bool,
            path: Vec<u64>,
            next: &mut u64,
            nodes: &mut Vec<NodeSpec>,
            norms: &mut Vec<NormSpec>,
        ) -> (u64, u64) {
            let choice = if depth == 0 { 0 } else { rng.gen_range(0..10) };
            if choice < 4 {
                let point = *next;
                *next += 1 + rng.gen_range(0..3);
                nodes.push(NodeSpec { path, left: point, right: point });
                (point, point)
            } else {
                let exact = !parent_exact && choice < 6;
                let count = if exact { k } else { k + 1 + rng.gen_range(0..3) };
                let mut left = u64::MAX;
                let mut right = 0;
                let placeholder = nodes.len();
                nodes.push(NodeSpec { path: path.clone(), left: 0, right: 0 });
                for i in 0..count {
                    let mut child_path = path.clone();
                    child_path.push(i as u64);
                    let (l, r) = gen_tree(
                        rng,
                        k,
                        depth - 1,
                        exact,
                        child_path,
                        next,
                        nodes,
                        norms,
                    );
                    left = left.min(l);
                    right = right.max(r);
                }
                if !exact {
                    let shift = if count >= 4 && rng.gen_bool(0.3) { 1 } else { 0 };
                    norms.push(NormSpec::Log { path: path.clone(), shift });
                }
                nodes[placeholder] = NodeSpec { path, left, right };
                (left, right)
            }
        }
        for seed in 0..60u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = 2 + (seed % 2) as usize;
            let mut nodes = Vec::new();
            let mut norms = Vec::new();
            let mut next = 0u64;
            gen_tree(&mut rng, k, 3, false, vec![], &mut next, &mut nodes, &mut norms);
            let t = match Creature::assemble(k, nodes, norms) {
                Ok(t) => t,
                Err(e) => panic!("seed {seed}: generated an invalid creature: {e}"),
            };
            let w = weight(&t);
            let uh = upper_half(&t);
            assert!(uh.validate(true).is_ok(), "seed {seed}");
            assert_eq!(weight(&uh), w - w / 2, "seed {seed}");
            assert_eq!(contribution(&uh), contribution(&t), "seed {seed}");
            assert_eq!(uh.node_count(), t.node_count(), "seed {seed}");
            assert!(refines(&t, &t), "seed {seed}");
        }
    }
}
