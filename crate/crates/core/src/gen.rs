//! Seeded random instance generation.
//!
//! Every generator is a pure function of the seed (ChaCha8 underneath)
//! and produces values that pass their module validators: sets and
//! block families come out of the checked constructors, creatures are
//! built bottom-up so the assembly rules hold by construction, relation
//! tables are repaired until the support conditions hold, and extension
//! pairs are produced by applying legal moves so the orders they are
//! meant to witness actually hold.  Verified here: determinism,
//! validator acceptance across seeds, weight ranges of the heavy
//! creatures, marker-set preconditions, and that generated extension
//! pairs are accepted by the corresponding order checks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constructions::{code_of, BranchPrefix};
use crate::creatures::{
    upper_half, ConditionFragment, Creature, FragmentHints, NodeSpec, NormSpec,
    PairCondition,
};
use crate::finsets::{BlockFamily, WSet};
use crate::relations::FiniteRelationInstance;

/// Deterministic instance generator; all methods draw from one stream,
/// so the sequence of calls matters but the seed pins everything.
pub struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Uniform point in `lo..=hi_inclusive`.
    pub fn range(&mut self, lo: u64, hi_inclusive: u64) -> u64 {
        self.rng.gen_range(lo..=hi_inclusive)
    }

    /// Uniform index in `lo..=hi_inclusive`.
    pub fn urange(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        self.rng.gen_range(lo..=hi_inclusive)
    }

    /// Biased coin flip.
    pub fn coin(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    /// `count` distinct sorted points below `horizon` (clamped).
    fn distinct_points(&mut self, horizon: u64, count: usize) -> Vec<u64> {
        let count = count.min(horizon as usize);
        if count * 2 > horizon as usize {
            let excluded: BTreeSet<u64> = self
                .distinct_points(horizon, horizon as usize - count)
                .into_iter()
                .collect();
            (0..horizon).filter(|p| !excluded.contains(p)).collect()
        } else {
            let mut set = BTreeSet::new();
            while set.len() < count {
                set.insert(self.rng.gen_range(0..horizon));
            }
            set.into_iter().collect()
        }
    }

    // -- the basic kinds ---------------------------------------------------

    /// Uniform random set of `len` distinct points below `horizon`.
    pub fn wset(&mut self, horizon: u64, len: usize) -> WSet {
        let horizon = horizon.max(1);
        let elements = self.distinct_points(horizon, len);
        WSet::new(horizon, elements).expect("generated points are sorted and in range")
    }

    /// Disjoint blocks walked left to right; `covering` tiles an
    /// interval with no gaps, otherwise gaps and interior holes appear.
    pub fn block_family(
        &mut self,
        horizon: u64,
        target_blocks: usize,
        min_size: usize,
        max_size: usize,
        covering: bool,
    ) -> BlockFamily {
        let mut pos = if covering { 0 } else { self.range(0, 2) };
        let mut blocks: Vec<Vec<u64>> = Vec::new();
        while blocks.len() < target_blocks {
            let size = self.urange(min_size, max_size);
            let span = if covering { size as u64 } else { size as u64 + self.range(0, 2) };
            if pos + span + 4 > horizon {
                break;
            }
            let block: Vec<u64> = if covering || span == size as u64 || size < 2 {
                (pos..pos + size as u64).collect()
            } else {
                let inner = self.distinct_points(span - 2, size - 2);
                let mut b = vec![pos];
                b.extend(inner.into_iter().map(|v| pos + 1 + v));
                b.push(pos + span - 1);
                b
            };
            pos += span;
            if !covering {
                pos += self.range(0, 3);
            }
            blocks.push(block);
        }
        if blocks.is_empty() {
            blocks.push(vec![0]);
        }
        BlockFamily::new(horizon.max(1), blocks, covering)
            .expect("generated blocks are disjoint and in range")
    }

    /// Random total relation table whose rows and columns each contain
    /// a `true` and a `false`.
    pub fn rel_instance(&mut self, rows: usize, cols: usize) -> FiniteRelationInstance {
        assert!(rows >= 2 && cols >= 2, "support conditions need a 2x2 table or larger");
        loop {
            let holds: Vec<Vec<bool>> = (0..rows)
                .map(|_| (0..cols).map(|_| self.coin(0.5)).collect())
                .collect();
            let inst = FiniteRelationInstance::from_table(holds)
                .expect("table dimensions are positive");
            if inst.satisfies_support_conditions() {
                return inst;
            }
        }
    }

    /// Strictly increasing function values, starting low.
    pub fn phi(&mut self, len: usize) -> Vec<u64> {
        let mut out = Vec::with_capacity(len);
        let mut v = self.range(1, 2);
        for _ in 0..len {
            out.push(v);
            v += self.range(1, 2);
        }
        out
    }

    /// Dense `X` and a sparser `Y` over the same window, shaped so run
    /// relations have material to work with.
    pub fn xy_pair(&mut self, horizon: u64) -> (WSet, WSet) {
        let h = horizon.max(32);
        let x_len = self.urange(h as usize / 2, h as usize * 3 / 4);
        let y_len = self.urange(8, (h as usize / 4).max(9));
        (self.wset(h, x_len), self.wset(h, y_len))
    }

    // -- creatures ---------------------------------------------------------

    /// Table norm: logarithm of the overlap with a hidden support set,
    /// capped.  Monotone, bisectable, and at most 1 on singletons.
    fn table_norm(&mut self, path: Vec<u64>, base: usize) -> NormSpec {
        let support_size = self.urange(2, base);
        let support: BTreeSet<u64> =
            self.distinct_points(base as u64, support_size).into_iter().collect();
        let cap = self.range(1, 3) as u32;
        let pairs: Vec<(u64, u32)> = (0..1u64 << base)
            .map(|mask| {
                let overlap = (0..base as u64)
                    .filter(|i| mask & (1 << i) != 0 && support.contains(i))
                    .count() as u64;
                let value = if overlap == 0 { 0 } else { 63 - overlap.leading_zeros() };
                (mask, value.min(cap))
            })
            .collect();
        NormSpec::Table { path, pairs }
    }

    fn grow_tree(
        &mut self,
        k: usize,
        depth: usize,
        parent_exact: bool,
        allow_big: bool,
        path: Vec<u64>,
        next: &mut u64,
        nodes: &mut Vec<NodeSpec>,
        norms: &mut Vec<NormSpec>,
    ) -> (u64, u64) {
        let choice = if depth == 0 { 0 } else { self.urange(0, 9) };
        if choice < 4 {
            let point = *next;
            *next += self.range(1, 3);
            nodes.push(NodeSpec { path, left: point, right: point });
            (point, point)
        } else {
            let exact = !parent_exact && choice < 6;
            let big = allow_big && !exact && depth == 1 && self.coin(0.15);
            let count = if exact {
                k
            } else if big {
                1usize << self.urange(8, 10)
            } else {
                self.urange(k + 1, 8.max(k + 1))
            };
            let placeholder = nodes.len();
            nodes.push(NodeSpec { path: path.clone(), left: 0, right: 0 });
            let mut left = u64::MAX;
            let mut right = 0;
            for i in 0..count {
                let mut child_path = path.clone();
                child_path.push(i as u64);
                let (l, r) = if big {
                    let point = *next;
                    *next += 1;
                    nodes.push(NodeSpec { path: child_path, left: point, right: point });
                    (point, point)
                } else {
                    self.grow_tree(
                        k,
                        depth - 1,
                        exact,
                        allow_big,
                        child_path,
                        next,
                        nodes,
                        norms,
                    )
                };
                left = left.min(l);
                right = right.max(r);
            }
            if !exact {
                if big || count > 8 || self.coin(0.5) {
                    let shift = if count >= 4 && self.coin(0.25) { 1 } else { 0 };
                    norms.push(NormSpec::Log { path: path.clone(), shift });
                } else {
                    let spec = self.table_norm(path.clone(), count);
                    norms.push(spec);
                }
            }
            nodes[placeholder] = NodeSpec { path, left, right };
            (left, right)
        }
    }

    /// Small random creature: depth at most `depth`, splitting degrees
    /// up to 8 with occasional single log-normed levels up to 2^10
    /// children, norms drawn from the log and capped-overlap families.
    pub fn creature(&mut self, k: usize, depth: usize) -> Creature {
        let start = self.range(0, 40);
        self.creature_from(k, depth, start, true)
    }

    fn creature_from(&mut self, k: usize, depth: usize, start: u64, allow_big: bool) -> Creature {
        let mut nodes = Vec::new();
        let mut norms = Vec::new();
        let mut next = start;
        self.grow_tree(
            k,
            depth.min(3),
            false,
            allow_big,
            vec![],
            &mut next,
            &mut nodes,
            &mut norms,
        );
        Creature::assemble(k, nodes, norms).expect("bottom-up construction is valid")
    }

    /// Creature of weight between 15 and 17 with a log-normed level of
    /// up to 2^17 children, in one of three shapes: a flat wide root,
    /// an exactly-`k` root over flat wide children, or a wide root over
    /// exactly-`k` nodes of leaves.
    pub fn heavy_creature(&mut self, k: usize) -> Creature {
        let shape = self.urange(0, 2);
        let start = self.range(0, 500);
        match shape {
            0 => {
                let w = self.urange(15, 17);
                let n_max = if w == 17 { 1u64 << 17 } else { (1u64 << (w + 1)) - 1 };
                let n = self.range(1u64 << w, n_max);
                let step = self.range(1, 3);
                self.flat_wide(k, n, start, step, 0)
            }
            1 => {
                let mut nodes = vec![NodeSpec { path: vec![], left: 0, right: 0 }];
                let mut norms = Vec::new();
                let mut pos = start;
                let mut right = 0;
                for c in 0..k as u64 {
                    let w = self.urange(15, 16);
                    let n = self.range(1u64 << w, (1u64 << (w + 1)) - 1);
                    let step = self.range(1, 2);
                    let end = pos + (n - 1) * step;
                    nodes.push(NodeSpec { path: vec![c], left: pos, right: end });
                    norms.push(NormSpec::Log { path: vec![c], shift: 0 });
                    for i in 0..n {
                        nodes.push(NodeSpec {
                            path: vec![c, i],
                            left: pos + i * step,
                            right: pos + i * step,
                        });
                    }
                    right = end;
                    pos = end + self.range(5, 40);
                }
                nodes[0] = NodeSpec { path: vec![], left: start, right };
                Creature::assemble(k, nodes, norms).expect("exact root over wide children")
            }
            _ => {
                let w = self.urange(15, 16);
                let n = self.range(1u64 << w, (1u64 << (w + 1)) - 1);
                let sub = self.range(1, 2);
                let gap = self.range(1, 2);
                let stride = (k as u64 - 1) * sub + sub.max(gap) + 1;
                let mut nodes = vec![NodeSpec {
                    path: vec![],
                    left: start,
                    right: start + (n - 1) * stride + (k as u64 - 1) * sub,
                }];
                let norms = vec![NormSpec::Log { path: vec![], shift: 0 }];
                for i in 0..n {
                    let base = start + i * stride;
                    nodes.push(NodeSpec {
                        path: vec![i],
                        left: base,
                        right: base + (k as u64 - 1) * sub,
                    });
                    for j in 0..k as u64 {
                        nodes.push(NodeSpec {
                            path: vec![i, j],
                            left: base + j * sub,
                            right: base + j * sub,
                        });
                    }
                }
                Creature::assemble(k, nodes, norms).expect("wide root over exact nodes")
            }
        }
    }

    fn flat_wide(&mut self, k: usize, n: u64, start: u64, step: u64, shift: u32) -> Creature {
        let mut nodes = vec![NodeSpec {
            path: vec![],
            left: start,
            right: start + (n - 1) * step,
        }];
        for i in 0..n {
            nodes.push(NodeSpec {
                path: vec![i],
                left: start + i * step,
                right: start + i * step,
            });
        }
        Creature::assemble(k, nodes, vec![NormSpec::Log { path: vec![], shift }])
            .expect("flat wide creature")
    }

    /// Marker set for shrinking `t`: one marker at or before the span,
    /// markers marching through it at a random stride, and two beyond.
    pub fn markers_for(&mut self, t: &Creature) -> WSet {
        let (lo, hi) = t.span();
        let stride = [1u64, 2, 3, 4, 5, 8][self.urange(0, 5)];
        let phase = self.range(0, stride - 1);
        let first = lo.saturating_sub(self.range(0, 2));
        let mut marks = vec![first];
        let mut m = lo + phase;
        if m == first {
            m += stride;
        }
        while m <= hi {
            marks.push(m);
            m += stride;
        }
        let b1 = hi + self.range(1, 20);
        let b2 = b1 + self.range(1, 20);
        marks.push(b1);
        marks.push(b2);
        WSet::new(b2 + 1, marks).expect("strictly increasing markers")
    }

    // -- fragments and pair conditions -------------------------------------

    /// Fragment of 1–3 small creatures with increasing spans and a stem
    /// below the first span.
    pub fn fragment(&mut self, k: usize) -> ConditionFragment {
        let m = self.urange(1, 3);
        let stem_room = self.range(4, 12);
        let mut creatures = Vec::with_capacity(m);
        let mut start = stem_room;
        for _ in 0..m {
            let c = self.creature_from(k, 2, start, false);
            start = c.span().1 + self.range(2, 10);
            creatures.push(c);
        }
        let stem_len = self.urange(0, 3.min(stem_room as usize));
        let w = self.distinct_points(stem_room, stem_len);
        ConditionFragment::new(k, w, creatures).expect("spans increase and stem is below them")
    }

    /// A legal extension of `p`: drop a prefix of creatures into the
    /// stem, then replace each kept creature by an iterated upper half.
    /// Returns the extension together with replayable hints.
    pub fn fragment_extension(
        &mut self,
        p: &ConditionFragment,
    ) -> (ConditionFragment, FragmentHints) {
        let len = p.creatures().len();
        let n0 = self.urange(0, len);
        let kept = len - n0;
        let groups = if kept == 0 { 0 } else { self.urange(1, kept) };
        let mut w = p.w().to_vec();
        for t in &p.creatures()[..n0] {
            for leaf in crate::creatures::contribution(t) {
                if self.coin(0.3) {
                    w.push(leaf);
                }
            }
        }
        let mut creatures = Vec::with_capacity(groups);
        let mut n_seq = vec![n0];
        for g in 0..groups {
            let mut c = p.creatures()[n0 + g].clone();
            for _ in 0..self.urange(0, 2) {
                c = upper_half(&c);
            }
            creatures.push(c);
            n_seq.push(n0 + g + 1);
        }
        let q = ConditionFragment::new(p.k(), w, creatures)
            .expect("upper halves keep spans, stem growth stays below them");
        (q, FragmentHints { n_seq })
    }

    /// Pair condition with a decided set and up to three families of
    /// disjoint pairs drawn from a bounded pool.
    pub fn pair_condition(&mut self) -> PairCondition {
        let u_len = self.urange(0, 5);
        let u = self.distinct_points(12, u_len);
        let fam_count = self.urange(0, 3);
        let mut families = Vec::with_capacity(fam_count);
        for _ in 0..fam_count {
            let pairs = self.urange(1, 3);
            let pool = self.distinct_points(40, 2 * pairs);
            let family: Vec<(u64, u64)> =
                pool.chunks(2).map(|c| (c[0], c[1])).collect();
            families.push(family);
        }
        PairCondition::new(u, families).expect("pool points are distinct within families")
    }

    /// A legal extension of `p`: new decided points strictly beyond
    /// both the old decided set and every family value, plus extra
    /// families.
    pub fn extended_pair(&mut self, p: &PairCondition) -> PairCondition {
        let family_max = p
            .families()
            .iter()
            .flat_map(|f| f.iter().map(|&(_, b)| b))
            .max()
            .unwrap_or(0);
        let floor = p.u().last().copied().unwrap_or(0).max(family_max) + 1;
        let mut u = p.u().to_vec();
        let extra = self.urange(0, 3);
        for _ in 0..extra {
            let last = u.last().copied().unwrap_or(floor).max(floor - 1);
            u.push(last + self.range(1, 4));
        }
        let mut families: Vec<Vec<(u64, u64)>> = p.families().to_vec();
        for _ in 0..self.urange(0, 2) {
            let pairs = self.urange(1, 2);
            let base = floor + 50 + self.range(0, 30);
            let pool = self.distinct_points(40, 2 * pairs);
            let family: Vec<(u64, u64)> =
                pool.chunks(2).map(|c| (base + c[0], base + c[1])).collect();
            families.push(family);
        }
        PairCondition::new(u, families).expect("new points are fresh and beyond the old data")
    }

    // -- construction instances --------------------------------------------

    /// Random 0/1 prefix of the given length.
    pub fn branch_prefix(&mut self, len: usize) -> BranchPrefix {
        BranchPrefix::new((0..len).map(|_| self.coin(0.5)).collect())
    }

    /// Prefix plus a family of sequence-code blocks, one code length per
    /// block, every member decidable.  With `want_witness`, one block
    /// consists entirely of off-chain codes; otherwise every block keeps
    /// its chain code so no block has more than `k` members off it.
    pub fn lemat_instance(
        &mut self,
        k: usize,
        blocks: usize,
        want_witness: bool,
    ) -> (BranchPrefix, BlockFamily) {
        let need_len = 3 + blocks as u64;
        let prefix_len = self.urange(need_len as usize, need_len as usize + 4);
        let x = self.branch_prefix(prefix_len);
        let mut lengths: Vec<usize> = (3..=prefix_len).collect();
        for i in (1..lengths.len()).rev() {
            let j = self.urange(0, i);
            lengths.swap(i, j);
        }
        lengths.truncate(blocks);
        lengths.sort_unstable();
        let witness_block = if want_witness { self.urange(0, blocks - 1) } else { blocks };
        let mut family: Vec<Vec<u64>> = Vec::with_capacity(blocks);
        for (b, &level) in lengths.iter().enumerate() {
            let chain_code = code_of(&x.bits()[..level]);
            let level_lo = (1u64 << level) - 1;
            let level_hi = (1u64 << (level + 1)) - 1;
            let mut block: BTreeSet<u64> = BTreeSet::new();
            if b != witness_block {
                block.insert(chain_code);
            }
            // A block without its chain code has every member off the
            // chain; one with it must stay at k+1 members so only k are
            // off and no accidental witness appears.
            let size = if b == witness_block { k + 1 + self.urange(0, 1) } else { k + 1 };
            while block.len() < size {
                let c = self.range(level_lo, level_hi - 1);
                if b == witness_block && c == chain_code {
                    continue;
                }
                block.insert(c);
            }
            family.push(block.into_iter().collect());
        }
        let horizon = 1u64 << (prefix_len + 1);
        (x, BlockFamily::new(horizon, family, false).expect("levels keep blocks disjoint"))
    }
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
