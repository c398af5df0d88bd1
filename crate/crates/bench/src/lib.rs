//! Benchmark fixtures: deterministic instances shared by the criterion
//! benches so runs are comparable across machines and revisions.

use finloc_core::creatures::Creature;
use finloc_core::finsets::WSet;
use finloc_core::gen::Gen;
use finloc_core::relations::FiniteRelationInstance;

/// A wide, heavy creature and a marker set in its shrink precondition
/// range.
pub fn heavy_creature_with_markers(seed: u64) -> (Creature, WSet) {
    let mut g = Gen::new(seed);
    let t = g.heavy_creature(2);
    let b = g.markers_for(&t);
    (t, b)
}

/// A dense/sparse set pair over the given window.
pub fn xy_pair(seed: u64, window: u64) -> (WSet, WSet) {
    Gen::new(seed).xy_pair(window)
}

/// A total relation table with the support conditions.
pub fn relation(seed: u64, rows: usize, cols: usize) -> FiniteRelationInstance {
    Gen::new(seed).rel_instance(rows, cols)
}
