//! Property suites: named batches of seeded checks over every module,
//! reported as machine-readable JSON lines.
//!
//! Each suite emits one line per property — name, pass flag, number of
//! cases checked, and on failure the first counterexample embedded in
//! full so it can be replayed standalone — followed by a summary line.
//! Reports are deterministic: identical configuration gives a
//! byte-identical report.  Wall-clock timings go to stderr only, so
//! they never perturb the report bytes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::constructions::{
    code_of, crowding_function, decode, g_to_interval_partition, lemat_witness,
    meabou_partition, partition_to_escaping_g, s_plus_phi_pipeline, LematOutcome,
};
use crate::creatures::{
    check_derivation, contribution, fragment_leq, gap_sparsity_holds, pair_join, pair_leq,
    sparse_shrink, upper_half, validate_norm, weight, FragmentVerdict, NiceNorm,
};
use crate::finsets::in_p_k;
use crate::gen::Gen;
use crate::largeness::{derived_y, split_into_2_3, subset_family, transfer_exhaustive_sweep};
use crate::localizers::{ktree_localizes, ktree_to_slalom_cover, slalom_localizes, KTree};
use crate::measure::{
    empty_meet_probability, localization_failure_bound, mc_localization_rate, sample_missing,
    sample_name, tail_bound, tail_partial_sum, ExactRational, NameModel,
};
use crate::relations::{
    b_fin, d_fin, eval_r_exists_k, eval_s_k, eval_s_plus_phi, FiniteRelationInstance,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown suite {0:?}; expected one of relations, largeness, constructions, creatures, measure, invariants")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteName {
    Relations,
    Largeness,
    Constructions,
    Creatures,
    Measure,
    Invariants,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Relations,
        SuiteName::Largeness,
        SuiteName::Constructions,
        SuiteName::Creatures,
        SuiteName::Measure,
        SuiteName::Invariants,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SuiteName::Relations => "relations",
            SuiteName::Largeness => "largeness",
            SuiteName::Constructions => "constructions",
            SuiteName::Creatures => "creatures",
            SuiteName::Measure => "measure",
            SuiteName::Invariants => "invariants",
        }
    }
}

impl FromStr for SuiteName {
    type Err = SuiteError;
    fn from_str(s: &str) -> Result<Self, SuiteError> {
        match s {
            "relations" => Ok(SuiteName::Relations),
            "largeness" => Ok(SuiteName::Largeness),
            "constructions" => Ok(SuiteName::Constructions),
            "creatures" => Ok(SuiteName::Creatures),
            "measure" => Ok(SuiteName::Measure),
            "invariants" => Ok(SuiteName::Invariants),
            other => Err(SuiteError::UnknownSuite(other.to_string())),
        }
    }
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scale knobs for a suite run.  The seed pins every random choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Window size for set-valued instances.
    pub window: u64,
    /// Seeded cases per property.
    pub cases: usize,
    /// Monte Carlo trial count.
    pub trials: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { seed: 0, window: 120, cases: 60, trials: 20_000 }
    }
}

/// One report line: a property verdict with an optional embedded
/// counterexample.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyLine {
    pub suite: &'static str,
    pub property: &'static str,
    pub pass: bool,
    pub checked: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub summary: bool,
    pub suite: &'static str,
    pub properties: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub lines: Vec<PropertyLine>,
    pub summary: SuiteSummary,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// JSON lines: one object per property, then the summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line).expect("report lines serialize"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out
    }
}

/// Outcome of one property batch: cases checked and the first
/// counterexample, if any.
struct Batch {
    checked: u64,
    counterexample: Option<Value>,
}

impl Batch {
    fn pass(checked: u64) -> Batch {
        Batch { checked, counterexample: None }
    }

    fn fail(checked: u64, counterexample: Value) -> Batch {
        Batch { checked, counterexample: Some(counterexample) }
    }
}

fn run_property(
    lines: &mut Vec<PropertyLine>,
    suite: &'static str,
    property: &'static str,
    body: impl FnOnce() -> Batch,
) {
    let started = Instant::now();
    let batch = body();
    eprintln!(
        "[timing] {suite}.{property}: {:.1} ms",
        started.elapsed().as_secs_f64() * 1e3
    );
    lines.push(PropertyLine {
        suite,
        property,
        pass: batch.counterexample.is_none(),
        checked: batch.checked,
        counterexample: batch.counterexample,
    });
}

/// Runs one named suite at the given scale.
pub fn run_suite(name: SuiteName, cfg: &ExperimentConfig) -> SuiteReport {
    let mut lines = Vec::new();
    match name {
        SuiteName::Relations => relations_suite(cfg, &mut lines),
        SuiteName::Largeness => largeness_suite(cfg, &mut lines),
        SuiteName::Constructions => constructions_suite(cfg, &mut lines),
        SuiteName::Creatures => creatures_suite(cfg, &mut lines),
        SuiteName::Measure => measure_suite(cfg, &mut lines),
        SuiteName::Invariants => invariants_suite(cfg, &mut lines),
    }
    let passed = lines.iter().filter(|l| l.pass).count();
    let summary = SuiteSummary {
        summary: true,
        suite: name.as_str(),
        properties: lines.len(),
        passed,
        failed: lines.len() - passed,
    };
    SuiteReport { lines, summary }
}

fn batch_seed(cfg: &ExperimentConfig, index: u64) -> u64 {
    cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index)
}

// ---------------------------------------------------------------------------
// relations
// ---------------------------------------------------------------------------

fn relations_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "relations", "run_chain_monotone", || {
        let mut g = Gen::new(batch_seed(cfg, 0));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let (x, y) = g.xy_pair(cfg.window);
            for k in 1..=4usize {
                let wide = eval_s_k(&x, &y, k).expect("window fits");
                let tight = eval_s_k(&x, &y, k + 1).expect("window fits");
                checked += 1;
                let shrinks = tight
                    .witnesses
                    .iter()
                    .all(|n| wide.witnesses.binary_search(n).is_ok());
                if !shrinks {
                    return Batch::fail(
                        checked,
                        json!({"x": x, "y": y, "k": k,
                               "tight": tight.witnesses, "wide": wide.witnesses}),
                    );
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "relations", "phi_witness_promises_run", || {
        let mut g = Gen::new(batch_seed(cfg, 1));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let (x, y) = g.xy_pair(cfg.window);
            let phi = g.phi(y.len() + 8);
            let report = eval_s_plus_phi(&x, &y, &phi).expect("phi covers the window");
            for &n in &report.witnesses {
                checked += 1;
                let run_len = phi[n] as usize;
                let runs = eval_s_k(&x, &y, run_len).expect("window fits");
                if runs.witnesses.binary_search(&n).is_err() {
                    return Batch::fail(
                        checked,
                        json!({"x": x, "y": y, "phi": phi, "witness": n, "run_len": run_len}),
                    );
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "relations", "tail_reading_consistent", || {
        let mut g = Gen::new(batch_seed(cfg, 2));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let f = g.block_family(cfg.window, 8, 2, 5, false);
            let x = g.wset(cfg.window, cfg.window as usize / 3);
            let report = eval_r_exists_k(&x, &f, 1).expect("family fits");
            checked += 1;
            let consistent = match (report.tail_holds_from, report.evaluated_up_to) {
                (Some(t), Some(up)) => {
                    (t..=up).all(|n| report.witnesses.binary_search(&n).is_ok())
                }
                (None, _) => true,
                (Some(_), None) => false,
            };
            if !consistent {
                return Batch::fail(checked, json!({"x": x, "family_blocks": f.blocks(),
                                                   "report": report}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "relations", "duality_on_sampled_tables", || {
        let mut g = Gen::new(batch_seed(cfg, 3));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let rows = g.urange(2, 4);
            let cols = g.urange(2, 4);
            let inst = g.rel_instance(rows, cols);
            let cinv = inst.complement_inverse();
            let d = d_fin(&inst).expect("support conditions hold").0;
            let b_dual = b_fin(&cinv).expect("support conditions transfer").0;
            let b = b_fin(&inst).expect("support conditions hold").0;
            let d_dual = d_fin(&cinv).expect("support conditions transfer").0;
            checked += 1;
            if d != b_dual || b != d_dual {
                return Batch::fail(
                    checked,
                    json!({"instance": inst, "d": d, "b_dual": b_dual, "b": b, "d_dual": d_dual}),
                );
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// largeness
// ---------------------------------------------------------------------------

fn largeness_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "largeness", "transfer_oracle_exhaustive", || {
        let sweep = transfer_exhaustive_sweep(4, 8);
        if sweep.failures.is_empty() {
            Batch::pass(sweep.instances_checked)
        } else {
            Batch::fail(
                sweep.instances_checked,
                serde_json::to_value(&sweep.failures[0]).expect("failure serializes"),
            )
        }
    });

    run_property(lines, "largeness", "subset_family_within_blocks", || {
        let mut g = Gen::new(batch_seed(cfg, 10));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let f = g.block_family(cfg.window, 6, 3, 6, false);
            let positions = [0usize, 2];
            let sub = subset_family(&f, &positions).expect("blocks have 3+ points");
            checked += 1;
            let ok = sub.len() == f.len()
                && sub.blocks().iter().all(|sb| {
                    f.blocks()
                        .iter()
                        .any(|fb| sb.iter().all(|v| fb.binary_search(v).is_ok()))
                });
            if !ok {
                return Batch::fail(checked, json!({"family": f.blocks(), "sub": sub.blocks()}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "largeness", "split_pieces_cover", || {
        let mut g = Gen::new(batch_seed(cfg, 11));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let size = g.urange(4, 9);
            let base = g.wset(cfg.window, size);
            let pieces = split_into_2_3(base.elements(), 2).expect("size 4..9 splits");
            checked += 1;
            let mut union: Vec<u64> = pieces.iter().flatten().copied().collect();
            union.sort_unstable();
            let ok = union == base.elements()
                && pieces.iter().all(|p| p.len() == 2 || p.len() == 3);
            if !ok {
                return Batch::fail(checked, json!({"base": base, "pieces": pieces}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "largeness", "derived_y_marks_met_blocks", || {
        let mut g = Gen::new(batch_seed(cfg, 12));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let f = g.block_family(cfg.window, 7, 2, 4, false);
            let x = g.wset(cfg.window, cfg.window as usize / 4);
            let y = derived_y(&f, &x);
            checked += 1;
            let expect: Vec<u64> = f
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.iter().any(|&v| x.contains(v)))
                .map(|(n, _)| n as u64)
                .collect();
            if y.elements() != expect.as_slice() {
                return Batch::fail(
                    checked,
                    json!({"family": f.blocks(), "x": x, "derived": y, "expect": expect}),
                );
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// constructions
// ---------------------------------------------------------------------------

fn constructions_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "constructions", "branch_block_directions", || {
        let mut g = Gen::new(batch_seed(cfg, 20));
        let mut checked = 0;
        for case in 0..cfg.cases {
            let k = 1 + case % 2;
            let want_witness = case % 2 == 0;
            let (x, f) = g.lemat_instance(k, 3, want_witness);
            checked += 1;
            match lemat_witness(&x, &f, k).expect("instances are decidable") {
                LematOutcome::Witness(n) => {
                    let off = f.blocks()[n]
                        .iter()
                        .filter(|&&c| !x.chain_contains(c).expect("decidable"))
                        .count();
                    if !want_witness || off < k + 1 {
                        return Batch::fail(
                            checked,
                            json!({"prefix": x.bits(), "blocks": f.blocks(),
                                   "witness": n, "off_chain": off}),
                        );
                    }
                }
                LematOutcome::Trace(trace) => {
                    let increasing = trace
                        .selected_indices
                        .windows(2)
                        .all(|w| trace.u[w[0]] < trace.d[w[1]]);
                    if want_witness || !increasing {
                        return Batch::fail(
                            checked,
                            json!({"prefix": x.bits(), "blocks": f.blocks(), "trace_u": trace.u,
                                   "trace_d": trace.d, "selected": trace.selected_indices}),
                        );
                    }
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "constructions", "guessed_blocks_kept_verbatim", || {
        let mut g = Gen::new(batch_seed(cfg, 21));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let f = g.block_family(cfg.window, 5, 3, 5, true);
            let guesses: Vec<Vec<u64>> = f
                .blocks()
                .iter()
                .map(|b| vec![b[0], b[1]])
                .collect();
            let x = g.wset(cfg.window, cfg.window as usize / 3);
            let out = meabou_partition(&x, &f, &guesses).expect("guesses are small subsets");
            checked += 1;
            let kept = guesses.iter().all(|gb| {
                out.blocks().iter().any(|ob| ob == gb || gb.iter().all(|v| ob.binary_search(v).is_ok()))
            });
            let ok = kept && out.blocks().iter().all(|b| b.len() >= 2);
            if !ok {
                return Batch::fail(
                    checked,
                    json!({"family": f.blocks(), "guesses": guesses, "out": out.blocks()}),
                );
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "constructions", "pipeline_with_perfect_oracle", || {
        let mut g = Gen::new(batch_seed(cfg, 22));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            // Density margin: with at most h/20 points missing and the
            // generator's slow-growing phi, the first two thinned points
            // land inside [0, 2h/3) for every h >= 120, so the first
            // cut-gap is always rich and the oracle replay must match.
            let h = cfg.window.max(120);
            let missing = g.urange(0, h as usize / 20);
            let x = g.wset(h, h as usize - missing);
            let phi = g.phi(h as usize + 8);
            let y0 = crate::finsets::WSet::new(
                h,
                vec![0, h * 2 / 3, h - 1],
            )
            .expect("three increasing cutpoints");
            let dry = match s_plus_phi_pipeline(&x, &phi, &y0, &Default::default()) {
                Ok(t) => t,
                Err(e) => {
                    return Batch::fail(checked + 1, json!({"x": x, "phi": phi, "error": e.to_string()}))
                }
            };
            let oracle: std::collections::BTreeMap<u64, Vec<u64>> =
                dry.f_map.iter().cloned().collect();
            let trace = s_plus_phi_pipeline(&x, &phi, &y0, &oracle)
                .expect("second run sees the same window");
            checked += 1;
            let report = eval_s_plus_phi(&x, &trace.y, &phi).expect("output fits the window");
            let ok = !trace.matched.is_empty() && !report.witnesses.is_empty();
            if !ok {
                return Batch::fail(
                    checked,
                    json!({"x": x, "phi": phi, "y0": y0, "matched": trace.matched,
                           "y": trace.y, "witnesses": report.witnesses}),
                );
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "constructions", "escaping_partition_recurrence", || {
        let mut g = Gen::new(batch_seed(cfg, 23));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let f = g.block_family(cfg.window, 6, 2, 4, true);
            let esc = partition_to_escaping_g(&f).expect("family is covering");
            let k = g.range(1, 3);
            let length = 3;
            match g_to_interval_partition(&esc, k, length) {
                Ok(partition) => {
                    checked += 1;
                    let cuts = partition.cutpoints();
                    let ok = cuts[0] == 0
                        && cuts.windows(2).all(|w| w[1] > w[0] + k)
                        && cuts
                            .windows(2)
                            .all(|w| w[1] == k + 1 + w[0] + esc[w[0] as usize]);
                    if !ok {
                        return Batch::fail(
                            checked,
                            json!({"family": f.blocks(), "g": esc, "cuts": cuts}),
                        );
                    }
                }
                Err(_) => {
                    // The short window ran out of g-domain; nothing to check.
                    checked += 1;
                }
            }
            let x = g.wset(cfg.window, (cfg.window as usize * 2) / 3);
            if let Ok(crowd) = crowding_function(&x, 1, 10) {
                checked += 1;
                let sound = (0..crowd.len() as u64).all(|n| {
                    let m = crowd[n as usize];
                    x.count_in(n, m) > 2 && x.count_in(n, m - 1) <= 2
                });
                if !sound {
                    return Batch::fail(checked, json!({"x": x, "crowding": crowd}));
                }
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// creatures
// ---------------------------------------------------------------------------

fn creatures_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "creatures", "upper_half_identity", || {
        let mut g = Gen::new(batch_seed(cfg, 30));
        let mut checked = 0;
        for case in 0..cfg.cases {
            let k = 2 + case % 2;
            let t = g.creature(k, 3);
            let w = weight(&t);
            let uh = upper_half(&t);
            checked += 1;
            let ok = weight(&uh) == w - w / 2
                && contribution(&uh) == contribution(&t)
                && uh.validate(true).is_ok();
            if !ok {
                return Batch::fail(checked, json!({"creature": t, "upper_half": uh}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "creatures", "shrink_contract", || {
        let mut g = Gen::new(batch_seed(cfg, 31));
        let mut checked = 0;
        let heavy_cases = (cfg.cases / 5).clamp(4, 25);
        for case in 0..heavy_cases {
            let k = 2 + case % 2;
            let t = g.heavy_creature(k);
            let markers = g.markers_for(&t);
            let w = weight(&t);
            let shrunk = match sparse_shrink(&t, &markers) {
                Ok(s) => s,
                Err(e) => {
                    return Batch::fail(
                        checked + 1,
                        json!({"creature": t, "markers": markers, "error": e.to_string()}),
                    )
                }
            };
            checked += 1;
            let ok = crate::creatures::refines(&t, &shrunk)
                && weight(&shrunk) + 14 >= w
                && gap_sparsity_holds(&contribution(&shrunk), &markers, k);
            if !ok {
                return Batch::fail(
                    checked,
                    json!({"markers": markers, "weight_before": w,
                           "weight_after": weight(&shrunk)}),
                );
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "creatures", "fragment_order_certified", || {
        let mut g = Gen::new(batch_seed(cfg, 32));
        let mut checked = 0;
        for case in 0..cfg.cases {
            let k = 2 + case % 2;
            let p = g.fragment(k);
            let (q, hints) = g.fragment_extension(&p);
            checked += 1;
            match fragment_leq(&p, &q, Some(&hints)) {
                FragmentVerdict::Holds { n_seq, derivations } => {
                    let certified = derivations.iter().enumerate().all(|(i, cert)| {
                        let parts = &p.creatures()[n_seq[i]..n_seq[i + 1]];
                        check_derivation(cert, &q.creatures()[i], parts)
                    });
                    let reflexive =
                        matches!(fragment_leq(&p, &p, None), FragmentVerdict::Holds { .. });
                    if !certified || !reflexive {
                        return Batch::fail(checked, json!({"p": p, "q": q, "n_seq": n_seq}));
                    }
                }
                other => {
                    return Batch::fail(
                        checked,
                        json!({"p": p, "q": q, "verdict": format!("{other:?}")}),
                    )
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "creatures", "pair_order_and_joins", || {
        let mut g = Gen::new(batch_seed(cfg, 33));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            let p = g.pair_condition();
            let q = g.extended_pair(&p);
            let r = g.extended_pair(&q);
            checked += 1;
            let ok = pair_leq(&p, &p)
                && pair_leq(&p, &q)
                && pair_leq(&q, &r)
                && pair_leq(&p, &r)
                && pair_join(&p, &p).map_or(false, |j| pair_leq(&p, &j));
            if !ok {
                return Batch::fail(checked, json!({"p": p, "q": q, "r": r}));
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// measure
// ---------------------------------------------------------------------------

fn measure_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "measure", "tail_bound_identities", || {
        let mut checked = 0;
        for m in 0..=16usize {
            let closed = tail_bound(m);
            let expect = ExactRational::ratio(2, 3) * ExactRational::pow2(-(2 * m as i64));
            checked += 1;
            if closed != expect {
                return Batch::fail(checked, json!({"m": m, "closed": closed, "expect": expect}));
            }
            for r_max in m..=40 {
                checked += 1;
                if tail_partial_sum(m, r_max) >= closed {
                    return Batch::fail(checked, json!({"m": m, "r_max": r_max}));
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "measure", "per_block_normalization", || {
        let model = NameModel::new(4).expect("depth 4 in range");
        let mut checked = 0;
        for k in 0..4 {
            let (lo, hi) = model.lseq().block_bounds(k);
            let mut total = ExactRational::zero();
            for p in lo..hi {
                total += empty_meet_probability(&[p], &model).expect("point in range");
            }
            checked += 1;
            if total != ExactRational::one() {
                return Batch::fail(checked, json!({"block": k, "total": total}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "measure", "union_bound_below_tail", || {
        let model = NameModel::new(5).expect("depth 5 in range");
        let mut g = Gen::new(batch_seed(cfg, 40));
        let mut checked = 0;
        let boundary_pairs = [[2u64, 3], [18, 19], [530, 531]];
        for _ in 0..cfg.cases {
            let mut blocks: Vec<Vec<u64>> = Vec::new();
            for pair in boundary_pairs.iter() {
                if g.coin(0.7) {
                    blocks.push(pair.to_vec());
                }
            }
            let fill = g.urange(1, 4);
            for i in 0..fill {
                let base = 540 + 10 * i as u64 + g.range(0, 4);
                blocks.push(vec![base, base + 1]);
            }
            let family =
                crate::finsets::BlockFamily::new(model.lseq().horizon(), blocks, false)
                    .expect("pairs are disjoint");
            for m in 0..=2usize {
                let bound =
                    localization_failure_bound(&family, m, &model).expect("family in range");
                checked += 1;
                if bound > tail_bound(m) {
                    return Batch::fail(
                        checked,
                        json!({"family": family.blocks(), "m": m, "bound": bound}),
                    );
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "measure", "monte_carlo_within_3_sigma", || {
        let model = NameModel::new(5).expect("depth 5 in range");
        let family = crate::finsets::BlockFamily::new(
            model.lseq().horizon(),
            vec![vec![2, 3], vec![18, 19], vec![530, 531], vec![5, 6]],
            false,
        )
        .expect("pairs are disjoint");
        let exact = localization_failure_bound(&family, 1, &model)
            .expect("family in range")
            .to_f64();
        let mc = mc_localization_rate(&family, 1, &model, cfg.trials, batch_seed(cfg, 41))
            .expect("trials positive");
        let sigma = (exact * (1.0 - exact) / cfg.trials as f64).sqrt();
        if (mc.rate - exact).abs() > 3.0 * sigma {
            return Batch::fail(
                1,
                json!({"rate": mc.rate, "exact": exact, "sigma3": 3.0 * sigma}),
            );
        }
        // Pairs tiled from l_1 never straddle a scale boundary, so a
        // single failure would be a probability-zero event.
        let horizon = model.lseq().horizon();
        let pairs: Vec<Vec<u64>> =
            (1..horizon).step_by(2).map(|lo| vec![lo, lo + 1]).collect();
        let tiling = crate::finsets::BlockFamily::new(horizon, pairs, false)
            .expect("tiling pairs are disjoint");
        let mc0 = mc_localization_rate(&tiling, 1, &model, cfg.trials.min(2_000), batch_seed(cfg, 42))
            .expect("trials positive");
        if mc0.failures != 0 {
            return Batch::fail(2, json!({"failures": mc0.failures}));
        }
        Batch::pass(2)
    });

    run_property(lines, "measure", "samples_complement_missing", || {
        let model = NameModel::new(5).expect("depth 5 in range");
        let family = crate::finsets::BlockFamily::new(
            model.lseq().horizon(),
            vec![vec![2, 3], vec![18, 19], vec![530, 531], vec![5, 6]],
            false,
        )
        .expect("pairs are disjoint");
        let mut checked = 0;
        for trial in 0..20u64 {
            let seed = batch_seed(cfg, 43).wrapping_add(trial);
            let x = sample_name(&model, seed).expect("depth 5 materializes");
            let missing = sample_missing(&model, seed);
            checked += 1;
            let complement_ok = missing.iter().all(|&p| !x.contains(p))
                && x.len() as u64 + missing.len() as u64 == model.lseq().horizon();
            let report = eval_r_exists_k(&x, &family, 0).expect("family fits");
            let direct: Vec<usize> = family
                .blocks()
                .iter()
                .enumerate()
                .filter(|(_, b)| b.iter().all(|&p| !x.contains(p)))
                .map(|(n, _)| n)
                .collect();
            if !complement_ok || report.witnesses != direct {
                return Batch::fail(checked, json!({"seed": seed, "missing": missing}));
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// invariants
// ---------------------------------------------------------------------------

fn invariants_suite(cfg: &ExperimentConfig, lines: &mut Vec<PropertyLine>) {
    run_property(lines, "invariants", "sequence_code_round_trip", || {
        let mut checked = 0;
        for code in 0..1000u64 {
            checked += 1;
            if code_of(&decode(code)) != code {
                return Batch::fail(checked, json!({"code": code}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "invariants", "tree_cover_catches_branches", || {
        let mut g = Gen::new(batch_seed(cfg, 50));
        let mut checked = 0;
        for _ in 0..cfg.cases {
            // Random thin 2-tree: level n draws from the values 0..=n, so
            // each slalom cell has room for every value seen at its level.
            let depth = g.urange(2, 4);
            let mut nodes: Vec<Vec<u64>> = vec![vec![]];
            let mut frontier: Vec<Vec<u64>> = vec![vec![]];
            for level in 0..depth {
                let mut next = Vec::new();
                for node in &frontier {
                    let mut vals = std::collections::BTreeSet::new();
                    for _ in 0..g.urange(1, 2) {
                        vals.insert(g.range(0, level as u64));
                    }
                    for v in vals {
                        let mut child = node.clone();
                        child.push(v);
                        nodes.push(child.clone());
                        next.push(child);
                    }
                }
                frontier = next;
            }
            let t = KTree::new(2, nodes).expect("children per node stay within 2");
            let cover = ktree_to_slalom_cover(&t, depth).expect("levels fit their cells");
            for branch in t.nodes() {
                checked += 1;
                let localized = ktree_localizes(branch, &t);
                let covered = slalom_localizes(branch, &cover).expect("branch fits window");
                if !localized || !covered {
                    return Batch::fail(checked, json!({"depth": depth, "branch": branch}));
                }
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "invariants", "wire_formats_round_trip", || {
        let mut g = Gen::new(batch_seed(cfg, 51));
        let mut checked = 0;
        for case in 0..cfg.cases {
            let k = 2 + case % 2;
            let t = g.creature(k, 2);
            let frag = g.fragment(k);
            let x = g.wset(cfg.window, cfg.window as usize / 4);
            let inst = g.rel_instance(3, 3);
            checked += 1;
            let t2: crate::creatures::Creature =
                serde_json::from_str(&serde_json::to_string(&t).expect("serializes"))
                    .expect("parses");
            let f2: crate::creatures::ConditionFragment =
                serde_json::from_str(&serde_json::to_string(&frag).expect("serializes"))
                    .expect("parses");
            let x2: crate::finsets::WSet =
                serde_json::from_str(&serde_json::to_string(&x).expect("serializes"))
                    .expect("parses");
            let i2: FiniteRelationInstance =
                serde_json::from_str(&serde_json::to_string(&inst).expect("serializes"))
                    .expect("parses");
            if t2 != t || f2 != frag || x2 != x || i2 != inst {
                return Batch::fail(checked, json!({"case": case}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "invariants", "generated_instances_validate", || {
        let mut g = Gen::new(batch_seed(cfg, 52));
        let mut checked = 0;
        for case in 0..cfg.cases {
            let k = 2 + case % 2;
            let t = g.creature(k, 3);
            let f = g.block_family(cfg.window, 5, 3, 6, false);
            let frag = g.fragment(k);
            checked += 1;
            let ok = t.validate(true).is_ok()
                && in_p_k(&f, 2)
                && frag.creatures().iter().all(|c| c.validate(true).is_ok());
            if !ok {
                return Batch::fail(checked, json!({"case": case, "creature": t}));
            }
        }
        Batch::pass(checked)
    });

    run_property(lines, "invariants", "norm_families_satisfy_axioms", || {
        let mut checked = 0;
        for base in 2..=12usize {
            checked += 1;
            let log = NiceNorm::log(base).expect("base 2+ admits the log norm");
            if validate_norm(&log).is_err() {
                return Batch::fail(checked, json!({"base": base, "kind": "log"}));
            }
            if base >= 4 {
                checked += 1;
                let shifted = NiceNorm::log_shifted(base, 1).expect("room for the shift");
                if validate_norm(&shifted).is_err() {
                    return Batch::fail(checked, json!({"base": base, "kind": "log_shift_1"}));
                }
            }
        }
        Batch::pass(checked)
    });
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        for name in SuiteName::ALL {
            assert_eq!(name.as_str().parse::<SuiteName>().unwrap(), name);
        }
        assert_eq!(
            "bogus".parse::<SuiteName>(),
            Err(SuiteError::UnknownSuite("bogus".into()))
        );
    }

    #[test]
    fn every_suite_passes_at_small_scale() {
        let cfg = ExperimentConfig { seed: 5, window: 100, cases: 12, trials: 4_000 };
        for name in SuiteName::ALL {
            let report = run_suite(name, &cfg);
            assert!(
                report.all_passed(),
                "suite {name} failed: {}",
                report.to_jsonl()
            );
            assert_eq!(report.summary.properties, report.lines.len());
        }
    }

    #[test]
    fn reports_are_byte_identical_for_equal_configs() {
        let cfg = ExperimentConfig { seed: 9, window: 80, cases: 6, trials: 1_000 };
        let a = run_suite(SuiteName::Creatures, &cfg).to_jsonl();
        let b = run_suite(SuiteName::Creatures, &cfg).to_jsonl();
        assert_eq!(a, b);
        let c = run_suite(SuiteName::Measure, &cfg).to_jsonl();
        let d = run_suite(SuiteName::Measure, &cfg).to_jsonl();
        assert_eq!(c, d);
    }

    #[test]
    fn report_lines_are_json_objects() {
        let cfg = ExperimentConfig { seed: 1, window: 80, cases: 4, trials: 500 };
        let report = run_suite(SuiteName::Invariants, &cfg);
        let text = report.to_jsonl();
        let mut saw_summary = false;
        for line in text.lines() {
            let v: Value = serde_json::from_str(line).expect("every line is JSON");
            if v.get("summary").is_some() {
                saw_summary = true;
                assert_eq!(v["suite"], "invariants");
            } else {
                assert!(v.get("property").is_some());
                assert!(v.get("pass").is_some());
            }
        }
        assert!(saw_summary);
    }
}
