//! `finloc`: run property suites, check instance files, and generate
//! seeded random instances for the finite localization toolkit.
//!
//! Exit codes: 0 when every executed property passes, 1 when some
//! property fails, 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use finloc_core::creatures::{
    contribution, fragment_leq, sparse_shrink, upper_half, weight, ConditionFragment, Creature,
    FragmentHints, FragmentVerdict, PairCondition,
};
use finloc_core::finsets::{BlockFamily, WSet};
use finloc_core::gen::Gen;
use finloc_core::largeness::transfer_exhaustive_sweep;
use finloc_core::measure::{
    localization_failure_bound, mc_localization_rate, tail_bound, tail_partial_sum, NameModel,
};
use finloc_core::relations::FiniteRelationInstance;
use finloc_core::suite::{run_suite, ExperimentConfig, SuiteName, SuiteReport};

#[derive(Parser)]
#[command(
    name = "finloc",
    version,
    about = "Finite localization workbench: property suites, instance checks, generators"
)]
struct Cli {
    /// Root seed; every randomized batch derives from it deterministically.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Window size for set-valued instances.
    #[arg(long, global = true, default_value_t = 120)]
    window: u64,

    /// Seeded cases per property batch.
    #[arg(long, global = true, default_value_t = 60)]
    cases: usize,

    /// Trial count for Monte Carlo estimates.
    #[arg(long, global = true, default_value_t = 20_000)]
    trials: u64,

    /// Also write the full machine-readable output to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Print machine-readable JSON on stdout instead of the text form.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every property suite.
    Check,
    /// Run one named property suite.
    Suite {
        /// relations | largeness | constructions | creatures | measure | invariants
        name: String,
    },
    /// Run the largeness suite.
    Largeness,
    /// Run the constructions suite.
    Construct,
    /// Run the invariants suite.
    Invariant,
    /// Exhaustive sweep of the counting-transfer equivalence.
    Transfer {
        /// Largest family arity to sweep.
        #[arg(long, default_value_t = 4)]
        lmax: usize,
        /// Largest ground-set size to sweep.
        #[arg(long, default_value_t = 8)]
        cap: usize,
    },
    /// Operate on creature instance files.
    Creature {
        #[command(subcommand)]
        op: CreatureOp,
    },
    /// Compare condition fragments and pair conditions.
    Fragment {
        #[command(subcommand)]
        op: FragmentOp,
    },
    /// Exact and sampled measure arithmetic for the blockwise name model.
    Measure {
        #[command(subcommand)]
        op: MeasureOp,
    },
    /// Generate a seeded random instance as JSON.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Subcommand)]
enum CreatureOp {
    /// Parse a creature file and run the structural validator.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Report the weight and contribution of a creature file.
    Weight {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Reduce all norms by half the weight, preserving the contribution.
    UpperHalf {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Thin a heavy creature so its output set avoids crowding any
    /// marker gap, losing at most 14 weight.
    Shrink {
        #[arg(long = "in")]
        input: PathBuf,
        /// Marker set file (window-set JSON).
        #[arg(long)]
        markers: PathBuf,
    },
}

#[derive(Subcommand)]
enum FragmentOp {
    /// Decide whether fragment q extends fragment p.
    Leq {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Optional grouping hints file.
        #[arg(long)]
        hints: Option<PathBuf>,
    },
    /// Decide whether pair condition q extends pair condition p.
    PairLeq {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
    },
}

#[derive(Subcommand)]
enum MeasureOp {
    /// Closed-form tail bound at stage m, with the partial sum below it.
    Tail {
        #[arg(long)]
        m: usize,
        /// Upper summation index for the partial sum.
        #[arg(long, default_value_t = 40)]
        rmax: usize,
    },
    /// Exact localization failure bound for a block-family file.
    Bound {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        m: usize,
        /// Scale depth of the name model.
        #[arg(long, default_value_t = 5)]
        depth: usize,
    },
    /// Monte Carlo failure rate for a block-family file, compared
    /// against the exact bound at three binomial sigmas.
    Mc {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 5)]
        depth: usize,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Random window set.
    Wset {
        #[arg(long, default_value_t = 30)]
        len: usize,
    },
    /// Random disjoint block family.
    Blockfamily {
        #[arg(long, default_value_t = 6)]
        blocks: usize,
        #[arg(long, default_value_t = 3)]
        min_size: usize,
        #[arg(long, default_value_t = 6)]
        max_size: usize,
        /// Tile the window with no gaps.
        #[arg(long)]
        covering: bool,
    },
    /// Random valid creature.
    Creature {
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Random condition fragment.
    Fragment {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Random total relation with the support conditions.
    Relinstance {
        #[arg(long, default_value_t = 3)]
        rows: usize,
        #[arg(long, default_value_t = 3)]
        cols: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Runs the selected command; `Ok(true)` means every executed property
/// passed.
fn run(cli: &Cli) -> Result<bool, String> {
    let cfg = ExperimentConfig {
        seed: cli.seed,
        window: cli.window,
        cases: cli.cases,
        trials: cli.trials,
    };
    match &cli.command {
        Command::Check => {
            let reports: Vec<SuiteReport> =
                SuiteName::ALL.iter().map(|&n| run_suite(n, &cfg)).collect();
            emit_reports(cli, &reports)?;
            Ok(reports.iter().all(|r| r.all_passed()))
        }
        Command::Suite { name } => {
            let suite: SuiteName = name.parse().map_err(|e| format!("{e}"))?;
            let report = run_suite(suite, &cfg);
            emit_reports(cli, std::slice::from_ref(&report))?;
            Ok(report.all_passed())
        }
        Command::Largeness => named_suite(cli, &cfg, SuiteName::Largeness),
        Command::Construct => named_suite(cli, &cfg, SuiteName::Constructions),
        Command::Invariant => named_suite(cli, &cfg, SuiteName::Invariants),
        Command::Transfer { lmax, cap } => {
            let sweep = transfer_exhaustive_sweep(*lmax, *cap);
            let ok = sweep.failures.is_empty();
            let payload = json!({
                "instances_checked": sweep.instances_checked,
                "failures": sweep.failures,
            });
            emit_value(cli, &payload)?;
            if !cli.json {
                println!(
                    "transfer sweep: {} instances, {} failures",
                    sweep.instances_checked,
                    sweep.failures.len()
                );
            }
            Ok(ok)
        }
        Command::Creature { op } => creature_command(cli, op),
        Command::Fragment { op } => fragment_command(cli, op),
        Command::Measure { op } => measure_command(cli, op),
        Command::Gen { kind } => gen_command(cli, kind),
    }
}

fn named_suite(cli: &Cli, cfg: &ExperimentConfig, name: SuiteName) -> Result<bool, String> {
    let report = run_suite(name, cfg);
    emit_reports(cli, std::slice::from_ref(&report))?;
    Ok(report.all_passed())
}

fn emit_reports(cli: &Cli, reports: &[SuiteReport]) -> Result<(), String> {
    let jsonl: String = reports.iter().map(|r| r.to_jsonl()).collect();
    if let Some(path) = &cli.out {
        write_file(path, &jsonl)?;
    }
    if cli.json {
        print!("{jsonl}");
    } else {
        for report in reports {
            for line in &report.lines {
                let verdict = if line.pass { "pass" } else { "FAIL" };
                println!(
                    "[{verdict}] {}.{} ({} checked)",
                    line.suite, line.property, line.checked
                );
                if let Some(ce) = &line.counterexample {
                    println!("        counterexample: {ce}");
                }
            }
            let s = &report.summary;
            println!("suite {}: {}/{} properties passed", s.suite, s.passed, s.properties);
        }
    }
    Ok(())
}

/// Prints a JSON payload (when `--json`) and mirrors it to `--out`.
fn emit_value(cli: &Cli, payload: &serde_json::Value) -> Result<(), String> {
    let text = serde_json::to_string_pretty(payload).expect("payload serializes");
    if let Some(path) = &cli.out {
        write_file(path, &format!("{text}\n"))?;
    }
    if cli.json {
        println!("{text}");
    }
    Ok(())
}

/// Emits a generated or derived instance: to `--out` when given, else to
/// stdout regardless of `--json` (the instance is the output).
fn emit_instance<T: serde::Serialize>(cli: &Cli, instance: &T) -> Result<(), String> {
    let text = serde_json::to_string(instance).expect("instance serializes");
    match &cli.out {
        Some(path) => write_file(path, &format!("{text}\n")),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), String> {
    fs::write(path, content).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text =
        fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
}

fn creature_command(cli: &Cli, op: &CreatureOp) -> Result<bool, String> {
    match op {
        CreatureOp::Validate { input } => {
            let t: Creature = read_json(input)?;
            // Parsing already validates; re-run explicitly for the report.
            match t.validate(true) {
                Ok(()) => {
                    let payload = json!({
                        "valid": true,
                        "k": t.k(),
                        "weight": weight(&t),
                        "leaves": contribution(&t).len(),
                    });
                    emit_value(cli, &payload)?;
                    if !cli.json {
                        println!(
                            "valid creature: k={}, weight={}, {} leaves",
                            t.k(),
                            weight(&t),
                            contribution(&t).len()
                        );
                    }
                    Ok(true)
                }
                Err(e) => {
                    emit_value(cli, &json!({"valid": false, "error": e.to_string()}))?;
                    if !cli.json {
                        println!("invalid creature: {e}");
                    }
                    Ok(false)
                }
            }
        }
        CreatureOp::Weight { input } => {
            let t: Creature = read_json(input)?;
            let payload = json!({
                "weight": weight(&t),
                "contribution": contribution(&t),
            });
            emit_value(cli, &payload)?;
            if !cli.json {
                println!("weight {}", weight(&t));
            }
            Ok(true)
        }
        CreatureOp::UpperHalf { input } => {
            let t: Creature = read_json(input)?;
            emit_instance(cli, &upper_half(&t))?;
            Ok(true)
        }
        CreatureOp::Shrink { input, markers } => {
            let t: Creature = read_json(input)?;
            let b: WSet = read_json(markers)?;
            let shrunk = sparse_shrink(&t, &b).map_err(|e| e.to_string())?;
            emit_instance(cli, &shrunk)?;
            if !cli.json && cli.out.is_some() {
                println!(
                    "shrunk: weight {} -> {}",
                    weight(&t),
                    weight(&shrunk)
                );
            }
            Ok(true)
        }
    }
}

fn fragment_command(cli: &Cli, op: &FragmentOp) -> Result<bool, String> {
    match op {
        FragmentOp::Leq { p, q, hints } => {
            let p: ConditionFragment = read_json(p)?;
            let q: ConditionFragment = read_json(q)?;
            let hints: Option<FragmentHints> =
                hints.as_ref().map(|h| read_json(h)).transpose()?;
            let verdict = fragment_leq(&p, &q, hints.as_ref());
            let (holds, detail) = match &verdict {
                FragmentVerdict::Holds { n_seq, .. } => {
                    (true, json!({"holds": true, "n_seq": n_seq}))
                }
                FragmentVerdict::Fails { reason } => {
                    (false, json!({"holds": false, "reason": reason}))
                }
                FragmentVerdict::CapLimited { reason } => (
                    false,
                    json!({"holds": false, "capped": true, "reason": reason}),
                ),
            };
            emit_value(cli, &detail)?;
            if !cli.json {
                println!("{}", if holds { "extends" } else { "does not extend" });
            }
            Ok(holds)
        }
        FragmentOp::PairLeq { p, q } => {
            let p: PairCondition = read_json(p)?;
            let q: PairCondition = read_json(q)?;
            let holds = finloc_core::creatures::pair_leq(&p, &q);
            emit_value(cli, &json!({"holds": holds}))?;
            if !cli.json {
                println!("{}", if holds { "extends" } else { "does not extend" });
            }
            Ok(holds)
        }
    }
}

fn measure_command(cli: &Cli, op: &MeasureOp) -> Result<bool, String> {
    match op {
        MeasureOp::Tail { m, rmax } => {
            let bound = tail_bound(*m);
            let partial = tail_partial_sum(*m, *rmax);
            let below = partial < bound;
            let payload = json!({
                "m": m,
                "bound": bound,
                "partial_sum": partial,
                "rmax": rmax,
                "partial_below_bound": below,
            });
            emit_value(cli, &payload)?;
            if !cli.json {
                println!("tail bound at {m}: {bound} (partial sum to {rmax}: {partial})");
            }
            Ok(below)
        }
        MeasureOp::Bound { family, m, depth } => {
            let f: BlockFamily = read_json(family)?;
            let model = NameModel::new(*depth).map_err(|e| e.to_string())?;
            let bound = localization_failure_bound(&f, *m, &model).map_err(|e| e.to_string())?;
            let tail = tail_bound(*m);
            let within = bound <= tail;
            let payload = json!({
                "m": m,
                "depth": depth,
                "bound": bound,
                "tail_bound": tail,
                "within_tail": within,
            });
            emit_value(cli, &payload)?;
            if !cli.json {
                println!("failure bound: {bound} (tail bound {tail})");
            }
            Ok(within)
        }
        MeasureOp::Mc { family, m, depth } => {
            let f: BlockFamily = read_json(family)?;
            let model = NameModel::new(*depth).map_err(|e| e.to_string())?;
            let exact = localization_failure_bound(&f, *m, &model).map_err(|e| e.to_string())?;
            let mc = mc_localization_rate(&f, *m, &model, cli.trials, cli.seed)
                .map_err(|e| e.to_string())?;
            let exact_f = exact.to_f64();
            let sigma3 = 3.0 * (exact_f * (1.0 - exact_f) / cli.trials as f64).sqrt();
            let within = (mc.rate - exact_f).abs() <= sigma3;
            let payload = json!({
                "trials": mc.trials,
                "failures": mc.failures,
                "rate": mc.rate,
                "exact": exact,
                "abs_diff": (mc.rate - exact_f).abs(),
                "three_sigma": sigma3,
                "within_three_sigma": within,
            });
            emit_value(cli, &payload)?;
            if !cli.json {
                println!(
                    "rate {} over {} trials (exact {}, 3-sigma radius {:.2e})",
                    mc.rate, mc.trials, exact, sigma3
                );
            }
            Ok(within)
        }
    }
}

fn gen_command(cli: &Cli, kind: &GenKind) -> Result<bool, String> {
    let mut g = Gen::new(cli.seed);
    match kind {
        GenKind::Wset { len } => {
            let x = g.wset(cli.window, *len);
            emit_instance(cli, &x)?;
        }
        GenKind::Blockfamily { blocks, min_size, max_size, covering } => {
            if min_size > max_size || *min_size == 0 {
                return Err(format!("unsatisfiable block sizes {min_size}..{max_size}"));
            }
            let f = g.block_family(cli.window, *blocks, *min_size, *max_size, *covering);
            emit_instance(cli, &f)?;
        }
        GenKind::Creature { k, depth } => {
            if *k < 2 || *depth == 0 {
                return Err(format!("unsatisfiable creature shape k={k} depth={depth}"));
            }
            let t = g.creature(*k, *depth);
            t.validate(true).expect("generated creatures validate");
            emit_instance(cli, &t)?;
        }
        GenKind::Fragment { k } => {
            if *k < 2 {
                return Err(format!("unsatisfiable fragment arity k={k}"));
            }
            let f = g.fragment(*k);
            emit_instance(cli, &f)?;
        }
        GenKind::Relinstance { rows, cols } => {
            if *rows < 2 || *cols < 2 {
                return Err(format!(
                    "support conditions need a 2x2 table at least, got {rows}x{cols}"
                ));
            }
            let inst: FiniteRelationInstance = g.rel_instance(*rows, *cols);
            emit_instance(cli, &inst)?;
        }
    }
    Ok(true)
}
