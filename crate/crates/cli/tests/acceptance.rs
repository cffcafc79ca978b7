//! Acceptance run: one PASS/FAIL line per criterion.

use std::collections::{BTreeSet, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use genquorum_cli::bench::microbench;
use genquorum_consensus::*;
use genquorum_core::random::{random_formula, random_subset};
use genquorum_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that fail on this implementation, each with its analysis in the
/// README. Any other failure fails the run.
const KNOWN_FAILING: &[&str] = &["2", "4c"];

const SEED: u64 = 0x5eed;
const EQUIVALENCE_BUDGET: Duration = Duration::from_secs(300);
const SAFETY_BUDGET: Duration = Duration::from_secs(600);

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id:<3} {}  {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, pass, detail }
}

/// Direct recursive semantics over party names.
fn oracle(f: &Formula, members: &HashSet<&str>) -> bool {
    match f {
        Formula::Literal(p) => members.contains(p.as_str()),
        Formula::And(of) => of.iter().all(|c| oracle(c, members)),
        Formula::Or(of) => of.iter().any(|c| oracle(c, members)),
        Formula::Threshold { k, of } => of.iter().filter(|c| oracle(c, members)).count() >= *k,
    }
}

fn members(u: &Universe, set: PartySet) -> HashSet<&str> {
    u.names(set).into_iter().collect()
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut subsets, mut mismatches) = (0u64, 0u64);
    let mut check = |f: &Formula| {
        let msp = build_msp(f).unwrap();
        let mbf = Mbf::new(f).unwrap();
        let u = mbf.universe().clone();
        let msp = msp.reindexed(u.clone()).unwrap();
        for bits in 0..1u128 << u.len() {
            let s = PartySet::from_bits(bits);
            let expected = oracle(f, &members(&u, s));
            subsets += 1;
            if msp.accepts(s).accepted != expected || mbf.eval(s) != expected {
                mismatches += 1;
            }
        }
    };
    for _ in 0..200 {
        check(&random_formula(&mut rng, 12, 4));
    }
    check(&layered_2l1c(4));
    let t = start.elapsed();
    outcome(
        "1",
        mismatches == 0 && t < EQUIVALENCE_BUDGET,
        format!(
            "encoding equivalence: 200 random formulas + 2L1C k=4, {subsets} subsets, mismatches={mismatches}, {:.1}s (budget {}s)",
            t.as_secs_f64(),
            EQUIVALENCE_BUDGET.as_secs()
        ),
    )
}

fn quorum_count() -> Outcome {
    let mbf = Mbf::new(&layered_2l1c(4)).unwrap();
    let minimal = enumerate_minimal_quorums(&mbf, 24).unwrap().len();
    let terms = expand_quorums(&mbf, 24).unwrap().len();
    // independent count by scanning every subset
    let scanned = (0..1u128 << 16)
        .map(PartySet::from_bits)
        .filter(|&s| mbf.eval(s) && s.iter().all(|p| !mbf.eval(s.without(p))))
        .count();
    outcome(
        "2",
        minimal == 792,
        format!(
            "2L1C k=4 minimal quorums: expected 792, enumerated {minimal}, exhaustive scan {scanned}; distinct threshold-expansion terms {terms}"
        ),
    )
}

fn dimensions() -> Outcome {
    let (sys, f) = os_location();
    let os = attribute_msp(&sys, &f).unwrap().dims();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut random_bad = 0;
    for _ in 0..200 {
        let f = random_formula(&mut rng, 12, 4);
        if build_msp(&f).unwrap().dims() != predicted_dims(&f) {
            random_bad += 1;
        }
    }
    let mut grids = Vec::new();
    let mut grid_bad = 0;
    for k in 2..=8 {
        for b in [0, k / 2, k - 1] {
            let layout = GridLayout::new(k, b).unwrap();
            let g = mgrid(layout).unwrap();
            let (m, d) = g.msp.dims();
            if m != 2 * layout.n() || predicted_dims(&g.formula) != (m, d) {
                grid_bad += 1;
            }
            grids.push(format!("{k}/{b}"));
        }
    }
    grids.dedup();
    outcome(
        "3",
        os == (32, 22) && random_bad == 0 && grid_bad == 0,
        format!(
            "MSP dims: OS/location {}x{} (expected 32x22); random formulas with predicted != actual: {random_bad}/200; M-Grid k/b in {} with rows != 2n or predicted != actual: {grid_bad}",
            os.0,
            os.1,
            grids.len()
        ),
    )
}

fn soundness() -> Vec<Outcome> {
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for f in 1..=5 {
        let u = Universe::numbered("r", 3 * f + 1).unwrap();
        let fp = FailProneSystem::threshold(u, f).unwrap();
        let q = canonical_bqs(&fp).unwrap();
        if verify_bqs(&q, &fp).is_err() {
            bad.push(f);
        }
    }
    out.push(outcome(
        "4a",
        bad.is_empty(),
        format!("threshold BQS n=3f+1, f=1..5: violations at f={bad:?}"),
    ));

    let mut bad = Vec::new();
    let mut sizes = Vec::new();
    for k in 4..=7 {
        let mbf = Mbf::new(&layered_2l1c(k)).unwrap();
        let q = enumerate_minimal_quorums(&mbf, 64).unwrap();
        sizes.push(q.len());
        if let Err(v) = verify_bqs(&q, &CanonicalFailProne::new(&mbf, &q)) {
            bad.push(format!("k={k}: {}", v.describe(mbf.universe())));
        }
    }
    out.push(outcome(
        "4b",
        bad.is_empty(),
        format!("2L1C k=4..7 against canonical fail-prone systems ({sizes:?} minimal quorums): violations {bad:?}"),
    ));

    let layout = GridLayout::new(5, 4).unwrap();
    let u = layout.universe();
    let q = QuorumSystem::new(u.clone(), layout.quorums()).unwrap();
    let fp = AnySubset::new(u.clone(), layout.b());
    let verdict = match verify_bqs(&q, &fp) {
        Ok(()) => "ok".to_string(),
        Err(v) => v.describe(&u),
    };
    let (mut pairs, mut thin) = (0, 0);
    for &q1 in q.quorums() {
        for &q2 in q.quorums() {
            pairs += 1;
            if q1.intersection(q2).len() < layout.b() + 1 {
                thin += 1;
            }
        }
    }
    out.push(outcome(
        "4c",
        verdict == "ok" && thin == 0 && pairs >= 10_000,
        format!(
            "M-Grid k=5 b=4 against any 4 parties: verify_bqs {verdict}; |Q1 n Q2| < b+1 on {thin} of {pairs} quorum pairs"
        ),
    ));
    out
}

/// Runs configurations on all cores.
fn run_all(jobs: Vec<SimConfig>) -> Vec<(SimConfig, RunReport)> {
    let next = AtomicUsize::new(0);
    let results = Mutex::new(Vec::new());
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cfg) = jobs.get(i) else { break };
                let trace = run_simulation(cfg);
                let report = evaluate(cfg, &trace, &LivenessParams::new(cfg.variant, cfg.delta));
                results.lock().unwrap().push((i, cfg.clone(), report));
            });
        }
    });
    let mut r = results.into_inner().unwrap();
    r.sort_by_key(|x| x.0);
    r.into_iter().map(|(_, c, r)| (c, r)).collect()
}

struct System {
    checker: Arc<dyn QuorumChecker>,
    /// Fail-prone sets a seed may corrupt.
    fail_prone: Vec<PartySet>,
}

fn systems() -> Vec<System> {
    let doc = SpecDocument::from_formula(layered_2l1c(4));
    let mbf = doc.mbf();
    let q = enumerate_minimal_quorums(&mbf, 24).unwrap();
    let n = mbf.universe().len();
    let fp: Vec<PartySet> = q.quorums().iter().map(|s| s.complement(n)).collect();
    vec![
        System {
            checker: Arc::new(Counting::new(Universe::numbered("r", 4).unwrap(), 1)),
            fail_prone: (0..4).map(PartySet::singleton).collect(),
        },
        System {
            checker: Arc::from(doc.checker(Encoding::Mbf).unwrap()),
            fail_prone: fp.clone(),
        },
        System {
            checker: Arc::from(doc.checker(Encoding::Msp).unwrap()),
            fail_prone: fp,
        },
    ]
}

fn safety_jobs() -> Vec<SimConfig> {
    let behaviors = [
        Behavior::Equivocate,
        Behavior::VoteStuff,
        Behavior::InvalidQc,
        Behavior::Crash { at: 0 },
    ];
    let mut jobs = Vec::new();
    for sys in systems() {
        for variant in [Variant::Basic, Variant::Chained] {
            for b in behaviors {
                for seed in 0..100u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa17);
                    let bad = sys.fail_prone[rng.gen_range(0..sys.fail_prone.len())];
                    let behavior = match b {
                        Behavior::Crash { .. } => Behavior::Crash { at: rng.gen_range(0..400) },
                        other => other,
                    };
                    let mut cfg = SimConfig::new(variant, sys.checker.clone()).with_seed(seed);
                    for r in bad.iter() {
                        cfg.faults.insert(r, behavior);
                    }
                    cfg.gst = (seed % 4) * 150;
                    // a full leader rotation past eight faulty leaders at the capped timeout
                    cfg.horizon = if cfg.n() > 4 { 8000 } else { 3000 };
                    jobs.push(cfg);
                }
            }
        }
    }
    jobs
}

fn gst_crossing_jobs() -> Vec<SimConfig> {
    let path = format!("{}/../../configs/sim_gst_crossing.json", env!("CARGO_MANIFEST_DIR"));
    let exp = parse_experiment(&std::fs::read(path).unwrap()).unwrap();
    let mut jobs = Vec::new();
    for variant in [Variant::Basic, Variant::Chained] {
        for seed in exp.seed_range() {
            let mut cfg = exp.config_for(seed);
            cfg.variant = variant;
            jobs.push(cfg);
        }
    }
    let doc = SpecDocument::from_formula(layered_2l1c(4));
    let checker: Arc<dyn QuorumChecker> = Arc::from(doc.checker(Encoding::Mbf).unwrap());
    let u = doc.universe();
    let crashed = u.set_of(["B0", "B1", "A1", "B4"]).unwrap();
    let mute = u.set_of(["B5", "B6", "B9"]).unwrap();
    for variant in [Variant::Basic, Variant::Chained] {
        for seed in 0..20 {
            let mut cfg = SimConfig::new(variant, checker.clone()).with_seed(seed);
            for r in crashed.iter() {
                cfg.faults.insert(r, Behavior::Crash { at: 0 });
            }
            for r in mute.iter() {
                cfg.faults.insert(r, Behavior::MuteLeader);
            }
            cfg.gst = 800;
            cfg.horizon = 5000;
            jobs.push(cfg);
        }
    }
    jobs
}

fn consensus() -> Vec<Outcome> {
    let start = Instant::now();
    let results = run_all(safety_jobs());
    let elapsed = start.elapsed();
    let unsafe_runs = results.iter().filter(|(_, r)| r.safety.is_some()).count();
    let other = results
        .iter()
        .filter(|(_, r)| !r.invariants.is_empty() || !r.forged_accepts.is_empty())
        .count();
    let decided = results.iter().filter(|(_, r)| r.metrics.decisions > 0).count();
    if std::env::var_os("ACCEPTANCE_BREAKDOWN").is_some() {
        let mut groups: std::collections::BTreeMap<String, (usize, usize, usize)> = Default::default();
        for (cfg, r) in &results {
            let b = cfg.faults.values().next().map(|b| b.to_string()).unwrap_or_default();
            let key = format!("{} n={} {}", cfg.variant, cfg.n(), b.split('@').next().unwrap());
            let e = groups.entry(key).or_default();
            e.0 += 1;
            e.1 += usize::from(r.metrics.decisions == 0);
            e.2 += usize::from(matches!(r.liveness, LivenessVerdict::PremiseUnmet { .. }));
        }
        for (k, (n, none, unmet)) in groups {
            println!("  {k:<28} runs={n} undecided={none} premise_unmet={unmet}");
        }
    }
    let mut out = vec![outcome(
        "5",
        results.len() == 2400 && unsafe_runs == 0 && other == 0 && elapsed < SAFETY_BUDGET,
        format!(
            "safety: {} runs, conflicting decisions in {unsafe_runs}, invariant or forged-certificate failures in {other}, runs with decisions {decided}, {:.1}s (budget {}s)",
            results.len(),
            elapsed.as_secs_f64(),
            SAFETY_BUDGET.as_secs()
        ),
    )];

    let crossing = run_all(gst_crossing_jobs());
    let (mut windows, mut stalls, mut unmet) = (0, 0, 0);
    let mut first_stall = None;
    for (cfg, r) in results.iter().chain(&crossing) {
        match &r.liveness {
            LivenessVerdict::Ok { windows: w } => windows += w,
            LivenessVerdict::PremiseUnmet { .. } => unmet += 1,
            LivenessVerdict::Stall(s) => {
                stalls += s.len();
                first_stall.get_or_insert_with(|| format!("{cfg:?}: {}", s[0]));
            }
        }
    }
    let crossing_windows: usize = crossing
        .iter()
        .map(|(_, r)| match r.liveness {
            LivenessVerdict::Ok { windows } => windows,
            _ => 0,
        })
        .sum();
    out.push(outcome(
        "6",
        stalls == 0 && windows > 0 && crossing_windows > 0,
        format!(
            "liveness: {} runs ({} GST-crossing), {windows} held windows checked ({crossing_windows} GST-crossing), stalls={stalls}, premise never met in {unmet} runs{}",
            results.len() + crossing.len(),
            crossing.len(),
            first_stall.map(|s| format!("; first stall {s}")).unwrap_or_default()
        ),
    ));
    out
}

fn teeth() -> Outcome {
    let checker: Arc<dyn QuorumChecker> = Arc::new(Counting::new(Universe::numbered("r", 4).unwrap(), 1));
    let jobs: Vec<SimConfig> = (0..20)
        .map(|seed| {
            let mut cfg = SimConfig::new(Variant::Basic, checker.clone()).with_seed(seed);
            cfg.faults.insert(1, Behavior::Equivocate);
            cfg.faults.insert(2, Behavior::Equivocate);
            cfg.horizon = 2000;
            cfg
        })
        .collect();
    let found = run_all(jobs).iter().filter(|(_, r)| r.safety.is_some()).count();
    outcome(
        "7",
        found > 0,
        format!("checker teeth: counting n=4 f=1 with 2 equivocators, conflicting decisions found in {found}/20 runs"),
    )
}

fn lup_equivalence() -> Outcome {
    let mut msps = vec![
        ("threshold 3/7", vandermonde_msp(7, 3, (0..7).map(|i| format!("p{i}")).collect()).unwrap()),
        ("threshold 7/10", vandermonde_msp(10, 7, (0..10).map(|i| format!("p{i}")).collect()).unwrap()),
        ("threshold 13/19", vandermonde_msp(19, 13, (0..19).map(|i| format!("p{i}")).collect()).unwrap()),
    ];
    for k in [4, 5, 7] {
        msps.push(("2L1C", build_msp(&layered_2l1c(k)).unwrap()));
    }
    for (k, b) in [(3, 2), (5, 4), (6, 3)] {
        msps.push(("M-Grid", mgrid(GridLayout::new(k, b).unwrap()).unwrap().msp));
    }
    let per = 100_000usize.div_ceil(msps.len());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let (mut pairs, mut disagree, mut accepted) = (0, 0, 0);
    for (_, msp) in &msps {
        let lup = LupMsp::new(msp.clone()).unwrap();
        for i in 0..per {
            // alternate uniform subsets with dense ones so both verdicts occur
            let mut s = random_subset(&mut rng, msp.universe());
            if i % 2 == 1 {
                s = s.union(random_subset(&mut rng, msp.universe()));
            }
            let plain = msp.accepts(s);
            let fast = lup.accepts_lup(s);
            pairs += 1;
            accepted += usize::from(plain.accepted);
            if plain.accepted != fast.accepted || plain.redundant != fast.redundant {
                disagree += 1;
            }
        }
    }
    outcome(
        "8",
        disagree == 0 && pairs >= 100_000,
        format!(
            "LUP vs plain acceptance: {pairs} pairs over {} MSPs (threshold, 2L1C, M-Grid), {accepted} accepted, disagreements={disagree}",
            msps.len()
        ),
    )
}

fn bench_ordering() -> Outcome {
    let mut bad = Vec::new();
    let mut rows = Vec::new();
    for k in 4..=10 {
        let doc = SpecDocument::from_formula(layered_2l1c(k));
        let mbf = microbench(&doc, Encoding::Mbf, 10_000, SEED).unwrap();
        let msp = microbench(&doc, Encoding::Msp, 10_000, SEED).unwrap();
        rows.push(format!(
            "k={k} {:.0}/{:.0}ns {}/{}B",
            mbf.median_ns,
            msp.median_ns,
            mbf.memory_bytes(),
            msp.memory_bytes()
        ));
        if mbf.median_ns > msp.median_ns || mbf.memory_bytes() > msp.memory_bytes() {
            bad.push(k);
        }
    }
    outcome(
        "9",
        bad.is_empty(),
        format!("MBF vs MSP median check time and memory, 10000 trials: {}; ordering broken at k={bad:?}", rows.join(", ")),
    )
}

fn main() {
    let mut all = vec![equivalence(), quorum_count(), dimensions()];
    all.extend(soundness());
    all.extend(consensus());
    all.push(teeth());
    all.push(lup_equivalence());
    all.push(bench_ordering());
    let failed: BTreeSet<&str> = all.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    let unexpected: Vec<&str> = failed.iter().copied().filter(|id| !KNOWN_FAILING.contains(id)).collect();
    println!(
        "acceptance passed={} failed={} failing={:?} unexpected={:?}",
        all.len() - failed.len(),
        failed.len(),
        failed,
        unexpected
    );
    for o in all.iter().filter(|o| unexpected.contains(&o.id)) {
        eprintln!("unexpected failure {}: {}", o.id, o.detail);
    }
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
