//! Command-line front end: spec checks, MSP dumps, quorum enumeration,
//! microbenchmarks and simulations.

pub mod bench;
pub mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use genquorum_consensus::{parse_experiment_with, run_seed, Experiment, LivenessVerdict, RunReport};
use genquorum_core::bqs::DEFAULT_ENUMERATION_BOUND;
use genquorum_core::{
    canonical_q3_holds, enumerate_minimal_quorums, expand_quorums, parse_document, predicted_dims, verify_bqs,
    BqsError, CanonicalFailProne, ConfigError, Encoding, LupMsp, PartySet, SpecDocument,
};
use thiserror::Error;

use crate::bench::{microbench, BenchReport};
use crate::table::Table;

#[derive(Parser, Debug)]
#[command(name = "genquorum", version, about = "Generalized Byzantine quorum systems and HotStuff simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide whether a set of parties contains a quorum
    Check {
        spec: PathBuf,
        /// Parties of the subset, separated by spaces or commas
        parties: Vec<String>,
        #[arg(long, value_parser = parse_encoding, default_value = "mbf")]
        encoding: Encoding,
    },
    /// Time quorum checks on uniformly random subsets
    Microbench {
        spec: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Benchmark one encoding instead of every applicable one
        #[arg(long, value_parser = parse_encoding)]
        encoding: Option<Encoding>,
        /// Also write the report to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation experiment and check safety, liveness and invariants
    Simulate {
        config: PathBuf,
        /// First seed, replacing the configured one
        #[arg(long)]
        seed: Option<u64>,
        /// Number of seeds, replacing the configured count
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_parser = parse_encoding)]
        encoding: Option<Encoding>,
        /// Write every trace to this file
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the MSP of a spec and print its dump and dimensions
    BuildMsp {
        spec: PathBuf,
        /// Write the dump to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the minimal quorums of a spec
    Enumerate {
        spec: PathBuf,
        /// Largest universe accepted
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BOUND)]
        bound: usize,
        /// Write the quorum list to this file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_encoding(s: &str) -> Result<Encoding, String> {
    s.parse()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error("unknown party `{0}`")]
    UnknownParty(String),
    #[error("{0}")]
    Enumeration(#[from] BqsError),
    #[error("{0}")]
    Output(#[from] io::Error),
}

/// How a command that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A violation or a negative verdict.
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Failed => 1,
        }
    }
}

/// Exit code for errors.
pub const USAGE_EXIT: i32 = 2;

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_spec(path: &Path) -> Result<SpecDocument, CliError> {
    parse_document(&read(path)?).map_err(|source| CliError::Config {
        path: path.to_owned(),
        source,
    })
}

fn config_err(path: &Path) -> impl Fn(ConfigError) -> CliError + '_ {
    move |source| CliError::Config {
        path: path.to_owned(),
        source,
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Status, CliError> {
    match &cli.command {
        Command::Check {
            spec,
            parties,
            encoding,
        } => check(spec, parties, *encoding, out),
        Command::Microbench {
            spec,
            trials,
            seed,
            encoding,
            out: file,
        } => bench_cmd(spec, *trials, *seed, *encoding, file.as_deref(), out),
        Command::Simulate {
            config,
            seed,
            trials,
            encoding,
            out: file,
        } => simulate(config, *seed, *trials, *encoding, file.as_deref(), out),
        Command::BuildMsp { spec, out: file } => build_msp(spec, file.as_deref(), out),
        Command::Enumerate { spec, bound, out: file } => enumerate(spec, *bound, file.as_deref(), out),
    }
}

fn names(doc: &SpecDocument, set: PartySet) -> String {
    let u = doc.universe();
    if set.is_empty() {
        "-".into()
    } else {
        u.names(set).join(",")
    }
}

fn check(spec: &Path, parties: &[String], encoding: Encoding, out: &mut dyn Write) -> Result<Status, CliError> {
    let doc = load_spec(spec)?;
    let u = doc.universe();
    let mut set = PartySet::EMPTY;
    for name in parties.iter().flat_map(|p| p.split(',')).map(str::trim).filter(|p| !p.is_empty()) {
        set.insert(u.index_of(name).ok_or_else(|| CliError::UnknownParty(name.to_owned()))?);
    }
    let checker = doc.checker(encoding).map_err(config_err(spec))?;
    let quorum = checker.is_quorum(set);
    writeln!(out, "{}", if quorum { "quorum" } else { "not-quorum" })?;
    writeln!(out, "encoding={encoding}")?;
    writeln!(out, "subset={}", names(&doc, set))?;
    writeln!(out, "quorum={quorum}")?;
    let witness = match encoding {
        Encoding::Msp => Some(doc.msp().map_err(config_err(spec))?.accepts(set)),
        Encoding::MspLup => {
            let msp = doc.msp().map_err(config_err(spec))?;
            let lup = LupMsp::new(msp).map_err(|e| config_err(spec)(ConfigError::Construction(e.to_string())))?;
            Some(lup.accepts_lup(set))
        }
        _ => None,
    };
    if let Some(w) = witness {
        writeln!(out, "redundant={}", names(&doc, w.redundant))?;
        writeln!(out, "pivotal={}", names(&doc, set.difference(w.redundant)))?;
    }
    Ok(if quorum { Status::Ok } else { Status::Failed })
}

fn applicable(doc: &SpecDocument) -> Vec<Encoding> {
    Encoding::ALL
        .into_iter()
        .filter(|&e| e != Encoding::Counting || doc.checker(e).is_ok())
        .collect()
}

fn bench_table(reports: &[BenchReport]) -> String {
    let mut t = Table::new([
        "encoding",
        "trials",
        "quorums",
        "median_ns",
        "mean_ns",
        "heap_bytes",
        "serialized_bytes",
        "memory_bytes",
    ]);
    for r in reports {
        t.row([
            r.encoding.to_string(),
            r.trials.to_string(),
            r.quorums.to_string(),
            format!("{:.0}", r.median_ns),
            format!("{:.1}", r.mean_ns),
            r.heap_bytes.to_string(),
            r.serialized_bytes.to_string(),
            r.memory_bytes().to_string(),
        ]);
    }
    let mut s = t.to_string();
    for r in reports {
        let e = r.encoding;
        s.push_str(&format!(
            "{e}.median_ns={:.0} {e}.mean_ns={:.1} {e}.memory_bytes={} {e}.quorums={}\n",
            r.median_ns,
            r.mean_ns,
            r.memory_bytes(),
            r.quorums
        ));
    }
    s
}

fn bench_cmd(
    spec: &Path,
    trials: usize,
    seed: u64,
    encoding: Option<Encoding>,
    file: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let doc = load_spec(spec)?;
    let encodings = match encoding {
        Some(e) => vec![e],
        None => applicable(&doc),
    };
    let mut reports = Vec::new();
    for e in encodings {
        reports.push(microbench(&doc, e, trials, seed).map_err(config_err(spec))?);
    }
    let mut text = format!("parties={} trials={} seed={seed} warmup={}\n", doc.universe().len(), trials.max(1), bench::WARMUP);
    text.push_str(&bench_table(&reports));
    out.write_all(text.as_bytes())?;
    if let Some(f) = file {
        write_file(f, &text)?;
    }
    Ok(Status::Ok)
}

fn liveness_cell(v: &LivenessVerdict) -> String {
    match v {
        LivenessVerdict::Ok { windows } => format!("ok({windows})"),
        LivenessVerdict::PremiseUnmet { .. } => "premise-unmet".into(),
        LivenessVerdict::Stall(s) => format!("STALL({})", s.len()),
    }
}

/// Runs every seed of an experiment on all cores; reports come back in seed
/// order, with traces when `keep_traces` is set.
pub fn run_parallel(exp: &Experiment, keep_traces: bool) -> Vec<(RunReport, Option<String>)> {
    let seeds: Vec<u64> = exp.seed_range().collect();
    let next = AtomicU64::new(0);
    let results = Mutex::new(Vec::with_capacity(seeds.len()));
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(seeds.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed) as usize;
                let Some(&seed) = seeds.get(i) else { break };
                let (trace, report) = run_seed(exp, seed);
                let text = keep_traces.then(|| trace.to_text());
                results.lock().expect("no worker panics").push((i, report, text));
            });
        }
    });
    let mut results = results.into_inner().expect("no worker panics");
    results.sort_by_key(|r| r.0);
    results.into_iter().map(|(_, r, t)| (r, t)).collect()
}

fn simulate(
    config: &Path,
    seed: Option<u64>,
    trials: Option<u64>,
    encoding: Option<Encoding>,
    file: Option<&Path>,
    out: &mut dyn Write,
) -> Result<Status, CliError> {
    let mut exp = parse_experiment_with(&read(config)?, encoding).map_err(config_err(config))?;
    if let Some(s) = seed {
        exp.sim.seed = s;
    }
    if let Some(t) = trials {
        exp.seeds = t.max(1);
    }
    let results = run_parallel(&exp, file.is_some());
    let faulty: Vec<String> = exp
        .sim
        .faults
        .iter()
        .map(|(r, b)| format!("{}:{b}", exp.universe.party(*r)))
        .collect();
    writeln!(
        out,
        "variant={} encoding={} n={} faulty={} seeds={} gst={} delta={} horizon={}",
        exp.sim.variant,
        exp.encoding,
        exp.sim.n(),
        if faulty.is_empty() { "-".into() } else { faulty.join(",") },
        exp.seeds,
        exp.sim.gst,
        exp.sim.delta,
        exp.sim.horizon
    )?;
    let mut t = Table::new([
        "seed",
        "safety",
        "liveness",
        "invariants",
        "forged",
        "decisions",
        "views",
        "messages",
    ]);
    let (mut violations, mut unsafe_runs, mut stalls, mut unmet, mut windows, mut bad_inv, mut forged, mut decisions) =
        (0, 0, 0, 0, 0, 0, 0, 0);
    let mut details = Vec::new();
    for (r, _) in &results {
        t.row([
            r.seed.to_string(),
            if r.safety.is_some() { "VIOLATION".into() } else { "ok".into() },
            liveness_cell(&r.liveness),
            r.invariants.len().to_string(),
            r.forged_accepts.len().to_string(),
            r.metrics.decisions.to_string(),
            r.metrics.views.to_string(),
            r.metrics.messages.to_string(),
        ]);
        violations += usize::from(r.is_violation());
        decisions += r.metrics.decisions;
        bad_inv += r.invariants.len();
        forged += r.forged_accepts.len();
        match &r.liveness {
            LivenessVerdict::Ok { windows: w } => windows += w,
            LivenessVerdict::PremiseUnmet { .. } => unmet += 1,
            LivenessVerdict::Stall(s) => stalls += s.len(),
        }
        if let Some(v) = &r.safety {
            unsafe_runs += 1;
            details.push(format!("seed {}: {v}", r.seed));
            details.push(format!("  chain A: {}", chain(&v.w)));
            details.push(format!("  chain B: {}", chain(&v.b)));
        }
        if let LivenessVerdict::Stall(s) = &r.liveness {
            details.extend(s.iter().map(|st| format!("seed {}: {st}", r.seed)));
        }
        details.extend(r.invariants.iter().map(|p| format!("seed {}: invariant: {p}", r.seed)));
        details.extend(r.forged_accepts.iter().map(|p| format!("seed {}: forged certificate accepted: {p}", r.seed)));
    }
    write!(out, "{t}")?;
    for d in &details {
        writeln!(out, "{d}")?;
    }
    writeln!(
        out,
        "runs={} violations={violations} safety_violations={unsafe_runs} stalls={stalls} liveness_windows={windows} premise_unmet={unmet} invariant_violations={bad_inv} forged_accepts={forged} decisions={decisions}",
        results.len()
    )?;
    let status = if violations == 0 { Status::Ok } else { Status::Failed };
    writeln!(out, "result={}", if status == Status::Ok { "ok" } else { "violation" })?;
    if let Some(f) = file {
        let mut text = String::new();
        for (r, trace) in &results {
            text.push_str(&format!("# seed={}\n", r.seed));
            text.push_str(trace.as_deref().unwrap_or_default());
        }
        write_file(f, &text)?;
    }
    Ok(status)
}

/// Node ids from `node` back to genesis.
fn chain(node: &std::sync::Arc<genquorum_consensus::BlockNode>) -> String {
    let mut ids = Vec::new();
    let mut cur = Some(node.clone());
    while let Some(n) = cur {
        ids.push(format!("{}@{}", n.id.short(), n.height));
        cur = n.parent.clone();
    }
    ids.join(" <- ")
}

fn build_msp(spec: &Path, file: Option<&Path>, out: &mut dyn Write) -> Result<Status, CliError> {
    let doc = load_spec(spec)?;
    let msp = doc.msp().map_err(config_err(spec))?;
    let (m, d) = msp.dims();
    let (pm, pd) = predicted_dims(&doc.party_formula());
    match file {
        Some(f) => write_file(f, &msp.to_dump())?,
        None => out.write_all(msp.to_dump().as_bytes())?,
    }
    let mut t = Table::new(["", "rows", "cols"]);
    t.row(["actual".to_string(), m.to_string(), d.to_string()]);
    t.row(["predicted".to_string(), pm.to_string(), pd.to_string()]);
    write!(out, "{t}")?;
    writeln!(
        out,
        "rows={m} cols={d} dims={m}x{d} predicted={pm}x{pd} match={} parties={}",
        (m, d) == (pm, pd),
        msp.universe().len()
    )?;
    Ok(Status::Ok)
}

fn enumerate(spec: &Path, bound: usize, file: Option<&Path>, out: &mut dyn Write) -> Result<Status, CliError> {
    let doc = load_spec(spec)?;
    let mbf = doc.mbf();
    let terms = expand_quorums(&mbf, bound)?.len();
    let q = enumerate_minimal_quorums(&mbf, bound)?;
    let u = doc.universe();
    let mut t = Table::new(["#", "size", "quorum"]);
    for (i, s) in q.quorums().iter().enumerate() {
        t.row([i.to_string(), s.len().to_string(), u.display(*s)]);
    }
    match file {
        Some(f) => write_file(f, &t.to_string())?,
        None => write!(out, "{t}")?,
    }
    let sizes = q.quorums().iter().map(|s| s.len());
    let fp = CanonicalFailProne::new(&mbf, &q);
    let bqs = match verify_bqs(&q, &fp) {
        Ok(()) => "ok".to_string(),
        Err(v) => v.describe(&u).replace(' ', "_"),
    };
    writeln!(
        out,
        "parties={} terms={terms} minimal={} min_size={} max_size={} q3={} bqs={bqs}",
        u.len(),
        q.len(),
        sizes.clone().min().unwrap_or(0),
        sizes.max().unwrap_or(0),
        canonical_q3_holds(&mbf)
    )?;
    Ok(Status::Ok)
}
