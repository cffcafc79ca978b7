//! Quorum-check microbenchmarks.

use std::hint::black_box;
use std::time::Instant;

use genquorum_core::random::random_subset;
use genquorum_core::{emit_document, ConfigError, Encoding, PartySet, SpecDocument};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Checks run and discarded before timing.
pub const WARMUP: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub encoding: Encoding,
    pub trials: usize,
    pub seed: u64,
    /// Subsets found to contain a quorum.
    pub quorums: usize,
    pub median_ns: f64,
    pub mean_ns: f64,
    /// Live heap footprint of the structure.
    pub heap_bytes: usize,
    /// Size of the structure's compact text serialization.
    pub serialized_bytes: usize,
}

impl BenchReport {
    pub fn memory_bytes(&self) -> usize {
        self.heap_bytes + self.serialized_bytes
    }
}

/// The uniformly random subsets a benchmark with this seed checks.
pub fn subsets(doc: &SpecDocument, trials: usize, seed: u64) -> Vec<PartySet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = doc.universe();
    (0..trials).map(|_| random_subset(&mut rng, &u)).collect()
}

fn serialized_bytes(doc: &SpecDocument, encoding: Encoding) -> Result<usize, ConfigError> {
    Ok(match encoding {
        Encoding::Mbf | Encoding::Counting => {
            let value: serde_json::Value = serde_json::from_str(&emit_document(doc)).expect("emitted documents parse");
            value.to_string().len()
        }
        Encoding::Msp | Encoding::MspLup => doc.msp()?.to_dump().len(),
    })
}

pub fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Times `trials` checks of the same random subsets in one encoding.
pub fn microbench(doc: &SpecDocument, encoding: Encoding, trials: usize, seed: u64) -> Result<BenchReport, ConfigError> {
    let trials = trials.max(1);
    let checker = doc.checker(encoding)?;
    let sets = subsets(doc, trials, seed);
    for i in 0..WARMUP {
        black_box(checker.is_quorum(black_box(sets[i % trials])));
    }
    let mut times = Vec::with_capacity(trials);
    let mut quorums = 0;
    for &s in &sets {
        let start = Instant::now();
        let q = black_box(checker.is_quorum(black_box(s)));
        times.push(start.elapsed().as_nanos() as f64);
        quorums += usize::from(q);
    }
    let mean_ns = times.iter().sum::<f64>() / times.len() as f64;
    times.sort_by(f64::total_cmp);
    Ok(BenchReport {
        encoding,
        trials,
        seed,
        quorums,
        median_ns: median(&times),
        mean_ns,
        heap_bytes: checker.heap_bytes(),
        serialized_bytes: serialized_bytes(doc, encoding)?,
    })
}
