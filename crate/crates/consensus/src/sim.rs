//! Seeded discrete-event simulation under partial synchrony.
//!
//! Before GST a message takes a uniform delay in `[1, max_delay]` ticks but
//! arrives by `GST + delta`; from GST on, delays are uniform in
//! `[1, delta]`. Messages to self arrive immediately. Events at equal times
//! are ordered by sender, then by sequence number.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use genquorum_core::QuorumChecker;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basic::BasicReplica;
use crate::chained::ChainedReplica;
use crate::crypto::KeyRing;
use crate::fault::{Behavior, Collusion, FaultyReplica};
use crate::replica::{EventKind, Input, Pacemaker, Replica, ReplicaConfig};
use crate::trace::{Decision, Metrics, SimTrace, TraceEvent};
use crate::types::{ReplicaId, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Basic,
    Chained,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Basic => "basic",
            Variant::Chained => "chained",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basic" => Ok(Variant::Basic),
            "chained" => Ok(Variant::Chained),
            _ => Err(format!("unknown variant {s:?}")),
        }
    }
}

#[derive(Clone)]
pub struct SimConfig {
    pub variant: Variant,
    pub checker: Arc<dyn QuorumChecker>,
    pub faults: BTreeMap<ReplicaId, Behavior>,
    pub seed: u64,
    pub gst: Time,
    pub delta: Time,
    pub max_delay: Time,
    pub horizon: Time,
    pub pacemaker: Pacemaker,
    /// Stop once every correct replica has this many decisions.
    pub stop_after: Option<usize>,
}

impl SimConfig {
    /// Defaults: delta 10, pre-GST delays up to 100, timeouts from 12 delta
    /// capped at 48 delta.
    pub fn new(variant: Variant, checker: Arc<dyn QuorumChecker>) -> Self {
        let delta = 10;
        SimConfig {
            variant,
            checker,
            faults: BTreeMap::new(),
            seed: 0,
            gst: 0,
            delta,
            max_delay: 100,
            horizon: 5000,
            pacemaker: Pacemaker {
                base: 12 * delta,
                max: 48 * delta,
            },
            stop_after: None,
        }
    }

    pub fn n(&self) -> usize {
        self.checker.universe().len()
    }

    pub fn faulty(&self) -> BTreeSet<ReplicaId> {
        self.faults.keys().copied().collect()
    }

    pub fn with_fault(mut self, replica: ReplicaId, behavior: Behavior) -> Self {
        self.faults.insert(replica, behavior);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl fmt::Debug for SimConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SimConfig")
            .field("variant", &self.variant)
            .field("n", &self.n())
            .field("faults", &self.faults)
            .field("seed", &self.seed)
            .field("gst", &self.gst)
            .field("delta", &self.delta)
            .field("horizon", &self.horizon)
            .finish()
    }
}

/// A correct replica of the given variant.
pub fn correct_replica(variant: Variant, cfg: ReplicaConfig) -> Box<dyn Replica> {
    match variant {
        Variant::Basic => Box::new(BasicReplica::new(cfg)),
        Variant::Chained => Box::new(ChainedReplica::new(cfg)),
    }
}

pub fn run_simulation(cfg: &SimConfig) -> SimTrace {
    let n = cfg.n();
    let keys = KeyRing::new(n, cfg.seed);
    let faulty = cfg.faulty();
    let collusion = Collusion {
        n,
        keys: keys.clone(),
        faulty: faulty.clone(),
        checker: cfg.checker.clone(),
    };
    let mut replicas: Vec<Box<dyn Replica>> = (0..n)
        .map(|id| {
            let rc = ReplicaConfig::new(id, cfg.checker.clone(), keys.clone(), cfg.pacemaker);
            let inner = correct_replica(cfg.variant, rc);
            match cfg.faults.get(&id) {
                Some(&b) => Box::new(FaultyReplica::new(inner, b, collusion.clone())) as Box<dyn Replica>,
                None => inner,
            }
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut queue: BTreeMap<(Time, ReplicaId, u64), (ReplicaId, Input)> = BTreeMap::new();
    let mut seq = 0u64;
    for id in 0..n {
        queue.insert((0, id, seq), (id, Input::Start));
        seq += 1;
    }
    let mut trace = SimTrace {
        n,
        faulty: faulty.clone(),
        gst: cfg.gst,
        delta: cfg.delta,
        decisions: vec![Vec::new(); n],
        ..SimTrace::default()
    };
    let mut metrics = Metrics::default();
    let delta = cfg.delta.max(1);

    while let Some(((time, _, _), (to, input))) = queue.pop_first() {
        if time > cfg.horizon {
            trace.truncated = true;
            break;
        }
        trace.end = time;
        let out = replicas[to].step(input, time);
        let correct = !faulty.contains(&to);
        let mut decide_views = Vec::new();
        for e in out.events {
            if e.kind == EventKind::Decide {
                decide_views.push(e.view);
            }
            if correct && e.kind == EventKind::Enter {
                metrics.views = metrics.views.max(e.view);
            }
            trace.events.push(TraceEvent::new(time, to, e.kind, e.view, e.node, e.detail));
        }
        for (i, node) in out.decisions.into_iter().enumerate() {
            if correct {
                metrics.decisions += 1;
            }
            let view = decide_views.get(i).copied().unwrap_or_else(|| replicas[to].view());
            trace.decisions[to].push(Decision { time, view, node });
        }
        for (dest, msg) in out.sends {
            let at = if dest == to {
                time
            } else if time >= cfg.gst {
                time + rng.gen_range(1..=delta)
            } else {
                let d = rng.gen_range(1..=cfg.max_delay.max(1));
                (time + d).min(cfg.gst + delta).max(time + 1)
            };
            metrics.messages += 1;
            queue.insert((at, to, seq), (dest, Input::Message { from: to, msg }));
            seq += 1;
        }
        for (view, after) in out.timers {
            queue.insert((time + after, to, seq), (to, Input::Timeout { view }));
            seq += 1;
        }
        if let Some(k) = cfg.stop_after {
            if trace.correct().all(|r| trace.decisions[r].len() >= k) {
                break;
            }
        }
    }
    trace.metrics = metrics;
    trace
}
