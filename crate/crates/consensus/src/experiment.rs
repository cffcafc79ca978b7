//! Experiment files: a quorum document plus a `"simulation"` section.
//!
//! ```json
//! {
//!   "v": 1,
//!   "quorum": { "threshold": 3, "of": ["r0", "r1", "r2", "r3"] },
//!   "simulation": {
//!     "variant": "basic", "encoding": "mbf",
//!     "seed": 0, "seeds": 10, "gst": 0, "delta": 10, "horizon": 4000,
//!     "faults": [{ "replica": "r1", "behavior": "crash", "at": 50 }]
//!   }
//! }
//! ```
//!
//! `"counting": {"n": 4, "f": 1}` may replace `quorum`; replicas are then
//! named `r0..r{n-1}`.

use std::collections::BTreeSet;
use std::sync::Arc;

use genquorum_core::config::{document_from_value, parse_json};
use genquorum_core::{ConfigError, Counting, Encoding, QuorumChecker, Universe};
use serde_json::{Map, Value};

use crate::check::{
    accepted_from, check_invariants, check_liveness, check_safety, LivenessParams, LivenessVerdict,
    SafetyViolation,
};
use crate::fault::Behavior;
use crate::replica::Pacemaker;
use crate::sim::{run_simulation, SimConfig, Variant};
use crate::trace::{Metrics, SimTrace};
use crate::types::ReplicaId;

#[derive(Debug, Clone)]
pub struct Experiment {
    pub universe: Universe,
    pub encoding: Encoding,
    /// Configuration of the first seed.
    pub sim: SimConfig,
    pub seeds: u64,
    pub liveness: LivenessParams,
}

impl Experiment {
    pub fn seed_range(&self) -> std::ops::Range<u64> {
        self.sim.seed..self.sim.seed + self.seeds
    }

    pub fn config_for(&self, seed: u64) -> SimConfig {
        self.sim.clone().with_seed(seed)
    }
}

/// Verdicts of one seeded run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub safety: Option<SafetyViolation>,
    pub liveness: LivenessVerdict,
    pub invariants: Vec<String>,
    /// Certificate-bearing messages from invalid-qc replicas that correct
    /// replicas accepted.
    pub forged_accepts: Vec<String>,
    pub metrics: Metrics,
    pub truncated: bool,
}

impl RunReport {
    pub fn is_violation(&self) -> bool {
        self.safety.is_some()
            || self.liveness.is_violation()
            || !self.invariants.is_empty()
            || !self.forged_accepts.is_empty()
    }
}

/// Runs every check on a finished trace.
pub fn evaluate(cfg: &SimConfig, trace: &SimTrace, liveness: &LivenessParams) -> RunReport {
    let forgers: BTreeSet<ReplicaId> = cfg
        .faults
        .iter()
        .filter(|(_, b)| **b == Behavior::InvalidQc)
        .map(|(r, _)| *r)
        .collect();
    RunReport {
        seed: cfg.seed,
        safety: check_safety(trace).err(),
        liveness: check_liveness(trace, liveness),
        invariants: check_invariants(trace),
        forged_accepts: accepted_from(trace, &forgers),
        metrics: trace.metrics,
        truncated: trace.truncated,
    }
}

pub fn run_seed(exp: &Experiment, seed: u64) -> (SimTrace, RunReport) {
    let cfg = exp.config_for(seed);
    let trace = run_simulation(&cfg);
    let report = evaluate(&cfg, &trace, &exp.liveness);
    (trace, report)
}

pub fn run_experiment(exp: &Experiment) -> Vec<RunReport> {
    exp.seed_range().map(|s| run_seed(exp, s).1).collect()
}

fn schema(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Schema {
        path: path.to_owned(),
        message: message.into(),
    }
}

fn uint(obj: &Map<String, Value>, key: &str, path: &str, default: u64) -> Result<u64, ConfigError> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| schema(&format!("{path}.{key}"), "expected a non-negative integer")),
    }
}

fn string<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<Option<&'a str>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(schema(&format!("{path}.{key}"), "expected a string")),
    }
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), ConfigError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ConfigError::UnknownKey {
            path: path.to_owned(),
            key: k.clone(),
        }),
        None => Ok(()),
    }
}

const SIM_KEYS: &[&str] = &[
    "variant",
    "encoding",
    "seed",
    "seeds",
    "gst",
    "delta",
    "max_delay",
    "horizon",
    "timeout",
    "max_timeout",
    "t_f",
    "window",
    "stop_after",
    "faults",
];

pub fn parse_experiment(text: &[u8]) -> Result<Experiment, ConfigError> {
    parse_experiment_with(text, None)
}

/// Parses an experiment, with `encoding` replacing the configured one.
pub fn parse_experiment_with(text: &[u8], encoding: Option<Encoding>) -> Result<Experiment, ConfigError> {
    let value = parse_json(text)?;
    let Value::Object(top) = &value else {
        return Err(schema("$", "expected an object"));
    };
    let Some(Value::Object(sim)) = top.get("simulation") else {
        return Err(schema("$.simulation", "missing or not an object"));
    };
    check_keys(sim, "$.simulation", SIM_KEYS)?;
    let encoding = match (encoding, string(sim, "encoding", "$.simulation")?) {
        (Some(e), _) => Some(e),
        (None, None) => None,
        (None, Some(s)) => Some(s.parse::<Encoding>().map_err(|e| schema("$.simulation.encoding", e))?),
    };
    let (universe, encoding, checker): (Universe, Encoding, Arc<dyn QuorumChecker>) =
        if let Some(c) = top.get("counting") {
            check_keys(top, "$", &["v", "counting", "simulation"])?;
            let Value::Object(c) = c else {
                return Err(schema("$.counting", "expected an object"));
            };
            check_keys(c, "$.counting", &["n", "f"])?;
            let n = uint(c, "n", "$.counting", 0)? as usize;
            let f = uint(c, "f", "$.counting", 0)? as usize;
            if n == 0 || 3 * f >= n {
                return Err(schema("$.counting", format!("need n > 3f and n >= 1, got n={n} f={f}")));
            }
            if encoding.is_some_and(|e| e != Encoding::Counting) {
                return Err(schema("$.simulation.encoding", "a counting system only has the counting encoding"));
            }
            let u = Universe::numbered("r", n).map_err(|e| schema("$.counting.n", e.to_string()))?;
            (u.clone(), Encoding::Counting, Arc::new(Counting::new(u, f)))
        } else {
            let doc = document_from_value(&value, &["simulation"])?;
            let enc = encoding.unwrap_or(Encoding::Mbf);
            let checker: Arc<dyn QuorumChecker> = Arc::from(doc.checker(enc)?);
            (doc.universe(), enc, checker)
        };

    let path = "$.simulation";
    let variant = match string(sim, "variant", path)? {
        None => Variant::Basic,
        Some(s) => s.parse().map_err(|e: String| schema("$.simulation.variant", e))?,
    };
    let mut cfg = SimConfig::new(variant, checker);
    cfg.seed = uint(sim, "seed", path, 0)?;
    cfg.gst = uint(sim, "gst", path, 0)?;
    cfg.delta = uint(sim, "delta", path, cfg.delta)?.max(1);
    cfg.max_delay = uint(sim, "max_delay", path, cfg.max_delay)?.max(1);
    cfg.horizon = uint(sim, "horizon", path, cfg.horizon)?;
    let base = uint(sim, "timeout", path, 12 * cfg.delta)?.max(1);
    let max = uint(sim, "max_timeout", path, 4 * base)?.max(base);
    cfg.pacemaker = Pacemaker { base, max };
    cfg.stop_after = match sim.get("stop_after") {
        None => None,
        Some(_) => Some(uint(sim, "stop_after", path, 0)? as usize),
    };
    let seeds = uint(sim, "seeds", path, 1)?.max(1);
    let mut liveness = LivenessParams::new(variant, cfg.delta);
    liveness.t_f = uint(sim, "t_f", path, liveness.t_f)?;
    liveness.window = uint(sim, "window", path, liveness.window)?.max(1);

    if let Some(faults) = sim.get("faults") {
        let Value::Array(items) = faults else {
            return Err(schema("$.simulation.faults", "expected an array"));
        };
        for (i, item) in items.iter().enumerate() {
            let fp = format!("$.simulation.faults[{i}]");
            let Value::Object(obj) = item else {
                return Err(schema(&fp, "expected an object"));
            };
            check_keys(obj, &fp, &["replica", "behavior", "at"])?;
            let name = string(obj, "replica", &fp)?.ok_or_else(|| schema(&fp, "missing `replica`"))?;
            let id = universe
                .index_of(name)
                .ok_or_else(|| schema(&format!("{fp}.replica"), format!("unknown replica `{name}`")))?;
            let kind = string(obj, "behavior", &fp)?.ok_or_else(|| schema(&fp, "missing `behavior`"))?;
            let mut behavior: Behavior = kind.parse().map_err(|e: String| schema(&format!("{fp}.behavior"), e))?;
            if let Behavior::Crash { at } = &mut behavior {
                *at = uint(obj, "at", &fp, *at)?;
            } else if obj.contains_key("at") {
                return Err(schema(&format!("{fp}.at"), "only crash faults take a time"));
            }
            if cfg.faults.insert(id, behavior).is_some() {
                return Err(schema(&format!("{fp}.replica"), format!("replica `{name}` listed twice")));
            }
        }
    }
    Ok(Experiment {
        universe,
        encoding,
        sim: cfg,
        seeds,
        liveness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting_experiment() {
        let exp = parse_experiment(
            br#"{"counting":{"n":4,"f":1},"simulation":{"variant":"chained","seeds":3,
                "faults":[{"replica":"r2","behavior":"crash","at":30},{"replica":"r3","behavior":"vote-stuff"}]}}"#,
        )
        .unwrap();
        assert_eq!(exp.sim.variant, Variant::Chained);
        assert_eq!(exp.seeds, 3);
        assert_eq!(exp.sim.faults[&2], Behavior::Crash { at: 30 });
        assert_eq!(exp.sim.faults[&3], Behavior::VoteStuff);
        assert_eq!(exp.sim.pacemaker, Pacemaker { base: 120, max: 480 });
        assert_eq!(exp.liveness.window, 4);
    }

    #[test]
    fn quorum_experiment_with_encoding() {
        let exp = parse_experiment(
            br#"{"v":1,"quorum":{"threshold":3,"of":["a","b","c","d"]},"simulation":{"encoding":"msp-lup"}}"#,
        )
        .unwrap();
        assert_eq!(exp.encoding, Encoding::MspLup);
        assert_eq!(exp.sim.n(), 4);
    }

    #[test]
    fn errors_name_their_location() {
        let cases = [
            (r#"{"counting":{"n":4,"f":1}}"#, "$.simulation: missing or not an object"),
            (
                r#"{"counting":{"n":4,"f":1},"simulation":{"faults":[{"replica":"r9","behavior":"crash"}]}}"#,
                "$.simulation.faults[0].replica: unknown replica `r9`",
            ),
            (
                r#"{"counting":{"n":4,"f":1},"simulation":{"faults":[{"replica":"r1","behavior":"sleep"}]}}"#,
                "$.simulation.faults[0].behavior: unknown behavior \"sleep\"",
            ),
            (
                r#"{"counting":{"n":3,"f":1},"simulation":{}}"#,
                "$.counting: need n > 3f and n >= 1, got n=3 f=1",
            ),
            (
                r#"{"counting":{"n":4,"f":1},"simulation":{"speed":1}}"#,
                "$.simulation: unknown key `speed`",
            ),
            (
                r#"{"quorum":{"and":["a","b"]},"simulation":{"encoding":"counting"}}"#,
                "encoding `counting` needs a single threshold over all parties",
            ),
        ];
        for (text, msg) in cases {
            assert_eq!(parse_experiment(text.as_bytes()).unwrap_err().to_string(), msg, "{text}");
        }
    }
}
