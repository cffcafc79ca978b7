//! Simulation traces and their line format:
//! `time \t replica \t kind \t view \t node \t detail`, node as 16 hex
//! digits or `-`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::replica::EventKind;
use crate::types::{BlockNode, NodeId, ReplicaId, Time, View};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time: Time,
    pub replica: ReplicaId,
    pub kind: EventKind,
    pub view: View,
    /// Short node id as printed.
    pub node: Option<String>,
    pub detail: String,
}

impl TraceEvent {
    pub fn new(time: Time, replica: ReplicaId, kind: EventKind, view: View, node: Option<NodeId>, detail: String) -> Self {
        TraceEvent {
            time,
            replica,
            kind,
            view,
            node: node.map(|n| n.short()),
            detail,
        }
    }

    /// The value of `key=` in the detail field.
    pub fn field(&self, key: &str) -> Option<&str> {
        self.detail
            .split_whitespace()
            .find_map(|w| w.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.time,
            self.replica,
            self.kind,
            self.view,
            self.node.as_deref().unwrap_or("-"),
            self.detail
        )
    }
}

impl FromStr for TraceEvent {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let cols: Vec<&str> = line.splitn(6, '\t').collect();
        if cols.len() != 6 {
            return Err(format!("expected 6 tab-separated fields: {line:?}"));
        }
        let num = |s: &str| s.parse::<u64>().map_err(|_| format!("bad number {s:?}"));
        Ok(TraceEvent {
            time: num(cols[0])?,
            replica: num(cols[1])? as ReplicaId,
            kind: EventKind::parse(cols[2]).ok_or_else(|| format!("bad event kind {:?}", cols[2]))?,
            view: num(cols[3])?,
            node: (cols[4] != "-").then(|| cols[4].to_owned()),
            detail: cols[5].to_owned(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Decision {
    pub time: Time,
    pub view: View,
    pub node: Arc<BlockNode>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Metrics {
    /// Decisions summed over correct replicas.
    pub decisions: usize,
    /// Highest view entered by a correct replica.
    pub views: View,
    pub messages: u64,
}

/// The outcome of one simulation.
#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    pub n: usize,
    pub faulty: BTreeSet<ReplicaId>,
    pub gst: Time,
    pub delta: Time,
    /// Time of the last processed event.
    pub end: Time,
    /// The horizon cut the run short.
    pub truncated: bool,
    pub events: Vec<TraceEvent>,
    pub decisions: Vec<Vec<Decision>>,
    pub metrics: Metrics,
}

impl SimTrace {
    pub fn is_correct(&self, r: ReplicaId) -> bool {
        !self.faulty.contains(&r)
    }

    pub fn correct(&self) -> impl Iterator<Item = ReplicaId> + '_ {
        (0..self.n).filter(|r| self.is_correct(*r))
    }

    pub fn correct_events(&self) -> impl Iterator<Item = &TraceEvent> + '_ {
        self.events.iter().filter(|e| self.is_correct(e.replica))
    }

    /// Header comment plus one line per event.
    pub fn to_text(&self) -> String {
        let faulty: Vec<String> = self.faulty.iter().map(|r| r.to_string()).collect();
        let mut out = format!(
            "# n={} faulty={} gst={} delta={} end={} truncated={} decisions={} views={} messages={}\n",
            self.n,
            if faulty.is_empty() { "-".to_owned() } else { faulty.join(",") },
            self.gst,
            self.delta,
            self.end,
            self.truncated,
            self.metrics.decisions,
            self.metrics.views,
            self.metrics.messages,
        );
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}

/// Parses the event lines of a trace, skipping `#` comments.
pub fn parse_events(text: &str) -> Result<Vec<TraceEvent>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(i, l)| l.parse().map_err(|e| format!("line {}: {e}", i + 1)))
        .collect()
}
