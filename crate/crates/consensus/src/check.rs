//! Post-hoc safety, liveness and invariant checks over traces.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::replica::EventKind;
use crate::sim::Variant;
use crate::trace::SimTrace;
use crate::types::{leader_of, BlockNode, ReplicaId, Time, View};

/// Two correct replicas decided nodes on different branches.
#[derive(Debug, Clone)]
pub struct SafetyViolation {
    pub r1: ReplicaId,
    pub w: Arc<BlockNode>,
    pub r2: ReplicaId,
    pub b: Arc<BlockNode>,
}

impl fmt::Display for SafetyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "conflicting decisions: replica {} decided {} (height {}), replica {} decided {} (height {})",
            self.r1, self.w.id, self.w.height, self.r2, self.b.id, self.b.height
        )
    }
}

/// Checks that all nodes decided by correct replicas lie on one branch.
pub fn check_safety(trace: &SimTrace) -> Result<(), SafetyViolation> {
    let decided: Vec<(ReplicaId, &Arc<BlockNode>)> = trace
        .correct()
        .flat_map(|r| trace.decisions[r].iter().map(move |d| (r, &d.node)))
        .collect();
    let Some(&(rm, top)) = decided.iter().max_by_key(|(r, n)| (n.height, std::cmp::Reverse(*r))) else {
        return Ok(());
    };
    for &(r, node) in &decided {
        if !top.extends(&node.id) {
            return Err(SafetyViolation {
                r1: rm,
                w: top.clone(),
                r2: r,
                b: node.clone(),
            });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LivenessParams {
    pub variant: Variant,
    /// Ticks a view must be held after the last correct replica enters it.
    pub t_f: Time,
    /// Consecutive views with correct leaders a window spans.
    pub window: u64,
}

impl LivenessParams {
    /// `t_f = 8 delta`; one view for basic, four for chained.
    pub fn new(variant: Variant, delta: Time) -> Self {
        LivenessParams {
            variant,
            t_f: 8 * delta,
            window: match variant {
                Variant::Basic => 1,
                Variant::Chained => 4,
            },
        }
    }
}

/// A checked window with no decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stall {
    pub view: View,
    pub start: Time,
    pub deadline: Time,
}

impl fmt::Display for Stall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stall: views from {} held by all correct replicas from t={} to t={} without a decision",
            self.view, self.start, self.deadline
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LivenessVerdict {
    /// Every window meeting the premise produced a decision.
    Ok { windows: usize },
    /// No window met the premise; not a violation.
    PremiseUnmet { reason: String },
    Stall(Vec<Stall>),
}

impl LivenessVerdict {
    pub fn is_violation(&self) -> bool {
        matches!(self, LivenessVerdict::Stall(_))
    }
}

impl fmt::Display for LivenessVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LivenessVerdict::Ok { windows } => write!(f, "ok ({windows} windows checked)"),
            LivenessVerdict::PremiseUnmet { reason } => write!(f, "premise never met: {reason}"),
            LivenessVerdict::Stall(s) => {
                write!(f, "{} stalls", s.len())?;
                for st in s {
                    write!(f, "\n  {st}")?;
                }
                Ok(())
            }
        }
    }
}

/// For every post-GST window of consecutive correct-leader views that all
/// correct replicas enter and none leaves by timeout within `t_f` of the
/// last entry, requires a decision in one of the window's views by then.
pub fn check_liveness(trace: &SimTrace, params: &LivenessParams) -> LivenessVerdict {
    let correct: Vec<ReplicaId> = trace.correct().collect();
    if correct.is_empty() {
        return LivenessVerdict::PremiseUnmet {
            reason: "no correct replicas".into(),
        };
    }
    let mut entered: BTreeMap<View, HashMap<ReplicaId, Time>> = BTreeMap::new();
    let mut timeouts: BTreeMap<View, Time> = BTreeMap::new();
    let mut decides: BTreeMap<View, Time> = BTreeMap::new();
    for e in trace.correct_events() {
        match e.kind {
            EventKind::Enter => {
                entered.entry(e.view).or_default().entry(e.replica).or_insert(e.time);
            }
            EventKind::Timeout => {
                let t = timeouts.entry(e.view).or_insert(e.time);
                *t = (*t).min(e.time);
            }
            EventKind::Decide => {
                let t = decides.entry(e.view).or_insert(e.time);
                *t = (*t).min(e.time);
            }
            _ => {}
        }
    }
    let w = params.window.max(1);
    let mut windows = 0;
    let mut stalls = Vec::new();
    let mut reason = "no post-GST window with correct leaders was held";
    for (&v, entries) in &entered {
        if (v..v + w).any(|u| trace.faulty.contains(&leader_of(u, trace.n))) {
            continue;
        }
        if correct.iter().any(|r| !entries.contains_key(r)) {
            continue;
        }
        let first = *entries.values().min().expect("non-empty");
        let start = *entries.values().max().expect("non-empty");
        if first < trace.gst {
            continue;
        }
        let deadline = start + params.t_f;
        if deadline > trace.end {
            reason = "trace ends before a window completes";
            continue;
        }
        if timeouts.range(v..v + w).any(|(_, &t)| t < deadline) {
            continue;
        }
        windows += 1;
        if !decides.range(v..v + w).any(|(_, &t)| t <= deadline) {
            stalls.push(Stall { view: v, start, deadline });
        }
    }
    if !stalls.is_empty() {
        LivenessVerdict::Stall(stalls)
    } else if windows == 0 {
        LivenessVerdict::PremiseUnmet { reason: reason.into() }
    } else {
        LivenessVerdict::Ok { windows }
    }
}

/// Per correct replica: at most one vote per (view, phase), and locks that
/// never move to a lower certificate view.
pub fn check_invariants(trace: &SimTrace) -> Vec<String> {
    let mut problems = Vec::new();
    let mut votes: BTreeSet<(ReplicaId, View, String)> = BTreeSet::new();
    let mut locks: HashMap<ReplicaId, u64> = HashMap::new();
    for e in trace.correct_events() {
        match e.kind {
            EventKind::Vote => {
                if !votes.insert((e.replica, e.view, e.detail.clone())) {
                    problems.push(format!("replica {} voted twice in view {} phase {}", e.replica, e.view, e.detail));
                }
            }
            EventKind::Lock => {
                let Some(qv) = e.field("qc_view").and_then(|s| s.parse::<u64>().ok()) else {
                    continue;
                };
                let prev = locks.entry(e.replica).or_insert(0);
                if qv < *prev {
                    problems.push(format!("replica {} lock went from view {} to {}", e.replica, prev, qv));
                }
                *prev = qv;
            }
            _ => {}
        }
    }
    problems
}

/// Certificate-bearing messages from `senders` that a correct replica
/// accepted.
pub fn accepted_from(trace: &SimTrace, senders: &BTreeSet<ReplicaId>) -> Vec<String> {
    trace
        .correct_events()
        .filter(|e| e.kind == EventKind::Accept)
        .filter(|e| {
            e.field("from")
                .and_then(|s| s.parse::<ReplicaId>().ok())
                .is_some_and(|r| senders.contains(&r) && r != e.replica)
        })
        .map(|e| e.to_string())
        .collect()
}
