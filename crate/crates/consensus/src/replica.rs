//! The interface shared by replica state machines and the simulator.

use std::fmt;
use std::sync::Arc;

use genquorum_core::QuorumChecker;

use crate::crypto::{KeyRing, KeySigner, Verifier};
use crate::types::{BlockNode, Command, Message, NodeId, ReplicaId, Time, View};

/// What a replica reacts to.
#[derive(Debug, Clone)]
pub enum Input {
    Start,
    Message { from: ReplicaId, msg: Message },
    Timeout { view: View },
}

/// Kinds of trace records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventKind {
    Enter,
    Propose,
    Vote,
    Qc,
    Lock,
    Decide,
    Timeout,
    NewView,
    /// A message changed state after its certificate verified.
    Accept,
    Reject,
    Crash,
    Byzantine,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Enter => "enter",
            EventKind::Propose => "propose",
            EventKind::Vote => "vote",
            EventKind::Qc => "qc",
            EventKind::Lock => "lock",
            EventKind::Decide => "decide",
            EventKind::Timeout => "timeout",
            EventKind::NewView => "new-view",
            EventKind::Accept => "accept",
            EventKind::Reject => "reject",
            EventKind::Crash => "crash",
            EventKind::Byzantine => "byzantine",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use EventKind::*;
        [
            Enter, Propose, Vote, Qc, Lock, Decide, Timeout, NewView, Accept, Reject, Crash,
            Byzantine,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A replica-local observation, stamped with time and replica by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    pub view: View,
    pub node: Option<NodeId>,
    pub detail: String,
}

impl Event {
    pub fn new(kind: EventKind, view: View, node: Option<NodeId>, detail: impl Into<String>) -> Self {
        Event {
            kind,
            view,
            node,
            detail: detail.into(),
        }
    }
}

/// Everything one step produces.
#[derive(Debug, Clone, Default)]
pub struct Output {
    pub sends: Vec<(ReplicaId, Message)>,
    pub decisions: Vec<Arc<BlockNode>>,
    pub events: Vec<Event>,
    /// Fire `Input::Timeout { view }` after the given number of ticks.
    pub timers: Vec<(View, Time)>,
}

impl Output {
    pub fn send(&mut self, to: ReplicaId, msg: Message) {
        self.sends.push((to, msg));
    }

    pub fn broadcast(&mut self, n: usize, msg: &Message) {
        for to in 0..n {
            self.sends.push((to, msg.clone()));
        }
    }

    pub fn event(&mut self, kind: EventKind, view: View, node: Option<NodeId>, detail: impl Into<String>) {
        self.events.push(Event::new(kind, view, node, detail));
    }

    pub fn extend(&mut self, other: Output) {
        self.sends.extend(other.sends);
        self.decisions.extend(other.decisions);
        self.events.extend(other.events);
        self.timers.extend(other.timers);
    }
}

/// A deterministic replica state machine.
pub trait Replica: Send {
    fn id(&self) -> ReplicaId;
    fn view(&self) -> View;
    fn step(&mut self, input: Input, now: Time) -> Output;
}

/// View timeouts: `base` doubled per consecutive failed view, capped at
/// `max`, reset by a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pacemaker {
    pub base: Time,
    pub max: Time,
}

impl Pacemaker {
    pub fn timeout(&self, failures: u32) -> Time {
        let scaled = self.base.saturating_mul(1u64 << failures.min(32));
        scaled.min(self.max).max(1)
    }
}

/// Supplies the command batch a leader proposes.
pub type Workload = Arc<dyn Fn(View, ReplicaId) -> Command + Send + Sync>;

/// A deterministic workload: `"v<view>/r<leader>"`.
pub fn default_workload() -> Workload {
    Arc::new(|view, id| Command(format!("v{view}/r{id}").into_bytes()))
}

/// Static parameters of one replica.
#[derive(Clone)]
pub struct ReplicaConfig {
    pub id: ReplicaId,
    pub n: usize,
    pub checker: Arc<dyn QuorumChecker>,
    pub keys: KeyRing,
    pub pacemaker: Pacemaker,
    pub workload: Workload,
}

impl ReplicaConfig {
    pub fn new(id: ReplicaId, checker: Arc<dyn QuorumChecker>, keys: KeyRing, pacemaker: Pacemaker) -> Self {
        let n = checker.universe().len();
        ReplicaConfig {
            id,
            n,
            checker,
            keys,
            pacemaker,
            workload: default_workload(),
        }
    }

    pub fn signer(&self) -> KeySigner {
        self.keys.signer(self.id)
    }

    pub fn verifier(&self) -> &dyn Verifier {
        &self.keys
    }
}

impl fmt::Debug for ReplicaConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReplicaConfig")
            .field("id", &self.id)
            .field("n", &self.n)
            .field("pacemaker", &self.pacemaker)
            .finish()
    }
}
