//! Basic HotStuff: prepare, pre-commit, commit and decide phases per view.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use crate::crypto::{vote_bytes, KeySigner, Signer};
use crate::qc::{qc_verify, vote_verifies, VoteSet};
use crate::replica::{EventKind, Input, Output, Replica, ReplicaConfig};
use crate::types::{
    leader_of, BlockNode, Message, MsgKind, NodeId, PartialSig, QcKind, QuorumCert, ReplicaId, Time,
    View,
};

/// Future-view messages kept per replica.
const MAX_BUFFERED: usize = 4096;

pub struct BasicReplica {
    cfg: ReplicaConfig,
    signer: KeySigner,
    started: bool,
    view: View,
    prepare_qc: QuorumCert,
    locked_qc: QuorumCert,
    /// New-view certificates by the view they ask to enter, then sender.
    new_views: BTreeMap<View, BTreeMap<ReplicaId, QuorumCert>>,
    proposal: Option<Arc<BlockNode>>,
    votes: HashMap<QcKind, VoteSet>,
    voted: HashSet<QcKind>,
    future: BTreeMap<View, Vec<(ReplicaId, Message)>>,
    buffered: usize,
    failures: u32,
    decided: HashSet<NodeId>,
}

impl BasicReplica {
    pub fn new(cfg: ReplicaConfig) -> Self {
        let genesis = BlockNode::genesis();
        BasicReplica {
            signer: cfg.signer(),
            cfg,
            started: false,
            view: 0,
            prepare_qc: QuorumCert::genesis(QcKind::Prepare, &genesis),
            locked_qc: QuorumCert::genesis(QcKind::PreCommit, &genesis),
            new_views: BTreeMap::new(),
            proposal: None,
            votes: HashMap::new(),
            voted: HashSet::new(),
            future: BTreeMap::new(),
            buffered: 0,
            failures: 0,
            decided: HashSet::new(),
        }
    }

    pub fn prepare_qc(&self) -> &QuorumCert {
        &self.prepare_qc
    }

    pub fn locked_qc(&self) -> &QuorumCert {
        &self.locked_qc
    }

    fn n(&self) -> usize {
        self.cfg.n
    }

    fn is_leader(&self, view: View) -> bool {
        leader_of(view, self.n()) == self.cfg.id
    }

    fn valid(&self, qc: &QuorumCert, kind: QcKind) -> bool {
        (qc.kind == kind || qc.is_genesis()) && qc_verify(qc, self.cfg.checker.as_ref(), self.cfg.verifier())
    }

    fn enter_view(&mut self, view: View, out: &mut Output) {
        self.view = view;
        self.proposal = None;
        self.votes.clear();
        self.voted.clear();
        self.new_views = self.new_views.split_off(&view);
        out.event(EventKind::Enter, view, None, "");
        out.timers.push((view, self.cfg.pacemaker.timeout(self.failures)));
        let later = self.future.split_off(&view);
        let stale = std::mem::replace(&mut self.future, later);
        self.buffered -= stale.values().map(Vec::len).sum::<usize>();
        if let Some(msgs) = self.future.remove(&view) {
            self.buffered -= msgs.len();
            for (from, msg) in msgs {
                self.deliver(from, msg, out);
            }
        }
        self.try_propose(view, out);
    }

    /// Sends new-view for the current view to the next leader and moves on.
    fn leave_view(&mut self, out: &mut Output) {
        let view = self.view;
        self.send_new_view(view, out);
        self.enter_view(view + 1, out);
    }

    fn send_new_view(&mut self, view: View, out: &mut Output) {
        let next = leader_of(view + 1, self.n());
        let msg = Message::new(MsgKind::NewView, view).with_justify(self.prepare_qc.clone());
        out.event(EventKind::NewView, view, Some(self.prepare_qc.node.id), format!("to={next}"));
        out.send(next, msg);
    }

    fn deliver(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        if msg.kind == MsgKind::Decide {
            return self.on_decide(from, msg, out);
        }
        let target = match msg.kind {
            MsgKind::NewView => msg.view.saturating_add(1),
            _ => msg.view,
        };
        if target < self.view {
            return;
        }
        if target > self.view {
            if msg.kind == MsgKind::NewView {
                return self.on_new_view(from, msg, out);
            }
            if self.buffered < MAX_BUFFERED {
                self.buffered += 1;
                self.future.entry(target).or_default().push((from, msg));
            }
            return;
        }
        match msg.kind {
            MsgKind::NewView => self.on_new_view(from, msg, out),
            MsgKind::Prepare | MsgKind::PreCommit | MsgKind::Commit if msg.is_vote() => {
                self.on_vote(from, msg, out)
            }
            MsgKind::Prepare => self.on_prepare(from, msg, out),
            MsgKind::PreCommit => self.on_pre_commit(from, msg, out),
            MsgKind::Commit => self.on_commit(from, msg, out),
            _ => out.event(EventKind::Reject, msg.view, msg.subject(), format!("from={from} wrong-variant")),
        }
    }

    fn on_new_view(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        let target = msg.view + 1;
        if !self.is_leader(target) {
            return;
        }
        let Some(qc) = msg.justify else {
            return out.event(EventKind::Reject, msg.view, None, format!("from={from} new-view missing-qc"));
        };
        if !self.valid(&qc, QcKind::Prepare) {
            return out.event(EventKind::Reject, msg.view, Some(qc.node.id), format!("from={from} new-view bad-qc"));
        }
        out.event(EventKind::Accept, msg.view, Some(qc.node.id), format!("from={from} new-view"));
        self.new_views.entry(target).or_default().entry(from).or_insert(qc);
        self.try_propose(target, out);
    }

    /// Proposes in `view` once a quorum of new-view messages is in,
    /// jumping ahead if the replica is behind.
    fn try_propose(&mut self, view: View, out: &mut Output) {
        if !self.started || view < self.view || !self.is_leader(view) {
            return;
        }
        if view == self.view && self.proposal.is_some() {
            return;
        }
        let Some(msgs) = self.new_views.get(&view) else {
            return;
        };
        if !self.cfg.checker.is_quorum(msgs.keys().copied().collect()) {
            return;
        }
        if view > self.view {
            return self.enter_view(view, out);
        }
        let mut high: Option<&QuorumCert> = None;
        for qc in msgs.values() {
            if high.is_none_or(|h| qc.view > h.view) {
                high = Some(qc);
            }
        }
        let high = high.expect("quorum is non-empty").clone();
        let node = BlockNode::child(&high.node, (self.cfg.workload)(view, self.cfg.id), None);
        self.proposal = Some(node.clone());
        out.event(EventKind::Propose, view, Some(node.id), format!("high_qc={}", high.view));
        let msg = Message::new(MsgKind::Prepare, view).with_node(node).with_justify(high);
        out.broadcast(self.n(), &msg);
    }

    fn vote(&mut self, kind: MsgKind, node: Arc<BlockNode>, out: &mut Output) {
        let qk = kind.vote_kind().expect("voting phase");
        if !self.voted.insert(qk) {
            return;
        }
        let sig = self.signer.sign(&vote_bytes(qk, self.view, &node.id));
        out.event(EventKind::Vote, self.view, Some(node.id), qk.name());
        let vote = PartialSig {
            signer: self.cfg.id,
            sig,
        };
        let msg = Message::new(kind, self.view).with_node(node).with_vote(vote);
        out.send(leader_of(self.view, self.n()), msg);
    }

    fn sent_by_leader(&self, from: ReplicaId, msg: &Message, out: &mut Output) -> bool {
        let ok = from == leader_of(self.view, self.n());
        if !ok {
            out.event(EventKind::Reject, msg.view, msg.subject(), format!("from={from} {} not-leader", msg.kind.name()));
        }
        ok
    }

    fn on_prepare(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        if !self.sent_by_leader(from, &msg, out) {
            return;
        }
        let (Some(node), Some(qc)) = (msg.node.clone(), msg.justify.clone()) else {
            return out.event(EventKind::Reject, msg.view, msg.subject(), format!("from={from} prepare malformed"));
        };
        if !self.valid(&qc, QcKind::Prepare) {
            return out.event(EventKind::Reject, msg.view, Some(node.id), format!("from={from} prepare bad-qc"));
        }
        if !node.well_formed() || node.height <= qc.node.height || !node.extends(&qc.node.id) {
            return out.event(EventKind::Reject, msg.view, Some(node.id), format!("from={from} prepare not-extending"));
        }
        let safe = node.extends(&self.locked_qc.node.id) || qc.view > self.locked_qc.view;
        if !safe {
            return out.event(EventKind::Reject, msg.view, Some(node.id), format!("from={from} prepare unsafe"));
        }
        out.event(EventKind::Accept, msg.view, Some(node.id), format!("from={from} prepare"));
        self.vote(MsgKind::Prepare, node, out);
    }

    fn phase_qc(&self, from: ReplicaId, msg: &Message, kind: QcKind, out: &mut Output) -> Option<QuorumCert> {
        if !self.sent_by_leader(from, msg, out) {
            return None;
        }
        let qc = msg.justify.as_ref()?;
        if qc.kind != kind || qc.view != self.view || !self.valid(qc, kind) {
            out.event(EventKind::Reject, msg.view, Some(qc.node.id), format!("from={from} {} bad-qc", msg.kind.name()));
            return None;
        }
        out.event(EventKind::Accept, msg.view, Some(qc.node.id), format!("from={from} {}", msg.kind.name()));
        Some(qc.clone())
    }

    fn on_pre_commit(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        if let Some(qc) = self.phase_qc(from, &msg, QcKind::Prepare, out) {
            let node = qc.node.clone();
            self.prepare_qc = qc;
            self.vote(MsgKind::PreCommit, node, out);
        }
    }

    fn on_commit(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        if let Some(qc) = self.phase_qc(from, &msg, QcKind::PreCommit, out) {
            let node = qc.node.clone();
            out.event(EventKind::Lock, self.view, Some(node.id), format!("qc_view={}", qc.view));
            self.locked_qc = qc;
            self.vote(MsgKind::Commit, node, out);
        }
    }

    /// A valid commit certificate decides its node whatever the sender or
    /// view; a certificate from the current or a later view also ends the
    /// view.
    fn on_decide(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        let Some(qc) = msg.justify else {
            return out.event(EventKind::Reject, msg.view, None, format!("from={from} decide missing-qc"));
        };
        if qc.kind != QcKind::Commit || qc.is_genesis() || !self.valid(&qc, QcKind::Commit) {
            return out.event(EventKind::Reject, msg.view, Some(qc.node.id), format!("from={from} decide bad-qc"));
        }
        if self.decided.insert(qc.node.id) {
            out.event(EventKind::Accept, msg.view, Some(qc.node.id), format!("from={from} decide"));
            out.event(EventKind::Decide, self.view, Some(qc.node.id), format!("qc_view={}", qc.view));
            out.decisions.push(qc.node.clone());
            self.failures = 0;
        }
        if qc.view >= self.view {
            self.send_new_view(qc.view, out);
            self.enter_view(qc.view + 1, out);
        }
    }

    fn on_vote(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        if !self.is_leader(self.view) {
            return;
        }
        let kind = msg.kind.vote_kind().expect("vote kind");
        let (Some(vote), Some(node)) = (msg.vote, msg.node) else {
            return;
        };
        let Some(proposal) = self.proposal.clone() else {
            return;
        };
        if node.id != proposal.id {
            return out.event(EventKind::Reject, self.view, Some(node.id), format!("from={from} vote foreign-node"));
        }
        if vote.signer >= self.n() || !vote_verifies(&vote, kind, self.view, &node.id, self.cfg.verifier()) {
            return out.event(EventKind::Reject, self.view, Some(node.id), format!("from={from} vote bad-signature"));
        }
        let set = self
            .votes
            .entry(kind)
            .or_insert_with(|| VoteSet::new(kind, self.view, proposal.clone()));
        let Some(qc) = set.add(vote, self.cfg.checker.as_ref()) else {
            return;
        };
        out.event(EventKind::Qc, self.view, Some(node.id), kind.name());
        let next = match kind {
            QcKind::Prepare => MsgKind::PreCommit,
            QcKind::PreCommit => MsgKind::Commit,
            _ => MsgKind::Decide,
        };
        let msg = Message::new(next, self.view).with_justify(qc);
        out.broadcast(self.n(), &msg);
    }
}

impl Replica for BasicReplica {
    fn id(&self) -> ReplicaId {
        self.cfg.id
    }

    fn view(&self) -> View {
        self.view
    }

    fn step(&mut self, input: Input, _now: Time) -> Output {
        let mut out = Output::default();
        match input {
            Input::Start => {
                if !self.started {
                    self.started = true;
                    self.send_new_view(0, &mut out);
                    self.enter_view(1, &mut out);
                }
            }
            Input::Message { from, msg } => {
                if self.started {
                    self.deliver(from, msg, &mut out);
                }
            }
            Input::Timeout { view } => {
                if self.started && view == self.view {
                    self.failures = self.failures.saturating_add(1);
                    out.event(EventKind::Timeout, view, None, "");
                    self.leave_view(&mut out);
                }
            }
        }
        out
    }
}
