//! Chained HotStuff: one generic phase per view, pipelined through the
//! `justify` links of consecutive nodes.
//!
//! A node's height is the view it was proposed in.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::crypto::{vote_bytes, KeySigner, Signer};
use crate::qc::{qc_verify, vote_verifies, VoteSet};
use crate::replica::{EventKind, Input, Output, Replica, ReplicaConfig};
use crate::types::{
    leader_of, BlockNode, Command, Message, MsgKind, NodeId, PartialSig, QcKind, QuorumCert, ReplicaId,
    Time, View,
};

const MAX_BUFFERED: usize = 4096;

pub struct ChainedReplica {
    cfg: ReplicaConfig,
    signer: KeySigner,
    started: bool,
    view: View,
    vheight: u64,
    b_lock: Arc<BlockNode>,
    b_exec: Arc<BlockNode>,
    b_leaf: Arc<BlockNode>,
    qc_high: QuorumCert,
    votes: HashMap<NodeId, VoteSet>,
    new_views: BTreeMap<View, BTreeMap<ReplicaId, QuorumCert>>,
    /// Views this replica may propose in as leader.
    ready: BTreeSet<View>,
    proposed: View,
    future: BTreeMap<View, Vec<(ReplicaId, Message)>>,
    buffered: usize,
    failures: u32,
}

impl ChainedReplica {
    pub fn new(cfg: ReplicaConfig) -> Self {
        let genesis = BlockNode::genesis();
        ChainedReplica {
            signer: cfg.signer(),
            cfg,
            started: false,
            view: 0,
            vheight: 0,
            b_lock: genesis.clone(),
            b_exec: genesis.clone(),
            b_leaf: genesis.clone(),
            qc_high: QuorumCert::genesis(QcKind::Generic, &genesis),
            votes: HashMap::new(),
            new_views: BTreeMap::new(),
            ready: BTreeSet::new(),
            proposed: 0,
            future: BTreeMap::new(),
            buffered: 0,
            failures: 0,
        }
    }

    pub fn qc_high(&self) -> &QuorumCert {
        &self.qc_high
    }

    pub fn b_lock(&self) -> &Arc<BlockNode> {
        &self.b_lock
    }

    pub fn b_exec(&self) -> &Arc<BlockNode> {
        &self.b_exec
    }

    fn n(&self) -> usize {
        self.cfg.n
    }

    fn is_leader(&self, view: View) -> bool {
        leader_of(view, self.n()) == self.cfg.id
    }

    fn valid(&self, qc: &QuorumCert) -> bool {
        (qc.kind == QcKind::Generic || qc.is_genesis())
            && qc_verify(qc, self.cfg.checker.as_ref(), self.cfg.verifier())
    }

    fn enter_view(&mut self, view: View, out: &mut Output) {
        self.view = view;
        self.votes.retain(|_, v| v.view + 1 >= view);
        self.new_views = self.new_views.split_off(&view);
        self.ready = self.ready.split_off(&view);
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
        self.on_beat(view, out);
    }

    fn create_leaf(&self, parent: &Arc<BlockNode>, cmd: Command, qc: QuorumCert, height: u64) -> Arc<BlockNode> {
        BlockNode::at_height(parent, cmd, height, Some(qc))
    }

    /// Proposes in `view` if this replica leads it and has a fresh
    /// certificate or a quorum of new-view messages.
    fn on_beat(&mut self, view: View, out: &mut Output) {
        if !self.started || view != self.view || self.proposed >= view || !self.ready.contains(&view) {
            return;
        }
        if !self.is_leader(view) {
            return;
        }
        let node = self.create_leaf(
            &self.b_leaf.clone(),
            (self.cfg.workload)(view, self.cfg.id),
            self.qc_high.clone(),
            view,
        );
        self.proposed = view;
        self.b_leaf = node.clone();
        out.event(EventKind::Propose, view, Some(node.id), format!("qc_high={}", self.qc_high.view));
        out.broadcast(self.n(), &Message::new(MsgKind::Generic, view).with_node(node));
    }

    fn on_next_sync_view(&mut self, out: &mut Output) {
        let view = self.view;
        self.send_new_view(view, out);
        self.enter_view(view + 1, out);
    }

    fn send_new_view(&mut self, view: View, out: &mut Output) {
        let next = leader_of(view + 1, self.n());
        let msg = Message::new(MsgKind::NewView, view).with_justify(self.qc_high.clone());
        out.event(EventKind::NewView, view, Some(self.qc_high.node.id), format!("to={next}"));
        out.send(next, msg);
    }

    fn deliver(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        match msg.kind {
            MsgKind::NewView => self.on_receive_new_view(from, msg, out),
            MsgKind::GenericVote => self.on_receive_vote(from, msg, out),
            MsgKind::Generic if !msg.is_vote() => {
                let w = msg.view;
                if w < self.view {
                    return;
                }
                if w > self.view {
                    let catch_up = msg
                        .node
                        .as_ref()
                        .and_then(|n| n.justify.as_ref())
                        .is_some_and(|qc| qc.view + 1 == w && self.valid(qc));
                    if catch_up && from == leader_of(w, self.n()) {
                        self.enter_view(w, out);
                        if self.view != w {
                            return;
                        }
                    } else {
                        if self.buffered < MAX_BUFFERED {
                            self.buffered += 1;
                            self.future.entry(w).or_default().push((from, msg));
                        }
                        return;
                    }
                }
                self.on_receive_proposal(from, msg, out)
            }
            _ => out.event(EventKind::Reject, msg.view, msg.subject(), format!("from={from} wrong-variant")),
        }
    }

    fn on_receive_proposal(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        let w = msg.view;
        if from != leader_of(w, self.n()) {
            return out.event(EventKind::Reject, w, msg.subject(), format!("from={from} generic not-leader"));
        }
        let Some(node) = msg.node else {
            return out.event(EventKind::Reject, w, None, format!("from={from} generic malformed"));
        };
        let Some(qc) = node.justify.clone() else {
            return out.event(EventKind::Reject, w, Some(node.id), format!("from={from} generic missing-qc"));
        };
        if !self.valid(&qc) {
            return out.event(EventKind::Reject, w, Some(node.id), format!("from={from} generic bad-qc"));
        }
        if !node.well_formed() || node.height != w || node.height <= qc.node.height || !node.extends(&qc.node.id) {
            return out.event(EventKind::Reject, w, Some(node.id), format!("from={from} generic malformed"));
        }
        out.event(EventKind::Accept, w, Some(node.id), format!("from={from} generic"));
        let safe = node.height > self.vheight
            && (node.extends(&self.b_lock.id) || qc.node.height > self.b_lock.height);
        if safe {
            self.vheight = node.height;
            let sig = self.signer.sign(&vote_bytes(QcKind::Generic, w, &node.id));
            out.event(EventKind::Vote, w, Some(node.id), QcKind::Generic.name());
            let vote = PartialSig {
                signer: self.cfg.id,
                sig,
            };
            let msg = Message::new(MsgKind::GenericVote, w).with_node(node.clone()).with_vote(vote);
            out.send(leader_of(w + 1, self.n()), msg);
        } else {
            out.event(EventKind::Reject, w, Some(node.id), format!("from={from} generic unsafe"));
        }
        self.update(&node, out);
        if self.view == w {
            self.enter_view(w + 1, out);
        }
    }

    fn on_receive_vote(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        let w = msg.view;
        let next = w.saturating_add(1);
        if next < self.view || !self.is_leader(next) {
            return;
        }
        let (Some(vote), Some(node)) = (msg.vote, msg.node) else {
            return;
        };
        if vote.signer >= self.n() || !vote_verifies(&vote, QcKind::Generic, w, &node.id, self.cfg.verifier()) {
            return out.event(EventKind::Reject, w, Some(node.id), format!("from={from} vote bad-signature"));
        }
        let set = self
            .votes
            .entry(node.id)
            .or_insert_with(|| VoteSet::new(QcKind::Generic, w, node.clone()));
        if set.view != w {
            return;
        }
        let Some(qc) = set.add(vote, self.cfg.checker.as_ref()) else {
            return;
        };
        out.event(EventKind::Qc, w, Some(node.id), QcKind::Generic.name());
        self.update_qc_high(qc);
        self.ready.insert(next);
        if next > self.view {
            self.enter_view(next, out);
        } else {
            self.on_beat(next, out);
        }
    }

    fn on_receive_new_view(&mut self, from: ReplicaId, msg: Message, out: &mut Output) {
        let target = msg.view.saturating_add(1);
        if target < self.view || !self.is_leader(target) {
            return;
        }
        let Some(qc) = msg.justify else {
            return out.event(EventKind::Reject, msg.view, None, format!("from={from} new-view missing-qc"));
        };
        if !self.valid(&qc) {
            return out.event(EventKind::Reject, msg.view, Some(qc.node.id), format!("from={from} new-view bad-qc"));
        }
        out.event(EventKind::Accept, msg.view, Some(qc.node.id), format!("from={from} new-view"));
        self.update_qc_high(qc.clone());
        let senders = self.new_views.entry(target).or_default();
        senders.entry(from).or_insert(qc);
        if !self.cfg.checker.is_quorum(senders.keys().copied().collect()) {
            return;
        }
        self.ready.insert(target);
        if target > self.view {
            self.enter_view(target, out);
        } else {
            self.on_beat(target, out);
        }
    }

    fn update_qc_high(&mut self, qc: QuorumCert) {
        if qc.node.height > self.qc_high.node.height {
            self.b_leaf = qc.node.clone();
            self.qc_high = qc;
        }
    }

    /// Three-chain rule: `b* -> b'' -> b' -> b`.
    fn update(&mut self, b_star: &Arc<BlockNode>, out: &mut Output) {
        let Some(qc2) = b_star.justify.clone() else { return };
        let b2 = qc2.node.clone();
        self.update_qc_high(qc2);
        let Some(qc1) = b2.justify.as_ref() else { return };
        let b1 = qc1.node.clone();
        if b1.height > self.b_lock.height {
            out.event(EventKind::Lock, self.view, Some(b1.id), format!("qc_view={}", qc1.view));
            self.b_lock = b1.clone();
        }
        let Some(qc0) = b1.justify.as_ref() else { return };
        let b0 = qc0.node.clone();
        if b2.parent_id() == Some(b1.id) && b1.parent_id() == Some(b0.id) {
            self.on_commit(&b0, out);
        }
    }

    fn on_commit(&mut self, b: &Arc<BlockNode>, out: &mut Output) {
        if self.b_exec.height >= b.height {
            return;
        }
        let mut chain = Vec::new();
        let mut cur = Some(b.clone());
        while let Some(node) = cur {
            if node.height <= self.b_exec.height {
                break;
            }
            cur = node.parent.clone();
            chain.push(node);
        }
        for node in chain.into_iter().rev() {
            out.event(EventKind::Decide, self.view, Some(node.id), format!("height={}", node.height));
            out.decisions.push(node);
        }
        self.b_exec = b.clone();
        self.failures = 0;
    }
}

impl Replica for ChainedReplica {
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
                    self.on_next_sync_view(&mut out);
                }
            }
        }
        out
    }
}
