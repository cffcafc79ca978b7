//! Faulty replica behaviors, each wrapping a correct replica and rewriting
//! its inputs or outputs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use genquorum_core::QuorumChecker;
use sha2::{Digest, Sha256};

use crate::crypto::{vote_bytes, KeyRing, Signature, Signer};
use crate::qc::{vote_verifies, VoteSet};
use crate::replica::{EventKind, Input, Output, Replica};
use crate::types::{
    leader_of, BlockNode, Command, Message, MsgKind, PartialSig, QcKind, QuorumCert, ReplicaId, Time, View,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Behavior {
    /// Stops at the given time.
    Crash { at: Time },
    /// Participates but sends nothing as leader.
    MuteLeader,
    /// As leader, proposes conflicting nodes to two halves of the correct
    /// replicas and drives both, signing for every faulty replica.
    Equivocate,
    /// Repeats its votes and adds votes under other signers with bad
    /// signatures.
    VoteStuff,
    /// Corrupts every certificate it sends and injects forged decisions
    /// or proposals.
    InvalidQc,
}

impl Behavior {
    pub fn name(&self) -> &'static str {
        match self {
            Behavior::Crash { .. } => "crash",
            Behavior::MuteLeader => "mute-leader",
            Behavior::Equivocate => "equivocate",
            Behavior::VoteStuff => "vote-stuff",
            Behavior::InvalidQc => "invalid-qc",
        }
    }
}

impl fmt::Display for Behavior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Behavior::Crash { at } => write!(f, "crash@{at}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Behavior {
    type Err = String;

    /// Parses `crash`, `crash@<time>` and the other behavior names.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("crash") {
            let at = match rest.strip_prefix('@') {
                Some(t) => t.parse().map_err(|_| format!("bad crash time {t:?}"))?,
                None if rest.is_empty() => 0,
                None => return Err(format!("unknown behavior {s:?}")),
            };
            return Ok(Behavior::Crash { at });
        }
        match s {
            "mute-leader" => Ok(Behavior::MuteLeader),
            "equivocate" => Ok(Behavior::Equivocate),
            "vote-stuff" => Ok(Behavior::VoteStuff),
            "invalid-qc" => Ok(Behavior::InvalidQc),
            _ => Err(format!("unknown behavior {s:?}")),
        }
    }
}

/// What a faulty replica knows beyond its own state: all keys of the
/// faulty set and who is correct.
#[derive(Clone)]
pub struct Collusion {
    pub n: usize,
    pub keys: KeyRing,
    pub faulty: BTreeSet<ReplicaId>,
    pub checker: Arc<dyn QuorumChecker>,
}

impl Collusion {
    fn correct(&self) -> Vec<ReplicaId> {
        (0..self.n).filter(|i| !self.faulty.contains(i)).collect()
    }

    fn sign(&self, signer: ReplicaId, kind: QcKind, view: View, node: &BlockNode) -> PartialSig {
        PartialSig {
            signer,
            sig: self.keys.signer(signer).sign(&vote_bytes(kind, view, &node.id)),
        }
    }
}

fn garbage(seed: &[u8]) -> Signature {
    Signature(Sha256::digest(seed).into())
}

fn is_leader_msg(msg: &Message) -> bool {
    !msg.is_vote()
        && matches!(
            msg.kind,
            MsgKind::Prepare | MsgKind::PreCommit | MsgKind::Commit | MsgKind::Decide | MsgKind::Generic
        )
}

struct Branch {
    node: Arc<BlockNode>,
    targets: Vec<ReplicaId>,
    votes: HashMap<QcKind, VoteSet>,
}

pub struct FaultyReplica {
    inner: Box<dyn Replica>,
    behavior: Behavior,
    ctx: Collusion,
    crashed: bool,
    forged: u64,
    eq_view: View,
    branches: Vec<Branch>,
}

impl FaultyReplica {
    pub fn new(inner: Box<dyn Replica>, behavior: Behavior, ctx: Collusion) -> Self {
        FaultyReplica {
            inner,
            behavior,
            ctx,
            crashed: false,
            forged: 0,
            eq_view: 0,
            branches: Vec::new(),
        }
    }

    pub fn behavior(&self) -> Behavior {
        self.behavior
    }

    fn id(&self) -> ReplicaId {
        self.inner.id()
    }

    fn mute(&self, mut out: Output) -> Output {
        out.sends.retain(|(_, m)| !is_leader_msg(m));
        out
    }

    fn stuff(&self, mut out: Output) -> Output {
        let mut extra = Vec::new();
        for (to, msg) in &out.sends {
            let Some(vote) = msg.vote else { continue };
            extra.push((*to, msg.clone()));
            extra.push((*to, msg.clone()));
            for signer in (0..self.ctx.n).filter(|&j| j != vote.signer) {
                let mut forged = msg.clone();
                let seed = [vote.sig.0.as_slice(), &(signer as u64).to_be_bytes()].concat();
                forged.vote = Some(PartialSig {
                    signer,
                    sig: garbage(&seed),
                });
                extra.push((*to, forged));
            }
        }
        if !extra.is_empty() {
            out.event(EventKind::Byzantine, self.inner.view(), None, format!("stuffed={}", extra.len()));
        }
        out.sends.extend(extra);
        out
    }

    /// A certificate that must fail verification.
    fn forge(&mut self, qc: &QuorumCert) -> QuorumCert {
        self.forged += 1;
        let mut bad = qc.clone();
        let mode = if qc.sigs.is_empty() { 2 + self.forged % 2 } else { self.forged % 4 };
        match mode {
            0 => {
                for s in &mut bad.sigs {
                    s.sig.0[0] ^= 0xff;
                }
            }
            1 => bad.sigs.truncate(1),
            2 => bad.view += 1,
            _ => {
                bad.node = BlockNode::child(&qc.node, Command(b"forged".to_vec()), None);
            }
        }
        if bad.sigs.len() == 1 && mode == 1 {
            let one: genquorum_core::PartySet = [bad.sigs[0].signer].into_iter().collect();
            if self.ctx.checker.is_quorum(one) {
                bad.sigs[0].sig.0[0] ^= 0xff;
            }
        }
        bad
    }

    fn garbage_qc(&self, kind: QcKind, view: View, node: Arc<BlockNode>) -> QuorumCert {
        let sigs = (0..self.ctx.n)
            .map(|signer| PartialSig {
                signer,
                sig: garbage(&[node.id.0.as_slice(), &(signer as u64).to_be_bytes()].concat()),
            })
            .collect();
        QuorumCert {
            kind,
            view,
            node,
            sigs,
        }
    }

    fn corrupt(&mut self, mut out: Output) -> Output {
        let sends = std::mem::take(&mut out.sends);
        for (to, mut msg) in sends {
            if let Some(qc) = msg.justify.take() {
                msg.justify = Some(self.forge(&qc));
            }
            if msg.kind == MsgKind::Generic && !msg.is_vote() {
                if let Some(node) = msg.node.take() {
                    let parent = node.parent.clone().unwrap_or_else(BlockNode::genesis);
                    let justify = node.justify.as_ref().map(|qc| self.forge(qc));
                    msg.node = Some(BlockNode::at_height(&parent, node.cmd.clone(), node.height, justify));
                }
            }
            out.sends.push((to, msg));
        }
        let entered: Vec<View> = out.timers.iter().map(|(v, _)| *v).collect();
        for view in entered {
            self.inject(view, &mut out);
        }
        out
    }

    /// Broadcasts a forged decision (basic) or a proposal for the next
    /// view this replica leads, justified by a forged certificate.
    fn inject(&mut self, view: View, out: &mut Output) {
        let n = self.ctx.n;
        let genesis = BlockNode::genesis();
        let fake = BlockNode::child(&genesis, Command(format!("forged/{view}").into_bytes()), None);
        let decide = Message::new(MsgKind::Decide, view).with_justify(self.garbage_qc(QcKind::Commit, view, fake));
        out.broadcast(n, &decide);
        let lead = (view + 1..=view + n as u64).find(|&v| leader_of(v, n) == self.id());
        if let Some(w) = lead {
            let anchor = BlockNode::at_height(&genesis, Command(b"anchor".to_vec()), w - 1, None);
            let qc = self.garbage_qc(QcKind::Generic, w - 1, anchor.clone());
            let node = BlockNode::at_height(&anchor, Command(format!("forged/{w}").into_bytes()), w, Some(qc));
            out.broadcast(n, &Message::new(MsgKind::Generic, w).with_node(node));
        }
        out.event(EventKind::Byzantine, view, None, "forged");
    }

    fn split(&self) -> [Vec<ReplicaId>; 2] {
        let correct = self.ctx.correct();
        let half = correct.len().div_ceil(2);
        let faulty: Vec<ReplicaId> = self.ctx.faulty.iter().copied().collect();
        let mut a: Vec<ReplicaId> = correct[..half].to_vec();
        let mut b: Vec<ReplicaId> = correct[half..].to_vec();
        a.extend(&faulty);
        b.extend(&faulty);
        [a, b]
    }

    fn equivocate(&mut self, input: &Input, out: Output) -> Output {
        let id = self.id();
        let n = self.ctx.n;
        let mut result = Output {
            decisions: out.decisions,
            events: out.events,
            timers: out.timers,
            sends: Vec::new(),
        };
        if let Input::Message { msg, .. } = input {
            self.collect_vote(msg, &mut result);
        }
        for (to, msg) in out.sends {
            if !is_leader_msg(&msg) || leader_of(msg.view, n) != id {
                result.sends.push((to, msg));
                continue;
            }
            let opening = matches!(msg.kind, MsgKind::Prepare | MsgKind::Generic);
            if opening && msg.view > self.eq_view {
                self.open_branches(&msg, &mut result);
            }
        }
        result
    }

    fn open_branches(&mut self, msg: &Message, out: &mut Output) {
        let view = msg.view;
        let Some(orig) = msg.node.clone() else { return };
        self.eq_view = view;
        self.branches.clear();
        let parent = orig.parent.clone().unwrap_or_else(BlockNode::genesis);
        let targets = self.split();
        let mut ids = Vec::new();
        for (tag, targets) in ["A", "B"].into_iter().zip(targets) {
            let mut cmd = orig.cmd.0.clone();
            cmd.extend_from_slice(format!("/{tag}").as_bytes());
            let node = BlockNode::at_height(&parent, Command(cmd), orig.height, orig.justify.clone());
            ids.push(node.id.short());
            let mut m = Message::new(msg.kind, view).with_node(node.clone());
            m.justify = msg.justify.clone();
            for &t in &targets {
                out.send(t, m.clone());
            }
            if msg.kind == MsgKind::Generic {
                let next = leader_of(view + 1, self.ctx.n);
                for &j in &self.ctx.faulty {
                    let vote = self.ctx.sign(j, QcKind::Generic, view, &node);
                    let v = Message::new(MsgKind::GenericVote, view).with_node(node.clone()).with_vote(vote);
                    out.send(next, v);
                }
            }
            self.branches.push(Branch {
                node,
                targets,
                votes: HashMap::new(),
            });
        }
        out.event(EventKind::Byzantine, view, None, format!("equivocate {} {}", ids[0], ids[1]));
        if msg.kind == MsgKind::Prepare {
            for b in 0..self.branches.len() {
                self.add_colluder_votes(b, QcKind::Prepare, out);
            }
        }
    }

    fn add_colluder_votes(&mut self, b: usize, kind: QcKind, out: &mut Output) {
        let faulty: Vec<ReplicaId> = self.ctx.faulty.iter().copied().collect();
        for j in faulty {
            let vote = self.ctx.sign(j, kind, self.eq_view, &self.branches[b].node);
            self.add_vote(b, kind, vote, out);
        }
    }

    fn add_vote(&mut self, b: usize, kind: QcKind, vote: PartialSig, out: &mut Output) {
        let view = self.eq_view;
        let branch = &mut self.branches[b];
        let node = branch.node.clone();
        let set = branch
            .votes
            .entry(kind)
            .or_insert_with(|| VoteSet::new(kind, view, node));
        let Some(qc) = set.add(vote, self.ctx.checker.as_ref()) else {
            return;
        };
        let next = match kind {
            QcKind::Prepare => MsgKind::PreCommit,
            QcKind::PreCommit => MsgKind::Commit,
            QcKind::Commit => MsgKind::Decide,
            QcKind::Generic => return,
        };
        let m = Message::new(next, view).with_justify(qc);
        for &t in &branch.targets {
            out.send(t, m.clone());
        }
        if let Some(k) = next.vote_kind() {
            self.add_colluder_votes(b, k, out);
        }
    }

    fn collect_vote(&mut self, msg: &Message, out: &mut Output) {
        if msg.view != self.eq_view || msg.kind == MsgKind::GenericVote {
            return;
        }
        let (Some(vote), Some(node), Some(kind)) = (msg.vote, msg.node.as_ref(), msg.kind.vote_kind()) else {
            return;
        };
        let Some(b) = self.branches.iter().position(|br| br.node.id == node.id) else {
            return;
        };
        if vote_verifies(&vote, kind, msg.view, &node.id, &self.ctx.keys) {
            self.add_vote(b, kind, vote, out);
        }
    }
}

impl Replica for FaultyReplica {
    fn id(&self) -> ReplicaId {
        self.inner.id()
    }

    fn view(&self) -> View {
        self.inner.view()
    }

    fn step(&mut self, input: Input, now: Time) -> Output {
        if self.crashed {
            return Output::default();
        }
        if let Behavior::Crash { at } = self.behavior {
            if now >= at {
                self.crashed = true;
                let mut out = Output::default();
                out.event(EventKind::Crash, self.inner.view(), None, "");
                return out;
            }
        }
        let out = self.inner.step(input.clone(), now);
        match self.behavior {
            Behavior::Crash { .. } => out,
            Behavior::MuteLeader => self.mute(out),
            Behavior::VoteStuff => self.stuff(out),
            Behavior::InvalidQc => self.corrupt(out),
            Behavior::Equivocate => self.equivocate(&input, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn behavior_names_round_trip() {
        for b in [
            Behavior::Crash { at: 40 },
            Behavior::MuteLeader,
            Behavior::Equivocate,
            Behavior::VoteStuff,
            Behavior::InvalidQc,
        ] {
            assert_eq!(b.to_string().parse::<Behavior>().unwrap(), b);
        }
        assert_eq!("crash".parse::<Behavior>().unwrap(), Behavior::Crash { at: 0 });
        assert!("crashes".parse::<Behavior>().is_err());
        assert!("lazy".parse::<Behavior>().is_err());
    }
}
