//! Nodes, certificates and protocol messages.

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::crypto::Signature;

pub type ReplicaId = usize;
pub type View = u64;
/// Simulated time in ticks.
pub type Time = u64;

/// Round-robin leader rotation.
pub fn leader_of(view: View, n: usize) -> ReplicaId {
    assert!(n >= 1, "leader rotation needs at least one replica");
    (view % n as u64) as ReplicaId
}

/// A SHA-256 node digest.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeId(pub [u8; 32]);

impl NodeId {
    /// The first 8 bytes in hex, as printed in traces.
    pub fn short(&self) -> String {
        hex::encode(&self.0[..8])
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.short())
    }
}

/// An opaque command batch.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Command(pub Vec<u8>);

impl fmt::Debug for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", String::from_utf8_lossy(&self.0))
    }
}

/// A node of the block tree. Parent links are shared pointers, so any node
/// carries its whole branch back to genesis.
pub struct BlockNode {
    pub id: NodeId,
    pub parent: Option<Arc<BlockNode>>,
    pub cmd: Command,
    pub height: u64,
    /// The certificate the node was proposed with (chained variant).
    pub justify: Option<QuorumCert>,
}

impl BlockNode {
    pub fn genesis() -> Arc<BlockNode> {
        Arc::new(BlockNode::build(None, Command::default(), 0, None))
    }

    /// A child of `parent` one level higher.
    pub fn child(parent: &Arc<BlockNode>, cmd: Command, justify: Option<QuorumCert>) -> Arc<BlockNode> {
        BlockNode::at_height(parent, cmd, parent.height + 1, justify)
    }

    pub fn at_height(
        parent: &Arc<BlockNode>,
        cmd: Command,
        height: u64,
        justify: Option<QuorumCert>,
    ) -> Arc<BlockNode> {
        Arc::new(BlockNode::build(Some(parent.clone()), cmd, height, justify))
    }

    fn build(parent: Option<Arc<BlockNode>>, cmd: Command, height: u64, justify: Option<QuorumCert>) -> Self {
        let mut h = Sha256::new();
        h.update(parent.as_ref().map(|p| p.id.0).unwrap_or_default());
        h.update(height.to_be_bytes());
        h.update((cmd.0.len() as u64).to_be_bytes());
        h.update(&cmd.0);
        if let Some(qc) = &justify {
            h.update([qc.kind as u8]);
            h.update(qc.view.to_be_bytes());
            h.update(qc.node.id.0);
        }
        BlockNode {
            id: NodeId(h.finalize().into()),
            parent,
            cmd,
            height,
            justify,
        }
    }

    /// Whether `ancestor` lies on this node's branch (a node extends itself).
    pub fn extends(&self, ancestor: &NodeId) -> bool {
        let mut cur = Some(self);
        while let Some(n) = cur {
            if n.id == *ancestor {
                return true;
            }
            cur = n.parent.as_deref();
        }
        false
    }

    /// Neither node extends the other.
    pub fn conflicts(&self, other: &BlockNode) -> bool {
        !self.extends(&other.id) && !other.extends(&self.id)
    }

    pub fn parent_id(&self) -> Option<NodeId> {
        self.parent.as_ref().map(|p| p.id)
    }

    /// Heights strictly increase along parent links.
    pub fn well_formed(&self) -> bool {
        self.parent.as_ref().map_or(self.height == 0, |p| p.height < self.height)
    }
}

impl fmt::Debug for BlockNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Node({} h={} cmd={:?})", self.id, self.height, self.cmd)
    }
}

/// Phases a certificate can attest to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QcKind {
    Prepare = 1,
    PreCommit = 2,
    Commit = 3,
    Generic = 4,
}

impl QcKind {
    pub fn name(self) -> &'static str {
        match self {
            QcKind::Prepare => "prepare",
            QcKind::PreCommit => "pre-commit",
            QcKind::Commit => "commit",
            QcKind::Generic => "generic",
        }
    }
}

/// One replica's signature on a vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartialSig {
    pub signer: ReplicaId,
    pub sig: Signature,
}

/// A quorum certificate: the concatenated votes of a quorum.
#[derive(Debug, Clone)]
pub struct QuorumCert {
    pub kind: QcKind,
    pub view: View,
    pub node: Arc<BlockNode>,
    pub sigs: Vec<PartialSig>,
}

impl QuorumCert {
    /// The certificate every replica starts from: view 0, no signatures.
    pub fn genesis(kind: QcKind, genesis: &Arc<BlockNode>) -> Self {
        QuorumCert {
            kind,
            view: 0,
            node: genesis.clone(),
            sigs: Vec::new(),
        }
    }

    pub fn is_genesis(&self) -> bool {
        self.view == 0 && self.sigs.is_empty() && self.node.parent.is_none() && self.node.height == 0
    }

    pub fn matches(&self, kind: QcKind, view: View) -> bool {
        self.kind == kind && self.view == view
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MsgKind {
    NewView,
    Prepare,
    PreCommit,
    Commit,
    Decide,
    Generic,
    GenericVote,
}

impl MsgKind {
    pub fn name(self) -> &'static str {
        match self {
            MsgKind::NewView => "new-view",
            MsgKind::Prepare => "prepare",
            MsgKind::PreCommit => "pre-commit",
            MsgKind::Commit => "commit",
            MsgKind::Decide => "decide",
            MsgKind::Generic => "generic",
            MsgKind::GenericVote => "generic-vote",
        }
    }

    /// The certificate kind a vote of this message kind contributes to.
    pub fn vote_kind(self) -> Option<QcKind> {
        match self {
            MsgKind::Prepare => Some(QcKind::Prepare),
            MsgKind::PreCommit => Some(QcKind::PreCommit),
            MsgKind::Commit => Some(QcKind::Commit),
            MsgKind::GenericVote => Some(QcKind::Generic),
            _ => None,
        }
    }
}

/// A protocol message. Votes carry `vote`; leader messages carry `node`
/// and/or `justify`.
#[derive(Debug, Clone)]
pub struct Message {
    pub kind: MsgKind,
    pub view: View,
    pub node: Option<Arc<BlockNode>>,
    pub justify: Option<QuorumCert>,
    pub vote: Option<PartialSig>,
}

impl Message {
    pub fn new(kind: MsgKind, view: View) -> Self {
        Message {
            kind,
            view,
            node: None,
            justify: None,
            vote: None,
        }
    }

    pub fn with_node(mut self, node: Arc<BlockNode>) -> Self {
        self.node = Some(node);
        self
    }

    pub fn with_justify(mut self, qc: QuorumCert) -> Self {
        self.justify = Some(qc);
        self
    }

    pub fn with_vote(mut self, vote: PartialSig) -> Self {
        self.vote = Some(vote);
        self
    }

    pub fn is_vote(&self) -> bool {
        self.vote.is_some()
    }

    /// The node a message is about: its own node, else its certificate's.
    pub fn subject(&self) -> Option<NodeId> {
        self.node
            .as_ref()
            .map(|n| n.id)
            .or_else(|| self.justify.as_ref().map(|qc| qc.node.id))
    }
}
