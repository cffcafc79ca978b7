//! Certificate verification and vote collection.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use genquorum_core::{PartySet, QuorumChecker};

use crate::crypto::{vote_bytes, Verifier};
use crate::types::{BlockNode, NodeId, PartialSig, QcKind, QuorumCert, ReplicaId, View};

/// The id of the shared genesis node.
pub fn genesis_id() -> NodeId {
    static ID: OnceLock<NodeId> = OnceLock::new();
    *ID.get_or_init(|| BlockNode::genesis().id)
}

/// `true` iff every signature verifies over `(kind, view, node)` and the
/// distinct signers contain a quorum. The genesis certificate is valid by
/// definition.
pub fn qc_verify(qc: &QuorumCert, checker: &dyn QuorumChecker, verifier: &dyn Verifier) -> bool {
    if qc.is_genesis() {
        return qc.node.id == genesis_id();
    }
    if qc.view == 0 {
        return false;
    }
    let msg = vote_bytes(qc.kind, qc.view, &qc.node.id);
    let mut signers = PartySet::EMPTY;
    let n = checker.universe().len();
    for ps in &qc.sigs {
        if ps.signer >= n || !verifier.verify(ps.signer, &msg, &ps.sig) {
            return false;
        }
        signers.insert(ps.signer);
    }
    checker.is_quorum(signers)
}

/// Votes for one `(kind, view, node)`, keyed by signer.
#[derive(Debug, Clone)]
pub struct VoteSet {
    pub kind: QcKind,
    pub view: View,
    pub node: Arc<BlockNode>,
    sigs: BTreeMap<ReplicaId, PartialSig>,
    done: bool,
}

impl VoteSet {
    pub fn new(kind: QcKind, view: View, node: Arc<BlockNode>) -> Self {
        VoteSet {
            kind,
            view,
            node,
            sigs: BTreeMap::new(),
            done: false,
        }
    }

    pub fn signers(&self) -> PartySet {
        self.sigs.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.sigs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigs.is_empty()
    }

    /// Adds a vote whose signature the caller has verified; a second vote
    /// from the same signer is ignored. Returns the certificate the first
    /// time the signers form a quorum.
    pub fn add(&mut self, vote: PartialSig, checker: &dyn QuorumChecker) -> Option<QuorumCert> {
        self.sigs.entry(vote.signer).or_insert(vote);
        if self.done || !checker.is_quorum(self.signers()) {
            return None;
        }
        self.done = true;
        Some(QuorumCert {
            kind: self.kind,
            view: self.view,
            node: self.node.clone(),
            sigs: self.sigs.values().copied().collect(),
        })
    }
}

/// Checks a vote's signature against the expected `(kind, view, node)`.
pub fn vote_verifies(
    vote: &PartialSig,
    kind: QcKind,
    view: View,
    node: &NodeId,
    verifier: &dyn Verifier,
) -> bool {
    verifier.verify(vote.signer, &vote_bytes(kind, view, node), &vote.sig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{KeyRing, Signature, Signer};
    use crate::types::Command;
    use genquorum_core::{Counting, Universe};

    fn setup() -> (Counting, KeyRing, Arc<BlockNode>) {
        let u = Universe::numbered("r", 4).unwrap();
        let g = BlockNode::genesis();
        let node = BlockNode::child(&g, Command(b"c".to_vec()), None);
        (Counting::new(u, 1), KeyRing::new(4, 0), node)
    }

    fn sign(ring: &KeyRing, ids: &[usize], node: &Arc<BlockNode>) -> Vec<PartialSig> {
        ids.iter()
            .map(|&i| PartialSig {
                signer: i,
                sig: ring
                    .signer(i)
                    .sign(&vote_bytes(QcKind::Prepare, 2, &node.id)),
            })
            .collect()
    }

    #[test]
    fn three_of_four_verifies() {
        let (checker, ring, node) = setup();
        let qc = QuorumCert {
            kind: QcKind::Prepare,
            view: 2,
            node: node.clone(),
            sigs: sign(&ring, &[0, 1, 3], &node),
        };
        assert!(qc_verify(&qc, &checker, &ring));
        let mut bad = qc.clone();
        bad.sigs[1].sig = Signature([0; 32]);
        assert!(!qc_verify(&bad, &checker, &ring));
        let mut dup = qc.clone();
        dup.sigs = sign(&ring, &[0, 1, 1], &node);
        assert!(!qc_verify(&dup, &checker, &ring));
        let mut relabeled = qc.clone();
        relabeled.kind = QcKind::Commit;
        assert!(!qc_verify(&relabeled, &checker, &ring));
    }

    #[test]
    fn genesis_certificate() {
        let (checker, ring, node) = setup();
        let g = BlockNode::genesis();
        assert!(qc_verify(&QuorumCert::genesis(QcKind::Prepare, &g), &checker, &ring));
        let fake_root = QuorumCert {
            kind: QcKind::Prepare,
            view: 0,
            node: BlockNode::at_height(&node, Command::default(), 5, None),
            sigs: vec![],
        };
        assert!(!qc_verify(&fake_root, &checker, &ring));
    }

    #[test]
    fn vote_set_counts_each_signer_once() {
        let (checker, ring, node) = setup();
        let mut votes = VoteSet::new(QcKind::Prepare, 2, node.clone());
        let sigs = sign(&ring, &[0, 1, 2], &node);
        assert!(votes.add(sigs[0], &checker).is_none());
        assert!(votes.add(sigs[0], &checker).is_none());
        assert!(votes.add(sigs[1], &checker).is_none());
        assert_eq!(votes.len(), 2);
        let qc = votes.add(sigs[2], &checker).unwrap();
        assert!(qc_verify(&qc, &checker, &ring));
        assert!(votes.add(sigs[2], &checker).is_none());
    }
}
