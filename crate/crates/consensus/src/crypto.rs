//! Vote signing.
//!
//! The default scheme is a keyed hash: replica `i` signs `m` as
//! `SHA-256(k_i || m)`, and the shared [`KeyRing`] verifies. It is cheap and
//! deterministic, and only the holder of `k_i` can produce a valid signature
//! within the simulation. Any asymmetric scheme fits behind [`Signer`] and
//! [`Verifier`].

use std::fmt;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use crate::types::{NodeId, QcKind, ReplicaId, View};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Signature(pub [u8; 32]);

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0[..4]))
    }
}

pub trait Signer: Send + Sync {
    fn id(&self) -> ReplicaId;
    fn sign(&self, msg: &[u8]) -> Signature;
}

pub trait Verifier: Send + Sync {
    fn verify(&self, signer: ReplicaId, msg: &[u8], sig: &Signature) -> bool;
}

/// The bytes a vote signs: its type, view and node.
pub fn vote_bytes(kind: QcKind, view: View, node: &NodeId) -> Vec<u8> {
    let mut out = Vec::with_capacity(1 + 8 + 32);
    out.push(kind as u8);
    out.extend_from_slice(&view.to_be_bytes());
    out.extend_from_slice(&node.0);
    out
}

fn mac(key: &[u8; 32], msg: &[u8]) -> Signature {
    let mut h = Sha256::new();
    h.update(key);
    h.update(msg);
    Signature(h.finalize().into())
}

/// Keys of all replicas, derived from a seed.
#[derive(Clone)]
pub struct KeyRing {
    keys: Arc<Vec<[u8; 32]>>,
}

impl KeyRing {
    pub fn new(n: usize, seed: u64) -> Self {
        let keys = (0..n)
            .map(|i| {
                let mut h = Sha256::new();
                h.update(b"replica-key");
                h.update(seed.to_be_bytes());
                h.update((i as u64).to_be_bytes());
                h.finalize().into()
            })
            .collect();
        KeyRing {
            keys: Arc::new(keys),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// The signing capability of one replica.
    pub fn signer(&self, id: ReplicaId) -> KeySigner {
        KeySigner {
            id,
            key: self.keys[id],
        }
    }
}

impl Verifier for KeyRing {
    fn verify(&self, signer: ReplicaId, msg: &[u8], sig: &Signature) -> bool {
        self.keys.get(signer).is_some_and(|k| mac(k, msg) == *sig)
    }
}

#[derive(Clone)]
pub struct KeySigner {
    id: ReplicaId,
    key: [u8; 32],
}

impl Signer for KeySigner {
    fn id(&self) -> ReplicaId {
        self.id
    }

    fn sign(&self, msg: &[u8]) -> Signature {
        mac(&self.key, msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signatures_verify_only_for_their_signer_and_message() {
        let ring = KeyRing::new(4, 1);
        let s1 = ring.signer(1);
        let msg = vote_bytes(QcKind::Prepare, 3, &NodeId([7; 32]));
        let sig = s1.sign(&msg);
        assert!(ring.verify(1, &msg, &sig));
        assert!(!ring.verify(2, &msg, &sig));
        assert!(!ring.verify(9, &msg, &sig));
        let other = vote_bytes(QcKind::Commit, 3, &NodeId([7; 32]));
        assert!(!ring.verify(1, &other, &sig));
        assert_ne!(KeyRing::new(4, 2).signer(1).sign(&msg), sig);
    }
}
