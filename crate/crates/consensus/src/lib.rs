//! HotStuff over generalized quorums.

pub mod basic;
pub mod chained;
pub mod check;
pub mod crypto;
pub mod experiment;
pub mod fault;
pub mod qc;
pub mod replica;
pub mod sim;
pub mod trace;
pub mod types;

pub use basic::BasicReplica;
pub use chained::ChainedReplica;
pub use check::{
    accepted_from, check_invariants, check_liveness, check_safety, LivenessParams, LivenessVerdict,
    SafetyViolation, Stall,
};
pub use crypto::{KeyRing, KeySigner, Signature, Signer, Verifier};
pub use experiment::{evaluate, parse_experiment, parse_experiment_with, run_experiment, run_seed, Experiment, RunReport};
pub use fault::{Behavior, Collusion, FaultyReplica};
pub use qc::{genesis_id, qc_verify, VoteSet};
pub use replica::{Event, EventKind, Input, Output, Pacemaker, Replica, ReplicaConfig, Workload};
pub use sim::{correct_replica, run_simulation, SimConfig, Variant};
pub use trace::{Decision, Metrics, SimTrace, TraceEvent};
pub use types::{
    leader_of, BlockNode, Command, Message, MsgKind, NodeId, PartialSig, QcKind, QuorumCert, ReplicaId,
    Time, View,
};
