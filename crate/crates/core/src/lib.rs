//! Generalized Byzantine quorum systems.
//!
//! A quorum system can be described by a monotone Boolean formula ([`Formula`])
//! with threshold operators or by a monotone span program ([`Msp`]) over the
//! prime field `Z_p` with `p = 2^31 - 1`. Both encodings answer the same
//! question through the [`QuorumChecker`] trait: does a set of parties contain
//! a quorum?
//!
//! The crate also verifies the definitional properties of a Byzantine quorum
//! system (consistency, availability, the Q3 condition) and generates the
//! well-known families: layered 2L1C, attribute-based systems and the
//! dissemination M-Grid.

pub mod bqs;
pub mod checker;
pub mod config;
pub mod constructions;
pub mod field;
pub mod formula;
pub mod matrix;
pub mod msp;
pub mod party;
pub mod random;

pub use bqs::{
    canonical_bqs, canonical_q3_holds, enumerate_minimal_quorums, expand_quorums, verify_bqs,
    AnySubset, BqsError, CanonicalFailProne, FailProne, FailProneSystem, QuorumSystem, Violation,
};
pub use checker::{Counting, Encoding, QuorumChecker};
pub use field::{FieldError, Fp};
pub use formula::{Formula, FormulaError, Mbf};
pub use config::{emit_document, emit_spec, parse_document, parse_spec, AttributeDecl, ConfigError, SpecDocument};
pub use constructions::{
    attribute_msp, layered_2l1c, mgrid, os_location, AttributeSystem, ConstructionError,
    GridLayout, MGrid,
};
pub use matrix::{LupFactors, Matrix};
pub use msp::{
    build_msp, insert, predicted_dims, vandermonde_msp, AcceptanceWitness, LupMsp, Msp, MspError,
};
pub use party::{Party, PartySet, Universe, UniverseError, MAX_PARTIES};
