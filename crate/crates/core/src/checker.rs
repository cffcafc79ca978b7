//! The common interface of all quorum encodings.

use std::fmt;
use std::str::FromStr;

use crate::formula::Mbf;
use crate::party::{PartySet, Universe};

/// The available quorum encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    Mbf,
    Msp,
    MspLup,
    Counting,
}

impl Encoding {
    pub const ALL: [Encoding; 4] = [Encoding::Mbf, Encoding::Msp, Encoding::MspLup, Encoding::Counting];

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Mbf => "mbf",
            Encoding::Msp => "msp",
            Encoding::MspLup => "msp-lup",
            Encoding::Counting => "counting",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Encoding::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown encoding {s:?}; expected mbf, msp, msp-lup or counting"))
    }
}

/// Decides whether a set of parties contains a quorum.
pub trait QuorumChecker: Send + Sync {
    fn universe(&self) -> &Universe;

    fn is_quorum(&self, set: PartySet) -> bool;

    /// Bytes held by the encoding on the heap.
    fn heap_bytes(&self) -> usize;
}

impl QuorumChecker for Mbf {
    fn universe(&self) -> &Universe {
        Mbf::universe(self)
    }

    fn is_quorum(&self, set: PartySet) -> bool {
        self.eval(set)
    }

    fn heap_bytes(&self) -> usize {
        Mbf::heap_bytes(self)
    }
}

/// The classic threshold system: any `n - f` parties form a quorum.
#[derive(Debug, Clone)]
pub struct Counting {
    universe: Universe,
    f: usize,
}

impl Counting {
    pub fn new(universe: Universe, f: usize) -> Self {
        Counting { universe, f }
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn quorum_size(&self) -> usize {
        self.universe.len().saturating_sub(self.f)
    }
}

impl QuorumChecker for Counting {
    fn universe(&self) -> &Universe {
        &self.universe
    }

    fn is_quorum(&self, set: PartySet) -> bool {
        set.intersection(self.universe.full()).len() >= self.quorum_size()
    }

    fn heap_bytes(&self) -> usize {
        0
    }
}
