//! Parties, universes and compact party sets.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Upper bound on the number of parties a [`Universe`] may hold.
///
/// Party sets are stored as a single `u128` bitmask, which keeps subset
/// enumeration and quorum checks allocation-free.
pub const MAX_PARTIES: usize = 128;

/// A party identifier, unique within its universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Party(String);

impl Party {
    pub fn new(id: impl Into<String>) -> Self {
        Party(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Party {
    fn from(s: &str) -> Self {
        Party(s.to_owned())
    }
}

impl From<String> for Party {
    fn from(s: String) -> Self {
        Party(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UniverseError {
    #[error("party `{0}` declared twice")]
    Duplicate(Party),
    #[error("universe of {0} parties exceeds the supported maximum of {MAX_PARTIES}")]
    TooLarge(usize),
    #[error("unknown party `{0}`")]
    Unknown(String),
}

/// An ordered set of parties. The position of a party is its bit index in
/// every [`PartySet`] built against this universe.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Universe {
    parties: Vec<Party>,
    index: HashMap<Party, usize>,
}

impl Universe {
    pub fn new<I, P>(parties: I) -> Result<Self, UniverseError>
    where
        I: IntoIterator<Item = P>,
        P: Into<Party>,
    {
        let mut universe = Universe::default();
        for p in parties {
            let p = p.into();
            if universe.index.contains_key(&p) {
                return Err(UniverseError::Duplicate(p));
            }
            universe.index.insert(p.clone(), universe.parties.len());
            universe.parties.push(p);
        }
        if universe.parties.len() > MAX_PARTIES {
            return Err(UniverseError::TooLarge(universe.parties.len()));
        }
        Ok(universe)
    }

    /// `p0, p1, ..., p{n-1}`.
    pub fn numbered(prefix: &str, n: usize) -> Result<Self, UniverseError> {
        Universe::new((0..n).map(|i| format!("{prefix}{i}")))
    }

    pub fn len(&self) -> usize {
        self.parties.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parties.is_empty()
    }

    pub fn parties(&self) -> &[Party] {
        &self.parties
    }

    pub fn party(&self, index: usize) -> &Party {
        &self.parties[index]
    }

    pub fn index_of(&self, party: &str) -> Option<usize> {
        self.index.get(&Party::from(party)).copied()
    }

    pub fn contains(&self, party: &Party) -> bool {
        self.index.contains_key(party)
    }

    /// The set of all parties.
    pub fn full(&self) -> PartySet {
        PartySet::full(self.len())
    }

    /// Resolves party names into a set, failing on the first unknown name.
    pub fn set_of<I, S>(&self, names: I) -> Result<PartySet, UniverseError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = PartySet::EMPTY;
        for name in names {
            let name = name.as_ref();
            let i = self
                .index_of(name)
                .ok_or_else(|| UniverseError::Unknown(name.to_owned()))?;
            set.insert(i);
        }
        Ok(set)
    }

    pub fn names(&self, set: PartySet) -> Vec<&str> {
        set.iter().map(|i| self.parties[i].as_str()).collect()
    }

    /// Renders a set as `{a, b, c}`.
    pub fn display(&self, set: PartySet) -> String {
        format!("{{{}}}", self.names(set).join(", "))
    }
}

/// A subset of a universe, as a bitmask over party indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PartySet(u128);

impl PartySet {
    pub const EMPTY: PartySet = PartySet(0);

    pub fn from_bits(bits: u128) -> Self {
        PartySet(bits)
    }

    pub fn bits(self) -> u128 {
        self.0
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_PARTIES);
        if n == MAX_PARTIES {
            PartySet(u128::MAX)
        } else {
            PartySet((1u128 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        PartySet(1u128 << i)
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1u128 << i;
    }

    pub fn remove(&mut self, i: usize) {
        self.0 &= !(1u128 << i);
    }

    pub fn with(self, i: usize) -> Self {
        PartySet(self.0 | (1u128 << i))
    }

    pub fn without(self, i: usize) -> Self {
        PartySet(self.0 & !(1u128 << i))
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_PARTIES && self.0 >> i & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: PartySet) -> Self {
        PartySet(self.0 | other.0)
    }

    pub fn intersection(self, other: PartySet) -> Self {
        PartySet(self.0 & other.0)
    }

    pub fn difference(self, other: PartySet) -> Self {
        PartySet(self.0 & !other.0)
    }

    pub fn is_subset(self, other: PartySet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: PartySet) -> bool {
        self.0 & other.0 == 0
    }

    /// Complement relative to a universe of `n` parties.
    pub fn complement(self, n: usize) -> Self {
        PartySet(!self.0 & PartySet::full(n).0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl FromIterator<usize> for PartySet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut set = PartySet::EMPTY;
        for i in iter {
            set.insert(i);
        }
        set
    }
}

impl fmt::Debug for PartySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
