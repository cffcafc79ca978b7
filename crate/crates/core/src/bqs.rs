//! Quorum systems, fail-prone systems and their definitional checks.

use std::collections::HashSet;

use thiserror::Error;

use crate::formula::{Formula, FormulaError, Mbf};
use crate::party::{PartySet, Universe};

/// Default cap on the universe size accepted by quorum enumeration.
pub const DEFAULT_ENUMERATION_BOUND: usize = 24;

/// Cap on intermediate expansion terms, guarding memory.
const MAX_EXPANSION_TERMS: usize = 20_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BqsError {
    #[error("a quorum system needs at least one quorum")]
    NoQuorums,
    #[error("quorums must be non-empty")]
    EmptyQuorum,
    #[error("set {0:?} contains another set of the family")]
    NotAntichain(PartySet),
    #[error("set {0:?} is not inside the universe")]
    OutsideUniverse(PartySet),
    #[error("universe of {size} parties exceeds the enumeration bound {bound}")]
    UniverseTooLarge { size: usize, bound: usize },
    #[error("enumeration exceeds {0} intermediate sets")]
    TooManyTerms(usize),
    #[error("fail-prone system violates the Q3 condition; no quorum system exists")]
    Q3Violated,
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

fn check_antichain(universe: &Universe, sets: &[PartySet]) -> Result<(), BqsError> {
    let full = universe.full();
    for (i, &a) in sets.iter().enumerate() {
        if !a.is_subset(full) {
            return Err(BqsError::OutsideUniverse(a));
        }
        for (j, &b) in sets.iter().enumerate() {
            if i != j && b.is_subset(a) {
                return Err(BqsError::NotAntichain(a));
            }
        }
    }
    Ok(())
}

/// A Byzantine quorum system given by its minimal quorums.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuorumSystem {
    universe: Universe,
    quorums: Vec<PartySet>,
}

impl QuorumSystem {
    /// Validates non-emptiness and the antichain property. Duplicates are
    /// merged; quorums are kept sorted.
    pub fn new(universe: Universe, quorums: Vec<PartySet>) -> Result<Self, BqsError> {
        let mut quorums = quorums;
        quorums.sort();
        quorums.dedup();
        if quorums.is_empty() {
            return Err(BqsError::NoQuorums);
        }
        if quorums.iter().any(|q| q.is_empty()) {
            return Err(BqsError::EmptyQuorum);
        }
        check_antichain(&universe, &quorums)?;
        Ok(QuorumSystem { universe, quorums })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn quorums(&self) -> &[PartySet] {
        &self.quorums
    }

    pub fn len(&self) -> usize {
        self.quorums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quorums.is_empty()
    }

    /// Whether `set` contains some quorum.
    pub fn contains_quorum(&self, set: PartySet) -> bool {
        self.quorums.iter().any(|q| q.is_subset(set))
    }
}

/// Access to a fail-prone system without necessarily materializing it.
pub trait FailProne {
    fn universe(&self) -> &Universe;

    /// Whether some fail-prone set contains `set`.
    fn covers(&self, set: PartySet) -> bool;

    /// Visits the maximal fail-prone sets until `visit` returns `false`.
    fn for_each_set(&self, visit: &mut dyn FnMut(PartySet) -> bool);

    /// A fail-prone set containing `set`, if any.
    fn cover_of(&self, set: PartySet) -> Option<PartySet> {
        let mut found = None;
        self.for_each_set(&mut |f| {
            if set.is_subset(f) {
                found = Some(f);
                false
            } else {
                true
            }
        });
        found
    }
}

/// An explicit fail-prone system: an antichain of party sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailProneSystem {
    universe: Universe,
    sets: Vec<PartySet>,
    max_len: usize,
}

impl FailProneSystem {
    pub fn new(universe: Universe, sets: Vec<PartySet>) -> Result<Self, BqsError> {
        let mut sets = sets;
        sets.sort();
        sets.dedup();
        check_antichain(&universe, &sets)?;
        let max_len = sets.iter().map(|s| s.len()).max().unwrap_or(0);
        Ok(FailProneSystem {
            universe,
            sets,
            max_len,
        })
    }

    /// All `f`-subsets of the universe.
    pub fn threshold(universe: Universe, f: usize) -> Result<Self, BqsError> {
        let n = universe.len();
        let sets = k_subsets(n, f);
        FailProneSystem::new(universe, sets)
    }

    /// `{P \ Q | Q in quorums}`.
    pub fn canonical_of(quorums: &QuorumSystem) -> Self {
        let n = quorums.universe.len();
        let sets = quorums.quorums.iter().map(|q| q.complement(n)).collect();
        FailProneSystem::new(quorums.universe.clone(), sets)
            .expect("complements of an antichain form an antichain")
    }

    pub fn sets(&self) -> &[PartySet] {
        &self.sets
    }

    /// `true` iff no three fail-prone sets (repetition allowed) cover the
    /// universe.
    pub fn q3_holds(&self) -> bool {
        self.q3_witness().is_none()
    }

    /// Three fail-prone sets whose union is the universe, if they exist.
    pub fn q3_witness(&self) -> Option<(PartySet, PartySet, PartySet)> {
        let n = self.universe.len();
        for (i, &a) in self.sets.iter().enumerate() {
            for &b in &self.sets[i..] {
                let rest = a.union(b).complement(n);
                if self.covers(rest) {
                    return Some((a, b, self.cover_of(rest).expect("covered")));
                }
            }
        }
        None
    }
}

impl FailProne for FailProneSystem {
    fn universe(&self) -> &Universe {
        &self.universe
    }

    fn covers(&self, set: PartySet) -> bool {
        if set.len() > self.max_len {
            return false;
        }
        self.sets.iter().any(|&f| set.is_subset(f))
    }

    fn for_each_set(&self, visit: &mut dyn FnMut(PartySet) -> bool) {
        for &f in &self.sets {
            if !visit(f) {
                break;
            }
        }
    }
}

/// "Any `b` parties may fail": every `b`-subset is fail-prone.
#[derive(Debug, Clone)]
pub struct AnySubset {
    universe: Universe,
    b: usize,
}

impl AnySubset {
    pub fn new(universe: Universe, b: usize) -> Self {
        AnySubset { universe, b }
    }
}

impl FailProne for AnySubset {
    fn universe(&self) -> &Universe {
        &self.universe
    }

    fn covers(&self, set: PartySet) -> bool {
        set.len() <= self.b.min(self.universe.len())
    }

    fn for_each_set(&self, visit: &mut dyn FnMut(PartySet) -> bool) {
        let n = self.universe.len();
        for_each_k_subset(n, self.b.min(n), &mut |s| visit(s));
    }
}

/// The canonical fail-prone system of a formula: complements of its
/// quorums, queried through formula evaluation.
#[derive(Debug, Clone)]
pub struct CanonicalFailProne<'a> {
    mbf: &'a Mbf,
    quorums: &'a QuorumSystem,
}

impl<'a> CanonicalFailProne<'a> {
    /// `quorums` must be the minimal quorums of `mbf`.
    pub fn new(mbf: &'a Mbf, quorums: &'a QuorumSystem) -> Self {
        CanonicalFailProne { mbf, quorums }
    }
}

impl FailProne for CanonicalFailProne<'_> {
    fn universe(&self) -> &Universe {
        self.mbf.universe()
    }

    fn covers(&self, set: PartySet) -> bool {
        // set is inside P \ Q for some quorum Q iff P \ set holds a quorum
        self.mbf.eval(set.complement(self.mbf.universe().len()))
    }

    fn for_each_set(&self, visit: &mut dyn FnMut(PartySet) -> bool) {
        let n = self.mbf.universe().len();
        for &q in self.quorums.quorums() {
            if !visit(q.complement(n)) {
                break;
            }
        }
    }
}

/// A failed BQS property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UniverseMismatch,
    /// `q1 ∩ q2` lies inside the fail-prone set.
    Consistency {
        q1: PartySet,
        q2: PartySet,
        fail_prone: PartySet,
    },
    /// Every quorum meets the fail-prone set.
    Availability { fail_prone: PartySet },
}

impl Violation {
    pub fn describe(&self, universe: &Universe) -> String {
        match self {
            Violation::UniverseMismatch => "quorum and fail-prone systems use different universes".into(),
            Violation::Consistency { q1, q2, fail_prone } => format!(
                "consistency: {} ∩ {} ⊆ {}",
                universe.display(*q1),
                universe.display(*q2),
                universe.display(*fail_prone)
            ),
            Violation::Availability { fail_prone } => format!(
                "availability: every quorum meets {}",
                universe.display(*fail_prone)
            ),
        }
    }
}

/// Checks consistency (`Q1 ∩ Q2 ⊄ F`) and availability (`∃Q: F ∩ Q = ∅`).
///
/// Operates on minimal quorums: supersets cannot break consistency, and
/// availability only needs one disjoint quorum.
pub fn verify_bqs(q: &QuorumSystem, fp: &impl FailProne) -> Result<(), Violation> {
    if q.universe() != fp.universe() {
        return Err(Violation::UniverseMismatch);
    }
    verify_consistency(q, fp)?;
    verify_availability(q, fp)
}

pub fn verify_consistency(q: &QuorumSystem, fp: &impl FailProne) -> Result<(), Violation> {
    let qs = q.quorums();
    for (i, &q1) in qs.iter().enumerate() {
        for &q2 in &qs[i..] {
            let meet = q1.intersection(q2);
            if fp.covers(meet) {
                let fail_prone = fp.cover_of(meet).unwrap_or_default();
                return Err(Violation::Consistency { q1, q2, fail_prone });
            }
        }
    }
    Ok(())
}

pub fn verify_availability(q: &QuorumSystem, fp: &impl FailProne) -> Result<(), Violation> {
    let mut result = Ok(());
    fp.for_each_set(&mut |f| {
        if q.quorums().iter().any(|&quorum| quorum.is_disjoint(f)) {
            true
        } else {
            result = Err(Violation::Availability { fail_prone: f });
            false
        }
    });
    result
}

/// The canonical BQS `{P \ F | F in fail-prone}`; requires Q3.
pub fn canonical_bqs(fp: &FailProneSystem) -> Result<QuorumSystem, BqsError> {
    if !fp.q3_holds() {
        return Err(BqsError::Q3Violated);
    }
    let n = fp.universe.len();
    QuorumSystem::new(
        fp.universe.clone(),
        fp.sets.iter().map(|f| f.complement(n)).collect(),
    )
}

/// Distinct sets obtained by letting every threshold pick exactly `k` of its
/// operands and every literal contribute itself. Every minimal quorum is
/// among them; not every one of them is minimal.
pub fn expand_quorums(mbf: &Mbf, bound: usize) -> Result<Vec<PartySet>, BqsError> {
    let size = mbf.universe().len();
    if size > bound {
        return Err(BqsError::UniverseTooLarge { size, bound });
    }
    let mut terms = expand(mbf.formula(), mbf.universe())?;
    terms.sort();
    Ok(terms)
}

fn expand(f: &Formula, universe: &Universe) -> Result<Vec<PartySet>, BqsError> {
    match f {
        Formula::Literal(p) => {
            let i = universe
                .index_of(p.as_str())
                .ok_or_else(|| FormulaError::UnknownParty(p.clone()))?;
            Ok(vec![PartySet::singleton(i)])
        }
        _ => {
            let (k, _) = f.as_threshold().expect("operator");
            let children = f
                .children()
                .iter()
                .map(|c| expand(c, universe))
                .collect::<Result<Vec<_>, _>>()?;
            let mut out = HashSet::new();
            let mut combo = Vec::with_capacity(k);
            combinations(children.len(), k, &mut combo, &mut |picked| {
                let mut acc = vec![PartySet::EMPTY];
                for &c in picked {
                    let mut next = HashSet::with_capacity(acc.len() * children[c].len());
                    for &a in &acc {
                        for &t in &children[c] {
                            next.insert(a.union(t));
                        }
                    }
                    if next.len() > MAX_EXPANSION_TERMS {
                        return Err(BqsError::TooManyTerms(MAX_EXPANSION_TERMS));
                    }
                    acc = next.into_iter().collect();
                }
                out.extend(acc);
                if out.len() > MAX_EXPANSION_TERMS {
                    return Err(BqsError::TooManyTerms(MAX_EXPANSION_TERMS));
                }
                Ok(())
            })?;
            Ok(out.into_iter().collect())
        }
    }
}

fn combinations<E>(
    n: usize,
    k: usize,
    combo: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]) -> Result<(), E>,
) -> Result<(), E> {
    if combo.len() == k {
        return visit(combo);
    }
    let start = combo.last().map_or(0, |&c| c + 1);
    let remaining = k - combo.len();
    for c in start..=n - remaining {
        combo.push(c);
        combinations(n, k, combo, visit)?;
        combo.pop();
    }
    Ok(())
}

/// The minimal quorums (basis) of a formula.
///
/// Refuses universes larger than `bound` parties; see
/// [`DEFAULT_ENUMERATION_BOUND`].
pub fn enumerate_minimal_quorums(mbf: &Mbf, bound: usize) -> Result<QuorumSystem, BqsError> {
    let terms = expand_quorums(mbf, bound)?;
    let minimal = terms
        .into_iter()
        .filter(|&s| s.iter().all(|p| !mbf.eval(s.without(p))))
        .collect();
    QuorumSystem::new(mbf.universe().clone(), minimal)
}

/// Q3 for the canonical fail-prone system of a formula, decided without
/// enumerating it: searches for three quorums with empty common
/// intersection by assigning each party the quorum it is excluded from.
pub fn canonical_q3_holds(mbf: &Mbf) -> bool {
    canonical_q3_witness(mbf).is_none()
}

/// Three quorums (not necessarily minimal) with empty common intersection.
pub fn canonical_q3_witness(mbf: &Mbf) -> Option<[PartySet; 3]> {
    let n = mbf.universe().len();
    let order = shallow_first(mbf);
    let full = PartySet::full(n);
    if !mbf.eval(full) {
        // no quorum at all: nothing to intersect
        return None;
    }
    let mut avail = [full; 3];
    if search(mbf, &order, 0, &mut avail, 0) {
        Some(avail)
    } else {
        None
    }
}

fn search(mbf: &Mbf, order: &[usize], at: usize, avail: &mut [PartySet; 3], used: usize) -> bool {
    if at == order.len() {
        return true;
    }
    let p = order[at];
    // colors are interchangeable: only open one new color per step
    for color in 0..(used + 1).min(3) {
        let before = avail[color];
        avail[color] = before.without(p);
        if mbf.eval(avail[color]) && search(mbf, order, at + 1, avail, used.max(color + 1)) {
            return true;
        }
        avail[color] = before;
    }
    false
}

/// Parties sorted by the depth of their shallowest occurrence, then by first
/// appearance; deciding shallow parties first prunes the search early.
fn shallow_first(mbf: &Mbf) -> Vec<usize> {
    fn walk(f: &Formula, depth: usize, u: &Universe, best: &mut [usize]) {
        match f {
            Formula::Literal(p) => {
                let i = u.index_of(p.as_str()).expect("compiled formula");
                best[i] = best[i].min(depth);
            }
            _ => f.children().iter().for_each(|c| walk(c, depth + 1, u, best)),
        }
    }
    let u = mbf.universe();
    let mut best = vec![usize::MAX; u.len()];
    walk(mbf.formula(), 0, u, &mut best);
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by_key(|&i| (best[i], i));
    order
}

fn k_subsets(n: usize, k: usize) -> Vec<PartySet> {
    let mut out = Vec::new();
    for_each_k_subset(n, k, &mut |s| {
        out.push(s);
        true
    });
    out
}

fn for_each_k_subset(n: usize, k: usize, visit: &mut dyn FnMut(PartySet) -> bool) {
    let mut combo = Vec::with_capacity(k);
    let _ = combinations(n, k, &mut combo, &mut |c| {
        if visit(c.iter().copied().collect()) {
            Ok(())
        } else {
            Err(())
        }
    });
}
