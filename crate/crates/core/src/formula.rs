//! Monotone Boolean formulas with threshold operators.

use std::fmt;

use thiserror::Error;

use crate::party::{Party, PartySet, Universe, UniverseError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("threshold {k} out of range for {arity} operands")]
    ThresholdRange { k: usize, arity: usize },
    #[error("operator without operands")]
    Empty,
    #[error("formula mentions `{0}`, which is not in the universe")]
    UnknownParty(Party),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error("operator arity {0} exceeds the compiled-formula limit")]
    TooWide(usize),
}

/// A monotone Boolean formula over party literals.
///
/// `And` and `Or` are sugar for `m`-of-`m` and 1-of-`m` thresholds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Literal(Party),
    Threshold { k: usize, of: Vec<Formula> },
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn literal(p: impl Into<Party>) -> Self {
        Formula::Literal(p.into())
    }

    /// A validated `k`-of-`of.len()` threshold.
    pub fn threshold(k: usize, of: Vec<Formula>) -> Result<Self, FormulaError> {
        if of.is_empty() {
            return Err(FormulaError::Empty);
        }
        if k < 1 || k > of.len() {
            return Err(FormulaError::ThresholdRange { k, arity: of.len() });
        }
        Ok(Formula::Threshold { k, of })
    }

    /// `k`-of-`n` over plain party names.
    pub fn threshold_of<I, P>(k: usize, parties: I) -> Result<Self, FormulaError>
    where
        I: IntoIterator<Item = P>,
        P: Into<Party>,
    {
        Formula::threshold(k, parties.into_iter().map(Formula::literal).collect())
    }

    pub fn and(of: Vec<Formula>) -> Result<Self, FormulaError> {
        if of.is_empty() {
            return Err(FormulaError::Empty);
        }
        Ok(Formula::And(of))
    }

    pub fn or(of: Vec<Formula>) -> Result<Self, FormulaError> {
        if of.is_empty() {
            return Err(FormulaError::Empty);
        }
        Ok(Formula::Or(of))
    }

    pub fn children(&self) -> &[Formula] {
        match self {
            Formula::Literal(_) => &[],
            Formula::Threshold { of, .. } | Formula::And(of) | Formula::Or(of) => of,
        }
    }

    /// The `(k, m)` pair of an operator node, `None` for literals.
    pub fn as_threshold(&self) -> Option<(usize, usize)> {
        match self {
            Formula::Literal(_) => None,
            Formula::Threshold { k, of } => Some((*k, of.len())),
            Formula::And(of) => Some((of.len(), of.len())),
            Formula::Or(of) => Some((1, of.len())),
        }
    }

    /// Checks threshold bounds and non-emptiness everywhere in the tree.
    pub fn validate(&self) -> Result<(), FormulaError> {
        if let Some((k, m)) = self.as_threshold() {
            if m == 0 {
                return Err(FormulaError::Empty);
            }
            if k < 1 || k > m {
                return Err(FormulaError::ThresholdRange { k, arity: m });
            }
        }
        self.children().iter().try_for_each(Formula::validate)
    }

    /// Rewrites every `And`/`Or` into the equivalent threshold.
    pub fn desugar(&self) -> Formula {
        match self {
            Formula::Literal(p) => Formula::Literal(p.clone()),
            _ => {
                let (k, _) = self.as_threshold().expect("operator");
                Formula::Threshold {
                    k,
                    of: self.children().iter().map(Formula::desugar).collect(),
                }
            }
        }
    }

    /// Parties in order of first appearance (depth-first, left to right).
    pub fn parties(&self) -> Vec<Party> {
        let mut out: Vec<Party> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        self.visit_literals(&mut |p| {
            if seen.insert(p.clone()) {
                out.push(p.clone());
            }
        });
        out
    }

    pub fn universe(&self) -> Result<Universe, FormulaError> {
        Ok(Universe::new(self.parties())?)
    }

    fn visit_literals(&self, f: &mut impl FnMut(&Party)) {
        match self {
            Formula::Literal(p) => f(p),
            _ => self.children().iter().for_each(|c| c.visit_literals(f)),
        }
    }

    /// Number of operator nodes (`c` in the MSP size law).
    pub fn operator_count(&self) -> usize {
        match self {
            Formula::Literal(_) => 0,
            _ => 1 + self.children().iter().map(Formula::operator_count).sum::<usize>(),
        }
    }

    /// Total number of nodes, operators and literals.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Formula::size).sum::<usize>()
    }

    /// Recursive evaluation: a literal holds when `member` says so, a
    /// threshold holds when at least `k` operands hold.
    pub fn eval_with(&self, member: &impl Fn(&Party) -> bool) -> bool {
        match self {
            Formula::Literal(p) => member(p),
            _ => {
                let (k, _) = self.as_threshold().expect("operator");
                let mut count = 0;
                for c in self.children() {
                    if c.eval_with(member) {
                        count += 1;
                        if count >= k {
                            return true;
                        }
                    }
                }
                false
            }
        }
    }

    /// Evaluates against a set of party names.
    pub fn eval_names<S: AsRef<str>>(&self, members: &[S]) -> bool {
        self.eval_with(&|p: &Party| members.iter().any(|m| m.as_ref() == p.as_str()))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, of: &[Formula]| -> fmt::Result {
            for (i, c) in of.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
            Ok(())
        };
        match self {
            Formula::Literal(p) => write!(f, "{p}"),
            Formula::Threshold { k, of } => {
                write!(f, "T{k}/{}(", of.len())?;
                list(f, of)?;
                f.write_str(")")
            }
            Formula::And(of) => {
                f.write_str("and(")?;
                list(f, of)?;
                f.write_str(")")
            }
            Formula::Or(of) => {
                f.write_str("or(")?;
                list(f, of)?;
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Literal(u16),
    /// `end` is the index one past the last node of this subtree.
    Threshold { k: u16, arity: u16, end: u32 },
}

/// A formula compiled against a universe into a flat prefix-order array,
/// evaluated on [`PartySet`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mbf {
    universe: Universe,
    nodes: Vec<Node>,
    formula: Formula,
}

impl Mbf {
    /// Compiles with the universe of first appearance.
    pub fn new(formula: &Formula) -> Result<Self, FormulaError> {
        Mbf::with_universe(formula, formula.universe()?)
    }

    pub fn with_universe(formula: &Formula, universe: Universe) -> Result<Self, FormulaError> {
        formula.validate()?;
        let mut nodes = Vec::with_capacity(formula.size());
        compile(formula, &universe, &mut nodes)?;
        nodes.shrink_to_fit();
        Ok(Mbf {
            universe,
            nodes,
            formula: formula.clone(),
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    /// Whether `set` satisfies the formula. Linear in the formula size, with
    /// short-circuiting once an operator's outcome is settled.
    pub fn eval(&self, set: PartySet) -> bool {
        self.eval_at(0, set)
    }

    fn eval_at(&self, pos: usize, set: PartySet) -> bool {
        match self.nodes[pos] {
            Node::Literal(i) => set.contains(i as usize),
            Node::Threshold { k, arity, .. } => {
                let (k, arity) = (k as usize, arity as usize);
                let mut child = pos + 1;
                let mut hits = 0;
                for seen in 0..arity {
                    if self.eval_at(child, set) {
                        hits += 1;
                        if hits >= k {
                            return true;
                        }
                    }
                    if hits + (arity - seen - 1) < k {
                        return false;
                    }
                    child = self.subtree_end(child);
                }
                false
            }
        }
    }

    fn subtree_end(&self, pos: usize) -> usize {
        match self.nodes[pos] {
            Node::Literal(_) => pos + 1,
            Node::Threshold { end, .. } => end as usize,
        }
    }

    /// Bytes held by the compiled node array.
    pub fn heap_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<Node>()
    }
}

fn compile(f: &Formula, universe: &Universe, out: &mut Vec<Node>) -> Result<(), FormulaError> {
    match f {
        Formula::Literal(p) => {
            let i = universe
                .index_of(p.as_str())
                .ok_or_else(|| FormulaError::UnknownParty(p.clone()))?;
            out.push(Node::Literal(i as u16));
        }
        _ => {
            let (k, arity) = f.as_threshold().expect("operator");
            if arity > u16::MAX as usize {
                return Err(FormulaError::TooWide(arity));
            }
            let at = out.len();
            out.push(Node::Threshold {
                k: k as u16,
                arity: arity as u16,
                end: 0,
            });
            for c in f.children() {
                compile(c, universe, out)?;
            }
            let end = out.len() as u32;
            if let Node::Threshold { end: e, .. } = &mut out[at] {
                *e = end;
            }
        }
    }
    Ok(())
}
