//! Generators for named quorum-system families.

use thiserror::Error;

use crate::formula::{Formula, FormulaError};
use crate::msp::{build_span, insert_span, Msp, MspError, Slot, Span};
use crate::party::{Party, PartySet, Universe, UniverseError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructionError {
    #[error("attribute `{attribute}` requires {required} holders but only {available} exist")]
    Multiplicity {
        attribute: String,
        required: usize,
        available: usize,
    },
    #[error("attribute `{0}` needs a multiplicity of at least 1")]
    ZeroMultiplicity(String),
    #[error("attribute `{0}` is declared twice")]
    DuplicateAttribute(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("grid side must be at least 1")]
    EmptyGrid,
    #[error("b = {b} exceeds sqrt(n) - 1 = {max} for a {k}x{k} grid")]
    GridBound { k: usize, b: usize, max: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Msp(#[from] MspError),
}

/// The two-layer, one-common system over `A0..A{k-1}` and `B0..B{3k-1}`.
///
/// A quorum needs a strict two-thirds majority of the first layer, where each
/// chosen `A_l` brings two of the four second-layer parties
/// `B_{3l}, .., B_{3l+3 mod 3k}`. Windows that wrap onto themselves
/// (only `k = 1`) lose their duplicate operand.
pub fn layered_2l1c(k: usize) -> Formula {
    assert!(k >= 1, "2L1C needs at least one first-layer party");
    let conjuncts = (0..k)
        .map(|l| {
            let mut window: Vec<usize> = Vec::with_capacity(4);
            for m in 3 * l..3 * l + 4 {
                let b = m % (3 * k);
                if !window.contains(&b) {
                    window.push(b);
                }
            }
            let second = Formula::threshold_of(2, window.iter().map(|b| format!("B{b}")))
                .expect("window has at least three operands");
            Formula::And(vec![Formula::literal(format!("A{l}")), second])
        })
        .collect();
    Formula::Threshold {
        k: (2 * k + 1).div_ceil(3),
        of: conjuncts,
    }
}

/// An attribute held by a set of parties, required `multiplicity` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub holders: PartySet,
    pub multiplicity: usize,
}

/// Parties, attributes and the relation between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSystem {
    universe: Universe,
    attributes: Vec<Attribute>,
}

impl AttributeSystem {
    pub fn new(universe: Universe) -> Self {
        AttributeSystem {
            universe,
            attributes: Vec::new(),
        }
    }

    /// Declares an attribute; its holder count is derived from `holders`.
    pub fn add<I, S>(
        &mut self,
        name: &str,
        holders: I,
        multiplicity: usize,
    ) -> Result<(), ConstructionError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if self.attribute(name).is_some() {
            return Err(ConstructionError::DuplicateAttribute(name.into()));
        }
        if multiplicity == 0 {
            return Err(ConstructionError::ZeroMultiplicity(name.into()));
        }
        let holders = self.universe.set_of(holders)?;
        if multiplicity > holders.len() {
            return Err(ConstructionError::Multiplicity {
                attribute: name.into(),
                required: multiplicity,
                available: holders.len(),
            });
        }
        self.attributes.push(Attribute {
            name: name.into(),
            holders,
            multiplicity,
        });
        Ok(())
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    fn lookup(&self, p: &Party) -> Result<&Attribute, ConstructionError> {
        self.attribute(p.as_str())
            .ok_or_else(|| ConstructionError::UnknownAttribute(p.to_string()))
    }

    /// Whether `set` holds each attribute literal of `f` the required number
    /// of times, evaluated directly on attributes.
    pub fn satisfies(&self, f: &Formula, set: PartySet) -> Result<bool, ConstructionError> {
        f.validate()?;
        for p in f.parties() {
            self.lookup(&p)?;
        }
        Ok(f.eval_with(&|p: &Party| {
            let a = self.attribute(p.as_str()).expect("checked above");
            a.holders.intersection(set).len() >= a.multiplicity
        }))
    }

    /// The party-level formula: each attribute literal becomes
    /// `Θ_l^L(holders)`.
    pub fn party_formula(&self, f: &Formula) -> Result<Formula, ConstructionError> {
        Ok(match f {
            Formula::Literal(p) => {
                let a = self.lookup(p)?;
                Formula::threshold_of(a.multiplicity, self.universe.names(a.holders))?
            }
            Formula::Threshold { k, of } => Formula::Threshold {
                k: *k,
                of: self.party_formulas(of)?,
            },
            Formula::And(of) => Formula::And(self.party_formulas(of)?),
            Formula::Or(of) => Formula::Or(self.party_formulas(of)?),
        })
    }

    fn party_formulas(&self, of: &[Formula]) -> Result<Vec<Formula>, ConstructionError> {
        of.iter().map(|c| self.party_formula(c)).collect()
    }
}

/// Builds the MSP of the attribute formula, then inserts for every attribute
/// row the `L x l` Vandermonde MSP labelled by the attribute's holders.
///
/// The result is defined on the parties that hold at least one attribute of
/// `f`, in the order of the system's universe.
pub fn attribute_msp(sys: &AttributeSystem, f: &Formula) -> Result<Msp, ConstructionError> {
    f.validate()?;
    for p in f.parties() {
        sys.lookup(&p)?;
    }
    let attr_span = build_span(f);
    let mut span: Span<Slot> = attr_span.clone();
    let mut shift = 0;
    for (row, slot) in attr_span.labels.iter().enumerate() {
        let Slot::Party(name) = slot else {
            unreachable!("attribute formulas have no open virtual rows")
        };
        let a = sys.lookup(name)?;
        let holders: Vec<Party> = a
            .holders
            .iter()
            .map(|i| sys.universe.party(i).clone())
            .collect();
        let inner = crate::msp::vandermonde_msp(holders.len(), a.multiplicity, holders)?;
        let inner = Span {
            matrix: inner.matrix().clone(),
            labels: (0..inner.rows())
                .map(|r| Slot::Party(inner.label(r).clone()))
                .collect(),
        };
        span = insert_span(&span, row + shift, &inner);
        shift += inner.labels.len() - 1;
    }
    let labels: Vec<Party> = span
        .labels
        .into_iter()
        .map(|s| match s {
            Slot::Party(p) => p,
            Slot::Virtual(_) => unreachable!(),
        })
        .collect();
    let owners: Vec<Party> = sys
        .universe
        .parties()
        .iter()
        .filter(|p| labels.contains(p))
        .cloned()
        .collect();
    Ok(Msp::with_universe(span.matrix, labels, Universe::new(owners)?)?)
}

/// Sixteen parties `p{loc}{os}` on a 4x4 grid of locations `L1..L4` and
/// operating systems `O1..O4`, with the formula requiring three parties for
/// each of three locations and three parties for each of three systems.
pub fn os_location() -> (AttributeSystem, Formula) {
    let names: Vec<String> = (1..=4)
        .flat_map(|l| (1..=4).map(move |o| format!("p{l}{o}")))
        .collect();
    let mut sys = AttributeSystem::new(Universe::new(names).expect("distinct names"));
    for i in 1..=4 {
        let loc: Vec<String> = (1..=4).map(|o| format!("p{i}{o}")).collect();
        sys.add(&format!("L{i}"), &loc, 3).expect("valid attribute");
    }
    for j in 1..=4 {
        let os: Vec<String> = (1..=4).map(|l| format!("p{l}{j}")).collect();
        sys.add(&format!("O{j}"), &os, 3).expect("valid attribute");
    }
    let f = Formula::And(vec![
        Formula::threshold_of(3, ["L1", "L2", "L3", "L4"]).expect("valid"),
        Formula::threshold_of(3, ["O1", "O2", "O3", "O4"]).expect("valid"),
    ]);
    (sys, f)
}

/// A `k x k` grid of parties tolerating `b` Byzantine ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    k: usize,
    b: usize,
}

impl GridLayout {
    pub fn new(k: usize, b: usize) -> Result<Self, ConstructionError> {
        if k == 0 {
            return Err(ConstructionError::EmptyGrid);
        }
        if b > k - 1 {
            return Err(ConstructionError::GridBound { k, b, max: k - 1 });
        }
        Ok(GridLayout { k, b })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn n(&self) -> usize {
        self.k * self.k
    }

    /// Rows and columns per quorum: the least `s` with `s^2 >= b/2 + 1`.
    pub fn s(&self) -> usize {
        (1..=self.k)
            .find(|&s| 2 * s * s >= self.b + 2)
            .expect("b <= k - 1 keeps s within the grid")
    }

    /// Party `s{i}_{j}` (1-based row and column) has index `(i-1) k + (j-1)`.
    pub fn party(&self, row: usize, col: usize) -> String {
        format!("s{}_{}", row + 1, col + 1)
    }

    pub fn universe(&self) -> Universe {
        Universe::new((0..self.n()).map(|i| self.party(i / self.k, i % self.k)))
            .expect("distinct names")
    }

    pub fn row_set(&self, row: usize) -> PartySet {
        (0..self.k).map(|c| row * self.k + c).collect()
    }

    pub fn col_set(&self, col: usize) -> PartySet {
        (0..self.k).map(|r| r * self.k + col).collect()
    }

    /// All unions of `s` full rows and `s` full columns.
    pub fn quorums(&self) -> Vec<PartySet> {
        let pick = |count: usize, set: &dyn Fn(usize) -> PartySet| {
            let mut out = Vec::new();
            for bits in 0u32..1 << self.k {
                if bits.count_ones() as usize == count {
                    out.push(
                        (0..self.k)
                            .filter(|i| bits >> i & 1 == 1)
                            .fold(PartySet::EMPTY, |acc, i| acc.union(set(i))),
                    );
                }
            }
            out
        };
        let rows = pick(self.s(), &|i| self.row_set(i));
        let cols = pick(self.s(), &|j| self.col_set(j));
        let mut out = Vec::with_capacity(rows.len() * cols.len());
        for &r in &rows {
            for &c in &cols {
                out.push(r.union(c));
            }
        }
        out
    }

    pub fn attribute_system(&self) -> AttributeSystem {
        let mut sys = AttributeSystem::new(self.universe());
        for i in 0..self.k {
            let names = self.universe().names(self.row_set(i)).join(",");
            sys.add(&format!("R{}", i + 1), names.split(','), self.k)
                .expect("valid attribute");
        }
        for j in 0..self.k {
            let names = self.universe().names(self.col_set(j)).join(",");
            sys.add(&format!("C{}", j + 1), names.split(','), self.k)
                .expect("valid attribute");
        }
        sys
    }

    /// `Θ_s^k(R1..Rk) ∧ Θ_s^k(C1..Ck)` over the attributes.
    pub fn attribute_formula(&self) -> Formula {
        let s = self.s();
        let side = |prefix: &str| {
            Formula::threshold_of(s, (1..=self.k).map(|i| format!("{prefix}{i}")))
                .expect("s <= k")
        };
        Formula::And(vec![side("R"), side("C")])
    }
}

/// The dissemination M-Grid in its three forms.
#[derive(Debug, Clone)]
pub struct MGrid {
    pub layout: GridLayout,
    pub attribute_formula: Formula,
    /// The party-level formula with every row and column expanded.
    pub formula: Formula,
    pub msp: Msp,
}

pub fn mgrid(layout: GridLayout) -> Result<MGrid, ConstructionError> {
    let sys = layout.attribute_system();
    let attribute_formula = layout.attribute_formula();
    let formula = sys.party_formula(&attribute_formula)?;
    let msp = attribute_msp(&sys, &attribute_formula)?;
    Ok(MGrid {
        layout,
        attribute_formula,
        formula,
        msp,
    })
}
