//! Monotone span programs over `Z_p`.
//!
//! An MSP is a matrix whose rows are labelled by parties. A set of parties is
//! accepted when the rows it owns span the target vector `e1 = (1, 0, .., 0)`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::checker::QuorumChecker;
use crate::field::{Fp, MODULUS};
use crate::formula::{Formula, FormulaError};
use crate::matrix::{lup_factor, row_echelon, LinalgError, LupFactors, Matrix};
use crate::party::{Party, PartySet, Universe, UniverseError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MspError {
    #[error("threshold {t} of {n} is out of range")]
    ThresholdRange { t: usize, n: usize },
    #[error("expected {expected} party labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("row {0} is out of range")]
    RowOutOfRange(usize),
    #[error("row {row} is not the only row of party `{party}`")]
    NotUniquelyOwned { row: usize, party: Party },
    #[error("party `{0}` appears in both programs")]
    Overlap(Party),
    #[error("party `{0}` owns no row")]
    Unowned(Party),
    #[error("matrix needs at least one column")]
    NoColumns,
    #[error("malformed dump: {0}")]
    Dump(String),
    #[error("LUP factorization unavailable ({0}); use plain elimination")]
    FactorizationUnavailable(String),
    #[error(transparent)]
    Universe(#[from] UniverseError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Outcome of an acceptance check.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AcceptanceWitness {
    pub accepted: bool,
    /// Rows owned by the checked set, in matrix order.
    pub rows: Vec<usize>,
    /// Recombination coefficients aligned with `rows`; empty when rejected.
    pub lambda: Vec<Fp>,
    /// Parties of the checked set whose rows all received free variables.
    pub redundant: PartySet,
}

/// A monotone span program `(M, rho, e1, P)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Msp {
    matrix: Matrix,
    /// Row index to party index.
    labels: Vec<u32>,
    universe: Universe,
}

impl Msp {
    /// Labels row `i` with `labels[i]`; the universe is the labels in order of
    /// first appearance.
    pub fn from_parts(matrix: Matrix, labels: Vec<Party>) -> Result<Self, MspError> {
        let mut seen = Vec::new();
        for p in &labels {
            if !seen.contains(p) {
                seen.push(p.clone());
            }
        }
        Msp::with_universe(matrix, labels, Universe::new(seen)?)
    }

    /// Like [`Msp::from_parts`] with an explicit universe; every party of the
    /// universe must own at least one row.
    pub fn with_universe(
        matrix: Matrix,
        labels: Vec<Party>,
        universe: Universe,
    ) -> Result<Self, MspError> {
        if labels.len() != matrix.rows() {
            return Err(MspError::LabelCount {
                expected: matrix.rows(),
                got: labels.len(),
            });
        }
        if matrix.cols() == 0 {
            return Err(MspError::NoColumns);
        }
        let labels = labels
            .iter()
            .map(|p| {
                universe
                    .index_of(p.as_str())
                    .map(|i| i as u32)
                    .ok_or_else(|| UniverseError::Unknown(p.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        for (i, p) in universe.parties().iter().enumerate() {
            if !labels.contains(&(i as u32)) {
                return Err(MspError::Unowned(p.clone()));
            }
        }
        Ok(Msp {
            matrix,
            labels,
            universe,
        })
    }

    /// The same program over a reordering of its universe.
    pub fn reindexed(&self, universe: Universe) -> Result<Self, MspError> {
        let labels = (0..self.rows()).map(|r| self.label(r).clone()).collect();
        Msp::with_universe(self.matrix.clone(), labels, universe)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn label(&self, row: usize) -> &Party {
        self.universe.party(self.labels[row] as usize)
    }

    pub fn label_index(&self, row: usize) -> usize {
        self.labels[row] as usize
    }

    /// Rows owned by party index `p`.
    pub fn rows_of(&self, p: usize) -> Vec<usize> {
        (0..self.rows())
            .filter(|&r| self.labels[r] as usize == p)
            .collect()
    }

    /// The target vector `e1`.
    pub fn target(&self) -> Vec<Fp> {
        let mut e = vec![Fp::ZERO; self.cols()];
        e[0] = Fp::ONE;
        e
    }

    fn owned_rows(&self, set: PartySet) -> Vec<usize> {
        (0..self.rows())
            .filter(|&r| set.contains(self.labels[r] as usize))
            .collect()
    }

    /// Solves `M_A^T x = e1` by Gauss-Jordan elimination.
    pub fn accepts(&self, set: PartySet) -> AcceptanceWitness {
        let rows = self.owned_rows(set);
        if rows.is_empty() {
            return AcceptanceWitness::default();
        }
        let aug = self
            .matrix
            .select_rows(&rows)
            .transpose()
            .augment(&self.target())
            .expect("target has one entry per column");
        self.witness(rows, &aug)
    }

    fn witness(&self, rows: Vec<usize>, aug: &Matrix) -> AcceptanceWitness {
        let ech = row_echelon(aug);
        let Some(lambda) = ech.solution() else {
            return AcceptanceWitness {
                rows,
                ..Default::default()
            };
        };
        let mut is_free = vec![false; rows.len()];
        for &c in &ech.free_cols {
            is_free[c] = true;
        }
        let mut pivotal = PartySet::EMPTY;
        let mut present = PartySet::EMPTY;
        for (i, &r) in rows.iter().enumerate() {
            let p = self.labels[r] as usize;
            present.insert(p);
            if !is_free[i] {
                pivotal.insert(p);
            }
        }
        AcceptanceWitness {
            accepted: true,
            rows,
            lambda,
            redundant: present.difference(pivotal),
        }
    }

    /// Renders the dump format: `m d p`, the matrix rows, then one label per
    /// row.
    pub fn to_dump(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows(), self.cols(), MODULUS);
        for r in 0..self.rows() {
            let row: Vec<String> = self.matrix.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        for r in 0..self.rows() {
            let _ = writeln!(out, "{}", self.label(r));
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, MspError> {
        let bad = |msg: &str| MspError::Dump(msg.to_owned());
        let mut lines = text.lines();
        let header: Vec<u64> = lines
            .next()
            .ok_or_else(|| bad("empty input"))?
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| bad("header is not numeric")))
            .collect::<Result<_, _>>()?;
        let [m, d, p] = header[..] else {
            return Err(bad("header must be `m d p`"));
        };
        if p != MODULUS as u64 {
            return Err(bad("unsupported modulus"));
        }
        let (m, d) = (m as usize, d as usize);
        let mut data = Vec::with_capacity(m * d);
        for i in 0..m {
            let line = lines.next().ok_or_else(|| bad("missing matrix row"))?;
            let row: Vec<Fp> = line
                .split_whitespace()
                .map(|t| match t.parse::<u64>() {
                    Ok(v) if v < MODULUS as u64 => Ok(Fp::new(v)),
                    _ => Err(MspError::Dump(format!("row {i}: bad residue `{t}`"))),
                })
                .collect::<Result<_, _>>()?;
            if row.len() != d {
                return Err(MspError::Dump(format!("row {i} has {} entries", row.len())));
            }
            data.extend(row);
        }
        let labels: Vec<Party> = (0..m)
            .map(|_| {
                lines
                    .next()
                    .map(|l| Party::new(l.trim()))
                    .ok_or_else(|| bad("missing label"))
            })
            .collect::<Result<_, _>>()?;
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing content"));
        }
        let matrix = Matrix::from_vec(m, d, data).map_err(|e| MspError::Dump(e.to_string()))?;
        Msp::from_parts(matrix, labels)
    }

    pub fn heap_bytes(&self) -> usize {
        self.matrix.heap_bytes() + self.labels.capacity() * std::mem::size_of::<u32>()
    }
}

impl QuorumChecker for Msp {
    fn universe(&self) -> &Universe {
        &self.universe
    }

    fn is_quorum(&self, set: PartySet) -> bool {
        self.accepts(set).accepted
    }

    fn heap_bytes(&self) -> usize {
        Msp::heap_bytes(self)
    }
}

/// The `t`-of-`n` threshold MSP: an `n x t` Vandermonde matrix with
/// evaluation points `x_i = i`.
pub fn vandermonde_msp<P: Into<Party>>(
    n: usize,
    t: usize,
    parties: Vec<P>,
) -> Result<Msp, MspError> {
    if t == 0 || t > n || n >= MODULUS as usize {
        return Err(MspError::ThresholdRange { t, n });
    }
    let labels: Vec<Party> = parties.into_iter().map(Into::into).collect();
    if labels.len() != n {
        return Err(MspError::LabelCount {
            expected: n,
            got: labels.len(),
        });
    }
    let universe = Universe::new(labels.clone())?;
    Msp::with_universe(vandermonde(n, t), labels, universe)
}

fn vandermonde(n: usize, t: usize) -> Matrix {
    let mut m = Matrix::zeros(n, t);
    for i in 0..n {
        let x = Fp::new(i as u64 + 1);
        let mut v = Fp::ONE;
        for j in 0..t {
            m[(i, j)] = v;
            v *= x;
        }
    }
    m
}

/// A matrix with generic row labels, used while virtual parties are present.
#[derive(Debug, Clone)]
pub(crate) struct Span<L> {
    pub(crate) matrix: Matrix,
    pub(crate) labels: Vec<L>,
}

/// Replaces row `z` of `outer` by the program `inner`.
pub(crate) fn insert_span<L: Clone>(outer: &Span<L>, z: usize, inner: &Span<L>) -> Span<L> {
    let (m1, d1) = (outer.matrix.rows(), outer.matrix.cols());
    let (m2, d2) = (inner.matrix.rows(), inner.matrix.cols());
    let mut matrix = Matrix::zeros(m1 + m2 - 1, d1 + d2 - 1);
    let mut labels = Vec::with_capacity(m1 + m2 - 1);
    for i in 0..z {
        matrix.row_mut(i)[..d1].copy_from_slice(outer.matrix.row(i));
        labels.push(outer.labels[i].clone());
    }
    let rz = outer.matrix.row(z);
    for j in 0..m2 {
        let src = inner.matrix.row(j);
        let dst = matrix.row_mut(z + j);
        for c in 0..d1 {
            dst[c] = src[0] * rz[c];
        }
        dst[d1..].copy_from_slice(&src[1..]);
        labels.push(inner.labels[j].clone());
    }
    for i in z + 1..m1 {
        matrix.row_mut(i + m2 - 1)[..d1].copy_from_slice(outer.matrix.row(i));
        labels.push(outer.labels[i].clone());
    }
    Span { matrix, labels }
}

/// Insertion of `m2` at row `z` of `m1`, whose owner must own no other row.
pub fn insert(m1: &Msp, z: usize, m2: &Msp) -> Result<Msp, MspError> {
    if z >= m1.rows() {
        return Err(MspError::RowOutOfRange(z));
    }
    let owner = m1.label_index(z);
    if m1.rows_of(owner).len() != 1 {
        return Err(MspError::NotUniquelyOwned {
            row: z,
            party: m1.label(z).clone(),
        });
    }
    let mut parties: Vec<Party> = m1
        .universe
        .parties()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != owner)
        .map(|(_, p)| p.clone())
        .collect();
    for p in m2.universe.parties() {
        if parties.contains(p) {
            return Err(MspError::Overlap(p.clone()));
        }
    }
    parties.extend(m2.universe.parties().iter().cloned());
    let span = |m: &Msp| Span {
        matrix: m.matrix.clone(),
        labels: (0..m.rows()).map(|r| m.label(r).clone()).collect::<Vec<_>>(),
    };
    let out = insert_span(&span(m1), z, &span(m2));
    Msp::with_universe(out.matrix, out.labels, Universe::new(parties)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Slot {
    Party(Party),
    Virtual(usize),
}

/// Builds an MSP accepting exactly the sets that satisfy `formula`.
///
/// Each operator becomes a Vandermonde MSP whose non-literal operands are
/// virtual parties; these are then replaced, left to right, by the MSPs of
/// the corresponding sub-formulas.
pub fn build_msp(formula: &Formula) -> Result<Msp, MspError> {
    formula.validate()?;
    let universe = formula.universe()?;
    let span = build_span(formula);
    let labels = span
        .labels
        .into_iter()
        .map(|s| match s {
            Slot::Party(p) => p,
            Slot::Virtual(_) => unreachable!("all virtual parties are replaced"),
        })
        .collect();
    Msp::with_universe(span.matrix, labels, universe)
}

pub(crate) fn build_span(f: &Formula) -> Span<Slot> {
    let Some((k, arity)) = f.as_threshold() else {
        let Formula::Literal(p) = f else {
            unreachable!()
        };
        return Span {
            matrix: Matrix::identity(1),
            labels: vec![Slot::Party(p.clone())],
        };
    };
    let children = f.children();
    let labels = children
        .iter()
        .enumerate()
        .map(|(i, c)| match c {
            Formula::Literal(p) => Slot::Party(p.clone()),
            _ => Slot::Virtual(i),
        })
        .collect();
    let mut span = Span {
        matrix: vandermonde(arity, k),
        labels,
    };
    for (i, c) in children.iter().enumerate() {
        if matches!(c, Formula::Literal(_)) {
            continue;
        }
        let z = span
            .labels
            .iter()
            .position(|s| *s == Slot::Virtual(i))
            .expect("virtual party owns one row");
        span = insert_span(&span, z, &build_span(c));
    }
    span
}

/// Dimensions of [`build_msp`]'s output: `m = sum m_i - c + 1` and
/// `d = sum d_i - c + 1` over the `c` operators `Θ_{d_i}^{m_i}`.
pub fn predicted_dims(formula: &Formula) -> (usize, usize) {
    fn walk(f: &Formula, acc: &mut (usize, usize, usize)) {
        if let Some((k, m)) = f.as_threshold() {
            acc.0 += m;
            acc.1 += k;
            acc.2 += 1;
            f.children().iter().for_each(|c| walk(c, acc));
        }
    }
    let mut acc = (0, 0, 0);
    walk(formula, &mut acc);
    if acc.2 == 0 {
        return (1, 1);
    }
    (acc.0 - acc.2 + 1, acc.1 - acc.2 + 1)
}

/// An MSP prepared with the LUP factorization of `M^T`, so each check only
/// reduces `U_A x = y`.
#[derive(Debug, Clone)]
pub struct LupMsp {
    msp: Msp,
    factors: LupFactors,
    /// Whether `y` vanishes outside the nonzero rows of `U`.
    solvable: bool,
}

impl LupMsp {
    pub fn new(msp: Msp) -> Result<Self, MspError> {
        let factors = lup_factor(&msp.matrix.transpose(), &msp.target())
            .map_err(|e: LinalgError| MspError::FactorizationUnavailable(e.to_string()))?;
        let solvable = factors.y[factors.rank..].iter().all(|v| v.is_zero());
        Ok(LupMsp {
            msp,
            factors,
            solvable,
        })
    }

    pub fn msp(&self) -> &Msp {
        &self.msp
    }

    pub fn factors(&self) -> &LupFactors {
        &self.factors
    }

    pub fn accepts_lup(&self, set: PartySet) -> AcceptanceWitness {
        let rows = self.msp.owned_rows(set);
        if rows.is_empty() || !self.solvable {
            return AcceptanceWitness {
                rows,
                ..Default::default()
            };
        }
        let rank = self.factors.rank;
        let mut aug = Matrix::zeros(rank, rows.len() + 1);
        for i in 0..rank {
            let src = self.factors.u.row(i);
            let dst = aug.row_mut(i);
            for (j, &r) in rows.iter().enumerate() {
                dst[j] = src[r];
            }
            dst[rows.len()] = self.factors.y[i];
        }
        self.msp.witness(rows, &aug)
    }

    pub fn heap_bytes(&self) -> usize {
        self.msp.heap_bytes() + self.factors.heap_bytes()
    }
}

impl QuorumChecker for LupMsp {
    fn universe(&self) -> &Universe {
        &self.msp.universe
    }

    fn is_quorum(&self, set: PartySet) -> bool {
        self.accepts_lup(set).accepted
    }

    fn heap_bytes(&self) -> usize {
        LupMsp::heap_bytes(self)
    }
}
