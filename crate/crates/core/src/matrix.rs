//! Dense matrices over `Z_p`: row echelon reduction and LUP factorization.

use std::fmt;

use thiserror::Error;

use crate::field::Fp;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major `rows x cols` matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fp>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Fp::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Fp::ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Fp>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from rows of small integers (test and example helper).
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(LinalgError::Dimension("ragged rows".into()));
            }
            data.extend(r.iter().map(|&v| Fp::from_i64(v)));
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Fp] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Fp] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Fp] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out[(i, j)] + a * rhs[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        Ok(out)
    }

    /// `v * self` for a row vector `v`.
    pub fn left_mul_vec(&self, v: &[Fp]) -> Result<Vec<Fp>, LinalgError> {
        if v.len() != self.rows {
            return Err(LinalgError::Dimension(format!(
                "vector of length {} times {}x{}",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![Fp::ZERO; self.cols];
        for (i, &c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += c * x;
            }
        }
        Ok(out)
    }

    /// The submatrix made of the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix {
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// `[self | column]`.
    pub fn augment(&self, column: &[Fp]) -> Result<Matrix, LinalgError> {
        if column.len() != self.rows {
            return Err(LinalgError::Dimension("augmenting column length".into()));
        }
        let cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * cols);
        for (i, &c) in column.iter().enumerate() {
            data.extend_from_slice(self.row(i));
            data.push(c);
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Rank by plain elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        eliminate(&mut m, self.cols, true).len()
    }

    pub fn heap_bytes(&self) -> usize {
        self.data.capacity() * std::mem::size_of::<Fp>()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Fp;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Fp {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Fp {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        Ok(())
    }
}

/// Gauss-Jordan elimination on the first `coef_cols` columns of `m`, in place.
/// Pivots are the first nonzero entry scanning top-down. Returns the pivot
/// `(row, col)` positions in order.
fn eliminate(m: &mut Matrix, coef_cols: usize, reduce_above: bool) -> Vec<(usize, usize)> {
    let cols = m.cols;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..coef_cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| !m.data[i * cols + c].is_zero()) else {
            continue;
        };
        m.swap_rows(r, p);
        let inv = m.data[r * cols + c].inv().expect("pivot is nonzero");
        for j in c..cols {
            m.data[r * cols + j] *= inv;
        }
        let start = if reduce_above { 0 } else { r + 1 };
        for i in start..m.rows {
            if i == r {
                continue;
            }
            let factor = m.data[i * cols + c];
            if factor.is_zero() {
                continue;
            }
            for j in c..cols {
                let v = m.data[r * cols + j];
                m.data[i * cols + j] -= factor * v;
            }
        }
        pivots.push((r, c));
        r += 1;
    }
    pivots
}

/// Result of reducing an augmented matrix `[A | b]`.
#[derive(Debug, Clone)]
pub struct Echelon {
    /// Reduced row echelon form of the augmented matrix.
    pub matrix: Matrix,
    /// `false` exactly when some row is zero in the coefficient part and
    /// nonzero in the constant column.
    pub consistent: bool,
    /// Coefficient columns without a pivot.
    pub free_cols: Vec<usize>,
    /// Pivot positions `(row, col)`.
    pub pivots: Vec<(usize, usize)>,
}

impl Echelon {
    /// A particular solution of `A x = b` with all free variables set to zero.
    pub fn solution(&self) -> Option<Vec<Fp>> {
        if !self.consistent {
            return None;
        }
        let coef = self.matrix.cols - 1;
        let mut x = vec![Fp::ZERO; coef];
        for &(r, c) in &self.pivots {
            x[c] = self.matrix[(r, coef)];
        }
        Some(x)
    }
}

/// Brings `[A | b]` (last column is the constant part) into reduced row
/// echelon form and reports consistency and free columns.
pub fn row_echelon(aug: &Matrix) -> Echelon {
    let mut m = aug.clone();
    reduce_augmented(&mut m)
}

fn reduce_augmented(m: &mut Matrix) -> Echelon {
    assert!(m.cols >= 1, "augmented matrix needs a constant column");
    let coef = m.cols - 1;
    let pivots = eliminate(m, coef, true);
    let rank = pivots.len();
    let consistent = (rank..m.rows).all(|i| m[(i, coef)].is_zero());
    let mut is_pivot = vec![false; coef];
    for &(_, c) in &pivots {
        is_pivot[c] = true;
    }
    let free_cols = (0..coef).filter(|&c| !is_pivot[c]).collect();
    Echelon {
        matrix: m.clone(),
        consistent,
        free_cols,
        pivots,
    }
}

/// `P * Mt = L * U` with `L` unit lower triangular and `U` in row echelon
/// form, plus `y` solving `L y = P e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LupFactors {
    /// Row `i` of `P * Mt` is row `perm[i]` of `Mt`.
    pub perm: Vec<usize>,
    pub l: Matrix,
    pub u: Matrix,
    pub y: Vec<Fp>,
    /// Number of nonzero rows of `U`.
    pub rank: usize,
}

impl LupFactors {
    pub fn p_matrix(&self) -> Matrix {
        let n = self.perm.len();
        let mut p = Matrix::zeros(n, n);
        for (i, &src) in self.perm.iter().enumerate() {
            p[(i, src)] = Fp::ONE;
        }
        p
    }

    pub fn heap_bytes(&self) -> usize {
        self.perm.capacity() * std::mem::size_of::<usize>()
            + self.l.heap_bytes()
            + self.u.heap_bytes()
            + self.y.capacity() * std::mem::size_of::<Fp>()
    }
}

/// LUP factorization of the `d x m` matrix `mt` with partial row pivoting.
///
/// Columns without a usable pivot are skipped, so `U` is upper trapezoidal
/// in echelon form and the factorization exists for every matrix over a
/// field; the only failure is a mismatched right-hand side.
pub fn lup_factor(mt: &Matrix, e: &[Fp]) -> Result<LupFactors, LinalgError> {
    let d = mt.rows;
    if e.len() != d {
        return Err(LinalgError::Dimension(format!(
            "right-hand side of length {} for {d} rows",
            e.len()
        )));
    }
    let mut u = mt.clone();
    let mut l = Matrix::zeros(d, d);
    let mut perm: Vec<usize> = (0..d).collect();
    let mut r = 0;
    for c in 0..mt.cols {
        if r == d {
            break;
        }
        let Some(p) = (r..d).find(|&i| !u[(i, c)].is_zero()) else {
            continue;
        };
        if p != r {
            u.swap_rows(r, p);
            perm.swap(r, p);
            // multipliers already computed move with their rows
            for j in 0..r {
                let tmp = l[(r, j)];
                l[(r, j)] = l[(p, j)];
                l[(p, j)] = tmp;
            }
        }
        let inv = u[(r, c)].inv().expect("pivot is nonzero");
        for i in r + 1..d {
            let factor = u[(i, c)] * inv;
            if factor.is_zero() {
                continue;
            }
            l[(i, r)] = factor;
            for j in c..mt.cols {
                let v = u[(r, j)];
                u[(i, j)] -= factor * v;
            }
        }
        r += 1;
    }
    for i in 0..d {
        l[(i, i)] = Fp::ONE;
    }
    // forward substitution for L y = P e
    let mut y = vec![Fp::ZERO; d];
    for i in 0..d {
        let mut acc = e[perm[i]];
        for j in 0..i {
            acc -= l[(i, j)] * y[j];
        }
        y[i] = acc;
    }
    Ok(LupFactors {
        perm,
        l,
        u,
        y,
        rank: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, sparsity: f64) -> Matrix {
        let data = (0..rows * cols)
            .map(|_| {
                if rng.gen_bool(sparsity) {
                    Fp::ZERO
                } else {
                    Fp::new(rng.gen_range(0..5))
                }
            })
            .collect();
        Matrix::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn identity_with_e1_is_consistent_without_free_columns() {
        let aug = Matrix::from_rows(&[[1, 0, 0, 1], [0, 1, 0, 0], [0, 0, 1, 0]]).unwrap();
        let ech = row_echelon(&aug);
        assert!(ech.consistent);
        assert!(ech.free_cols.is_empty());
        assert_eq!(ech.solution().unwrap(), vec![Fp::ONE, Fp::ZERO, Fp::ZERO]);
    }

    #[test]
    fn zero_row_with_nonzero_constant_is_inconsistent() {
        let ech = row_echelon(&Matrix::from_rows(&[[0, 1]]).unwrap());
        assert!(!ech.consistent);
        assert_eq!(ech.free_cols, vec![0]);
        assert!(ech.solution().is_none());
    }

    #[test]
    fn back_substitution_recovers_known_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut solved = 0;
        while solved < 50 {
            let a = random_matrix(&mut rng, 3, 3, 0.2);
            if a.rank() < 3 {
                continue;
            }
            let x: Vec<Fp> = (0..3).map(|_| Fp::new(rng.gen_range(0..1000))).collect();
            let b = a.transpose().left_mul_vec(&x).unwrap();
            let ech = row_echelon(&a.augment(&b).unwrap());
            assert!(ech.consistent);
            assert_eq!(ech.solution().unwrap(), x);
            solved += 1;
        }
    }

    // rank by minors would be slower; two eliminations with different pivot
    // orders (rows reversed) serve as the independent route
    fn rank_reversed(m: &Matrix) -> usize {
        let rows: Vec<usize> = (0..m.rows()).rev().collect();
        let t = m.select_rows(&rows).transpose();
        let mut t = t;
        eliminate(&mut t, m.rows(), false).len()
    }

    #[test]
    fn consistency_equals_rank_criterion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let rows = rng.gen_range(1..=8);
            let cols = rng.gen_range(1..=8);
            let a = random_matrix(&mut rng, rows, cols, 0.5);
            let b: Vec<Fp> = (0..rows)
                .map(|_| Fp::new(rng.gen_range(0..3)))
                .collect();
            let aug = a.augment(&b).unwrap();
            let expect = rank_reversed(&a) == rank_reversed(&aug);
            let ech = row_echelon(&aug);
            assert_eq!(ech.consistent, expect, "{aug:?}");
            if let Some(x) = ech.solution() {
                assert_eq!(a.transpose().left_mul_vec(&x).unwrap(), b);
            }
        }
    }

    #[test]
    fn lup_of_identity() {
        let e = vec![Fp::ONE, Fp::ZERO, Fp::ZERO];
        let f = lup_factor(&Matrix::identity(3), &e).unwrap();
        assert_eq!(f.p_matrix(), Matrix::identity(3));
        assert_eq!(f.l, Matrix::identity(3));
        assert_eq!(f.u, Matrix::identity(3));
        assert_eq!(f.y, e);
    }

    #[test]
    fn lup_reproduces_vandermonde_transpose() {
        // 2-of-3 Vandermonde with x = 1, 2, 3, transposed to 2x3
        let mt = Matrix::from_rows(&[[1, 1, 1], [1, 2, 3]]).unwrap();
        let f = lup_factor(&mt, &[Fp::ONE, Fp::ZERO]).unwrap();
        let lhs = f.p_matrix().mul(&mt).unwrap();
        assert_eq!(lhs, f.l.mul(&f.u).unwrap());
    }

    #[test]
    fn lup_reproduces_random_rectangular_and_singular_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let d = rng.gen_range(1..=7);
            let m = rng.gen_range(1..=9);
            let mt = random_matrix(&mut rng, d, m, 0.6);
            let e: Vec<Fp> = (0..d).map(|i| if i == 0 { Fp::ONE } else { Fp::ZERO }).collect();
            let f = lup_factor(&mt, &e).unwrap();
            assert_eq!(f.p_matrix().mul(&mt).unwrap(), f.l.mul(&f.u).unwrap());
            for i in 0..d {
                assert_eq!(f.l[(i, i)], Fp::ONE);
                for j in i + 1..d {
                    assert!(f.l[(i, j)].is_zero());
                }
                for j in 0..i.min(m) {
                    assert!(f.u[(i, j)].is_zero(), "U not upper trapezoidal");
                }
            }
            let pe: Vec<Fp> = f.perm.iter().map(|&i| e[i]).collect();
            assert_eq!(f.l.transpose().left_mul_vec(&f.y).unwrap(), pe);
            assert_eq!(f.rank, mt.rank());
        }
    }

    #[test]
    fn lup_rejects_mismatched_rhs() {
        assert!(lup_factor(&Matrix::identity(2), &[Fp::ONE]).is_err());
    }
}
