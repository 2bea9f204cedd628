//! Dense exact linear algebra over a field.

use crate::quad::QuadScalar;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// The operations elimination needs.
pub trait Field: Clone + PartialEq + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Panics on zero.
    fn div(&self, o: &Self) -> Self;
}

impl Field for BigRational {
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
}

impl Field for QuadScalar {
    fn zero_like(&self) -> Self {
        QuadScalar::zero(self.radicand())
    }
    fn one_like(&self) -> Self {
        QuadScalar::one(self.radicand())
    }
    fn is_zero(&self) -> bool {
        QuadScalar::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Submatrix of the first `k` rows and columns.
    pub fn leading(&self, k: usize) -> Self {
        let rows = (0..k).map(|r| self.row(r)[..k].to_vec()).collect();
        Matrix::from_rows(rows)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv_pivot = self.get(r, c).one_like().div(self.get(r, c));
            for k in c..self.cols {
                let v = self.get(r, k).mul(&inv_pivot);
                self.set(r, k, v);
            }
            for i in 0..self.rows {
                if i == r || self.get(i, c).is_zero() {
                    continue;
                }
                let factor = self.get(i, c).clone();
                for k in c..self.cols {
                    let v = self.get(i, k).sub(&factor.mul(self.get(r, k)));
                    self.set(i, k, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> T {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            panic!("determinant of an empty matrix has no scalar context");
        }
        let mut m = self.clone();
        let one = self.get(0, 0).one_like();
        let mut sign_flip = false;
        let mut prev = one.clone();
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m.get(i, k).is_zero()) else {
                    return one.zero_like();
                };
                m.swap_rows(k, p);
                sign_flip = !sign_flip;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = m.get(i, j).mul(m.get(k, k)).sub(&m.get(i, k).mul(m.get(k, j)));
                    m.set(i, j, num.div(&prev));
                }
            }
            prev = m.get(k, k).clone();
        }
        let d = m.get(n - 1, n - 1).clone();
        if sign_flip {
            d.zero_like().sub(&d)
        } else {
            d
        }
    }
}

/// Outcome of solving `A x = b`.
#[derive(Debug, Clone, PartialEq)]
pub enum Solution<T> {
    Unique(Vec<T>),
    /// The system is consistent but `A` has rank below its column count.
    Underdetermined {
        rank: usize,
    },
    Inconsistent,
}

/// Solves `A x = b` exactly.
pub fn solve<T: Field>(a: &Matrix<T>, b: &[T]) -> Solution<T> {
    assert_eq!(a.rows(), b.len(), "right-hand side length");
    let cols = a.cols();
    let mut aug = Matrix::filled(
        a.rows(),
        cols + 1,
        b.first().map_or_else(|| a.data.first().expect("empty system").zero_like(), Field::zero_like),
    );
    for (r, rhs) in b.iter().enumerate() {
        for c in 0..cols {
            aug.set(r, c, a.get(r, c).clone());
        }
        aug.set(r, cols, rhs.clone());
    }
    let pivots = aug.rref();
    if pivots.last() == Some(&cols) {
        return Solution::Inconsistent;
    }
    if pivots.len() < cols {
        return Solution::Underdetermined { rank: pivots.len() };
    }
    Solution::Unique((0..cols).map(|r| aug.get(r, cols).clone()).collect())
}

/// Inverse of a square matrix, `None` when singular.
pub fn inverse<T: Field>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let zero = a.get(0, 0).zero_like();
    let one = zero.one_like();
    let mut aug = Matrix::filled(n, 2 * n, zero);
    for r in 0..n {
        for c in 0..n {
            aug.set(r, c, a.get(r, c).clone());
        }
        aug.set(r, n + r, one.clone());
    }
    let pivots = aug.rref();
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(Matrix::from_rows((0..n).map(|r| aug.row(r)[n..].to_vec()).collect()))
}
