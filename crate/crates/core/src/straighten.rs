//! Relation matrices of the quadratic relations, their leading minors, and
//! rewriting of mode monomials into Fibonacci normal form.

use crate::error::{Error, Result};
use crate::fib::{enumerate_fib_monomials, FibMonomial, FibPolynomial, Parity};
use crate::fock::{enumerate_basis, FockVector};
use crate::lattice::Lattice;
use crate::linalg::{inverse, solve, Matrix, Solution};
use crate::modes::VertexOps;
use crate::partitions;
use crate::quad::{rat, QuadScalar};
use crate::series::char_basic_subspace;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

/// `H_k(x) = x (x + 1) ... (x + k - 1)`.
pub fn rising_factorial(x: &BigRational, k: u32) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, i| acc * (x + rat(i as i64, 1)))
}

/// Which pairs a relation system involves: `V_{n-k} V_{n+k}` (diagonal) or
/// `V_{n-k} V_{n+1+k}` (off-diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Diagonal,
    OffDiagonal,
}

impl Family {
    /// The family and center of the pair `(a, b)`, `a <= b`.
    pub fn of_pair(a: i64, b: i64) -> (Family, i64) {
        if (a + b).rem_euclid(2) == 0 {
            (Family::Diagonal, (a + b) / 2)
        } else {
            (Family::OffDiagonal, (a + b - 1).div_euclid(2))
        }
    }
}

/// First column index: the diagonal odd system drops `theta_n theta_n`.
fn first_k(lattice: Lattice, family: Family) -> i64 {
    if !lattice.is_even() && family == Family::Diagonal {
        1
    } else {
        0
    }
}

/// The pair of column `c`.
pub fn column_pair(lattice: Lattice, family: Family, n: i64, c: usize) -> (i64, i64) {
    let k = c as i64 + first_k(lattice, family);
    match family {
        Family::Diagonal => (n - k, n + k),
        Family::OffDiagonal => (n - k, n + 1 + k),
    }
}

/// The relation matrix with `columns` columns: `N` rows, one per defining
/// relation, entries the coefficients of the pairs of [`column_pair`].
///
/// Even `D = 2N`, row `l`: `H_{2l}(N+n+k) + H_{2l}(N+n-k)` (diagonal) or
/// `H_{2l}(N+n-k) + H_{2l}(N+n+k+1)` (off-diagonal), with the diagonal pair
/// `e_n e_n` weighted by `1/2` and row `0` scaled by `1/2`.
/// Odd `D = 2N + 1`, one row for each `r = 1, 3, ..., 2N - 1`:
/// `H_r(n+k) - H_r(n-k)` (diagonal, `k >= 1`) or `H_r(n+1+k) - H_r(n-k)`
/// (off-diagonal).
pub fn relation_matrix(lattice: Lattice, family: Family, n: i64, columns: usize) -> Matrix<BigRational> {
    let big_n = lattice.half() as i64;
    let h = |order: i64, x: i64| rising_factorial(&rat(x, 1), order as u32);
    let rows = (0..big_n)
        .map(|l| {
            (0..columns)
                .map(|c| {
                    let k = c as i64 + first_k(lattice, family);
                    if lattice.is_even() {
                        let order = 2 * l;
                        let mut v = match family {
                            Family::Diagonal => h(order, big_n + n + k) + h(order, big_n + n - k),
                            Family::OffDiagonal => h(order, big_n + n - k) + h(order, big_n + n + k + 1),
                        };
                        if family == Family::Diagonal && k == 0 {
                            v /= rat(2, 1);
                        }
                        if l == 0 {
                            v /= rat(2, 1);
                        }
                        v
                    } else {
                        let order = 2 * l + 1;
                        match family {
                            Family::Diagonal => h(order, n + k) - h(order, n - k),
                            Family::OffDiagonal => h(order, n + 1 + k) - h(order, n - k),
                        }
                    }
                })
                .collect()
        })
        .collect();
    Matrix::from_rows(rows)
}

/// Determinant of the leading principal `N x N` minor.
pub fn leading_minor_det(lattice: Lattice, family: Family, n: i64) -> BigRational {
    let k = lattice.half() as usize;
    relation_matrix(lattice, family, n, k).det()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VandermondeKind {
    Even,
    Odd,
}

/// Determinant of the matrix with rows `(x_i^0, x_i^2, ...)` (even kind) or
/// `(x_i^1, x_i^3, ...)` (odd kind).
pub fn vandermonde_det(kind: VandermondeKind, points: &[BigRational]) -> BigRational {
    if points.is_empty() {
        return BigRational::one();
    }
    let start = match kind {
        VandermondeKind::Even => 0,
        VandermondeKind::Odd => 1,
    };
    let rows =
        points.iter().map(|x| (0..points.len()).map(|i| num_traits::pow(x.clone(), start + 2 * i)).collect()).collect();
    Matrix::from_rows(rows).det()
}

/// Far-pair expansion of one near pair, as `((a, b), coefficient)` terms.
pub type PairExpansion = Vec<((i64, i64), BigRational)>;

/// The solution of the leading system at one center: every near pair of the
/// family expressed through far pairs whose larger index is at most
/// `max_index`. Far pairs above it act as zero on the sector in question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearPairRewrite {
    pub lattice: Lattice,
    pub family: Family,
    pub center: i64,
    pub max_index: i64,
    pub tail_truncation: usize,
    pub expansions: Vec<((i64, i64), PairExpansion)>,
}

impl NearPairRewrite {
    pub fn expansion(&self, near: (i64, i64)) -> Option<&[((i64, i64), BigRational)]> {
        self.expansions.iter().find(|(p, _)| *p == near).map(|(_, e)| e.as_slice())
    }
}

/// Solves the leading system at center `n`, keeping far pairs whose larger
/// index does not exceed `max_index`.
pub fn solve_near_pairs(lattice: Lattice, family: Family, n: i64, max_index: i64) -> Result<NearPairRewrite> {
    let size = lattice.half() as usize;
    // number of columns whose larger index stays within max_index
    let top_k = match family {
        Family::Diagonal => max_index - n,
        Family::OffDiagonal => max_index - n - 1,
    };
    let columns = (top_k - first_k(lattice, family) + 1).max(size as i64) as usize;
    let m = relation_matrix(lattice, family, n, columns);
    let lead = m.leading(size);
    let inv = inverse(&lead).ok_or(Error::SingularMinor { d: lattice.d(), center: n })?;
    debug_assert!(!lead.det().is_zero());
    let expansions = (0..size)
        .map(|i| {
            let far = (size..columns)
                .filter_map(|c| {
                    let mut x = BigRational::zero();
                    for r in 0..size {
                        x -= inv.get(i, r) * m.get(r, c);
                    }
                    (!x.is_zero()).then(|| (column_pair(lattice, family, n, c), x))
                })
                .collect();
            (column_pair(lattice, family, n, i), far)
        })
        .collect();
    Ok(NearPairRewrite { lattice, family, center: n, max_index, tail_truncation: columns - size, expansions })
}

/// Sorts indices, returning the sign of the sorting permutation when modes
/// anticommute, or `None` when a repeated index makes the product vanish.
fn canonical(indices: &[i64], parity: Parity) -> Option<(Vec<i64>, i64)> {
    let mut v = indices.to_vec();
    let mut sign = 1;
    // insertion sort, counting transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if parity == Parity::Anticommuting {
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        Some((v, sign))
    } else {
        Some((v, 1))
    }
}

fn parity_of(lattice: Lattice) -> Parity {
    if lattice.is_even() {
        Parity::Commuting
    } else {
        Parity::Anticommuting
    }
}

/// Rewrites mode monomials acting on `|j sqrt(D)>` into Fibonacci normal
/// form. Near-pair rewrites are cached per (family, center, bound).
#[derive(Debug)]
pub struct Straightener {
    lattice: Lattice,
    rewrites: RwLock<HashMap<(Family, i64, i64), Arc<NearPairRewrite>>>,
}

impl Straightener {
    pub fn new(lattice: Lattice) -> Self {
        Straightener { lattice, rewrites: RwLock::default() }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn rewrite(&self, family: Family, n: i64, max_index: i64) -> Result<Arc<NearPairRewrite>> {
        let key = (family, n, max_index);
        if let Some(r) = self.rewrites.read().unwrap().get(&key) {
            return Ok(Arc::clone(r));
        }
        let r = Arc::new(solve_near_pairs(self.lattice, family, n, max_index)?);
        self.rewrites.write().unwrap().insert(key, Arc::clone(&r));
        Ok(r)
    }

    /// Normal form of `V_{i_1} ... V_{i_r} |j sqrt(D)>` (indices in written
    /// order) as a Fibonacci polynomial in modes with indices at most the
    /// annihilation threshold of `j`.
    pub fn straighten_monomial(&self, j: i64, indices: &[i64], cutoff: i64) -> Result<FibPolynomial> {
        let lat = self.lattice;
        let weight = lat.base(j) - indices.iter().sum::<i64>();
        if weight > cutoff {
            return Err(Error::CutoffExceeded { weight, cutoff });
        }
        let mut start = BTreeMap::new();
        if let Some((sorted, sign)) = canonical(indices, parity_of(lat)) {
            start.insert(sorted, QuadScalar::from_int(sign, lat.d()));
        }
        self.straighten_terms(j, start)
    }

    /// Normal form of a polynomial acting on `|j sqrt(D)>`.
    pub fn straighten_polynomial(&self, j: i64, p: &FibPolynomial) -> Result<FibPolynomial> {
        let lat = self.lattice;
        let mut start: BTreeMap<Vec<i64>, QuadScalar> = BTreeMap::new();
        for (mono, c) in p.terms() {
            if let Some((sorted, sign)) = canonical(&mono.indices(), parity_of(lat)) {
                let e = start.entry(sorted).or_insert_with(|| QuadScalar::zero(lat.d()));
                *e += &c.scale(&rat(sign, 1));
            }
        }
        self.straighten_terms(j, start)
    }

    fn straighten_terms(&self, j: i64, mut work: BTreeMap<Vec<i64>, QuadScalar>) -> Result<FibPolynomial> {
        let lat = self.lattice;
        let parity = parity_of(lat);
        let l = lat.gap() as i64;
        let thr = lat.threshold(j);
        let mut out = FibPolynomial::zero(lat.d(), lat.gap(), parity);
        // every key is processed at most once, and keys share length and sum
        let shapes: std::collections::BTreeSet<(usize, i64)> = work.keys().map(|k| (k.len(), k.iter().sum())).collect();
        let bound = shapes.iter().map(|&(len, sum)| step_bound(len, thr, sum) as usize).sum::<usize>();
        let mut steps = 0usize;
        while let Some((key, coeff)) = work.pop_last() {
            steps += 1;
            if steps > bound {
                return Err(Error::NonTermination(bound));
            }
            if coeff.is_zero() || key.iter().any(|&i| i > thr) {
                continue;
            }
            let violation = (0..key.len().saturating_sub(1)).rev().find(|&p| key[p + 1] - key[p] <= l);
            let Some(p) = violation else {
                out.add_term(FibMonomial::from_indices(&key), coeff);
                continue;
            };
            let (a, b) = (key[p], key[p + 1]);
            let (family, n) = Family::of_pair(a, b);
            let rw = self.rewrite(family, n, thr)?;
            let expansion = rw.expansion((a, b)).expect("near pair belongs to its own system");
            for ((x, y), c) in expansion {
                let mut word = key[..p].to_vec();
                word.push(*x);
                word.push(*y);
                word.extend_from_slice(&key[p + 2..]);
                if let Some((sorted, sign)) = canonical(&word, parity) {
                    debug_assert!(sorted < key);
                    let e = work.entry(sorted).or_insert_with(|| QuadScalar::zero(lat.d()));
                    *e += &coeff.scale(&(c * rat(sign, 1)));
                }
            }
        }
        Ok(out)
    }
}

/// Bound on rewriting steps for a monomial of `len` indices at most `thr`
/// with index sum `sum`: the number of such multisets.
pub fn step_bound(len: usize, thr: i64, sum: i64) -> u64 {
    let excess = len as i64 * thr - sum;
    if len == 0 {
        return 1;
    }
    partitions::count_bounded(excess, Some(len as u32)).max(1)
}

/// `P |j sqrt(D)>` in the Fock model.
pub fn evaluate_polynomial(ops: &VertexOps, p: &FibPolynomial, j: i64) -> FockVector {
    let mut out = FockVector::zero(ops.lattice());
    for (mono, c) in p.terms() {
        out.add_scaled(&ops.evaluate_monomial(&mono.indices(), j), c);
    }
    out
}

/// Matrix of the images of `monomials` applied to `|j sqrt(D)>`, with rows
/// the Fock basis at `(m, d)`.
fn image_matrix(ops: &VertexOps, j: i64, m: i64, d: i64, monomials: &[FibMonomial]) -> Matrix<QuadScalar> {
    let lat = ops.lattice();
    let basis = enumerate_basis(lat, m, d);
    let images: Vec<_> = monomials.iter().map(|mono| ops.evaluate_monomial(&mono.indices(), j)).collect();
    let rows = basis.iter().map(|s| images.iter().map(|v| v.coeff(s)).collect()).collect();
    let mut mat = Matrix::from_rows(rows);
    if basis.is_empty() {
        mat = Matrix::filled(0, monomials.len(), QuadScalar::zero(lat.d()));
    }
    mat
}

/// The Fibonacci monomials spanning the `(m, d)` component of `W_j`.
pub fn fib_monomials_at(lattice: Lattice, j: i64, m: i64, d: i64) -> Vec<FibMonomial> {
    let count = m - j;
    if count < 0 || d < 0 {
        return Vec::new();
    }
    enumerate_fib_monomials(lattice.gap(), lattice.threshold(j), count as u32, d - lattice.base(j))
}

/// Coordinates of `target` (of charge `m`, weight `d`) in the images of the
/// Fibonacci monomials applied to `|j sqrt(D)>`.
pub fn expand_in_fib_basis(
    ops: &VertexOps,
    j: i64,
    target: &FockVector,
    m: i64,
    d: i64,
) -> Result<Vec<(FibMonomial, QuadScalar)>> {
    let lat = ops.lattice();
    if let Some((s, _)) = target.terms().find(|(s, _)| s.charge != m) {
        return Err(Error::ChargeMismatch { expected: m, found: s.charge });
    }
    if target.terms().any(|(s, _)| s.degree(lat) != d) {
        return Err(Error::InvalidParameter(format!("target is not homogeneous of weight {d}")));
    }
    let monomials = fib_monomials_at(lat, j, m, d);
    let basis = enumerate_basis(lat, m, d);
    if monomials.is_empty() {
        return if target.is_zero() { Ok(Vec::new()) } else { Err(Error::Inconsistent) };
    }
    let a = image_matrix(ops, j, m, d, &monomials);
    let b: Vec<_> = basis.iter().map(|s| target.coeff(s)).collect();
    if basis.is_empty() {
        return Err(Error::AmbiguousSolve { rank: 0, count: monomials.len() });
    }
    match solve(&a, &b) {
        Solution::Unique(x) => Ok(monomials.into_iter().zip(x).collect()),
        Solution::Underdetermined { rank } => Err(Error::AmbiguousSolve { rank, count: monomials.len() }),
        Solution::Inconsistent => Err(Error::Inconsistent),
    }
}

/// Result of comparing the Fibonacci images at one bidegree with the
/// character of `W_j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanReport {
    #[serde(rename = "D")]
    pub d: u32,
    pub j: i64,
    pub charge: i64,
    pub degree: i64,
    pub monomials: usize,
    pub rank: usize,
    pub expected: u64,
    pub pass: bool,
}

/// Rank of the Fibonacci images at `(m, d)` against the monomial count and
/// the character coefficient of `W_j`.
pub fn independence_and_span_check(ops: &VertexOps, j: i64, m: i64, d: i64) -> Result<SpanReport> {
    let lat = ops.lattice();
    let monomials = fib_monomials_at(lat, j, m, d);
    let rank = if monomials.is_empty() || enumerate_basis(lat, m, d).is_empty() {
        0
    } else {
        image_matrix(ops, j, m, d, &monomials).rank()
    };
    let expected =
        if d < 0 { 0 } else { char_basic_subspace(lat.d(), j, (m, m), d as u32)?.get(m, d as u32).unwrap_or(0) };
    Ok(SpanReport {
        d: lat.d(),
        j,
        charge: m,
        degree: d,
        monomials: monomials.len(),
        rank,
        expected,
        pass: rank == monomials.len() && rank as u64 == expected,
    })
}
