//! The restricted dual of the basic subspace `W_0` as symmetric polynomials
//! times a fixed prefactor, paired with mode polynomials by residues.

use crate::error::{Error, Result};
use crate::fib::Parity;
use crate::lattice::Lattice;
use crate::linalg::Matrix;
use crate::partitions;
use crate::quad::rat;
use crate::straighten::fib_monomials_at;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

/// A Laurent polynomial in `z_1, ..., z_m` with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiPoly {
    vars: usize,
    terms: BTreeMap<Vec<i64>, BigRational>,
}

impl MultiPoly {
    pub fn zero(vars: usize) -> Self {
        MultiPoly { vars, terms: BTreeMap::new() }
    }

    pub fn one(vars: usize) -> Self {
        Self::monomial(vec![0; vars], BigRational::one())
    }

    pub fn monomial(exps: Vec<i64>, c: BigRational) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, c);
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn add_term(&mut self, exps: Vec<i64>, c: BigRational) {
        assert_eq!(exps.len(), self.vars, "exponent vector length");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[i64]) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.vars);
        for (a, x) in &self.terms {
            for (b, y) in &other.terms {
                let e = a.iter().zip(b).map(|(p, q)| p + q).collect();
                out.add_term(e, x * y);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::one(self.vars), |acc, _| acc.mul(self))
    }

    /// `z_i - z_j`.
    pub fn difference(vars: usize, i: usize, j: usize) -> Self {
        let mut p = Self::zero(vars);
        let mut e = vec![0; vars];
        e[i] = 1;
        p.add_term(e.clone(), BigRational::one());
        e[i] = 0;
        e[j] = 1;
        p.add_term(e, -BigRational::one());
        p
    }

    /// The monomial symmetric polynomial of a partition with at most `vars`
    /// parts.
    pub fn monomial_symmetric(vars: usize, partition: &[u32]) -> Self {
        let mut exps: Vec<i64> = partition.iter().map(|&p| p as i64).collect();
        exps.resize(vars, 0);
        exps.sort_unstable();
        let mut p = Self::zero(vars);
        for perm in distinct_permutations(&exps) {
            p.add_term(perm, BigRational::one());
        }
        p
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = Self::zero(self.vars);
        for (e, c) in &self.terms {
            let mut f = vec![0; self.vars];
            for (i, &p) in perm.iter().enumerate() {
                f[p] = e[i];
            }
            out.add_term(f, c.clone());
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        // adjacent transpositions generate the symmetric group
        (0..self.vars.saturating_sub(1)).all(|i| {
            let mut perm: Vec<usize> = (0..self.vars).collect();
            perm.swap(i, i + 1);
            self.permuted(&perm) == *self
        })
    }
}

/// Distinct rearrangements of a sorted vector, in lexicographic order.
fn distinct_permutations(sorted: &[i64]) -> Vec<Vec<i64>> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (0..cur.len().saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            return out;
        };
        let j = (i + 1..cur.len()).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

/// All permutations of `0..m` with their signs.
fn permutations(m: usize) -> Vec<(Vec<usize>, i64)> {
    fn go(rest: &mut Vec<usize>, prefix: &mut Vec<usize>, sign: i64, out: &mut Vec<(Vec<usize>, i64)>) {
        if rest.is_empty() {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            go(rest, prefix, if i % 2 == 0 { sign } else { -sign }, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut (0..m).collect(), &mut Vec::new(), 1, &mut out);
    out
}

/// A dual form: a symmetric polynomial `f` in `m` variables with the
/// implied prefactor `prod_{i<j} (z_i - z_j)^D` times `(z_1...z_m)^{N-1}`
/// (even `D = 2N`) or `1/(z_1...z_m)` (odd).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualForm {
    lattice: Lattice,
    f: MultiPoly,
    exponent: u32,
}

impl DualForm {
    pub fn new(lattice: Lattice, f: MultiPoly) -> Result<Self> {
        if !f.is_symmetric() {
            return Err(Error::NotSymmetric);
        }
        Ok(DualForm { lattice, f, exponent: lattice.d() })
    }

    /// Same form with a different exponent on the differences; only the
    /// lattice value `D` gives forms on the dual.
    pub fn with_exponent(mut self, exponent: u32) -> Self {
        self.exponent = exponent;
        self
    }

    pub fn vars(&self) -> usize {
        self.f.vars()
    }

    pub fn symmetric_part(&self) -> &MultiPoly {
        &self.f
    }

    /// The full integrand.
    pub fn full(&self) -> MultiPoly {
        let m = self.vars();
        let mut g = self.f.clone();
        for i in 0..m {
            for j in i + 1..m {
                g = g.mul(&MultiPoly::difference(m, i, j).pow(self.exponent));
            }
        }
        let shift = if self.lattice.is_even() { self.lattice.half() as i64 - 1 } else { -1 };
        g.mul(&MultiPoly::monomial(vec![shift; m], BigRational::one()))
    }

    /// Degree of the `W_0` component this form pairs with.
    pub fn degree(&self) -> Option<i64> {
        let top = self.f.terms().map(|(e, _)| e.iter().sum::<i64>()).max()?;
        Some(top + prefactor_degree(self.lattice, self.vars(), self.exponent))
    }
}

/// A mode polynomial of fixed charge: sorted index lists with rational
/// coefficients, commuting for even `D` and anticommuting for odd `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealElement {
    pub parity: Parity,
    pub charge: usize,
    pub terms: BTreeMap<Vec<i64>, BigRational>,
}

impl IdealElement {
    pub fn zero(parity: Parity, charge: usize) -> Self {
        IdealElement { parity, charge, terms: BTreeMap::new() }
    }

    /// Adds `c` times the product of modes in written order.
    pub fn add_word(&mut self, word: &[i64], c: BigRational) {
        assert_eq!(word.len(), self.charge, "word length is the charge");
        let mut v = word.to_vec();
        let mut sign = 1;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 && v[j - 1] > v[j] {
                v.swap(j - 1, j);
                sign = -sign;
                j -= 1;
            }
        }
        if self.parity == Parity::Anticommuting {
            if v.windows(2).any(|w| w[0] == w[1]) {
                return;
            }
        } else {
            sign = 1;
        }
        let e = self.terms.entry(v.clone()).or_insert_with(BigRational::zero);
        *e += c * rat(sign, 1);
        if e.is_zero() {
            self.terms.remove(&v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Product with a monomial placed on the right.
    pub fn times(&self, word: &[i64]) -> Self {
        let mut out = Self::zero(self.parity, self.charge + word.len());
        for (k, c) in &self.terms {
            let mut w = k.clone();
            w.extend_from_slice(word);
            out.add_word(&w, c.clone());
        }
        out
    }

    /// `deg_q`, when homogeneous.
    pub fn degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|k| -k.iter().sum::<i64>());
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }
}

fn parity_of(lattice: Lattice) -> Parity {
    if lattice.is_even() {
        Parity::Commuting
    } else {
        Parity::Anticommuting
    }
}

/// Dimension of the `(m, d)` component of the dual: partitions of
/// `d - base(m)` into at most `m` parts.
pub fn dual_dim(lattice: Lattice, m: u32, d: i64) -> u64 {
    let excess = d - lattice.base(m as i64);
    if m == 0 {
        return u64::from(excess == 0);
    }
    partitions::count_bounded(excess, Some(m))
}

/// Residue pairing: the mode `V_n` is represented by `x^n`, so each term
/// `V_{n_1} ... V_{n_m}` picks, for every permutation `s`, the coefficient of
/// `prod z_i^{-n_{s(i)} - 1}` in the full integrand, signed by `s` when odd.
pub fn pair(form: &DualForm, element: &IdealElement) -> Result<BigRational> {
    let full = form.full();
    pair_with_full(form.lattice, &full, element)
}

fn pair_with_full(lattice: Lattice, full: &MultiPoly, element: &IdealElement) -> Result<BigRational> {
    let m = full.vars();
    if element.charge != m {
        return Err(Error::ChargeMismatch { expected: m as i64, found: element.charge as i64 });
    }
    let odd = !lattice.is_even();
    let perms = permutations(m);
    let mut total = BigRational::zero();
    for (word, c) in &element.terms {
        for (perm, sign) in &perms {
            let exps: Vec<i64> = perm.iter().map(|&p| -word[p] - 1).collect();
            let x = full.coeff(&exps);
            if x.is_zero() {
                continue;
            }
            total += if odd { x * rat(*sign, 1) } else { x } * c;
        }
    }
    Ok(total)
}

/// Quadratic generators of the ideal: for each defining relation and each
/// total index `M` in `window`, the `M`-th mode of `V_+ V_+^{(k)}` where
/// `V_+` keeps the modes that do not kill `|0>`.
pub fn ideal_generators(lattice: Lattice, window: (i64, i64)) -> Vec<(u32, i64, IdealElement)> {
    let thr = lattice.threshold(0);
    let off = if lattice.is_even() { lattice.half() as i64 } else { 0 };
    let start = if lattice.is_even() { 0 } else { 1 };
    let mut out = Vec::new();
    for k in (start..lattice.d() - 1).step_by(2) {
        for total in window.0..=window.1 {
            let mut el = IdealElement::zero(parity_of(lattice), 2);
            for b in (total - thr)..=thr {
                let a = total - b;
                let f: i64 = (0..k as i64).map(|i| -b - off - i).product();
                el.add_word(&[a, b], rat(f, 1));
            }
            out.push((k, total, el));
        }
    }
    out
}

/// Multisets of `count` indices at most `thr` with index sum `sum`, as
/// non-decreasing lists.
fn index_multisets(count: usize, thr: i64, sum: i64) -> Vec<Vec<i64>> {
    let excess = count as i64 * thr - sum;
    if count == 0 {
        return if excess == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    if excess < 0 {
        return Vec::new();
    }
    partitions::list(excess as u32, None)
        .into_iter()
        .filter(|p| p.len() <= count)
        .map(|p| {
            let mut v: Vec<i64> = p.iter().map(|&x| thr - x as i64).collect();
            v.resize(count, thr);
            v.sort_unstable();
            v
        })
        .collect()
}

/// Ideal elements of charge `m` and degree `d`: generators times
/// monomials in the remaining `m - 2` modes.
pub fn ideal_elements(lattice: Lattice, m: usize, d: i64) -> Vec<IdealElement> {
    if m < 2 {
        return Vec::new();
    }
    let thr = lattice.threshold(0);
    let mut out = Vec::new();
    // generator total M and the rest's sum s satisfy M + s = -d
    let lowest = -d - (m as i64 - 2) * thr;
    for (_, total, g) in ideal_generators(lattice, (lowest, 2 * thr)) {
        for rest in index_multisets(m - 2, thr, -d - total) {
            let el = g.times(&rest);
            if !el.is_zero() {
                out.push(el);
            }
        }
    }
    out
}

/// Degree paired by the form with `f = 1` and the given exponent.
fn prefactor_degree(lattice: Lattice, m: usize, exponent: u32) -> i64 {
    let m = m as i64;
    let pairs = exponent as i64 * m * (m - 1) / 2;
    if lattice.is_even() {
        pairs + m * lattice.half() as i64
    } else {
        pairs
    }
}

/// Forms spanning the `(m, d)` component: monomial symmetric `f` of degree
/// `d - base(m)`.
pub fn spanning_forms(lattice: Lattice, m: usize, d: i64) -> Vec<DualForm> {
    spanning_forms_with_exponent(lattice, m, d, lattice.d())
}

/// [`spanning_forms`] with another exponent on the differences.
pub fn spanning_forms_with_exponent(lattice: Lattice, m: usize, d: i64, exponent: u32) -> Vec<DualForm> {
    let excess = d - prefactor_degree(lattice, m, exponent);
    if excess < 0 || m == 0 {
        return if m == 0 && excess == 0 {
            vec![DualForm::new(lattice, MultiPoly::one(0)).expect("constant is symmetric").with_exponent(exponent)]
        } else {
            Vec::new()
        };
    }
    partitions::list(excess as u32, None)
        .into_iter()
        .filter(|p| p.len() <= m)
        .map(|p| {
            DualForm::new(lattice, MultiPoly::monomial_symmetric(m, &p))
                .expect("symmetric by construction")
                .with_exponent(exponent)
        })
        .collect()
}

/// Summary of the annihilator check at one degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualReport {
    #[serde(rename = "D")]
    pub d: u32,
    pub m: usize,
    pub degree: i64,
    pub n_forms: usize,
    pub rank: usize,
    pub annihilator_ok: bool,
}

impl DualReport {
    /// Annihilation holds and the forms pair perfectly with `W_0`.
    pub fn pass(&self, lattice: Lattice) -> bool {
        let dim = dual_dim(lattice, self.m as u32, self.degree) as usize;
        self.annihilator_ok && self.n_forms == dim && self.rank == dim
    }
}

/// Pairs the spanning forms of `(m, d)` against every ideal element of that
/// bidegree, and measures the rank of their pairing with the Fibonacci
/// monomials of `W_0`.
pub fn verify_annihilator_at(lattice: Lattice, m: usize, d: i64, exponent: u32) -> DualReport {
    let forms = spanning_forms_with_exponent(lattice, m, d, exponent);
    let fulls: Vec<_> = forms.iter().map(DualForm::full).collect();
    let ideal = ideal_elements(lattice, m, d);
    let annihilator_ok =
        fulls.iter().all(|g| ideal.iter().all(|el| pair_with_full(lattice, g, el).expect("charges agree").is_zero()));
    let monomials = fib_monomials_at(lattice, 0, m as i64, d);
    let rank = if fulls.is_empty() || monomials.is_empty() {
        0
    } else {
        let rows = fulls
            .iter()
            .map(|g| {
                monomials
                    .iter()
                    .map(|mono| {
                        let mut el = IdealElement::zero(parity_of(lattice), m);
                        el.add_word(&mono.indices(), BigRational::one());
                        pair_with_full(lattice, g, &el).expect("charges agree")
                    })
                    .collect()
            })
            .collect();
        Matrix::from_rows(rows).rank()
    };
    DualReport { d: lattice.d(), m, degree: d, n_forms: forms.len(), rank, annihilator_ok }
}

/// [`verify_annihilator_at`] over all degrees up to `max_degree`.
pub fn verify_annihilator(lattice: Lattice, m: usize, max_degree: i64) -> Vec<DualReport> {
    (0..=max_degree).map(|d| verify_annihilator_at(lattice, m, d, lattice.d())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::char_basic_subspace;

    fn lat(d: u32) -> Lattice {
        Lattice::new(d).unwrap()
    }

    fn element(lattice: Lattice, words: &[(&[i64], i64)]) -> IdealElement {
        let mut el = IdealElement::zero(parity_of(lattice), words[0].0.len());
        for (w, c) in words {
            el.add_word(w, rat(*c, 1));
        }
        el
    }

    #[test]
    fn dual_dimensions() {
        assert_eq!(dual_dim(lat(2), 2, 4), 1);
        assert_eq!(dual_dim(lat(2), 2, 6), 2);
        for d in 2..7 {
            assert_eq!(dual_dim(lat(d), 0, 0), 1);
            assert_eq!(dual_dim(lat(d), 0, 3), 0);
        }
    }

    #[test]
    fn dual_dimensions_match_character() {
        for d in [2, 3, 4, 5] {
            let l = lat(d);
            let ch = char_basic_subspace(d, 0, (0, 4), 14).unwrap();
            for m in 0..=4u32 {
                for deg in 0..=14u32 {
                    assert_eq!(Some(dual_dim(l, m, deg as i64)), ch.get(m as i64, deg), "D={d} m={m} d={deg}");
                }
            }
        }
    }

    #[test]
    fn pairing_examples() {
        let l = lat(2);
        let form = DualForm::new(l, MultiPoly::one(2)).unwrap();
        let el = element(l, &[(&[-1, -3], 2), (&[-2, -2], 1)]);
        assert_eq!(pair(&form, &el), Ok(rat(0, 1)));
        let single = element(l, &[(&[-1, -3], 1)]);
        assert_eq!(pair(&form, &single), Ok(rat(2, 1)));
        let one = DualForm::new(l, MultiPoly::one(1)).unwrap();
        assert_eq!(pair(&one, &element(l, &[(&[-1], 1)])), Ok(rat(1, 1)));
        assert_eq!(pair(&one, &element(l, &[(&[-2], 1)])), Ok(rat(0, 1)));
        assert_eq!(pair(&one, &el), Err(Error::ChargeMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn pairing_symmetry() {
        for d in [2, 3, 4, 5] {
            let l = lat(d);
            let form = DualForm::new(l, MultiPoly::monomial_symmetric(2, &[2, 1])).unwrap();
            let g = form.full();
            let thr = l.threshold(0);
            for a in thr - 6..=thr {
                for b in thr - 6..=thr {
                    let mut x = IdealElement::zero(Parity::Commuting, 2);
                    x.add_word(&[a, b], rat(1, 1));
                    let mut y = IdealElement::zero(Parity::Commuting, 2);
                    y.add_word(&[b, a], rat(1, 1));
                    // raw residues before the (anti)commutation is applied
                    let px = pair_with_full(l, &g, &x).unwrap();
                    let py = pair_with_full(l, &g, &y).unwrap();
                    assert_eq!(px, py);
                    if !l.is_even() {
                        let mut s = IdealElement::zero(Parity::Anticommuting, 2);
                        s.add_word(&[b, a], rat(1, 1));
                        let mut t = IdealElement::zero(Parity::Anticommuting, 2);
                        t.add_word(&[a, b], rat(1, 1));
                        assert_eq!(pair_with_full(l, &g, &s).unwrap(), -pair_with_full(l, &g, &t).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn generator_examples() {
        let l = lat(2);
        let gens = ideal_generators(l, (-4, -2));
        let find = |m: i64| gens.iter().find(|(_, t, _)| *t == m).unwrap().2.clone();
        assert_eq!(find(-4), element(l, &[(&[-1, -3], 2), (&[-2, -2], 1)]));
        assert_eq!(find(-2), element(l, &[(&[-1, -1], 1)]));
        let l3 = lat(3);
        let g3 = ideal_generators(l3, (0, 0));
        assert_eq!(g3.len(), 1);
        assert!(g3[0].2.is_zero());
    }

    #[test]
    fn symmetry_is_required() {
        let mut f = MultiPoly::zero(2);
        f.add_term(vec![1, 0], rat(1, 1));
        assert_eq!(DualForm::new(lat(2), f.clone()), Err(Error::NotSymmetric));
        f.add_term(vec![0, 1], rat(1, 1));
        assert!(DualForm::new(lat(2), f).is_ok());
        assert!(MultiPoly::monomial_symmetric(3, &[2, 1]).is_symmetric());
        assert_eq!(MultiPoly::monomial_symmetric(3, &[2, 1]).terms().count(), 6);
    }

    #[test]
    fn annihilator_holds() {
        for (d, m, top) in [(2, 2, 9), (3, 2, 8), (4, 2, 10), (5, 2, 10), (2, 3, 13), (3, 3, 13)] {
            let l = lat(d);
            for deg in 0..=top {
                let r = verify_annihilator_at(l, m, deg, d);
                assert!(r.pass(l), "{r:?}");
            }
        }
    }

    #[test]
    fn lowered_exponent_breaks_annihilation() {
        for d in [2, 3, 4, 5] {
            let l = lat(d);
            let collapsed = (0..=10).map(|deg| verify_annihilator_at(l, 2, deg, d - 1)).any(|r| !r.pass(l));
            assert!(collapsed, "D={d}");
            let nonzero = (0..=10).map(|deg| verify_annihilator_at(l, 2, deg, d - 2)).any(|r| !r.annihilator_ok);
            assert!(nonzero, "D={d}");
        }
    }

    #[test]
    fn report_json() {
        let r = verify_annihilator_at(lat(2), 2, 4, 2);
        assert_eq!(
            serde_json::to_value(&r).unwrap(),
            serde_json::json!({"D": 2, "m": 2, "degree": 4, "n_forms": 1, "rank": 1, "annihilator_ok": true})
        );
    }

    proptest::proptest! {
        #[test]
        fn pairing_is_bilinear(
            d in 2u32..=5,
            p in proptest::collection::vec(0u32..3, 0..3),
            x in proptest::collection::vec((-8i64..=-1, -8i64..=-1, -3i64..=3), 1..4),
            y in proptest::collection::vec((-8i64..=-1, -8i64..=-1, -3i64..=3), 1..4),
            c in -4i64..=4,
        ) {
            let l = lat(d);
            let mut parts = p.into_iter().filter(|&k| k > 0).collect::<Vec<_>>();
            parts.sort_unstable_by(|a, b| b.cmp(a));
            let form = DualForm::new(l, MultiPoly::monomial_symmetric(2, &parts)).unwrap();
            let build = |words: &[(i64, i64, i64)], scale: i64| {
                let mut el = IdealElement::zero(parity_of(l), 2);
                for &(a, b, k) in words {
                    el.add_word(&[a, b], rat(k * scale, 1));
                }
                el
            };
            let mut sum = build(&x, 1);
            for &(a, b, k) in &y {
                sum.add_word(&[a, b], rat(k * c, 1));
            }
            let lhs = pair(&form, &sum).unwrap();
            let rhs = pair(&form, &build(&x, 1)).unwrap() + pair(&form, &build(&y, c)).unwrap();
            proptest::prop_assert_eq!(lhs, rhs);
        }
    }
}
