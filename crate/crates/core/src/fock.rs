//! Fock modules `F_{j sqrt(D)}` over the Heisenberg algebra, with exact
//! coefficients in `Q(sqrt(D))`.
//!
//! A basis state `a_{-k_1} ... a_{-k_r} |j sqrt(D)>` is stored as the charge
//! `j` and the partition `k_1 >= ... >= k_r`; equivalently as the monomial
//! `x_{k_1} ... x_{k_r}` with `a_{-k} = x_k` and `a_k = k d/dx_k`.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::partitions;
use crate::quad::{rat, QuadScalar};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Charge and partition (parts non-increasing, all positive).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FockBasisState {
    pub charge: i64,
    pub partition: Vec<u32>,
}

impl FockBasisState {
    pub fn new(charge: i64, mut partition: Vec<u32>) -> Result<Self> {
        if partition.contains(&0) {
            return Err(Error::InvalidParameter("partition parts must be positive".into()));
        }
        partition.sort_unstable_by(|a, b| b.cmp(a));
        Ok(FockBasisState { charge, partition })
    }

    /// The highest-weight vector `|j sqrt(D)>`.
    pub fn vacuum(charge: i64) -> Self {
        FockBasisState { charge, partition: Vec::new() }
    }

    pub fn size(&self) -> u32 {
        self.partition.iter().sum()
    }

    /// Weight in the standard grading of the lattice.
    pub fn degree(&self, lattice: Lattice) -> i64 {
        lattice.base(self.charge) + self.size() as i64
    }
}

impl fmt::Display for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in &self.partition {
            write!(f, "a[-{k}]")?;
        }
        write!(f, "|{}>", self.charge)
    }
}

/// Merges two non-increasing partitions.
pub(crate) fn merge_parts(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] >= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// A finite linear combination of basis states, never holding zero
/// coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FockVector {
    lattice: Lattice,
    terms: BTreeMap<FockBasisState, QuadScalar>,
}

impl FockVector {
    pub fn zero(lattice: Lattice) -> Self {
        FockVector { lattice, terms: BTreeMap::new() }
    }

    pub fn basis(lattice: Lattice, state: FockBasisState) -> Self {
        let mut v = Self::zero(lattice);
        v.add_term(state, QuadScalar::one(lattice.d()));
        v
    }

    pub fn vacuum(lattice: Lattice, charge: i64) -> Self {
        Self::basis(lattice, FockBasisState::vacuum(charge))
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn add_term(&mut self, state: FockBasisState, coeff: QuadScalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(state) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FockBasisState, &QuadScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, state: &FockBasisState) -> QuadScalar {
        self.terms.get(state).cloned().unwrap_or_else(|| QuadScalar::zero(self.lattice.d()))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest weight among the states present.
    pub fn max_degree(&self) -> Option<i64> {
        self.terms.keys().map(|s| s.degree(self.lattice)).max()
    }

    /// `(charge, weight)` if every state shares it.
    pub fn homogeneous_grade(&self) -> Option<(i64, i64)> {
        let mut grades = self.terms.keys().map(|s| (s.charge, s.degree(self.lattice)));
        let first = grades.next()?;
        grades.all(|g| g == first).then_some(first)
    }

    pub fn scaled(&self, c: &QuadScalar) -> Self {
        let mut out = Self::zero(self.lattice);
        for (s, x) in &self.terms {
            out.add_term(s.clone(), x * c);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, c: &QuadScalar) {
        for (s, x) in &other.terms {
            self.add_term(s.clone(), x * c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &QuadScalar::one(self.lattice.d()));
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, &QuadScalar::from_int(-1, self.lattice.d()));
        out
    }

    /// Coefficient list `[{"state", "coeff"}]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms.iter().map(|(s, c)| serde_json::json!({"state": s, "coeff": c.to_json()})).collect(),
        )
    }
}

impl fmt::Display for FockVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c} {s}")?;
        }
        Ok(())
    }
}

/// Applies `a_n` with `[a_n, a_m] = n delta_{n+m,0}`.
pub fn heisenberg_apply(n: i64, v: &FockVector) -> FockVector {
    let d = v.lattice.d();
    let mut out = FockVector::zero(v.lattice);
    for (s, c) in &v.terms {
        match n {
            0 => out.add_term(s.clone(), c * &QuadScalar::sqrt_d(d).scale(&rat(s.charge, 1))),
            n if n < 0 => {
                let parts = merge_parts(&s.partition, &[(-n) as u32]);
                out.add_term(FockBasisState { charge: s.charge, partition: parts }, c.clone());
            }
            n => {
                let k = n as u32;
                let mult = s.partition.iter().filter(|&&p| p == k).count() as i64;
                if mult > 0 {
                    let pos = s.partition.iter().position(|&p| p == k).unwrap();
                    let mut parts = s.partition.clone();
                    parts.remove(pos);
                    out.add_term(
                        FockBasisState { charge: s.charge, partition: parts },
                        c * &QuadScalar::from_int(n * mult, d),
                    );
                }
            }
        }
    }
    out
}

/// `L_0` eigenvalue `mu^2/2 - lambda mu + |partition|` for the conformal
/// vector `omega_lambda`, with `mu = j sqrt(D)`.
pub fn weight(s: &FockBasisState, lattice: Lattice, lambda: &QuadScalar) -> QuadScalar {
    let d = lattice.d();
    let mu = QuadScalar::sqrt_d(d).scale(&rat(s.charge, 1));
    let half = QuadScalar::from_rational(rat(1, 2), d);
    &(&(&(&mu * &mu) * &half) - &(lambda * &mu)) + &QuadScalar::from_int(s.size() as i64, d)
}

/// The parameter of the standard conformal vector: `0` for even `D`,
/// `sqrt(D)/2` for odd `D`.
pub fn standard_lambda(lattice: Lattice) -> QuadScalar {
    let d = lattice.d();
    if lattice.is_even() {
        QuadScalar::zero(d)
    } else {
        QuadScalar::sqrt_d(d).scale(&rat(1, 2))
    }
}

/// Weight in the standard grading, required to be an integer.
pub fn standard_weight(s: &FockBasisState, lattice: Lattice) -> Result<i64> {
    let w = weight(s, lattice, &standard_lambda(lattice));
    if !w.root_part().is_zero() || !w.rat_part().is_integer() {
        return Err(Error::NonIntegralWeight(w.to_string()));
    }
    Ok(i64::try_from(w.rat_part().to_integer()).expect("weight fits in i64"))
}

/// All basis states of charge `j` and weight `d`, partitions in
/// reverse-lexicographic order.
pub fn enumerate_basis(lattice: Lattice, j: i64, d: i64) -> Vec<FockBasisState> {
    let excess = d - lattice.base(j);
    if excess < 0 {
        return Vec::new();
    }
    partitions::list(excess as u32, None).into_iter().map(|partition| FockBasisState { charge: j, partition }).collect()
}
