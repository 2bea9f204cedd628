//! Modes of the vertex operators `V_{+-sqrt(D)}(z)` on Fock modules, the
//! defining relations they satisfy and evaluation of semi-infinite monomials.
//!
//! `V_mu(z) = e^{mu q} z^{mu a_0} E_-(z) E_+(z)` where on polynomials in
//! `x_k = a_{-k}` the annihilation part `E_+` is the substitution
//! `x_k -> x_k - mu z^{-k}` and the creation part `E_-` is multiplication by
//! `exp(mu sum_k x_k z^k / k)`.

use crate::error::{Error, Result};
use crate::fib::{charge_and_degree, config_to_monomial, FibConfig};
use crate::fock::{enumerate_basis, heisenberg_apply, merge_parts, FockBasisState, FockVector};
use crate::lattice::Lattice;
use crate::partitions;
use crate::quad::{rat, QuadScalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, RwLock};

/// A mode of `V_{sigma sqrt(D)}`: `e_n`/`f_n` for even `D`, `theta_n` and
/// `theta*_n` for odd `D`.
///
/// Even: `e(z) = sum e_n z^{-n-N}`, likewise `f`. Odd: `theta(z) = sum
/// theta_n z^{-n}`, likewise `theta*`. Applying `e_n`, `f_n`, `theta_n`
/// shifts the weight by `-n`; `theta*_n` shifts it by `D - n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexMode {
    pub sign: i8,
    pub index: i64,
}

impl VertexMode {
    pub fn plus(index: i64) -> Self {
        VertexMode { sign: 1, index }
    }

    pub fn minus(index: i64) -> Self {
        VertexMode { sign: -1, index }
    }
}

/// Name of the field `V_{sigma sqrt(D)}`.
pub fn field_name(lattice: Lattice, sign: i8) -> &'static str {
    match (lattice.is_even(), sign > 0) {
        (true, true) => "e",
        (true, false) => "f",
        (false, true) => "theta",
        (false, false) => "theta*",
    }
}

/// The `M`-th mode of `V V^{(k)}(z)` for the field of the given sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationSpec {
    pub sign: i8,
    pub order: u32,
    pub total: i64,
}

impl RelationSpec {
    pub fn name(&self, lattice: Lattice) -> String {
        let f = field_name(lattice, self.sign);
        format!("{f} {f}^({})", self.order)
    }
}

/// Derivative orders of the defining relations: `0, 2, ..., 2N - 2` for
/// `D = 2N` and `1, 3, ..., 2N - 1` for `D = 2N + 1`.
pub fn defining_orders(lattice: Lattice) -> Vec<u32> {
    let start = if lattice.is_even() { 0 } else { 1 };
    (start..lattice.d() - 1).step_by(2).collect()
}

/// Sparse matrix of a mode between graded bases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeMatrix {
    pub cols: Vec<FockBasisState>,
    pub rows: Vec<FockBasisState>,
    pub entries: BTreeMap<(usize, usize), QuadScalar>,
}

impl ModeMatrix {
    pub fn get(&self, r: usize, c: usize) -> Option<&QuadScalar> {
        self.entries.get(&(r, c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub relation: String,
    pub charge: i64,
    pub mode_index: i64,
    pub status: Status,
}

/// Outcome of a verification, one entry per checked identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Report {
    pub entries: Vec<ReportEntry>,
}

impl Report {
    pub fn push(&mut self, relation: impl Into<String>, charge: i64, mode_index: i64, ok: bool) {
        let status = if ok { Status::Pass } else { Status::Fail };
        self.entries.push(ReportEntry { relation: relation.into(), charge, mode_index, status });
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.status == Status::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ReportEntry> {
        self.entries.iter().filter(|e| e.status == Status::Fail)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.failures().count();
        write!(f, "{} checks, {} failed", self.entries.len(), failed)
    }
}

type Series = Arc<Vec<(Vec<u32>, QuadScalar)>>;
type ImageCache = RwLock<HashMap<(VertexMode, FockBasisState), Arc<FockVector>>>;

/// Mode operators for one lattice, with caches for the creation series and
/// for mode matrices. Shareable between threads.
#[derive(Debug)]
pub struct VertexOps {
    lattice: Lattice,
    creation: RwLock<HashMap<(i8, u32), Series>>,
    matrices: RwLock<HashMap<(VertexMode, i64, i64), Arc<ModeMatrix>>>,
}

fn int(n: i128) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn falling(x: i64, k: u32) -> i128 {
    (0..k as i64).map(|i| (x - i) as i128).product()
}

fn binomial(n: u32, k: u32) -> i128 {
    (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128)
}

impl VertexOps {
    pub fn new(lattice: Lattice) -> Self {
        VertexOps { lattice, creation: RwLock::default(), matrices: RwLock::default() }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn mu(&self, sign: i8) -> QuadScalar {
        QuadScalar::sqrt_d(self.lattice.d()).scale(&rat(sign as i64, 1))
    }

    /// Offset in the generating convention: `N` for `D = 2N`, `0` for odd.
    fn offset(&self) -> i64 {
        if self.lattice.is_even() {
            self.lattice.half() as i64
        } else {
            0
        }
    }

    /// Coefficient of `z^r` in `exp(mu sum_k x_k z^k / k)`:
    /// `sum over partitions of r of mu^len / z_lambda x^lambda`.
    fn creation_series(&self, sign: i8, r: u32) -> Series {
        if let Some(s) = self.creation.read().unwrap().get(&(sign, r)) {
            return Arc::clone(s);
        }
        let mu = self.mu(sign);
        let terms: Vec<_> = partitions::list(r, None)
            .into_iter()
            .map(|p| {
                let mut z: i128 = 1;
                let mut i = 0;
                while i < p.len() {
                    let k = p[i];
                    let m = p[i..].iter().take_while(|&&q| q == k).count();
                    z *= (k as i128).pow(m as u32) * (1..=m as i128).product::<i128>();
                    i += m;
                }
                let c = mu.pow(p.len() as u32).scale(&BigRational::new(1.into(), BigInt::from(z)));
                (p, c)
            })
            .collect();
        let s = Arc::new(terms);
        self.creation.write().unwrap().insert((sign, r), Arc::clone(&s));
        s
    }

    /// Largest mode index of the given sign that does not kill `s`.
    pub fn top_nonzero_index(&self, sign: i8, s: &FockBasisState) -> i64 {
        s.size() as i64 - self.offset() - sign as i64 * self.lattice.d() as i64 * s.charge
    }

    /// Weight shift of a mode.
    pub fn weight_shift(&self, mode: VertexMode) -> i64 {
        if !self.lattice.is_even() && mode.sign < 0 {
            self.lattice.d() as i64 - mode.index
        } else {
            -mode.index
        }
    }

    /// Exact image of `v` under the mode.
    pub fn apply(&self, mode: VertexMode, v: &FockVector) -> FockVector {
        let d = self.lattice.d();
        let sigma = mode.sign as i64;
        let neg_mu = self.mu(-mode.sign);
        let mut out = FockVector::zero(self.lattice);
        for (s, c) in v.terms() {
            // r - s_removed = target exponent - z^{mu a_0} exponent
            let need = -mode.index - self.offset() - sigma * d as i64 * s.charge;
            let groups = group_parts(&s.partition);
            let mut choice = vec![0u32; groups.len()];
            loop {
                let removed: i64 = groups.iter().zip(&choice).map(|(&(k, _), &t)| (k * t) as i64).sum();
                let r = removed + need;
                if r >= 0 {
                    let mut coeff = c.clone();
                    let mut rest = Vec::new();
                    let mut total_t = 0;
                    for (&(k, m), &t) in groups.iter().zip(&choice) {
                        coeff = coeff.scale(&int(binomial(m, t)));
                        total_t += t;
                        rest.extend(std::iter::repeat_n(k, (m - t) as usize));
                    }
                    coeff = &coeff * &neg_mu.pow(total_t);
                    for (p, pc) in self.creation_series(mode.sign, r as u32).iter() {
                        let parts = merge_parts(&rest, p);
                        out.add_term(FockBasisState { charge: s.charge + sigma, partition: parts }, &coeff * pc);
                    }
                }
                // next sub-multiset
                let mut i = 0;
                loop {
                    if i == groups.len() {
                        break;
                    }
                    if choice[i] < groups[i].1 {
                        choice[i] += 1;
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == groups.len() {
                    break;
                }
            }
        }
        debug_assert!(out.terms().all(|(t, _)| {
            v.terms().any(|(s, _)| t.degree(self.lattice) == s.degree(self.lattice) + self.weight_shift(mode))
        }));
        out
    }

    /// Image of `v`, required to stay within weight `cutoff`.
    pub fn apply_within(&self, mode: VertexMode, v: &FockVector, cutoff: i64) -> Result<FockVector> {
        let shift = self.weight_shift(mode);
        let top = v
            .terms()
            .filter(|(s, _)| mode.index <= self.top_nonzero_index(mode.sign, s))
            .map(|(s, _)| s.degree(self.lattice) + shift)
            .max();
        match top {
            Some(weight) if weight > cutoff => Err(Error::CutoffExceeded { weight, cutoff }),
            _ => Ok(self.apply(mode, v)),
        }
    }

    /// [`VertexOps::apply`] through a memo of images of basis states.
    fn apply_cached(&self, mode: VertexMode, v: &FockVector, cache: &ImageCache) -> FockVector {
        let mut out = FockVector::zero(self.lattice);
        for (s, c) in v.terms() {
            if mode.index > self.top_nonzero_index(mode.sign, s) {
                continue;
            }
            let key = (mode, s.clone());
            let hit = cache.read().unwrap().get(&key).cloned();
            let img = hit.unwrap_or_else(|| {
                let img = Arc::new(self.apply(mode, &FockVector::basis(self.lattice, s.clone())));
                cache.write().unwrap().insert(key, Arc::clone(&img));
                img
            });
            out.add_scaled(&img, c);
        }
        out
    }

    /// Applies the modes right to left: `modes[0]` acts last.
    pub fn apply_word(&self, modes: &[VertexMode], v: &FockVector) -> FockVector {
        modes.iter().rev().fold(v.clone(), |acc, &m| self.apply(m, &acc))
    }

    /// Matrix of the mode from charge `j` to charge `j + sign`, restricted to
    /// source states whose image has weight at most `cutoff`.
    pub fn mode_matrix(&self, mode: VertexMode, j: i64, cutoff: i64) -> Arc<ModeMatrix> {
        let key = (mode, j, cutoff);
        if let Some(m) = self.matrices.read().unwrap().get(&key) {
            return Arc::clone(m);
        }
        let shift = self.weight_shift(mode);
        let lat = self.lattice;
        let target = j + mode.sign as i64;
        let cols: Vec<_> = (lat.base(j)..=cutoff - shift).flat_map(|w| enumerate_basis(lat, j, w)).collect();
        let rows: Vec<_> = (lat.base(target)..=cutoff).flat_map(|w| enumerate_basis(lat, target, w)).collect();
        let row_of: HashMap<&FockBasisState, usize> = rows.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut entries = BTreeMap::new();
        for (c, s) in cols.iter().enumerate() {
            let img = self.apply(mode, &FockVector::basis(lat, s.clone()));
            for (t, x) in img.terms() {
                entries.insert((row_of[t], c), x.clone());
            }
        }
        let m = Arc::new(ModeMatrix { cols, rows, entries });
        self.matrices.write().unwrap().insert(key, Arc::clone(&m));
        m
    }

    /// The relation's `M`-th mode applied to `v`:
    /// `sum_{a + b = M} (-b - off)_k V_a V_b v`, with `(x)_k` the falling
    /// factorial and `off` the generating offset. Only finitely many terms
    /// survive on a finite vector, since `V_b` kills `v` above its top index
    /// and by (super)commutativity so does `V_a`.
    pub fn relation_apply(&self, spec: RelationSpec, v: &FockVector) -> FockVector {
        let mut out = FockVector::zero(self.lattice);
        let Some(top) = v.terms().map(|(s, _)| self.top_nonzero_index(spec.sign, s)).max() else {
            return out;
        };
        let d = self.lattice.d();
        for b in (spec.total - top)..=top {
            let a = spec.total - b;
            let f = falling(-b - self.offset(), spec.order);
            if f == 0 {
                continue;
            }
            let vb = self.apply(VertexMode { sign: spec.sign, index: b }, v);
            if vb.is_zero() {
                continue;
            }
            let vab = self.apply(VertexMode { sign: spec.sign, index: a }, &vb);
            out.add_scaled(&vab, &QuadScalar::from_rational(int(f), d));
        }
        out
    }

    /// Checks every relation of the given derivative orders, for both signs,
    /// on all basis states of the given charges whose image lies within
    /// weight `cutoff`. One entry per (relation, charge, total index).
    pub fn verify_relation_orders(&self, orders: &[u32], charges: &[i64], cutoff: i64) -> Report {
        let lat = self.lattice;
        let mut report = Report::default();
        for sign in [1i8, -1] {
            for &j in charges {
                let target = j + 2 * sign as i64;
                let pair_shift = if lat.is_even() || sign > 0 { 0 } else { 2 * lat.d() as i64 };
                let states: Vec<_> = (lat.base(j)..=cutoff).flat_map(|w| enumerate_basis(lat, j, w)).collect();
                // image weight = w - M + pair_shift
                let cache = ImageCache::default();
                let per_state = parallel_map(&states, |s| {
                    let w = s.degree(lat);
                    let totals = (w + pair_shift - cutoff, w + pair_shift - lat.base(target));
                    self.relations_vanish(sign, orders, totals, s, &cache)
                });
                let mut results: BTreeMap<(u32, i64), bool> = BTreeMap::new();
                for outcome in per_state {
                    for (key, ok) in outcome {
                        *results.entry(key).or_insert(true) &= ok;
                    }
                }
                for &k in orders {
                    let name = RelationSpec { sign, order: k, total: 0 }.name(lat);
                    for (&(_, m), &ok) in results.range((k, i64::MIN)..=(k, i64::MAX)) {
                        report.push(name.clone(), j, m, ok);
                    }
                }
            }
        }
        report.entries.sort_by_key(|e| e.relation.clone());
        report
    }

    /// Whether each relation `(order, M)` with `M` in `totals` kills the
    /// basis state `s`; shares the products `V_a V_b s` between relations.
    fn relations_vanish(
        &self,
        sign: i8,
        orders: &[u32],
        totals: (i64, i64),
        s: &FockBasisState,
        cache: &ImageCache,
    ) -> Vec<((u32, i64), bool)> {
        let d = self.lattice.d();
        let v = FockVector::basis(self.lattice, s.clone());
        let top = self.top_nonzero_index(sign, s);
        let mut acc: BTreeMap<(u32, i64), FockVector> = BTreeMap::new();
        for b in (totals.0 - top)..=top {
            let vb = self.apply(VertexMode { sign, index: b }, &v);
            if vb.is_zero() {
                continue;
            }
            let a_lo = totals.0 - b;
            let a_hi = (totals.1 - b).min(top);
            for a in a_lo..=a_hi {
                let vab = self.apply_cached(VertexMode { sign, index: a }, &vb, cache);
                if vab.is_zero() {
                    continue;
                }
                for &k in orders {
                    let f = falling(-b - self.offset(), k);
                    if f != 0 {
                        acc.entry((k, a + b))
                            .or_insert_with(|| FockVector::zero(self.lattice))
                            .add_scaled(&vab, &QuadScalar::from_rational(int(f), d));
                    }
                }
            }
        }
        orders
            .iter()
            .flat_map(|&k| (totals.0..=totals.1).map(move |m| (k, m)))
            .map(|key| (key, acc.get(&key).is_none_or(FockVector::is_zero)))
            .collect()
    }

    /// The defining relations.
    pub fn verify_relations(&self, charges: &[i64], cutoff: i64) -> Report {
        self.verify_relation_orders(&defining_orders(self.lattice), charges, cutoff)
    }

    /// States of the given charges with weight at most `cutoff`.
    fn states(&self, charges: &[i64], cutoff: i64) -> Vec<FockBasisState> {
        let lat = self.lattice;
        charges.iter().flat_map(|&j| (lat.base(j)..=cutoff).flat_map(move |w| enumerate_basis(lat, j, w))).collect()
    }

    /// `V_a V_b -+ V_b V_a = 0` for modes of equal sign (commutator for even
    /// `D`, anticommutator for odd `D`), on states whose intermediate and
    /// final images stay within `cutoff`.
    pub fn supercommutativity_check(&self, charges: &[i64], cutoff: i64) -> Report {
        let lat = self.lattice;
        let eps = if lat.is_even() { -1 } else { 1 };
        let mut report = Report::default();
        for sign in [1i8, -1] {
            let name = field_name(lat, sign);
            for &j in charges {
                let states = self.states(&[j], cutoff);
                let range = self.index_range(sign, &states, cutoff);
                for a in range.clone() {
                    for b in range.clone() {
                        if b < a {
                            continue;
                        }
                        let (ma, mb) = (VertexMode { sign, index: a }, VertexMode { sign, index: b });
                        let mut ok = true;
                        let mut checked = false;
                        for s in &states {
                            let w = s.degree(lat);
                            let (sa, sb) = (self.weight_shift(ma), self.weight_shift(mb));
                            if w + sa > cutoff || w + sb > cutoff || w + sa + sb > cutoff {
                                continue;
                            }
                            checked = true;
                            let v = FockVector::basis(lat, s.clone());
                            let x = self.apply(ma, &self.apply(mb, &v));
                            let y = self.apply(mb, &self.apply(ma, &v));
                            let mut z = x;
                            z.add_scaled(&y, &QuadScalar::from_int(eps, lat.d()));
                            ok &= z.is_zero();
                        }
                        if checked {
                            report.push(format!("[{name}_{a},{name}_{b}]"), j, a + b, ok);
                        }
                    }
                }
            }
        }
        report
    }

    /// Mode indices that can act nontrivially on some state and land within
    /// `cutoff`.
    fn index_range(&self, sign: i8, states: &[FockBasisState], cutoff: i64) -> std::ops::RangeInclusive<i64> {
        let lat = self.lattice;
        let top = states.iter().map(|s| self.top_nonzero_index(sign, s)).max().unwrap_or(0);
        let min_w = states.iter().map(|s| s.degree(lat)).min().unwrap_or(0);
        let probe = VertexMode { sign, index: 0 };
        // w + shift(n) <= cutoff with shift(n) = shift(0) - n
        let low = min_w + self.weight_shift(probe) - cutoff;
        low.min(top)..=top
    }

    /// `[a_i, V_m] = sigma sqrt(D) V_{i+m}` for both signs.
    pub fn heisenberg_vertex_commutator_check(&self, charges: &[i64], cutoff: i64) -> Report {
        let lat = self.lattice;
        let mut report = Report::default();
        for sign in [1i8, -1] {
            let name = field_name(lat, sign);
            let factor = self.mu(sign);
            for &j in charges {
                let states = self.states(&[j], cutoff);
                let range = self.index_range(sign, &states, cutoff);
                for i in -cutoff..=cutoff {
                    for m in range.clone() {
                        let mode = VertexMode { sign, index: m };
                        let sum = VertexMode { sign, index: i + m };
                        let mut ok = true;
                        let mut checked = false;
                        for s in &states {
                            let w = s.degree(lat);
                            let sm = self.weight_shift(mode);
                            if w + sm > cutoff || w - i > cutoff || w - i + sm > cutoff {
                                continue;
                            }
                            checked = true;
                            let v = FockVector::basis(lat, s.clone());
                            let lhs = heisenberg_apply(i, &self.apply(mode, &v))
                                .sub(&self.apply(mode, &heisenberg_apply(i, &v)));
                            let rhs = self.apply(sum, &v).scaled(&factor);
                            ok &= lhs == rhs;
                        }
                        if checked {
                            report.push(format!("[a_{i},{name}_{m}]"), j, i + m, ok);
                        }
                    }
                }
            }
        }
        report
    }

    /// Evaluates the semi-infinite monomial of a configuration: its finite
    /// head applied to the vacuum it ends in.
    pub fn evaluate_semiinfinite(&self, a: &FibConfig, cutoff: i64) -> Result<FockVector> {
        let (_, degree) = charge_and_degree(a, self.lattice)?;
        if degree > cutoff {
            return Err(Error::CutoffExceeded { weight: degree, cutoff });
        }
        let (head, j) = config_to_monomial(a, self.lattice)?;
        Ok(self.evaluate_monomial(&head.indices(), j))
    }

    /// `V_{i_1} ... V_{i_k} |j sqrt(D)>` for sign `+1`, with `indices` in
    /// written order.
    pub fn evaluate_monomial(&self, indices: &[i64], j: i64) -> FockVector {
        let modes: Vec<_> = indices.iter().map(|&i| VertexMode::plus(i)).collect();
        self.apply_word(&modes, &FockVector::vacuum(self.lattice, j))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sl2 {
    H,
    E,
    F,
}

impl Sl2 {
    fn name(self) -> &'static str {
        match self {
            Sl2::H => "h",
            Sl2::E => "e",
            Sl2::F => "f",
        }
    }
}

/// The affine `sl_2` brackets at level one for `D = 2`, with `h_n = sqrt(2)
/// a_n` and `K = 1`, on states of charges `-1..=1` whose intermediate and
/// final images stay within `cutoff`.
pub fn sl2_bracket_check(cutoff: i64) -> Report {
    let lat = Lattice::new(2).expect("D = 2 is valid");
    let ops = VertexOps::new(lat);
    let act = |g: Sl2, n: i64, v: &FockVector| match g {
        Sl2::H => heisenberg_apply(n, v).scaled(&QuadScalar::sqrt_d(2)),
        Sl2::E => ops.apply(VertexMode::plus(n), v),
        Sl2::F => ops.apply(VertexMode::minus(n), v),
    };
    let expected = |x: Sl2, y: Sl2, n: i64, m: i64, v: &FockVector| match (x, y) {
        (Sl2::H, Sl2::H) if n + m == 0 => v.scaled(&QuadScalar::from_int(2 * n, 2)),
        (Sl2::H, Sl2::E) => act(Sl2::E, n + m, v).scaled(&QuadScalar::from_int(2, 2)),
        (Sl2::H, Sl2::F) => act(Sl2::F, n + m, v).scaled(&QuadScalar::from_int(-2, 2)),
        (Sl2::E, Sl2::F) => {
            let mut r = act(Sl2::H, n + m, v);
            if n + m == 0 {
                r.add_scaled(v, &QuadScalar::from_int(n, 2));
            }
            r
        }
        _ => FockVector::zero(lat),
    };
    let pairs =
        [(Sl2::H, Sl2::H), (Sl2::H, Sl2::E), (Sl2::H, Sl2::F), (Sl2::E, Sl2::F), (Sl2::E, Sl2::E), (Sl2::F, Sl2::F)];
    let mut report = Report::default();
    for j in -1..=1 {
        let states = ops.states(&[j], cutoff);
        for n in -cutoff..=cutoff {
            for m in -cutoff..=cutoff {
                let fits: Vec<_> = states
                    .iter()
                    .filter(|s| {
                        let w = s.degree(lat);
                        w - n <= cutoff && w - m <= cutoff && w - n - m <= cutoff
                    })
                    .collect();
                if fits.is_empty() {
                    continue;
                }
                for &(x, y) in &pairs {
                    let ok = fits.iter().all(|s| {
                        let v = FockVector::basis(lat, (*s).clone());
                        let lhs = act(x, n, &act(y, m, &v)).sub(&act(y, m, &act(x, n, &v)));
                        lhs == expected(x, y, n, m, &v)
                    });
                    report.push(format!("[{}_{n},{}_{m}]", x.name(), y.name()), j, n + m, ok);
                }
            }
        }
    }
    report
}

fn group_parts(parts: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &p in parts {
        match out.last_mut() {
            Some((k, m)) if *k == p => *m += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Maps `f` over `items` on all available cores, preserving order.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let next = AtomicUsize::new(0);
    let mut done: Vec<(usize, R)> = std::thread::scope(|scope| {
        let workers: Vec<_> = (0..threads)
            .map(|_| {
                scope.spawn(|| {
                    let mut out = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        let Some(item) = items.get(i) else { break out };
                        out.push((i, f(item)));
                    }
                })
            })
            .collect();
        workers.into_iter().flat_map(|w| w.join().expect("worker panicked")).collect()
    });
    done.sort_by_key(|&(i, _)| i);
    done.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fib::validate_config;
    use proptest::prelude::*;

    fn lat(d: u32) -> Lattice {
        Lattice::new(d).unwrap()
    }

    fn state(j: i64, parts: &[u32]) -> FockBasisState {
        FockBasisState::new(j, parts.to_vec()).unwrap()
    }

    /// Order-by-order expansion of the vertex operator from Heisenberg
    /// operators alone, as a map from powers of `z` to vectors.
    fn oracle(lattice: Lattice, mode: VertexMode, s: &FockBasisState) -> FockVector {
        let d = lattice.d();
        let sigma = mode.sign as i64;
        let mu = QuadScalar::sqrt_d(d).scale(&rat(sigma, 1));
        let off = if lattice.is_even() { lattice.half() as i64 } else { 0 };
        let target = -mode.index - off - sigma * d as i64 * s.charge;
        let size = s.size() as i64;
        // annihilation exponential: sum_k A^k / k!, A = -mu sum_n a_n z^{-n} / n
        let mut layer: BTreeMap<i64, FockVector> = BTreeMap::new();
        layer.insert(0, FockVector::basis(lattice, s.clone()));
        let mut annihilated = layer.clone();
        for k in 1..=size {
            let mut next: BTreeMap<i64, FockVector> = BTreeMap::new();
            for (&p, v) in &layer {
                for n in 1..=size {
                    let c = mu.scale(&rat(-1, n * k));
                    let img = heisenberg_apply(n, v).scaled(&c);
                    if !img.is_zero() {
                        next.entry(p - n)
                            .or_insert_with(|| FockVector::zero(lattice))
                            .add_scaled(&img, &QuadScalar::one(d));
                    }
                }
            }
            for (&p, v) in &next {
                annihilated.entry(p).or_insert_with(|| FockVector::zero(lattice)).add_scaled(v, &QuadScalar::one(d));
            }
            layer = next;
        }
        // creation exponential up to the needed power of z
        let mut out = FockVector::zero(lattice);
        for (&p, v) in &annihilated {
            let r = target - p;
            if r < 0 {
                continue;
            }
            let mut layer: BTreeMap<i64, FockVector> = BTreeMap::new();
            layer.insert(0, v.clone());
            let mut created = layer.clone();
            for k in 1..=r {
                let mut next: BTreeMap<i64, FockVector> = BTreeMap::new();
                for (&q, w) in &layer {
                    for n in 1..=r - q {
                        let img = heisenberg_apply(-n, w).scaled(&mu.scale(&rat(1, n * k)));
                        next.entry(q + n)
                            .or_insert_with(|| FockVector::zero(lattice))
                            .add_scaled(&img, &QuadScalar::one(d));
                    }
                }
                for (&q, w) in &next {
                    created.entry(q).or_insert_with(|| FockVector::zero(lattice)).add_scaled(w, &QuadScalar::one(d));
                }
                layer = next;
            }
            if let Some(w) = created.get(&r) {
                for (t, c) in w.terms() {
                    out.add_term(
                        FockBasisState { charge: t.charge + sigma, partition: t.partition.clone() },
                        c.clone(),
                    );
                }
            }
        }
        out
    }

    #[test]
    fn low_modes_on_vacuum() {
        let l = lat(2);
        let ops = VertexOps::new(l);
        let vac = FockVector::vacuum(l, 0);
        assert_eq!(ops.apply(VertexMode::plus(-1), &vac), FockVector::vacuum(l, 1));
        assert!(ops.apply(VertexMode::plus(0), &vac).is_zero());
        let e2 = ops.apply(VertexMode::plus(-2), &vac);
        assert_eq!(e2, FockVector::basis(l, state(1, &[1])).scaled(&QuadScalar::sqrt_d(2)));
        assert_eq!(e2, oracle(l, VertexMode::plus(-2), &FockBasisState::vacuum(0)));
    }

    #[test]
    fn mode_matrices() {
        let ops = VertexOps::new(lat(2));
        let m = ops.mode_matrix(VertexMode::plus(-1), 0, 1);
        assert_eq!((m.rows.len(), m.cols.len()), (1, 1));
        assert_eq!(m.get(0, 0), Some(&QuadScalar::one(2)));
        let again = ops.mode_matrix(VertexMode::plus(-1), 0, 1);
        assert!(Arc::ptr_eq(&m, &again));

        let ops3 = VertexOps::new(lat(3));
        let t = ops3.mode_matrix(VertexMode::plus(0), 0, 0);
        assert_eq!(t.rows, vec![FockBasisState::vacuum(1)]);
        assert_eq!(t.get(0, 0), Some(&QuadScalar::one(3)));

        // columnwise agreement with apply
        let m = ops.mode_matrix(VertexMode::minus(-2), 1, 5);
        for (c, s) in m.cols.iter().enumerate() {
            let img = ops.apply(VertexMode::minus(-2), &FockVector::basis(ops.lattice(), s.clone()));
            for (r, t) in m.rows.iter().enumerate() {
                assert_eq!(m.get(r, c).cloned().unwrap_or_else(|| QuadScalar::zero(2)), img.coeff(t));
            }
        }
    }

    #[test]
    fn annihilation_thresholds() {
        for d in 2..7 {
            let l = lat(d);
            let ops = VertexOps::new(l);
            for j in -3..=3 {
                let vac = FockVector::vacuum(l, j);
                let bound = if l.is_even() { -(d as i64) * j - l.half() as i64 } else { -j * d as i64 };
                assert_eq!(bound, l.threshold(j));
                for n in bound - 3..=bound + 3 {
                    let img = ops.apply(VertexMode::plus(n), &vac);
                    assert_eq!(img.is_zero(), n > bound, "D={d} j={j} n={n}");
                }
            }
        }
    }

    #[test]
    fn cutoff_is_an_error() {
        let l = lat(2);
        let ops = VertexOps::new(l);
        let vac = FockVector::vacuum(l, 0);
        assert_eq!(
            ops.apply_within(VertexMode::plus(-3), &vac, 2),
            Err(Error::CutoffExceeded { weight: 3, cutoff: 2 })
        );
        assert!(ops.apply_within(VertexMode::plus(5), &vac, 0).unwrap().is_zero());
    }

    #[test]
    fn supercommutativity() {
        for d in 2..6 {
            let ops = VertexOps::new(lat(d));
            let report = ops.supercommutativity_check(&[-1, 0, 1], 4);
            assert!(!report.is_empty());
            assert!(report.all_pass(), "D={d}: {:?}", report.failures().next());
        }
    }

    #[test]
    fn vacuum_component_matches_ope_prefactor() {
        // V_mu(z) V_eta(w) |j> has vacuum component z^{mu j} w^{eta j} (z - w)^{mu eta}
        for d in 2..6 {
            let l = lat(d);
            let ops = VertexOps::new(l);
            let off = if l.is_even() { l.half() as i64 } else { 0 };
            for (s1, s2) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                for j in -1..=1 {
                    let p = (s1 as i64) * (s2 as i64) * d as i64;
                    for k in 0..4i64 {
                        let b = -off - (s2 as i64) * d as i64 * j - k;
                        let a = -off - (s1 as i64) * d as i64 * j - p + k;
                        let img = ops.apply(
                            VertexMode { sign: s1, index: a },
                            &ops.apply(VertexMode { sign: s2, index: b }, &FockVector::vacuum(l, j)),
                        );
                        let binom = (0..k).fold(rat(1, 1), |acc, i| acc * rat(p - i, i + 1));
                        let sign = if k % 2 == 0 { 1 } else { -1 };
                        let expected = QuadScalar::from_rational(binom * rat(sign, 1), d);
                        let charge = j + s1 as i64 + s2 as i64;
                        assert_eq!(
                            img.coeff(&FockBasisState::vacuum(charge)),
                            expected,
                            "D={d} ({s1},{s2}) j={j} k={k}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn relation_examples() {
        let l = lat(2);
        let ops = VertexOps::new(l);
        let vac = FockVector::vacuum(l, 0);
        for m in -6..=2 {
            assert!(ops.relation_apply(RelationSpec { sign: 1, order: 0, total: m }, &vac).is_zero());
        }
        assert!(ops.evaluate_monomial(&[-2, -1], 0).is_zero());
        let l3 = lat(3);
        let ops3 = VertexOps::new(l3);
        for m in -8..=2 {
            let v = FockVector::vacuum(l3, 0);
            assert!(ops3.relation_apply(RelationSpec { sign: 1, order: 1, total: m }, &v).is_zero());
        }
    }

    #[test]
    fn defining_relations_hold() {
        assert_eq!(defining_orders(lat(2)), vec![0]);
        assert_eq!(defining_orders(lat(4)), vec![0, 2]);
        assert_eq!(defining_orders(lat(5)), vec![1, 3]);
        for (d, cutoff) in [(2, 5), (3, 4), (4, 4), (5, 6)] {
            let ops = VertexOps::new(lat(d));
            let report = ops.verify_relations(&[-1, 0, 1], cutoff);
            assert!(!report.is_empty(), "D={d}");
            assert!(report.all_pass(), "D={d}: {:?}", report.failures().next());
        }
    }

    #[test]
    fn out_of_range_order_fails() {
        let ops = VertexOps::new(lat(2));
        let report = ops.verify_relation_orders(&[2], &[0], 4);
        assert!(!report.all_pass());
        let v = FockVector::vacuum(lat(2), 0);
        assert!(!ops.relation_apply(RelationSpec { sign: 1, order: 2, total: -4 }, &v).is_zero());
    }

    #[test]
    fn sl2_brackets() {
        let report = sl2_bracket_check(3);
        assert!(report.all_pass(), "{:?}", report.failures().next());
        let ops = VertexOps::new(lat(2));
        let vac = FockVector::vacuum(lat(2), 0);
        let ef = ops.apply(VertexMode::plus(1), &ops.apply(VertexMode::minus(-1), &vac));
        let fe = ops.apply(VertexMode::minus(-1), &ops.apply(VertexMode::plus(1), &vac));
        assert_eq!(ef.sub(&fe), vac);
    }

    #[test]
    fn heisenberg_vertex_commutators() {
        for d in 2..5 {
            let ops = VertexOps::new(lat(d));
            let report = ops.heisenberg_vertex_commutator_check(&[-1, 0, 1], 3);
            assert!(!report.is_empty());
            assert!(report.all_pass(), "D={d}: {:?}", report.failures().next());
        }
        let l = lat(2);
        let ops = VertexOps::new(l);
        let vac = FockVector::vacuum(l, 0);
        let lhs = heisenberg_apply(1, &ops.apply(VertexMode::plus(-1), &vac));
        assert!(lhs.is_zero());
    }

    #[test]
    fn semi_infinite_evaluation() {
        let l2 = lat(2);
        let ops = VertexOps::new(l2);
        assert_eq!(ops.evaluate_semiinfinite(&FibConfig::vacuum(l2, 0), 0), Ok(FockVector::vacuum(l2, 0)));
        let c = validate_config(l2.fib_type(), &[2, -3, -5], -6, 3).unwrap();
        let v = ops.evaluate_semiinfinite(&c, 3).unwrap();
        assert!(!v.is_zero());
        assert_eq!(v.homogeneous_grade(), Some((0, 3)));
        assert_eq!(v, ops.apply(VertexMode::plus(-2), &FockVector::vacuum(l2, -1)));
        assert!(matches!(ops.evaluate_semiinfinite(&c, 2), Err(Error::CutoffExceeded { .. })));
        let l3 = lat(3);
        let ops3 = VertexOps::new(l3);
        assert_eq!(ops3.evaluate_semiinfinite(&FibConfig::vacuum(l3, 0), 0), Ok(FockVector::vacuum(l3, 0)));
        assert!(matches!(ops3.evaluate_semiinfinite(&c, 5), Err(Error::TypeMismatch { .. })));
        // every vacuum is the image of its own configuration
        for d in 2..6 {
            let l = lat(d);
            let ops = VertexOps::new(l);
            for j in -2..=2 {
                let v = ops.evaluate_semiinfinite(&FibConfig::vacuum(l, j), l.base(j)).unwrap();
                assert_eq!(v, FockVector::vacuum(l, j));
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let mut r = Report::default();
        r.push("e e^(0)", 0, -3, true);
        r.push("e e^(0)", 1, -2, false);
        assert_eq!(
            r.to_json(),
            serde_json::json!([
                {"relation": "e e^(0)", "charge": 0, "mode_index": -3, "status": "pass"},
                {"relation": "e e^(0)", "charge": 1, "mode_index": -2, "status": "fail"},
            ])
        );
        assert!(!r.all_pass());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]
        #[test]
        fn apply_matches_expansion_oracle(
            d in 2u32..7,
            plus in any::<bool>(),
            j in -2i64..=2,
            parts in proptest::collection::vec(1u32..4, 0..4),
            shift in -4i64..=2,
        ) {
            let l = lat(d);
            let ops = VertexOps::new(l);
            let s = FockBasisState::new(j, parts).unwrap();
            let sign = if plus { 1 } else { -1 };
            let index = ops.top_nonzero_index(sign, &s) + shift;
            let mode = VertexMode { sign, index };
            let img = ops.apply(mode, &FockVector::basis(l, s.clone()));
            prop_assert_eq!(&img, &oracle(l, mode, &s));
            if let Some(g) = img.homogeneous_grade() {
                prop_assert_eq!(g, (j + sign as i64, s.degree(l) + ops.weight_shift(mode)));
            }
        }
    }
}
