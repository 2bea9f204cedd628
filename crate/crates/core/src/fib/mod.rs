//! Infinite Fibonacci configurations, the tau map and the counting of
//! configurations by charge and degree.

mod monomial;

pub use monomial::{enumerate_fib_monomials, FibMonomial, FibPolynomial, Parity};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::series::{BiSeries, ChargeWindow};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Type `(theta, l)`: at most one 1 in every `l + 1` consecutive positions,
/// and far to the left the 1s sit exactly on the residue class
/// `theta mod (l + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FibType {
    theta: u32,
    l: u32,
}

impl FibType {
    pub fn new(theta: u32, l: u32) -> Result<Self> {
        if l == 0 || theta > l {
            return Err(Error::InvalidParameter(format!("invalid configuration type ({theta},{l})")));
        }
        Ok(FibType { theta, l })
    }

    pub fn theta(self) -> u32 {
        self.theta
    }

    pub fn l(self) -> u32 {
        self.l
    }

    fn period(self) -> i64 {
        self.l as i64 + 1
    }

    /// Value of the periodic pattern at position `p`.
    pub fn pattern(self, p: i64) -> bool {
        (p - self.theta as i64).rem_euclid(self.period()) == 0
    }

    /// Largest pattern position strictly below `p`.
    fn pattern_below(self, p: i64) -> i64 {
        let q = p - 1;
        q - (q - self.theta as i64).rem_euclid(self.period())
    }
}

/// A configuration in canonical form: below `tail_start` it agrees with the
/// periodic pattern, `head_ones` lists the 1s at or above `tail_start`, and
/// `tail_start` is as large as possible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FibConfig {
    fib_type: FibType,
    head_ones: Vec<i64>,
    tail_start: i64,
}

impl FibConfig {
    pub fn fib_type(&self) -> FibType {
        self.fib_type
    }

    /// Head 1-positions, increasing.
    pub fn head_ones(&self) -> &[i64] {
        &self.head_ones
    }

    pub fn tail_start(&self) -> i64 {
        self.tail_start
    }

    /// Value at position `p`.
    pub fn at(&self, p: i64) -> bool {
        if p < self.tail_start {
            self.fib_type.pattern(p)
        } else {
            self.head_ones.binary_search(&p).is_ok()
        }
    }

    /// Positions of 1s from the top down; infinite.
    pub fn ones_descending(&self) -> impl Iterator<Item = i64> + '_ {
        let period = self.fib_type.period();
        let first_tail = self.fib_type.pattern_below(self.tail_start);
        self.head_ones.iter().rev().copied().chain((0..).map(move |k: i64| first_tail - k * period))
    }

    /// The configuration whose tau sequence is the vacuum sequence of
    /// `|j sqrt(D)>`.
    pub fn vacuum(lattice: Lattice, j: i64) -> Self {
        monomial_to_config(&FibMonomial::one(), j, lattice).expect("vacuum is admissible")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.fib_type.theta,
            "l": self.fib_type.l,
            "head_ones": self.head_ones,
            "tail_start": self.tail_start,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::InvalidParameter("malformed configuration JSON".into());
        let theta = v["theta"].as_u64().ok_or_else(bad)? as u32;
        let l = v["l"].as_u64().ok_or_else(bad)? as u32;
        let tail_start = v["tail_start"].as_i64().ok_or_else(bad)?;
        let ones: Vec<i64> = v["head_ones"]
            .as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|x| x.as_i64().ok_or_else(bad))
            .collect::<Result<_>>()?;
        let t = FibType::new(theta, l)?;
        let lo = tail_start - t.period();
        let mut all: Vec<i64> = (lo..tail_start).filter(|&p| t.pattern(p)).collect();
        all.extend(ones.iter().copied());
        let hi = all.iter().copied().max().unwrap_or(tail_start).max(tail_start);
        let cfg = validate_config(t, &all, lo, hi)?;
        if cfg.tail_start != tail_start {
            return Err(Error::InvalidParameter("tail_start is not canonical".into()));
        }
        Ok(cfg)
    }
}

/// Checks a candidate and returns it in canonical form.
///
/// The candidate is: 1s exactly at `ones` inside the window `[lo, hi]`, the
/// periodic pattern below `lo`, zeros above `hi`. The lowest `l + 1`
/// positions of the window must already follow the pattern.
pub fn validate_config(t: FibType, ones: &[i64], lo: i64, hi: i64) -> Result<FibConfig> {
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty window [{lo}, {hi}]")));
    }
    let set: BTreeSet<i64> = ones.iter().copied().collect();
    if let Some(&top) = set.range(hi + 1..).next() {
        return Err(Error::UnboundedSupport(top));
    }
    if let Some(&low) = set.range(..lo).next_back() {
        return Err(Error::TailMismatch(low));
    }
    let value = |p: i64| if p < lo { t.pattern(p) } else { set.contains(&p) };
    let block_top = (lo + t.l as i64).min(hi);
    if let Some(p) = (lo..=block_top).find(|&p| value(p) != t.pattern(p)) {
        return Err(Error::TailMismatch(p));
    }
    // window condition, including windows straddling lo
    let mut last: Option<i64> = None;
    for p in (lo - t.l as i64)..=hi {
        if value(p) {
            if let Some(prev) = last {
                if p - prev <= t.l as i64 {
                    return Err(Error::WindowViolation { first: prev, second: p, span: t.l + 1 });
                }
            }
            last = Some(p);
        }
    }
    // lowest deviation from the pattern; one always exists because the
    // pattern has 1s above hi
    let tail_start =
        (lo..=hi).find(|&p| value(p) != t.pattern(p)).unwrap_or_else(|| (hi + 1..).find(|&p| t.pattern(p)).unwrap());
    let head_ones = set.range(tail_start..).copied().collect();
    Ok(FibConfig { fib_type: t, head_ones, tail_start })
}

/// First `k` values of tau: negated 1-positions scanned from the top.
pub fn tau_prefix(a: &FibConfig, k: usize) -> Vec<i64> {
    a.ones_descending().take(k).map(|p| -p).collect()
}

fn check_type(a: &FibConfig, lattice: Lattice) -> Result<()> {
    if a.fib_type != lattice.fib_type() {
        return Err(Error::TypeMismatch { theta: a.fib_type.theta, l: a.fib_type.l, d: lattice.d() });
    }
    Ok(())
}

/// Charge and L0 degree of the basis vector labelled by `a`.
pub fn charge_and_degree(a: &FibConfig, lattice: Lattice) -> Result<(i64, i64)> {
    check_type(a, lattice)?;
    let head = a.head_ones.len() as i64;
    let tau = tau_prefix(a, a.head_ones.len() + 1);
    let m =
        lattice.charge_from_tau(head + 1, tau[head as usize]).expect("tail of a typed configuration is a vacuum tail");
    let excess: i64 =
        tau[..head as usize].iter().enumerate().map(|(i, &t)| lattice.vacuum_tau(m, i as i64 + 1) - t).sum();
    Ok((m, lattice.base(m) + excess))
}

/// Splits `a` into a finite head monomial over the vacuum `|j sqrt(D)>`,
/// stripping the longest common tail.
pub fn config_to_monomial(a: &FibConfig, lattice: Lattice) -> Result<(FibMonomial, i64)> {
    let (m, _) = charge_and_degree(a, lattice)?;
    let tau = tau_prefix(a, a.head_ones.len());
    let k = tau
        .iter()
        .enumerate()
        .rev()
        .find(|&(i, &t)| t != lattice.vacuum_tau(m, i as i64 + 1))
        .map_or(0, |(i, _)| i + 1);
    Ok((FibMonomial::from_indices(&tau[..k]), m - k as i64))
}

/// Inverse of [`config_to_monomial`]: the configuration with tau sequence
/// `head` followed by the vacuum sequence of `j`.
pub fn monomial_to_config(head: &FibMonomial, j: i64, lattice: Lattice) -> Result<FibConfig> {
    let l = lattice.gap();
    if !head.is_fibonacci(l) || head.max_index().is_some_and(|top| top > lattice.threshold(j)) {
        return Err(Error::NotFibonacci(head.indices()));
    }
    let t = lattice.fib_type();
    let first_vacuum = -lattice.vacuum_tau(j, 1);
    let lo = first_vacuum - l as i64;
    let mut ones: Vec<i64> = head.indices().iter().map(|&i| -i).collect();
    ones.push(first_vacuum);
    let hi = ones.iter().copied().max().unwrap();
    validate_config(t, &ones, lo, hi)
}

/// Every configuration of charge `m` and degree `d`, found by searching
/// 1-positions with the first `depth` slots free and the rest pinned to the
/// vacuum tail of charge `m`.
fn search_configs(t: FibType, lattice: Lattice, m: i64, d: i64, depth: usize) -> Vec<FibConfig> {
    let excess = d - lattice.base(m);
    if excess < 0 {
        return Vec::new();
    }
    let period = t.period();
    // v(i) = position of the i-th vacuum 1 (1-based)
    let v = |i: usize| -lattice.vacuum_tau(m, i as i64);
    let seam = v(depth + 1);
    let mut out = Vec::new();
    // chosen[i] = position of the (i+1)-th 1; shift(i) = chosen[i] - v(i+1)
    // is non-increasing and ends >= 0 by the window condition at the seam
    #[allow(clippy::too_many_arguments)]
    fn go(
        ctx: &dyn Fn(usize) -> i64,
        depth: usize,
        period: i64,
        seam: i64,
        budget: i64,
        prev_shift: i64,
        chosen: &mut Vec<i64>,
        emit: &mut dyn FnMut(&[i64]),
    ) {
        let i = chosen.len();
        if i == depth {
            if budget == 0 {
                emit(chosen);
            }
            return;
        }
        let slots_left = (depth - i) as i64;
        let top = match chosen.last() {
            Some(&p) => p - period,
            None => ctx(1) + budget,
        };
        let floor = seam + period * slots_left;
        let mut p = top;
        while p >= floor {
            let shift = p - ctx(i + 1);
            if shift <= prev_shift && shift <= budget && shift * slots_left >= budget {
                chosen.push(p);
                go(ctx, depth, period, seam, budget - shift, shift, chosen, emit);
                chosen.pop();
            }
            if shift < 0 {
                break;
            }
            p -= 1;
        }
    }
    let mut emit = |chosen: &[i64]| {
        let mut ones = chosen.to_vec();
        ones.push(seam);
        let hi = ones[0];
        let cfg = validate_config(t, &ones, seam - t.l as i64, hi).expect("search emits valid configurations");
        debug_assert_eq!(charge_and_degree(&cfg, lattice), Ok((m, d)));
        out.push(cfg);
    };
    if depth == 0 {
        if excess == 0 {
            emit(&[]);
        }
    } else {
        go(&v, depth, period, seam, excess, i64::MAX, &mut Vec::new(), &mut emit);
    }
    out.sort();
    out
}

/// All configurations of the lattice's type with charge `m` and degree `d`.
pub fn enumerate_configs(t: FibType, lattice: Lattice, m: i64, d: i64) -> Result<Vec<FibConfig>> {
    if t != lattice.fib_type() {
        return Err(Error::TypeMismatch { theta: t.theta, l: t.l, d: lattice.d() });
    }
    let excess = (d - lattice.base(m)).max(0) as usize;
    Ok(search_configs(t, lattice, m, d, excess))
}

/// Same search with a deeper free region; used to confirm the depth bound.
pub fn enumerate_configs_with_depth(lattice: Lattice, m: i64, d: i64, depth: usize) -> Vec<FibConfig> {
    search_configs(lattice.fib_type(), lattice, m, d, depth)
}

/// Number of configurations in each `(charge, degree)` cell.
pub fn fib_character(t: FibType, lattice: Lattice, window: ChargeWindow, cutoff: u32) -> Result<BiSeries> {
    if t != lattice.fib_type() {
        return Err(Error::TypeMismatch { theta: t.theta, l: t.l, d: lattice.d() });
    }
    let mut s = BiSeries::new(window, cutoff);
    for m in window.0..=window.1 {
        for d in 0..=cutoff {
            let n = enumerate_configs(t, lattice, m, d as i64)?.len() as u64;
            s.set(m, d, n);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::char_lattice;

    fn lat(d: u32) -> Lattice {
        Lattice::new(d).unwrap()
    }

    fn ty(theta: u32, l: u32) -> FibType {
        FibType::new(theta, l).unwrap()
    }

    #[test]
    fn type_bounds() {
        assert!(FibType::new(0, 0).is_err());
        assert!(FibType::new(3, 2).is_err());
        assert!(FibType::new(2, 2).is_ok());
    }

    #[test]
    fn validate_examples() {
        // ground pattern of type (1,1): 1s at -1, -3, ...
        let g = validate_config(ty(1, 1), &[-1, -3], -4, 0).unwrap();
        assert!(g.head_ones().is_empty());
        assert_eq!(g.tail_start(), 1);
        assert_eq!(tau_prefix(&g, 3), vec![1, 3, 5]);

        assert_eq!(
            validate_config(ty(1, 1), &[-1, -2, -3], -4, 0),
            Err(Error::WindowViolation { first: -3, second: -2, span: 2 })
        );

        let c = validate_config(ty(1, 1), &[2, -3, -5], -6, 3).unwrap();
        assert_eq!(c.head_ones(), &[2]);
        assert_eq!(c.tail_start(), -1);
        assert!(!c.at(-1) && !c.at(0) && !c.at(1) && c.at(2) && c.at(-3) && !c.at(-2));
        assert_eq!(tau_prefix(&c, 3), vec![-2, 3, 5]);
    }

    #[test]
    fn validate_errors() {
        // a 1 above the declared window
        assert_eq!(validate_config(ty(1, 1), &[5, -1], -2, 3), Err(Error::UnboundedSupport(5)));
        // bottom block disagrees with the pattern
        assert_eq!(validate_config(ty(1, 1), &[1], -2, 2), Err(Error::TailMismatch(-1)));
        assert!(matches!(
            validate_config(ty(1, 1), &[1, 0, -1], -2, 1),
            Err(Error::WindowViolation { first: -1, second: 0, .. })
        ));
    }

    #[test]
    fn tau_examples() {
        let g02 = validate_config(ty(0, 2), &[0, -3], -5, 1).unwrap();
        assert_eq!(tau_prefix(&g02, 3), vec![0, 3, 6]);
    }

    #[test]
    fn canonical_form_is_window_independent() {
        let a = validate_config(ty(1, 1), &[2, -3, -5], -6, 3).unwrap();
        let b = validate_config(ty(1, 1), &[2, -3, -5, -7, -9], -10, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn charge_degree_examples() {
        let l2 = lat(2);
        assert_eq!(charge_and_degree(&FibConfig::vacuum(l2, 0), l2), Ok((0, 0)));
        let c = validate_config(ty(1, 1), &[2, -3, -5], -6, 3).unwrap();
        assert_eq!(charge_and_degree(&c, l2), Ok((0, 3)));
        let v1 = validate_config(ty(1, 1), &[1, -1, -3], -4, 1).unwrap();
        assert_eq!(v1, FibConfig::vacuum(l2, 1));
        assert_eq!(charge_and_degree(&v1, l2), Ok((1, 1)));
        let bad = FibConfig::vacuum(lat(3), 0);
        assert!(matches!(charge_and_degree(&bad, l2), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn odd_vacua() {
        let l3 = lat(3);
        let v0 = FibConfig::vacuum(l3, 0);
        assert_eq!(tau_prefix(&v0, 3), vec![3, 6, 9]);
        assert_eq!(charge_and_degree(&v0, l3), Ok((0, 0)));
        let v1 = FibConfig::vacuum(l3, 1);
        assert_eq!(tau_prefix(&v1, 3), vec![0, 3, 6]);
        assert_eq!(charge_and_degree(&v1, l3), Ok((1, 0)));
    }

    #[test]
    fn monomial_round_trip_examples() {
        let l2 = lat(2);
        assert_eq!(config_to_monomial(&FibConfig::vacuum(l2, 0), l2), Ok((FibMonomial::one(), 0)));
        let c = validate_config(ty(1, 1), &[2, -3, -5], -6, 3).unwrap();
        let (head, j) = config_to_monomial(&c, l2).unwrap();
        assert_eq!((head.indices(), j), (vec![-2], -1));
        assert_eq!(monomial_to_config(&head, j, l2), Ok(c));
        let l3 = lat(3);
        assert_eq!(config_to_monomial(&FibConfig::vacuum(l3, 0), l3), Ok((FibMonomial::one(), 0)));
        assert!(matches!(
            monomial_to_config(&FibMonomial::from_indices(&[-2, -1]), 0, l2),
            Err(Error::NotFibonacci(_))
        ));
    }

    #[test]
    fn enumeration_examples() {
        let l2 = lat(2);
        let t = l2.fib_type();
        assert_eq!(enumerate_configs(t, l2, 0, 0).unwrap(), vec![FibConfig::vacuum(l2, 0)]);
        assert_eq!(enumerate_configs(t, l2, 0, 2).unwrap().len(), 2);
        let l3 = lat(3);
        assert_eq!(enumerate_configs(ty(0, 2), l3, 1, 0).unwrap().len(), 1);
        assert!(enumerate_configs(ty(1, 1), l3, 0, 0).is_err());
    }

    #[test]
    fn deeper_search_finds_nothing_new() {
        for d in 2..7 {
            let lattice = lat(d);
            for m in -2..3 {
                for deg in 0..9 {
                    let base = enumerate_configs(lattice.fib_type(), lattice, m, deg).unwrap();
                    let excess = (deg - lattice.base(m)).max(0) as usize;
                    for extra in 1..3 {
                        assert_eq!(enumerate_configs_with_depth(lattice, m, deg, excess + extra), base);
                    }
                }
            }
        }
    }

    #[test]
    fn character_examples() {
        let l2 = lat(2);
        let fc = fib_character(l2.fib_type(), l2, (-1, 1), 4).unwrap();
        assert!(fc.diff(&char_lattice(2, (-1, 1), 4).unwrap()).is_empty());
        assert_eq!(fc.get(0, 4), Some(5));
        let l5 = lat(5);
        assert_eq!(fib_character(l5.fib_type(), l5, (0, 0), 0).unwrap().get(0, 0), Some(1));
    }

    #[test]
    fn enumerated_configs_are_consistent() {
        for d in 2..6 {
            let lattice = lat(d);
            let l = lattice.gap() as i64;
            for m in -2..3 {
                for deg in 0..8 {
                    for cfg in enumerate_configs(lattice.fib_type(), lattice, m, deg).unwrap() {
                        assert_eq!(charge_and_degree(&cfg, lattice), Ok((m, deg)));
                        assert!(deg >= lattice.base(m));
                        let is_vacuum = cfg == FibConfig::vacuum(lattice, m);
                        assert_eq!(deg == lattice.base(m), is_vacuum);
                        let tau = tau_prefix(&cfg, 12);
                        assert!(tau.windows(2).all(|w| w[1] - w[0] > l));
                        let (head, j) = config_to_monomial(&cfg, lattice).unwrap();
                        assert_eq!(monomial_to_config(&head, j, lattice).as_ref(), Ok(&cfg));
                        assert_eq!(head.deg_z() as i64, m - j);
                        assert_eq!(lattice.base(j) + head.deg_q(), deg);
                        let back = FibConfig::from_json(&cfg.to_json()).unwrap();
                        assert_eq!(back, cfg);
                    }
                }
            }
        }
    }
}
