//! Truncated bigraded series in a charge variable `z` and a degree
//! variable `q`, and the closed-form characters built from them.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::partitions;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Inclusive range of charges.
pub type ChargeWindow = (i64, i64);

/// Order of a q-Pochhammer symbol `(q)_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PochhammerOrder {
    Finite(u32),
    Infinite,
}

/// A bigraded series known exactly on `charge_window x [0, degree_cutoff]`.
///
/// Inside the window a missing key means coefficient zero; outside it the
/// coefficients are unknown.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SeriesRepr", into = "SeriesRepr")]
pub struct BiSeries {
    charge_window: ChargeWindow,
    degree_cutoff: u32,
    coeffs: BTreeMap<(i64, u32), u64>,
}

/// One coefficient where two series disagree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub charge: i64,
    pub degree: u32,
    pub left: u64,
    pub right: u64,
}

impl BiSeries {
    pub fn new(charge_window: ChargeWindow, degree_cutoff: u32) -> Self {
        assert!(charge_window.0 <= charge_window.1, "empty charge window");
        BiSeries { charge_window, degree_cutoff, coeffs: BTreeMap::new() }
    }

    /// Builds a series by evaluating `f` on every cell of the window.
    pub fn from_fn(charge_window: ChargeWindow, degree_cutoff: u32, mut f: impl FnMut(i64, u32) -> u64) -> Self {
        let mut s = Self::new(charge_window, degree_cutoff);
        for m in charge_window.0..=charge_window.1 {
            for d in 0..=degree_cutoff {
                s.set(m, d, f(m, d));
            }
        }
        s
    }

    pub fn charge_window(&self) -> ChargeWindow {
        self.charge_window
    }

    pub fn degree_cutoff(&self) -> u32 {
        self.degree_cutoff
    }

    fn contains(&self, m: i64, d: u32) -> bool {
        self.charge_window.0 <= m && m <= self.charge_window.1 && d <= self.degree_cutoff
    }

    /// Coefficient of `z^m q^d`, or `None` outside the known window.
    pub fn get(&self, m: i64, d: u32) -> Option<u64> {
        self.contains(m, d).then(|| self.coeffs.get(&(m, d)).copied().unwrap_or(0))
    }

    pub fn set(&mut self, m: i64, d: u32, value: u64) {
        assert!(self.contains(m, d), "({m},{d}) outside the series window");
        if value == 0 {
            self.coeffs.remove(&(m, d));
        } else {
            self.coeffs.insert((m, d), value);
        }
    }

    /// Nonzero coefficients in `(charge, degree)` order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, u32, u64)> + '_ {
        self.coeffs.iter().map(|(&(m, d), &v)| (m, d, v))
    }

    fn intersect(&self, other: &Self) -> Option<(ChargeWindow, u32)> {
        let lo = self.charge_window.0.max(other.charge_window.0);
        let hi = self.charge_window.1.min(other.charge_window.1);
        (lo <= hi).then_some(((lo, hi), self.degree_cutoff.min(other.degree_cutoff)))
    }

    /// Restriction to a smaller window.
    pub fn restrict(&self, window: ChargeWindow, cutoff: u32) -> Self {
        let other = BiSeries::new(window, cutoff);
        let (w, c) = self.intersect(&other).expect("disjoint windows");
        BiSeries::from_fn(w, c, |m, d| self.get(m, d).unwrap_or(0))
    }

    /// Sum on the common window.
    pub fn add(&self, other: &Self) -> Option<Self> {
        let (w, c) = self.intersect(other)?;
        Some(BiSeries::from_fn(w, c, |m, d| self.get(m, d).unwrap() + other.get(m, d).unwrap()))
    }

    /// Cells of the common window where the series differ.
    pub fn diff(&self, other: &Self) -> Vec<Mismatch> {
        let Some((w, c)) = self.intersect(other) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for charge in w.0..=w.1 {
            for degree in 0..=c {
                let (left, right) = (self.get(charge, degree).unwrap(), other.get(charge, degree).unwrap());
                if left != right {
                    out.push(Mismatch { charge, degree, left, right });
                }
            }
        }
        out
    }

    /// Coefficientwise `self <= other` on the common window.
    pub fn le_coefficientwise(&self, other: &Self) -> bool {
        match self.intersect(other) {
            None => true,
            Some((w, c)) => (w.0..=w.1).all(|m| (0..=c).all(|d| self.get(m, d).unwrap() <= other.get(m, d).unwrap())),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("series serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    charge_window: [i64; 2],
    degree_cutoff: u32,
    coeffs: Vec<(i64, u32, u64)>,
}

impl From<BiSeries> for SeriesRepr {
    fn from(s: BiSeries) -> Self {
        SeriesRepr {
            charge_window: [s.charge_window.0, s.charge_window.1],
            degree_cutoff: s.degree_cutoff,
            coeffs: s.iter().collect(),
        }
    }
}

impl TryFrom<SeriesRepr> for BiSeries {
    type Error = String;
    fn try_from(r: SeriesRepr) -> std::result::Result<Self, String> {
        if r.charge_window[0] > r.charge_window[1] {
            return Err("empty charge window".into());
        }
        let mut s = BiSeries::new((r.charge_window[0], r.charge_window[1]), r.degree_cutoff);
        for (m, d, v) in r.coeffs {
            if !s.contains(m, d) {
                return Err(format!("coefficient ({m},{d}) outside window"));
            }
            s.set(m, d, v);
        }
        Ok(s)
    }
}

/// q-expansion of `1 / (q)_m`, charge window `{0}`.
pub fn qpochhammer_inverse(order: PochhammerOrder, degree_cutoff: u32) -> BiSeries {
    let cap = match order {
        PochhammerOrder::Finite(m) => Some(m),
        PochhammerOrder::Infinite => None,
    };
    BiSeries::from_fn((0, 0), degree_cutoff, |_, d| partitions::count_bounded(d as i64, cap))
}

fn check_lattice(d: u32) -> Result<Lattice> {
    Lattice::new(d)
}

/// Character of the whole lattice algebra: `sum_m z^m q^base(m) / (q)_inf`.
pub fn char_lattice(d: u32, window: ChargeWindow, degree_cutoff: u32) -> Result<BiSeries> {
    let lat = check_lattice(d)?;
    let p = qpochhammer_inverse(PochhammerOrder::Infinite, degree_cutoff);
    Ok(BiSeries::from_fn(window, degree_cutoff, |m, deg| {
        let rel = deg as i64 - lat.base(m);
        if rel < 0 {
            0
        } else {
            p.get(0, rel as u32).unwrap()
        }
    }))
}

/// Character of the basic subspace `W_j`: `sum_{m >= j} z^m q^base(m) / (q)_{m-j}`.
pub fn char_basic_subspace(d: u32, j: i64, window: ChargeWindow, degree_cutoff: u32) -> Result<BiSeries> {
    let lat = check_lattice(d)?;
    Ok(BiSeries::from_fn(window, degree_cutoff, |m, deg| {
        if m < j {
            return 0;
        }
        let len = u32::try_from(m - j).expect("charge span fits u32");
        partitions::count_bounded(deg as i64 - lat.base(m), Some(len))
    }))
}

/// Validates a user-supplied charge window.
pub fn parse_window(lo: i64, hi: i64) -> Result<ChargeWindow> {
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty charge window {lo}..{hi}")));
    }
    Ok((lo, hi))
}
