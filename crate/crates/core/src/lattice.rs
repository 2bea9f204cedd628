//! The rank-one lattice `sqrt(D) Z` and the integer bookkeeping attached to it.

use crate::error::{Error, Result};
use crate::fib::{FibType, Parity};
use serde::{Deserialize, Serialize};

/// A one-dimensional lattice `sqrt(D) Z` with `D >= 2`.
///
/// Even `D = 2N` is graded by the conformal vector with `lambda = 0`, odd
/// `D = 2N + 1` by the one with `lambda = sqrt(D)/2`; both make every L0
/// eigenvalue an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Lattice(u32);

impl Lattice {
    pub fn new(d: u32) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidLattice(d));
        }
        Ok(Lattice(d))
    }

    /// The radicand `D`.
    pub fn d(self) -> u32 {
        self.0
    }

    /// `N = floor(D / 2)`.
    pub fn half(self) -> u32 {
        self.0 / 2
    }

    pub fn is_even(self) -> bool {
        self.0.is_multiple_of(2)
    }

    pub fn parity(self) -> Parity {
        if self.is_even() {
            Parity::Commuting
        } else {
            Parity::Anticommuting
        }
    }

    /// Weight of the highest vector `|j sqrt(D)>`.
    pub fn base(self, j: i64) -> i64 {
        let d = self.0 as i64;
        if self.is_even() {
            (d / 2) * j * j
        } else {
            d * j * (j - 1) / 2
        }
    }

    /// Largest mode index `n` with `X_n |j sqrt(D)> != 0` for the positive
    /// vertex operator `X = e` (even) or `X = theta` (odd).
    pub fn threshold(self, j: i64) -> i64 {
        let d = self.0 as i64;
        if self.is_even() {
            -d * j - d / 2
        } else {
            -j * d
        }
    }

    /// Minimal admissible gap parameter `l` of Fibonacci monomials:
    /// consecutive indices must differ by more than `l`.
    pub fn gap(self) -> u32 {
        // 2N - 1 for D = 2N, 2N for D = 2N + 1
        self.0 - 1
    }

    /// Configuration type whose semi-infinite monomials form a basis.
    pub fn fib_type(self) -> FibType {
        if self.is_even() {
            FibType::new(self.half(), self.0 - 1).expect("valid type")
        } else {
            FibType::new(0, self.0 - 1).expect("valid type")
        }
    }

    /// `i`-th (1-based) mode index of the semi-infinite monomial identified
    /// with `|j sqrt(D)>`.
    pub fn vacuum_tau(self, j: i64, i: i64) -> i64 {
        let d = self.0 as i64;
        if self.is_even() {
            (2 * i - 2 * j - 1) * (d / 2)
        } else {
            (i - j) * d
        }
    }

    /// Inverts [`Lattice::vacuum_tau`]: the charge `j` whose vacuum monomial
    /// has `tau` at slot `i`, if any.
    pub fn charge_from_tau(self, i: i64, tau: i64) -> Option<i64> {
        let d = self.0 as i64;
        if self.is_even() {
            let n = d / 2;
            if tau % n != 0 {
                return None;
            }
            let twice = 2 * i - 1 - tau / n;
            (twice % 2 == 0).then_some(twice / 2)
        } else {
            (tau % d == 0).then_some(i - tau / d)
        }
    }

    /// Highest mode index allowed in the free algebra that surjects onto the
    /// basic subspace of charge 0 (`-N` even, `0` odd).
    pub fn top_index(self) -> i64 {
        self.threshold(0)
    }
}

impl std::fmt::Display for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "D={}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_radicand() {
        assert_eq!(Lattice::new(1), Err(Error::InvalidLattice(1)));
        assert!(Lattice::new(2).is_ok());
    }

    #[test]
    fn bases_and_thresholds() {
        let l2 = Lattice::new(2).unwrap();
        assert_eq!(l2.base(1), 1);
        assert_eq!(l2.base(-2), 4);
        assert_eq!(l2.threshold(0), -1);
        assert_eq!(l2.threshold(1), -3);
        let l3 = Lattice::new(3).unwrap();
        assert_eq!(l3.base(1), 0);
        assert_eq!(l3.base(2), 3);
        assert_eq!(l3.base(-1), 3);
        assert_eq!(l3.threshold(0), 0);
        assert_eq!(l3.threshold(-1), 3);
    }

    #[test]
    fn vacuum_tau_round_trips() {
        for d in 2..8 {
            let lat = Lattice::new(d).unwrap();
            for j in -4..5 {
                for i in 1..6 {
                    let t = lat.vacuum_tau(j, i);
                    assert_eq!(lat.charge_from_tau(i, t), Some(j));
                }
                // the first vacuum slot sits one gap above the threshold
                assert_eq!(lat.vacuum_tau(j, 1) - lat.gap() as i64 - 1, lat.threshold(j));
            }
        }
    }
}
