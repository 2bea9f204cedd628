//! Fibonacci monomials and polynomials in mode variables `x_i`.

use crate::quad::QuadScalar;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Whether the mode variables commute (even lattices) or anticommute (odd).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Parity {
    Commuting,
    Anticommuting,
}

/// A monomial `x_{i_1}^{k_1} ... x_{i_r}^{k_r}` with strictly increasing
/// indices. Exponents above one only occur in intermediate, non-Fibonacci
/// monomials.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FibMonomial {
    vars: Vec<(i64, u32)>,
}

impl FibMonomial {
    /// The empty monomial.
    pub fn one() -> Self {
        Self::default()
    }

    /// From a multiset of indices in any order.
    pub fn from_indices(indices: &[i64]) -> Self {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        let mut vars: Vec<(i64, u32)> = Vec::new();
        for i in sorted {
            match vars.last_mut() {
                Some((last, k)) if *last == i => *k += 1,
                _ => vars.push((i, 1)),
            }
        }
        FibMonomial { vars }
    }

    pub fn vars(&self) -> &[(i64, u32)] {
        &self.vars
    }

    /// Indices with repetition, increasing.
    pub fn indices(&self) -> Vec<i64> {
        self.vars.iter().flat_map(|&(i, k)| std::iter::repeat_n(i, k as usize)).collect()
    }

    pub fn deg_z(&self) -> u32 {
        self.vars.iter().map(|&(_, k)| k).sum()
    }

    pub fn deg_q(&self) -> i64 {
        -self.vars.iter().map(|&(i, k)| i * k as i64).sum::<i64>()
    }

    /// Square-free with consecutive indices differing by more than `l`.
    pub fn is_fibonacci(&self, l: u32) -> bool {
        self.vars.iter().all(|&(_, k)| k == 1) && self.vars.windows(2).all(|w| w[1].0 - w[0].0 > l as i64)
    }

    pub fn max_index(&self) -> Option<i64> {
        self.vars.last().map(|&(i, _)| i)
    }
}

impl Serialize for FibMonomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.indices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FibMonomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(FibMonomial::from_indices(&Vec::<i64>::deserialize(d)?))
    }
}

/// A linear combination of monomials with coefficients in `Q(sqrt(D))`.
///
/// In the anticommuting case monomials are square-free and stored in
/// increasing index order, signs absorbed into the coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FibPolynomial {
    radicand: u32,
    gap: u32,
    parity: Parity,
    terms: BTreeMap<FibMonomial, QuadScalar>,
}

impl FibPolynomial {
    pub fn zero(radicand: u32, gap: u32, parity: Parity) -> Self {
        FibPolynomial { radicand, gap, parity, terms: BTreeMap::new() }
    }

    pub fn gap(&self) -> u32 {
        self.gap
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    /// Adds `coeff * mono`; zero results are removed.
    pub fn add_term(&mut self, mono: FibMonomial, coeff: QuadScalar) {
        if self.parity == Parity::Anticommuting {
            assert!(mono.vars.iter().all(|&(_, k)| k == 1), "anticommuting monomial with a square");
        }
        let entry = self.terms.entry(mono).or_insert_with(|| QuadScalar::zero(self.radicand));
        *entry += &coeff;
        if entry.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FibMonomial, &QuadScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &FibMonomial) -> QuadScalar {
        self.terms.get(mono).cloned().unwrap_or_else(|| QuadScalar::zero(self.radicand))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Every monomial satisfies the gap condition.
    pub fn is_fibonacci(&self) -> bool {
        self.terms.keys().all(|m| m.is_fibonacci(self.gap))
    }

    /// `[{"indices": [...], "coeff": [rat_num, rat_den, root_num, root_den]}, ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms.iter().map(|(m, c)| serde_json::json!({"indices": m.indices(), "coeff": c.to_json()})).collect(),
        )
    }
}

impl fmt::Display for FibPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let sym = match self.parity {
            Parity::Commuting => "e",
            Parity::Anticommuting => "theta",
        };
        for (n, (mono, c)) in self.terms.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let word: String = mono.indices().iter().map(|i| format!("{sym}[{i}]")).collect();
            let word = if word.is_empty() { "1".to_string() } else { word };
            if *c == QuadScalar::one(self.radicand) {
                write!(f, "{word}")?;
            } else {
                write!(f, "{c} * {word}")?;
            }
        }
        Ok(())
    }
}

/// All Fibonacci-`l` monomials with `deg_z = count`, `deg_q = degree` and
/// every index at most `max_index`, in increasing lexicographic order of
/// their index lists.
pub fn enumerate_fib_monomials(l: u32, max_index: i64, count: u32, degree: i64) -> Vec<FibMonomial> {
    // choose indices from the top down; `bound` is the largest admissible
    // value for the next (smaller) index and `target` the sum still needed
    fn go(step: i64, bound: i64, left: u32, target: i64, picked: &mut Vec<i64>, out: &mut Vec<FibMonomial>) {
        if left == 0 {
            if target == 0 {
                out.push(FibMonomial::from_indices(picked));
            }
            return;
        }
        // largest sum reachable with `left` indices below `bound`
        let best = |top: i64| left as i64 * top - step * (left as i64) * (left as i64 - 1) / 2;
        let mut i = bound;
        while best(i) >= target {
            picked.push(i);
            go(step, i - step, left - 1, target - i, picked, out);
            picked.pop();
            i -= 1;
        }
    }
    let mut out = Vec::new();
    go(l as i64 + 1, max_index, count, -degree, &mut Vec::new(), &mut out);
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools_free::combinations;

    /// Tiny local combination helper so the oracle shares nothing with the
    /// search above.
    mod itertools_free {
        pub fn combinations(pool: &[i64], k: usize) -> Vec<Vec<i64>> {
            if k == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for (n, &x) in pool.iter().enumerate() {
                for mut rest in combinations(&pool[n + 1..], k - 1) {
                    rest.insert(0, x);
                    out.push(rest);
                }
            }
            out
        }
    }

    fn brute(l: u32, max_index: i64, count: usize, degree: i64) -> Vec<FibMonomial> {
        // the smallest index is -degree minus the others, each at most max_index
        let low = -degree.abs() - count as i64 * max_index.abs() - 1;
        let pool: Vec<i64> = (low..=max_index).collect();
        let mut out: Vec<FibMonomial> = combinations(&pool, count)
            .into_iter()
            .filter(|c| c.iter().sum::<i64>() == -degree)
            .map(|c| FibMonomial::from_indices(&c))
            .filter(|m| m.is_fibonacci(l))
            .collect();
        out.sort();
        out
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_fib_monomials(1, -1, 2, 4), vec![FibMonomial::from_indices(&[-1, -3])]);
        assert!(enumerate_fib_monomials(1, -1, 2, 3).is_empty());
        for l in 1..4 {
            assert_eq!(enumerate_fib_monomials(l, -1, 0, 0), vec![FibMonomial::one()]);
            assert!(enumerate_fib_monomials(l, -1, 0, 2).is_empty());
        }
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for l in 1..4 {
            for max_index in [-3i64, -1, 0, 2] {
                for count in 0..4 {
                    for degree in -6..14 {
                        assert_eq!(
                            enumerate_fib_monomials(l, max_index, count as u32, degree),
                            brute(l, max_index, count, degree),
                            "l={l} max={max_index} count={count} degree={degree}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gradings() {
        let m = FibMonomial::from_indices(&[-5, -1, -1]);
        assert_eq!(m.deg_z(), 3);
        assert_eq!(m.deg_q(), 7);
        assert!(!m.is_fibonacci(1));
        assert!(FibMonomial::from_indices(&[-5, -1]).is_fibonacci(3));
        assert!(!FibMonomial::from_indices(&[-4, -1]).is_fibonacci(3));
    }

    #[test]
    fn display_and_json() {
        let mut p = FibPolynomial::zero(2, 1, Parity::Commuting);
        assert_eq!(p.to_string(), "0");
        p.add_term(FibMonomial::from_indices(&[-1, -3]), QuadScalar::from_int(-2, 2));
        assert_eq!(p.to_string(), "-2 * e[-3]e[-1]");
        assert_eq!(p.to_json(), serde_json::json!([{"indices": [-3, -1], "coeff": [-2, 1, 0, 1]}]));
        p.add_term(FibMonomial::from_indices(&[-3, -1]), QuadScalar::from_int(2, 2));
        assert!(p.is_empty());
    }
}
