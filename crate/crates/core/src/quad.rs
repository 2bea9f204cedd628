//! Exact arithmetic in the quadratic field `Q(sqrt(D))`.

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// An element `rat + root * sqrt(D)` with rational parts.
///
/// Scalars with different radicands must not be combined; doing so panics.
/// When `D` is a perfect square the root part is folded into the rational
/// part, so the representation is unique.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadScalar {
    rat: BigRational,
    root: BigRational,
    radicand: u32,
}

fn perfect_sqrt(d: u32) -> Option<u32> {
    let r = d.sqrt();
    (r * r == d).then_some(r)
}

impl QuadScalar {
    pub fn new(rat: BigRational, root: BigRational, radicand: u32) -> Self {
        match perfect_sqrt(radicand) {
            Some(r) => QuadScalar {
                rat: rat + root * BigRational::from_integer(BigInt::from(r)),
                root: BigRational::zero(),
                radicand,
            },
            None => QuadScalar { rat, root, radicand },
        }
    }

    pub fn zero(radicand: u32) -> Self {
        QuadScalar { rat: BigRational::zero(), root: BigRational::zero(), radicand }
    }

    pub fn one(radicand: u32) -> Self {
        Self::from_int(1, radicand)
    }

    pub fn from_int(n: i64, radicand: u32) -> Self {
        QuadScalar { rat: BigRational::from_integer(n.into()), root: BigRational::zero(), radicand }
    }

    pub fn from_rational(q: BigRational, radicand: u32) -> Self {
        QuadScalar { rat: q, root: BigRational::zero(), radicand }
    }

    /// `sqrt(D)` itself.
    pub fn sqrt_d(radicand: u32) -> Self {
        Self::new(BigRational::zero(), BigRational::one(), radicand)
    }

    pub fn rat_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn root_part(&self) -> &BigRational {
        &self.root
    }

    pub fn radicand(&self) -> u32 {
        self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.root.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.root.is_zero()
    }

    /// `rat^2 - D root^2`.
    pub fn norm(&self) -> BigRational {
        &self.rat * &self.rat - &self.root * &self.root * BigRational::from_integer(self.radicand.into())
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        Some(QuadScalar { rat: &self.rat / &n, root: -&self.root / &n, radicand: self.radicand })
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.radicand);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        QuadScalar { rat: &self.rat * q, root: &self.root * q, radicand: self.radicand }
    }

    /// The value as an integer, when it is one.
    pub fn to_integer(&self) -> Option<BigInt> {
        (self.root.is_zero() && self.rat.is_integer()).then(|| self.rat.to_integer())
    }

    /// `[rat_num, rat_den, root_num, root_den]`.
    pub fn to_json(&self) -> serde_json::Value {
        let num = |b: &BigInt| match b.to_i64() {
            Some(v) => serde_json::Value::from(v),
            None => serde_json::Value::from(b.to_string()),
        };
        serde_json::Value::Array(vec![
            num(self.rat.numer()),
            num(self.rat.denom()),
            num(self.root.numer()),
            num(self.root.denom()),
        ])
    }

    fn check(&self, other: &Self) {
        assert_eq!(
            self.radicand, other.radicand,
            "QuadScalar radicand mismatch: {} vs {}",
            self.radicand, other.radicand
        );
    }
}

impl fmt::Display for QuadScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rat.is_zero(), self.root.is_zero()) {
            (_, true) => write!(f, "{}", self.rat),
            (true, false) => write!(f, "{}*sqrt({})", self.root, self.radicand),
            (false, false) => {
                let sign = if self.root.is_negative() { '-' } else { '+' };
                write!(f, "({} {} {}*sqrt({}))", self.rat, sign, self.root.abs(), self.radicand)
            }
        }
    }
}

impl<'a> Add<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn add(self, rhs: &QuadScalar) -> QuadScalar {
        self.check(rhs);
        QuadScalar { rat: &self.rat + &rhs.rat, root: &self.root + &rhs.root, radicand: self.radicand }
    }
}

impl<'a> Sub<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn sub(self, rhs: &QuadScalar) -> QuadScalar {
        self.check(rhs);
        QuadScalar { rat: &self.rat - &rhs.rat, root: &self.root - &rhs.root, radicand: self.radicand }
    }
}

impl<'a> Mul<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    fn mul(self, rhs: &QuadScalar) -> QuadScalar {
        self.check(rhs);
        let d = BigRational::from_integer(self.radicand.into());
        QuadScalar {
            rat: &self.rat * &rhs.rat + &self.root * &rhs.root * d,
            root: &self.rat * &rhs.root + &self.root * &rhs.rat,
            radicand: self.radicand,
        }
    }
}

impl<'a> Div<&'a QuadScalar> for &'a QuadScalar {
    type Output = QuadScalar;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: &QuadScalar) -> QuadScalar {
        self * &rhs.inv().expect("division by zero in Q(sqrt(D))")
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<QuadScalar> for QuadScalar {
            type Output = QuadScalar;
            fn $m(self, rhs: QuadScalar) -> QuadScalar { (&self).$m(&rhs) }
        }
        impl<'a> $tr<&'a QuadScalar> for QuadScalar {
            type Output = QuadScalar;
            fn $m(self, rhs: &QuadScalar) -> QuadScalar { (&self).$m(rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        QuadScalar { rat: -self.rat, root: -self.root, radicand: self.radicand }
    }
}

impl Neg for &QuadScalar {
    type Output = QuadScalar;
    fn neg(self) -> QuadScalar {
        -(self.clone())
    }
}

impl AddAssign<&QuadScalar> for QuadScalar {
    fn add_assign(&mut self, rhs: &QuadScalar) {
        self.check(rhs);
        self.rat += &rhs.rat;
        self.root += &rhs.root;
    }
}

impl SubAssign<&QuadScalar> for QuadScalar {
    fn sub_assign(&mut self, rhs: &QuadScalar) {
        self.check(rhs);
        self.rat -= &rhs.rat;
        self.root -= &rhs.root;
    }
}

impl MulAssign<&QuadScalar> for QuadScalar {
    fn mul_assign(&mut self, rhs: &QuadScalar) {
        *self = &*self * rhs;
    }
}

/// Shorthand for a rational `n / d`.
pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}
