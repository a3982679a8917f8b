//! Exact scalars in the quadratic field Q(s), s^2 = -r.
//!
//! Every coefficient in the crate is a [`QScalar`]. The value of `r` travels
//! with the scalar; combining scalars built for different `r` is an error in
//! the checked API and a panic in the operator overloads.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always kept in lowest terms with a positive
/// denominator.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("scalars built over different fields: r = {left} and r = {right}")]
    ContextMismatch { left: u32, right: u32 },
    #[error("division by zero")]
    DivisionByZero,
}

/// Builds a rational from a numerator and a nonzero denominator.
pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `a + b*s` with `s^2 = -r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QScalar {
    r: u32,
    a: Rational,
    b: Rational,
}

impl QScalar {
    pub fn new(r: u32, a: Rational, b: Rational) -> Self {
        debug_assert!(r >= 1);
        QScalar { r, a, b }
    }

    pub fn zero(r: u32) -> Self {
        Self::new(r, Rational::zero(), Rational::zero())
    }

    pub fn one(r: u32) -> Self {
        Self::from_int(r, 1)
    }

    pub fn from_int(r: u32, value: i64) -> Self {
        Self::new(r, Rational::from_integer(value.into()), Rational::zero())
    }

    pub fn from_rational(r: u32, value: Rational) -> Self {
        Self::new(r, value, Rational::zero())
    }

    /// The generator `s = sqrt(-r)`.
    pub fn s(r: u32) -> Self {
        Self::new(r, Rational::zero(), Rational::one())
    }

    /// `-r·s`, the constant carried by every unit of dilaton shift.
    pub fn minus_r_s(r: u32) -> Self {
        Self::new(r, Rational::zero(), Rational::from_integer(-BigInt::from(r)))
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Rational part.
    pub fn a(&self) -> &Rational {
        &self.a
    }

    /// Coefficient of `s`.
    pub fn b(&self) -> &Rational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    /// True iff the `s` component vanishes.
    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    fn check(&self, other: &QScalar) -> Result<(), ScalarError> {
        if self.r == other.r {
            Ok(())
        } else {
            Err(ScalarError::ContextMismatch {
                left: self.r,
                right: other.r,
            })
        }
    }

    pub fn checked_add(&self, other: &QScalar) -> Result<QScalar, ScalarError> {
        self.check(other)?;
        Ok(QScalar::new(self.r, &self.a + &other.a, &self.b + &other.b))
    }

    pub fn checked_sub(&self, other: &QScalar) -> Result<QScalar, ScalarError> {
        self.check(other)?;
        Ok(QScalar::new(self.r, &self.a - &other.a, &self.b - &other.b))
    }

    pub fn checked_mul(&self, other: &QScalar) -> Result<QScalar, ScalarError> {
        self.check(other)?;
        let r = Rational::from_integer(self.r.into());
        let a = &self.a * &other.a - r * (&self.b * &other.b);
        let b = &self.a * &other.b + &other.a * &self.b;
        Ok(QScalar::new(self.r, a, b))
    }

    /// `(a - b s) / (a^2 + r b^2)`.
    pub fn inv(&self) -> Result<QScalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        let r = Rational::from_integer(self.r.into());
        let norm = &self.a * &self.a + r * (&self.b * &self.b);
        Ok(QScalar::new(self.r, &self.a / &norm, -(&self.b / &norm)))
    }

    pub fn checked_div(&self, other: &QScalar) -> Result<QScalar, ScalarError> {
        self.check(other)?;
        self.checked_mul(&other.inv()?)
    }

    /// Multiplies both components by a rational.
    pub fn scale(&self, factor: &Rational) -> QScalar {
        QScalar::new(self.r, &self.a * factor, &self.b * factor)
    }

    pub fn pow(&self, exp: u32) -> QScalar {
        let mut acc = QScalar::one(self.r);
        for _ in 0..exp {
            acc = &acc * self;
        }
        acc
    }
}

impl fmt::Display for QScalar {
    /// Prints `a + b*s`; the symbol `s` stands for `sqrt(-r)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", self.a),
            (true, false) => write!(f, "{}*s", self.b),
            (false, false) => {
                if self.b.is_negative() {
                    write!(f, "{} - {}*s", self.a, -&self.b)
                } else {
                    write!(f, "{} + {}*s", self.a, self.b)
                }
            }
        }
    }
}

fn unwrap_ctx<T>(value: Result<T, ScalarError>) -> T {
    match value {
        Ok(v) => v,
        Err(e) => panic!("{e}"),
    }
}

impl Add<&QScalar> for &QScalar {
    type Output = QScalar;
    fn add(self, rhs: &QScalar) -> QScalar {
        unwrap_ctx(self.checked_add(rhs))
    }
}

impl Sub<&QScalar> for &QScalar {
    type Output = QScalar;
    fn sub(self, rhs: &QScalar) -> QScalar {
        unwrap_ctx(self.checked_sub(rhs))
    }
}

impl Mul<&QScalar> for &QScalar {
    type Output = QScalar;
    fn mul(self, rhs: &QScalar) -> QScalar {
        unwrap_ctx(self.checked_mul(rhs))
    }
}

impl Add for QScalar {
    type Output = QScalar;
    fn add(mut self, rhs: QScalar) -> QScalar {
        self += &rhs;
        self
    }
}

impl Sub for QScalar {
    type Output = QScalar;
    fn sub(mut self, rhs: QScalar) -> QScalar {
        self -= &rhs;
        self
    }
}

impl Mul for QScalar {
    type Output = QScalar;
    fn mul(self, rhs: QScalar) -> QScalar {
        &self * &rhs
    }
}

impl AddAssign<&QScalar> for QScalar {
    fn add_assign(&mut self, rhs: &QScalar) {
        unwrap_ctx(self.check(rhs));
        self.a += &rhs.a;
        self.b += &rhs.b;
    }
}

impl SubAssign<&QScalar> for QScalar {
    fn sub_assign(&mut self, rhs: &QScalar) {
        unwrap_ctx(self.check(rhs));
        self.a -= &rhs.a;
        self.b -= &rhs.b;
    }
}

impl MulAssign<&QScalar> for QScalar {
    fn mul_assign(&mut self, rhs: &QScalar) {
        *self = &*self * rhs;
    }
}

impl Neg for QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        QScalar::new(self.r, -self.a, -self.b)
    }
}

impl Neg for &QScalar {
    type Output = QScalar;
    fn neg(self) -> QScalar {
        QScalar::new(self.r, -&self.a, -&self.b)
    }
}
