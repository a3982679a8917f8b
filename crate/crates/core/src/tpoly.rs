//! Sparse polynomials in the times `T_n` (`n >= 1`, `n` not divisible by `r`)
//! with an integer exponent of the genus parameter `λ` on every monomial.
//!
//! The grading is `deg T_n = n / (r + 1)`; internally everything is measured
//! in integer *weight* `Σ n·e_n = (r + 1)·degree`.

use std::cmp::Ordering;
use std::collections::btree_map::{self, BTreeMap, Entry};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use smallvec::SmallVec;
use thiserror::Error;

use crate::scalar::{QScalar, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("T_{n} is not a valid time for r = {r} (index must be positive and not divisible by r)")]
    InvalidIndex { n: u32, r: u32 },
    #[error("polynomials built over different fields: r = {left} and r = {right}")]
    ContextMismatch { left: u32, right: u32 },
}

/// Checks that `T_n` exists for this `r`.
pub fn check_index(r: u32, n: u32) -> Result<(), PolyError> {
    if n == 0 || n.is_multiple_of(r) {
        Err(PolyError::InvalidIndex { n, r })
    } else {
        Ok(())
    }
}

type Exponents = SmallVec<[(u32, u32); 6]>;

/// `λ^lambda · Π T_n^{e_n}`, exponents sorted by ascending `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TMonomial {
    weight: u64,
    lambda: i32,
    exps: Exponents,
}

impl TMonomial {
    /// The empty monomial `1`.
    pub fn one() -> Self {
        TMonomial {
            weight: 0,
            lambda: 0,
            exps: Exponents::new(),
        }
    }

    /// Builds a monomial from `(n, e)` pairs. Repeated indices are merged and
    /// zero exponents dropped.
    pub fn new(r: u32, lambda: i32, exps: impl IntoIterator<Item = (u32, u32)>) -> Result<Self, PolyError> {
        let mut merged: BTreeMap<u32, u32> = BTreeMap::new();
        for (n, e) in exps {
            check_index(r, n)?;
            if e > 0 {
                *merged.entry(n).or_default() += e;
            }
        }
        Ok(Self::from_sorted(lambda, merged.into_iter().collect()))
    }

    fn from_sorted(lambda: i32, exps: Exponents) -> Self {
        let weight = exps.iter().map(|&(n, e)| n as u64 * e as u64).sum();
        TMonomial { weight, lambda, exps }
    }

    /// `T_n`.
    pub fn var(r: u32, n: u32) -> Result<Self, PolyError> {
        Self::new(r, 0, [(n, 1)])
    }

    /// `Σ n·e_n`.
    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn lambda(&self) -> i32 {
        self.lambda
    }

    pub fn exponents(&self) -> &[(u32, u32)] {
        &self.exps
    }

    pub fn exponent(&self, n: u32) -> u32 {
        match self.exps.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => self.exps[i].1,
            Err(_) => 0,
        }
    }

    /// Number of variable factors counted with multiplicity.
    pub fn factor_count(&self) -> u32 {
        self.exps.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty() && self.lambda == 0
    }

    pub fn with_lambda(&self, lambda: i32) -> Self {
        TMonomial { lambda, ..self.clone() }
    }

    pub fn mul(&self, other: &TMonomial) -> TMonomial {
        let mut exps = Exponents::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (a, b) = (self.exps[i], other.exps[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    exps.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    exps.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    exps.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        exps.extend_from_slice(&self.exps[i..]);
        exps.extend_from_slice(&other.exps[j..]);
        TMonomial {
            weight: self.weight + other.weight,
            lambda: self.lambda + other.lambda,
            exps,
        }
    }

    /// Multiplies by `T_n^k`. The index is assumed valid.
    pub(crate) fn mul_var_unchecked(&self, n: u32, k: u32) -> TMonomial {
        let mut exps = self.exps.clone();
        match exps.binary_search_by_key(&n, |&(m, _)| m) {
            Ok(i) => exps[i].1 += k,
            Err(i) => exps.insert(i, (n, k)),
        }
        TMonomial {
            weight: self.weight + n as u64 * k as u64,
            lambda: self.lambda,
            exps,
        }
    }

    /// Removes `T_n^k`, returning `None` if the exponent is too small.
    pub(crate) fn div_var(&self, n: u32, k: u32) -> Option<TMonomial> {
        let i = self.exps.binary_search_by_key(&n, |&(m, _)| m).ok()?;
        let e = self.exps[i].1;
        if e < k {
            return None;
        }
        let mut exps = self.exps.clone();
        if e == k {
            exps.remove(i);
        } else {
            exps[i].1 -= k;
        }
        Some(TMonomial {
            weight: self.weight - n as u64 * k as u64,
            lambda: self.lambda,
            exps,
        })
    }
}

impl Ord for TMonomial {
    /// Canonical order: weight, then λ-exponent, then the `(n, e)` sequence.
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .cmp(&other.weight)
            .then(self.lambda.cmp(&other.lambda))
            .then_with(|| self.exps.as_slice().cmp(other.exps.as_slice()))
    }
}

impl PartialOrd for TMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            if first {
                first = false;
                Ok(())
            } else {
                write!(f, "*")
            }
        };
        if self.lambda != 0 {
            sep(f)?;
            write!(f, "λ^{}", self.lambda)?;
        }
        for &(n, e) in self.exps.iter().rev() {
            sep(f)?;
            if e == 1 {
                write!(f, "T{n}")?;
            } else {
                write!(f, "T{n}^{e}")?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Finite sum of monomials with nonzero [`QScalar`] coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TPolynomial {
    r: u32,
    terms: BTreeMap<TMonomial, QScalar>,
}

impl TPolynomial {
    pub fn zero(r: u32) -> Self {
        TPolynomial {
            r,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(r: u32) -> Self {
        Self::constant(QScalar::one(r))
    }

    pub fn constant(c: QScalar) -> Self {
        Self::monomial(TMonomial::one(), c)
    }

    pub fn monomial(m: TMonomial, c: QScalar) -> Self {
        let mut p = Self::zero(c.r());
        p.add_term(m, c);
        p
    }

    /// Sums `(monomial, coefficient)` pairs with validation of every index.
    pub fn from_terms(r: u32, terms: impl IntoIterator<Item = (TMonomial, QScalar)>) -> Result<Self, PolyError> {
        let mut p = Self::zero(r);
        for (m, c) in terms {
            for &(n, _) in m.exponents() {
                check_index(r, n)?;
            }
            if c.r() != r {
                return Err(PolyError::ContextMismatch { left: r, right: c.r() });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn r(&self) -> u32 {
        self.r
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

    /// Terms in canonical order.
    pub fn iter(&self) -> btree_map::Iter<'_, TMonomial, QScalar> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &TMonomial) -> QScalar {
        self.terms.get(m).cloned().unwrap_or_else(|| QScalar::zero(self.r))
    }

    /// Adds `c·m`, dropping the entry if it cancels.
    pub fn add_term(&mut self, m: TMonomial, c: QScalar) {
        assert_eq!(c.r(), self.r, "coefficient built for a different r");
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    fn same_r(&self, other: &TPolynomial) {
        if self.r != other.r {
            panic!(
                "{}",
                PolyError::ContextMismatch {
                    left: self.r,
                    right: other.r
                }
            );
        }
    }

    pub fn add_assign(&mut self, other: &TPolynomial) {
        self.same_r(other);
        for (m, c) in &other.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn sub_assign(&mut self, other: &TPolynomial) {
        self.same_r(other);
        for (m, c) in &other.terms {
            self.add_term(m.clone(), -c);
        }
    }

    pub fn scale(&self, c: &QScalar) -> TPolynomial {
        let mut out = Self::zero(self.r);
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn scale_rational(&self, c: &Rational) -> TPolynomial {
        self.scale(&QScalar::from_rational(self.r, c.clone()))
    }

    /// Multiplies every monomial by `T_n^k`.
    pub fn mul_var(&self, n: u32, k: u32) -> Result<TPolynomial, PolyError> {
        check_index(self.r, n)?;
        Ok(TPolynomial {
            r: self.r,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.mul_var_unchecked(n, k), c.clone()))
                .collect(),
        })
    }

    /// Formal partial derivative with respect to `T_n`.
    pub fn derive(&self, n: u32) -> Result<TPolynomial, PolyError> {
        check_index(self.r, n)?;
        let mut out = Self::zero(self.r);
        for (m, c) in &self.terms {
            let e = m.exponent(n);
            if e == 0 {
                continue;
            }
            let lowered = m.div_var(n, 1).expect("exponent checked");
            out.add_term(lowered, c.scale(&Rational::from_integer(e.into())));
        }
        Ok(out)
    }

    /// Shifts every λ-exponent by `delta`.
    pub fn shift_lambda(&self, delta: i32) -> TPolynomial {
        TPolynomial {
            r: self.r,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.with_lambda(m.lambda + delta), c.clone()))
                .collect(),
        }
    }

    /// Terms of weight exactly `degree·(r + 1)`.
    pub fn graded_part(&self, degree: u64) -> TPolynomial {
        self.weight_part(degree * (self.r as u64 + 1))
    }

    pub fn weight_part(&self, weight: u64) -> TPolynomial {
        TPolynomial {
            r: self.r,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.weight == weight)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Drops every term of weight above `max_weight`.
    pub fn truncate_weight(&self, max_weight: u64) -> TPolynomial {
        TPolynomial {
            r: self.r,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.weight <= max_weight)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn max_weight(&self) -> Option<u64> {
        self.terms.keys().map(TMonomial::weight).max()
    }

    /// True if every term has the given weight (vacuously for zero).
    pub fn is_homogeneous_of(&self, weight: u64) -> bool {
        self.terms.keys().all(|m| m.weight == weight)
    }

    /// Product truncated to weights `<= max_weight`.
    pub fn mul_truncated(&self, other: &TPolynomial, max_weight: u64) -> TPolynomial {
        self.same_r(other);
        let mut out = Self::zero(self.r);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if m1.weight + m2.weight > max_weight {
                    continue;
                }
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl<'a> IntoIterator for &'a TPolynomial {
    type Item = (&'a TMonomial, &'a QScalar);
    type IntoIter = btree_map::Iter<'a, TMonomial, QScalar>;
    fn into_iter(self) -> Self::IntoIter {
        self.terms.iter()
    }
}

impl Add<&TPolynomial> for &TPolynomial {
    type Output = TPolynomial;
    fn add(self, rhs: &TPolynomial) -> TPolynomial {
        let mut out = self.clone();
        out.add_assign(rhs);
        out
    }
}

impl Sub<&TPolynomial> for &TPolynomial {
    type Output = TPolynomial;
    fn sub(self, rhs: &TPolynomial) -> TPolynomial {
        let mut out = self.clone();
        out.sub_assign(rhs);
        out
    }
}

impl Mul<&TPolynomial> for &TPolynomial {
    type Output = TPolynomial;
    fn mul(self, rhs: &TPolynomial) -> TPolynomial {
        self.mul_truncated(rhs, u64::MAX)
    }
}

impl Neg for &TPolynomial {
    type Output = TPolynomial;
    fn neg(self) -> TPolynomial {
        self.scale(&QScalar::from_int(self.r, -1))
    }
}

impl fmt::Display for TPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use proptest::prelude::*;

    fn mono(r: u32, lambda: i32, exps: &[(u32, u32)]) -> TMonomial {
        TMonomial::new(r, lambda, exps.iter().copied()).unwrap()
    }

    fn int(r: u32, v: i64) -> QScalar {
        QScalar::from_int(r, v)
    }

    #[test]
    fn weight_examples() {
        assert_eq!(mono(3, 0, &[(2, 1), (1, 2)]).weight(), 4);
        assert_eq!(TMonomial::one().weight(), 0);
        assert_eq!(mono(2, 0, &[(3, 1), (1, 3)]).weight(), 6);
    }

    #[test]
    fn invalid_indices_are_rejected() {
        assert_eq!(TMonomial::var(3, 6), Err(PolyError::InvalidIndex { n: 6, r: 3 }));
        assert!(TMonomial::var(3, 0).is_err());
        let p = TPolynomial::one(3);
        assert!(p.mul_var(3, 1).is_err());
        assert!(p.derive(9).is_err());
    }

    #[test]
    fn graded_part_examples() {
        let r = 3;
        let t4 = TPolynomial::monomial(TMonomial::var(r, 4).unwrap(), int(r, 1));
        let t1 = TPolynomial::monomial(TMonomial::var(r, 1).unwrap(), int(r, 1));
        assert_eq!((&t4 + &t1).graded_part(1), t4);
        let c = TPolynomial::constant(int(r, 7));
        assert_eq!((&c + &t1).graded_part(0), c);
    }

    #[test]
    fn mul_var_examples() {
        let r = 3;
        let one = TPolynomial::one(r);
        let t2 = one.mul_var(2, 1).unwrap();
        assert_eq!(t2, TPolynomial::monomial(mono(r, 0, &[(2, 1)]), int(r, 1)));
        assert_eq!(
            t2.mul_var(2, 2).unwrap(),
            TPolynomial::monomial(mono(r, 0, &[(2, 3)]), int(r, 1))
        );
        let p = TPolynomial::from_terms(
            r,
            [(mono(r, 0, &[(1, 1)]), int(r, 1)), (mono(r, 0, &[(4, 1)]), int(r, 1))],
        )
        .unwrap();
        let expected = TPolynomial::from_terms(
            r,
            [
                (mono(r, 0, &[(1, 2)]), int(r, 1)),
                (mono(r, 0, &[(1, 1), (4, 1)]), int(r, 1)),
            ],
        )
        .unwrap();
        assert_eq!(p.mul_var(1, 1).unwrap(), expected);
    }

    #[test]
    fn derive_examples() {
        let r = 3;
        let p = TPolynomial::monomial(mono(r, 0, &[(2, 2), (1, 1)]), int(r, 1));
        assert_eq!(
            p.derive(2).unwrap(),
            TPolynomial::monomial(mono(r, 0, &[(2, 1), (1, 1)]), int(r, 2))
        );
        let q = TPolynomial::monomial(mono(r, 0, &[(2, 4)]), int(r, 1));
        assert!(q.derive(5).unwrap().is_zero());

        // d/dT_1 of the degree-one tau piece for r = 3.
        let minus_s9 = QScalar::new(r, rational(0, 1), rational(-1, 9));
        let minus_s27 = QScalar::new(r, rational(0, 1), rational(-1, 27));
        let tau1 = TPolynomial::from_terms(
            r,
            [
                (mono(r, -2, &[(2, 1), (1, 2)]), minus_s9.clone()),
                (mono(r, 0, &[(4, 1)]), minus_s27),
            ],
        )
        .unwrap();
        let expected = TPolynomial::monomial(mono(r, -2, &[(2, 1), (1, 1)]), minus_s9.scale(&rational(2, 1)));
        assert_eq!(tau1.derive(1).unwrap(), expected);
    }

    #[test]
    fn canonical_order_is_weight_then_lambda() {
        let a = mono(3, 0, &[(4, 1)]);
        let b = mono(3, -2, &[(2, 1), (1, 2)]);
        let c = mono(3, 0, &[(1, 1)]);
        let mut v = vec![a.clone(), b.clone(), c.clone()];
        v.sort();
        assert_eq!(v, vec![c, b, a]);
    }

    #[test]
    fn display_is_readable() {
        let m = mono(3, -2, &[(2, 1), (1, 2)]);
        assert_eq!(m.to_string(), "λ^-2*T2*T1^2");
        assert_eq!(TMonomial::one().to_string(), "1");
    }

    fn arb_poly(r: u32) -> impl Strategy<Value = TPolynomial> {
        let valid: Vec<u32> = (1..9).filter(|n| n % r != 0).collect();
        let term = (
            -3i32..2,
            proptest::collection::vec((proptest::sample::select(valid), 1u32..3), 0..3),
            -5i64..6,
            -5i64..6,
        );
        proptest::collection::vec(term, 0..5).prop_map(move |terms| {
            TPolynomial::from_terms(
                r,
                terms.into_iter().map(|(l, e, a, b)| {
                    (
                        TMonomial::new(r, l, e).unwrap(),
                        QScalar::new(r, rational(a, 1), rational(b, 2)),
                    )
                }),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(p in arb_poly(3), q in arb_poly(3), s in arb_poly(3)) {
            prop_assert_eq!(&(&p * &q) * &s, &p * &(&q * &s));
            prop_assert_eq!(&p * &(&q + &s), &(&p * &q) + &(&p * &s));
            prop_assert_eq!(&p * &q, &q * &p);
            prop_assert!((&p - &p).is_zero());
            prop_assert_eq!(&p * &TPolynomial::one(3), p.clone());
        }

        #[test]
        fn derivative_is_a_derivation(p in arb_poly(3), q in arb_poly(3), n in proptest::sample::select(vec![1u32, 2, 4, 5])) {
            let lhs = (&p * &q).derive(n).unwrap();
            let rhs = &(&p.derive(n).unwrap() * &q) + &(&p * &q.derive(n).unwrap());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn graded_parts_recompose(p in arb_poly(2)) {
            let mut sum = TPolynomial::zero(2);
            let max = p.max_weight().unwrap_or(0);
            for w in 0..=max {
                let piece = p.weight_part(w);
                prop_assert!(piece.is_homogeneous_of(w));
                sum.add_assign(&piece);
            }
            prop_assert_eq!(sum, p);
        }

        #[test]
        fn lambda_is_additive(p in arb_poly(3), q in arb_poly(3)) {
            for (m1, _) in &p {
                for (m2, _) in &q {
                    prop_assert_eq!(m1.mul(m2).lambda(), m1.lambda() + m2.lambda());
                }
            }
        }
    }
}
