//! Free energy `log τ`, the change to `t_{m,a}` coordinates, and exact
//! extraction of r-spin correlators.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec;
use crate::scalar::{QScalar, Rational};
use crate::solver::TauExpansion;
use crate::tpoly::{TMonomial, TPolynomial};

#[derive(Debug, Error, PartialEq)]
pub enum CorrelatorError {
    #[error("insertion ({m}, {a}) is invalid for r = {r}: need 0 <= a <= r - 2")]
    InvalidInsertion { r: u32, m: u32, a: u32 },
    #[error("piece 0 of the expansion is not 1")]
    NotNormalized,
    #[error("monomial {monomial} has odd lambda exponent")]
    OddLambda { monomial: String },
    #[error("monomial {monomial} has negative genus")]
    NegativeGenus { monomial: String },
    #[error("monomial {monomial} gives the irrational value {value}")]
    Irrational { monomial: String, value: String },
    #[error("correlator {record} violates the selection rule")]
    SelectionViolation { record: String },
}

/// One insertion `τ_{m,a}`, carried by the variable `T_{rm+a+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Insertion {
    pub m: u32,
    pub a: u32,
}

impl Insertion {
    pub fn new(r: u32, m: u32, a: u32) -> Result<Self, CorrelatorError> {
        if r < 2 || a > r - 2 {
            return Err(CorrelatorError::InvalidInsertion { r, m, a });
        }
        Ok(Insertion { m, a })
    }

    /// Inverse of [`Insertion::variable`]. `n` must not be a multiple of `r`.
    pub fn from_variable(r: u32, n: u32) -> Self {
        debug_assert!(n >= 1 && !n.is_multiple_of(r));
        Insertion {
            m: (n - 1) / r,
            a: (n - 1) % r,
        }
    }

    pub fn variable(&self, r: u32) -> u32 {
        r * self.m + self.a + 1
    }
}

impl fmt::Display for Insertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tau_{{{},{}}}", self.m, self.a)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelatorRecord {
    pub genus: u32,
    /// Sorted multiset.
    pub insertions: Vec<Insertion>,
    pub value: Rational,
}

impl fmt::Display for CorrelatorRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, ins) in self.insertions.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{ins}")?;
        }
        write!(f, ">_{} = {}", self.genus, self.value)
    }
}

/// The factor `c` in `t_{m,a} = c T_{rm+a+1}`:
/// `(-1)^m s Π_{j=0}^m (j + (a+1)/r)`.
pub fn conversion_constant(r: u32, m: u32, a: u32) -> Result<QScalar, CorrelatorError> {
    Insertion::new(r, m, a)?;
    let mut prod = Rational::one();
    for j in 0..=m {
        prod *= Rational::new((j * r + a + 1).into(), r.into());
    }
    if m % 2 == 1 {
        prod = -prod;
    }
    Ok(QScalar::s(r).scale(&prod))
}

/// `(r+1)(2g-2) + r n = r Σ m_i + Σ a_i`.
pub fn selection_check(r: u32, g: u32, insertions: &[Insertion]) -> bool {
    let r = r as i64;
    let lhs = (r + 1) * (2 * g as i64 - 2) + r * insertions.len() as i64;
    let rhs: i64 = insertions.iter().map(|i| r * i.m as i64 + i.a as i64).sum();
    lhs == rhs
}

/// Degree-wise product of two graded series, truncated at `max_degree`.
pub fn graded_mul(a: &[TPolynomial], b: &[TPolynomial], max_degree: u32, r: u32) -> Vec<TPolynomial> {
    let mut out = vec![TPolynomial::zero(r); max_degree as usize + 1];
    for (i, x) in a.iter().enumerate().take(out.len()) {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(out.len() - i) {
            if !y.is_zero() {
                out[i + j].add_assign(&(x * y));
            }
        }
    }
    out
}

fn expect_normalized(tau: &TauExpansion) -> Result<(), CorrelatorError> {
    if tau.pieces()[0] != TPolynomial::one(tau.r()) {
        return Err(CorrelatorError::NotNormalized);
    }
    Ok(())
}

/// `F^(0..=D)` with `F^(0) = 0`, from `d F^(d) = d τ^(d) - Σ_{i<d} i F^(i) τ^(d-i)`.
pub fn log_tau_pieces(tau: &TauExpansion) -> Result<Vec<TPolynomial>, CorrelatorError> {
    expect_normalized(tau)?;
    let r = tau.r();
    let pieces = tau.pieces();
    let mut f = vec![TPolynomial::zero(r); pieces.len()];
    for d in 1..pieces.len() {
        let mut acc = pieces[d].scale_rational(&Rational::from_integer(d.into()));
        for i in 1..d {
            if f[i].is_zero() || pieces[d - i].is_zero() {
                continue;
            }
            let prod = &f[i] * &pieces[d - i];
            acc.sub_assign(&prod.scale_rational(&Rational::from_integer(i.into())));
        }
        f[d] = acc.scale_rational(&Rational::new(1.into(), d.into()));
    }
    Ok(f)
}

pub fn log_tau(tau: &TauExpansion) -> Result<TPolynomial, CorrelatorError> {
    let mut out = TPolynomial::zero(tau.r());
    for p in log_tau_pieces(tau)? {
        out.add_assign(&p);
    }
    Ok(out)
}

/// `exp` of a graded series with vanishing degree-0 part.
pub fn exp_pieces(r: u32, f: &[TPolynomial]) -> Vec<TPolynomial> {
    let mut out = vec![TPolynomial::zero(r); f.len()];
    if out.is_empty() {
        return out;
    }
    out[0] = TPolynomial::one(r);
    for d in 1..f.len() {
        let mut acc = TPolynomial::zero(r);
        for i in 1..=d {
            if f[i].is_zero() || out[d - i].is_zero() {
                continue;
            }
            let prod = &f[i] * &out[d - i];
            acc.add_assign(&prod.scale_rational(&Rational::from_integer(i.into())));
        }
        out[d] = acc.scale_rational(&Rational::new(1.into(), d.into()));
    }
    out
}

/// Correlator carried by one monomial of `log τ`, before any validation of
/// the lambda exponent: `(insertions, coeff Π e! / Π c^e)`.
pub fn raw_correlator(r: u32, mono: &TMonomial, coeff: &QScalar) -> (Vec<Insertion>, QScalar) {
    let mut insertions = Vec::with_capacity(mono.factor_count() as usize);
    let mut value = coeff.clone();
    for &(n, e) in mono.exponents() {
        let ins = Insertion::from_variable(r, n);
        let c = conversion_constant(r, ins.m, ins.a).expect("variable gives a valid insertion");
        let denom = c.pow(e);
        value = value.checked_div(&denom).expect("conversion constants are nonzero");
        let mut fact = Rational::one();
        for k in 2..=e {
            fact *= Rational::from_integer(k.into());
        }
        value = value.scale(&fact);
        insertions.extend(std::iter::repeat_n(ins, e as usize));
    }
    insertions.sort();
    (insertions, value)
}

/// Validates and converts one monomial of `log τ`.
pub fn extract_monomial(r: u32, mono: &TMonomial, coeff: &QScalar) -> Result<CorrelatorRecord, CorrelatorError> {
    let lambda = mono.lambda();
    if lambda.rem_euclid(2) != 0 {
        return Err(CorrelatorError::OddLambda {
            monomial: mono.to_string(),
        });
    }
    if lambda < -2 {
        return Err(CorrelatorError::NegativeGenus {
            monomial: mono.to_string(),
        });
    }
    let genus = ((lambda + 2) / 2) as u32;
    let (insertions, value) = raw_correlator(r, mono, coeff);
    if !value.b().is_zero() {
        return Err(CorrelatorError::Irrational {
            monomial: mono.to_string(),
            value: value.to_string(),
        });
    }
    let record = CorrelatorRecord {
        genus,
        insertions,
        value: value.a().clone(),
    };
    if !selection_check(r, genus, &record.insertions) {
        return Err(CorrelatorError::SelectionViolation {
            record: record.to_string(),
        });
    }
    Ok(record)
}

/// All nonzero correlators visible in `τ` up to its maximal degree, sorted by
/// genus and then by insertions.
pub fn extract_correlators(tau: &TauExpansion) -> Result<Vec<CorrelatorRecord>, CorrelatorError> {
    let r = tau.r();
    let f = log_tau_pieces(tau)?;
    let terms: Vec<(&TMonomial, &QScalar)> = f.iter().flat_map(|p| p.iter()).collect();
    let results = exec::map_ordered(&terms, |(m, c)| extract_monomial(r, m, c));
    let mut records = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|x, y| (x.genus, &x.insertions).cmp(&(y.genus, &y.insertions)));
    Ok(records)
}

/// Correlators up to a fixed degree. Anything in range but absent is zero.
#[derive(Debug, Clone)]
pub struct CorrelatorTable {
    r: u32,
    max_degree: u32,
    values: BTreeMap<(u32, Vec<Insertion>), Rational>,
}

impl CorrelatorTable {
    pub fn new(r: u32, max_degree: u32, records: &[CorrelatorRecord]) -> Self {
        let values = records
            .iter()
            .map(|rec| ((rec.genus, rec.insertions.clone()), rec.value.clone()))
            .collect();
        CorrelatorTable { r, max_degree, values }
    }

    pub fn from_tau(tau: &TauExpansion) -> Result<Self, CorrelatorError> {
        Ok(Self::new(tau.r(), tau.max_degree(), &extract_correlators(tau)?))
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Total weight `Σ (rm+a+1)` of an insertion multiset.
    pub fn weight(&self, insertions: &[Insertion]) -> u64 {
        insertions.iter().map(|i| i.variable(self.r) as u64).sum()
    }

    pub fn in_range(&self, insertions: &[Insertion]) -> bool {
        self.weight(insertions) <= self.max_degree as u64 * (self.r as u64 + 1)
    }

    /// `None` when the correlator lies beyond the computed degree.
    pub fn get(&self, genus: u32, insertions: &[Insertion]) -> Option<Rational> {
        if !self.in_range(insertions) {
            return None;
        }
        let mut key = insertions.to_vec();
        key.sort();
        Some(self.values.get(&(genus, key)).cloned().unwrap_or_else(Rational::zero))
    }

    pub fn records(&self) -> impl Iterator<Item = CorrelatorRecord> + '_ {
        self.values.iter().map(|((g, ins), v)| CorrelatorRecord {
            genus: *g,
            insertions: ins.clone(),
            value: v.clone(),
        })
    }
}

/// Result of checking one family of identities on a table.
#[derive(Debug, Clone, Default)]
pub struct IdentityOutcome {
    pub evaluated: usize,
    pub failures: Vec<String>,
}

fn with_inserted(ins: &[Insertion], extra: Insertion) -> Vec<Insertion> {
    let mut out = ins.to_vec();
    out.push(extra);
    out.sort();
    out
}

fn remove_one(ins: &[Insertion], target: Insertion) -> Option<Vec<Insertion>> {
    let pos = ins.iter().position(|&i| i == target)?;
    let mut out = ins.to_vec();
    out.remove(pos);
    Some(out)
}

/// Left-hand sides containing `special` that could be nonzero on either
/// side of an identity whose other side lowers the degree by one.
fn candidates(table: &CorrelatorTable, special: Insertion, raise: bool) -> Vec<(u32, Vec<Insertion>)> {
    let limit = (table.max_degree as u64) * (table.r as u64 + 1);
    let step = table.r as u64 + 1;
    let mut out = std::collections::BTreeSet::new();
    for (g, ins) in table.values.keys() {
        if ins.contains(&special) {
            out.insert((*g, ins.clone()));
        }
        if table.weight(ins) + step > limit {
            continue;
        }
        if raise {
            for (j, x) in ins.iter().enumerate() {
                if j > 0 && ins[j - 1] == *x {
                    continue;
                }
                let mut y = ins.clone();
                y[j].m += 1;
                out.insert((*g, with_inserted(&y, special)));
            }
        } else {
            out.insert((*g, with_inserted(ins, special)));
        }
    }
    out.into_iter().collect()
}

/// `⟨τ_{0,0} Π τ_{m_i,a_i}⟩_g = Σ_j ⟨τ_{m_j - 1, a_j} Π_{i≠j} τ_{m_i,a_i}⟩_g`
/// for every stable left-hand side within range.
pub fn check_string_equation(table: &CorrelatorTable) -> IdentityOutcome {
    let puncture = Insertion { m: 0, a: 0 };
    let mut outcome = IdentityOutcome::default();
    for (g, lhs) in candidates(table, puncture, true) {
        let rest = remove_one(&lhs, puncture).expect("candidate contains the puncture");
        if (g == 0 && rest.len() <= 2) || (g == 1 && rest.is_empty()) {
            continue;
        }
        let Some(found) = table.get(g, &lhs) else { continue };
        let mut expected = Rational::zero();
        for j in 0..rest.len() {
            if rest[j].m == 0 {
                continue;
            }
            let mut y = rest.clone();
            y[j].m -= 1;
            expected += table.get(g, &y).expect("lower degree is in range");
        }
        outcome.evaluated += 1;
        if found != expected {
            let rec = CorrelatorRecord {
                genus: g,
                insertions: lhs,
                value: found,
            };
            outcome.failures.push(format!("string: {rec}, expected {expected}"));
        }
    }
    outcome
}

/// `⟨τ_{1,0} Π⟩_g = (2g - 2 + n) ⟨Π⟩_g` whenever `2g - 2 + n > 0`.
pub fn check_dilaton_equation(table: &CorrelatorTable) -> IdentityOutcome {
    let dilaton = Insertion { m: 1, a: 0 };
    let mut outcome = IdentityOutcome::default();
    for (g, lhs) in candidates(table, dilaton, false) {
        let rest = remove_one(&lhs, dilaton).expect("candidate contains the dilaton");
        let factor = 2 * g as i64 - 2 + rest.len() as i64;
        if factor <= 0 {
            continue;
        }
        let Some(found) = table.get(g, &lhs) else { continue };
        let expected = table.get(g, &rest).expect("lower degree is in range") * Rational::from_integer(factor.into());
        outcome.evaluated += 1;
        if found != expected {
            let rec = CorrelatorRecord {
                genus: g,
                insertions: lhs,
                value: found,
            };
            outcome.failures.push(format!("dilaton: {rec}, expected {expected}"));
        }
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatorDoc {
    pub genus: u32,
    pub insertions: Vec<[u32; 2]>,
    pub value: String,
}

impl From<&CorrelatorRecord> for CorrelatorDoc {
    fn from(rec: &CorrelatorRecord) -> Self {
        CorrelatorDoc {
            genus: rec.genus,
            insertions: rec.insertions.iter().map(|i| [i.m, i.a]).collect(),
            value: rec.value.to_string(),
        }
    }
}

pub fn correlators_to_json(records: &[CorrelatorRecord]) -> Vec<u8> {
    let docs: Vec<CorrelatorDoc> = records.iter().map(CorrelatorDoc::from).collect();
    let mut bytes = serde_json::to_vec_pretty(&docs).expect("records always serialize");
    bytes.push(b'\n');
    bytes
}

pub fn correlators_to_csv(records: &[CorrelatorRecord]) -> Result<Vec<u8>, csv::Error> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["genus", "insertions", "value"])?;
    for rec in records {
        let ins = rec
            .insertions
            .iter()
            .map(|i| format!("{}:{}", i.m, i.a))
            .collect::<Vec<_>>()
            .join(";");
        writer.write_record([rec.genus.to_string(), ins, rec.value.to_string()])?;
    }
    writer.into_inner().map_err(|e| e.into_error().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;
    use crate::solver::compute_tau;

    fn ins(r: u32, list: &[(u32, u32)]) -> Vec<Insertion> {
        let mut v: Vec<_> = list.iter().map(|&(m, a)| Insertion::new(r, m, a).unwrap()).collect();
        v.sort();
        v
    }

    #[test]
    fn conversion_constant_examples() {
        let sb = |r, n, d| QScalar::new(r, rational(0, 1), rational(n, d));
        assert_eq!(conversion_constant(3, 0, 0).unwrap(), sb(3, 1, 3));
        assert_eq!(conversion_constant(3, 0, 1).unwrap(), sb(3, 2, 3));
        assert_eq!(conversion_constant(2, 1, 0).unwrap(), sb(2, -3, 4));
        assert!(matches!(
            conversion_constant(3, 0, 2),
            Err(CorrelatorError::InvalidInsertion { .. })
        ));
    }

    #[test]
    fn variable_correspondence_is_bijective() {
        for r in 2..=6 {
            for n in (1..200).filter(|n| n % r != 0) {
                let i = Insertion::from_variable(r, n);
                assert!(i.a <= r - 2);
                assert_eq!(i.variable(r), n);
            }
        }
    }

    #[test]
    fn selection_examples() {
        assert!(selection_check(3, 0, &ins(3, &[(0, 0), (0, 0), (0, 1)])));
        assert!(!selection_check(3, 0, &ins(3, &[(0, 0), (0, 0), (0, 0)])));
        assert!(selection_check(2, 1, &ins(2, &[(1, 0)])));
    }

    #[test]
    fn first_degree_r3() {
        let tau = compute_tau(3, 1, None).unwrap();
        let f = log_tau_pieces(&tau).unwrap();
        assert_eq!(f[1], tau.pieces()[1]);
        let table = CorrelatorTable::from_tau(&tau).unwrap();
        assert_eq!(table.get(0, &ins(3, &[(0, 0), (0, 0), (0, 1)])), Some(rational(1, 1)));
        assert_eq!(table.get(1, &ins(3, &[(1, 0)])), Some(rational(1, 12)));
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn second_degree_free_energy_r3() {
        let tau = compute_tau(3, 2, None).unwrap();
        let f = log_tau_pieces(&tau).unwrap();
        let m = |l: i32, e: &[(u32, u32)]| TMonomial::new(3, l, e.iter().copied()).unwrap();
        let q = |n, d| QScalar::from_rational(3, rational(n, d));
        let expected = TPolynomial::from_terms(
            3,
            [
                (m(-2, &[(2, 4)]), q(2, 81)),
                (m(-2, &[(1, 3), (5, 1)]), q(-5, 81)),
                (m(-2, &[(1, 2), (2, 1), (4, 1)]), q(-4, 27)),
                (m(0, &[(1, 1), (7, 1)]), q(-7, 81)),
                (m(0, &[(4, 2)]), q(-2, 81)),
            ],
        )
        .unwrap();
        assert_eq!(f[2], expected);
        let table = CorrelatorTable::from_tau(&tau).unwrap();
        assert_eq!(table.get(0, &ins(3, &[(0, 1); 4])), Some(rational(1, 3)));
        assert_eq!(table.get(1, &ins(3, &[(2, 0), (0, 0)])), Some(rational(1, 12)));
    }

    #[test]
    fn log_matches_series_definition() {
        // Σ_k (-1)^{k+1} x^k / k with x = τ - 1.
        let tau = compute_tau(3, 3, None).unwrap();
        let d = tau.max_degree();
        let mut x = tau.pieces().to_vec();
        x[0] = TPolynomial::zero(3);
        let mut power = x.clone();
        let mut series = vec![TPolynomial::zero(3); d as usize + 1];
        for k in 1..=d {
            let c = Rational::new(if k % 2 == 1 { 1 } else { -1 }.into(), k.into());
            for (acc, p) in series.iter_mut().zip(&power) {
                acc.add_assign(&p.scale_rational(&c));
            }
            power = graded_mul(&power, &x, d, 3);
        }
        assert_eq!(log_tau_pieces(&tau).unwrap(), series);
        assert_eq!(exp_pieces(3, &series), tau.pieces());
    }

    #[test]
    fn extraction_errors() {
        let q = QScalar::one(3);
        let odd = TMonomial::new(3, -1, [(1, 1)]).unwrap();
        assert!(matches!(
            extract_monomial(3, &odd, &q),
            Err(CorrelatorError::OddLambda { .. })
        ));
        let neg = TMonomial::new(3, -4, [(1, 1)]).unwrap();
        assert!(matches!(
            extract_monomial(3, &neg, &q),
            Err(CorrelatorError::NegativeGenus { .. })
        ));
        // T_1^3 has rational coefficient over s^3, hence an irrational value.
        let cube = TMonomial::new(3, -2, [(1, 3)]).unwrap();
        assert!(matches!(
            extract_monomial(3, &cube, &q),
            Err(CorrelatorError::Irrational { .. })
        ));
        let bad = TMonomial::new(3, -2, [(1, 3)]).unwrap();
        assert!(matches!(
            extract_monomial(3, &bad, &QScalar::s(3)),
            Err(CorrelatorError::SelectionViolation { .. })
        ));
        let trivial = TauExpansion::from_pieces(3, vec![TPolynomial::one(3)]).unwrap();
        assert!(extract_correlators(&trivial).unwrap().is_empty());
    }

    #[test]
    fn string_and_dilaton_on_r3() {
        let table = CorrelatorTable::from_tau(&compute_tau(3, 3, None).unwrap()).unwrap();
        let s = check_string_equation(&table);
        let d = check_dilaton_equation(&table);
        assert!(s.failures.is_empty(), "{:?}", s.failures);
        assert!(d.failures.is_empty(), "{:?}", d.failures);
        assert!(s.evaluated > 0 && d.evaluated > 0);
    }

    #[test]
    fn tampered_table_breaks_dilaton() {
        let tau = compute_tau(3, 2, None).unwrap();
        let mut records = extract_correlators(&tau).unwrap();
        for rec in &mut records {
            if rec.genus == 1 && rec.insertions == ins(3, &[(1, 0)]) {
                rec.value = rational(1, 7);
            }
        }
        let table = CorrelatorTable::new(3, 2, &records);
        assert!(!check_dilaton_equation(&table).failures.is_empty());
    }

    #[test]
    fn serialization_formats() {
        let rec = CorrelatorRecord {
            genus: 1,
            insertions: ins(3, &[(0, 0), (2, 0)]),
            value: rational(1, 12),
        };
        let json = String::from_utf8(correlators_to_json(std::slice::from_ref(&rec))).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(
            value,
            serde_json::json!([{"genus": 1, "insertions": [[0, 0], [2, 0]], "value": "1/12"}])
        );
        let csv = String::from_utf8(correlators_to_csv(&[rec]).unwrap()).unwrap();
        assert_eq!(csv, "genus,insertions,value\n1,0:0;2:0,1/12\n");
    }
}
