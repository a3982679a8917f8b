//! Exact checks on a computed expansion. Every pass/fail check demands an
//! identically zero residual.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::correlator::{
    check_dilaton_equation, check_string_equation, extract_monomial, log_tau_pieces, CorrelatorTable,
};
use crate::exec;
use crate::generators::Generators;
use crate::io::{polynomial_doc, TermDoc};
use crate::scalar::{QScalar, Rational};
use crate::solver::{compute_tau_exponential_with, compute_tau_with, TauExpansion};
use crate::tpoly::TPolynomial;
use crate::walgebra::{apply_a_operator, apply_w_mode, WModeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Diagnostic,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Diagnostic => "diagnostic",
        })
    }
}

/// A nonzero residual and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Residual {
    pub label: String,
    pub polynomial: TPolynomial,
}

#[derive(Debug, Clone)]
pub struct CheckReport {
    pub check_name: String,
    pub status: CheckStatus,
    pub residuals: Vec<Residual>,
    /// Failures that are not polynomial residuals, such as a correlator
    /// identity that does not hold.
    pub failures: Vec<String>,
    /// Equations actually evaluated.
    pub evaluated: usize,
    /// Equations skipped because every term is zero at the computed depth.
    pub vacuous: usize,
    pub timing_ms: f64,
}

impl CheckReport {
    fn gated(
        name: &str,
        residuals: Vec<Residual>,
        failures: Vec<String>,
        evaluated: usize,
        vacuous: usize,
        start: Instant,
    ) -> Self {
        let status = if residuals.is_empty() && failures.is_empty() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        CheckReport {
            check_name: name.to_string(),
            status,
            residuals,
            failures,
            evaluated,
            vacuous,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    fn diagnostic(name: &str, residuals: Vec<Residual>, evaluated: usize, vacuous: usize, start: Instant) -> Self {
        CheckReport {
            check_name: name.to_string(),
            status: CheckStatus::Diagnostic,
            residuals,
            failures: Vec::new(),
            evaluated,
            vacuous,
            timing_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    /// True for a diagnostic whose residuals all vanished.
    pub fn is_clean(&self) -> bool {
        self.residuals.is_empty() && self.failures.is_empty()
    }
}

#[derive(Serialize)]
struct ResidualDoc<'a> {
    label: &'a str,
    polynomial: Vec<TermDoc>,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    check_name: &'a str,
    status: CheckStatus,
    residuals: Vec<ResidualDoc<'a>>,
    failures: &'a [String],
    evaluated: usize,
    vacuous: usize,
    timing_ms: f64,
}

pub fn reports_to_json(reports: &[CheckReport]) -> Vec<u8> {
    let docs: Vec<ReportDoc> = reports
        .iter()
        .map(|r| ReportDoc {
            check_name: &r.check_name,
            status: r.status,
            residuals: r
                .residuals
                .iter()
                .map(|x| ResidualDoc {
                    label: &x.label,
                    polynomial: polynomial_doc(&x.polynomial),
                })
                .collect(),
            failures: &r.failures,
            evaluated: r.evaluated,
            vacuous: r.vacuous,
            timing_ms: r.timing_ms,
        })
        .collect();
    let mut bytes = serde_json::to_vec_pretty(&docs).expect("reports always serialize");
    bytes.push(b'\n');
    bytes
}

fn piece(tau: &TauExpansion, j: i64) -> Option<&TPolynomial> {
    if j < 0 {
        None
    } else {
        tau.piece(j as u32)
    }
}

/// Largest `m` for which some `W^(k)_m` equation up to degree `D` can have a
/// nonzero term.
pub fn default_m_max(r: u32, max_degree: u32) -> i64 {
    ((max_degree as i64 - 1) * (r as i64 + 1)).div_euclid(r as i64)
}

/// Residual of the degree-`j` part of `W^(k)_m τ = 0`, or `None` if the
/// equation is vacuous at this depth.
pub fn w_equation_residual(tau: &TauExpansion, k: u32, m: i64, j: u32) -> Option<TPolynomial> {
    let r = tau.r();
    let out_weight = (j as i64 - k as i64 + 1) * (r as i64 + 1) - r as i64 * m;
    if out_weight < 0 {
        return None;
    }
    let mut sum = TPolynomial::zero(r);
    let mut any = false;
    for l in 0..k {
        let Some(p) = piece(tau, j as i64 - k as i64 + 1 + l as i64) else {
            continue;
        };
        if p.is_zero() {
            continue;
        }
        any = true;
        let spec = WModeSpec::with_generators(r, k, l, m, tau.generators()).expect("validated range");
        sum.add_assign(&apply_w_mode(&spec, p, u64::MAX));
    }
    any.then_some(sum)
}

/// Checks `W^(k)_m τ = 0` degree by degree for `2 <= k <= r` and
/// `-(k-1) <= m <= m_max`.
pub fn check_w_constraints(tau: &TauExpansion, m_max: Option<i64>) -> CheckReport {
    let start = Instant::now();
    let r = tau.r();
    let d = tau.max_degree();
    let m_max = m_max.unwrap_or_else(|| default_m_max(r, d));
    let mut equations = Vec::new();
    for k in 2..=r {
        for m in -(k as i64 - 1)..=m_max {
            for j in 0..=d {
                equations.push((k, m, j));
            }
        }
    }
    let results = exec::map_ordered(&equations, |&(k, m, j)| w_equation_residual(tau, k, m, j));
    let mut residuals = Vec::new();
    let (mut evaluated, mut vacuous) = (0, 0);
    for (&(k, m, j), res) in equations.iter().zip(results) {
        match res {
            None => vacuous += 1,
            Some(p) => {
                evaluated += 1;
                if !p.is_zero() {
                    residuals.push(Residual {
                        label: format!("k={k} m={m} j={j}"),
                        polynomial: p,
                    });
                }
            }
        }
    }
    CheckReport::gated("wconstraints", residuals, Vec::new(), evaluated, vacuous, start)
}

fn frac(r: u32, num: i64, den: i64) -> QScalar {
    QScalar::from_rational(r, Rational::new(num.into(), den.into()))
}

/// `Σ_n (n/r) T_n ∂_n` part shared by both operators, shifted so that
/// `T_n ∂_{n-shift}`.
fn shifted_euler(p: &TPolynomial, shift: u32) -> TPolynomial {
    let r = p.r();
    let mut out = TPolynomial::zero(r);
    let Some(top) = p.iter().flat_map(|(m, _)| m.exponents().iter().map(|&(n, _)| n)).max() else {
        return out;
    };
    for src in (1..=top).filter(|n| n % r != 0) {
        let n = src + shift;
        let d = p.derive(src).expect("valid index");
        if d.is_zero() {
            continue;
        }
        let lifted = d.mul_var(n, 1).expect("shift by a multiple of r keeps validity");
        out.add_assign(&lifted.scale(&frac(r, n as i64, r as i64)));
    }
    out
}

/// `L̃_{-1} P = Σ_{k>r} (k/r) T_k ∂_{k-r} P - s ∂_1 P + (1/(2 r λ²)) Σ_{b+c=r} b c T_b T_c P`
/// with the derivative part taken on `lower` and the rest on `upper`, so the
/// result is the single-weight component of `L̃_{-1} τ`.
pub fn l_minus_one_component(lower: &TPolynomial, upper: &TPolynomial) -> TPolynomial {
    let r = lower.r();
    let mut out = shifted_euler(lower, r);
    let mut quad = TPolynomial::zero(r);
    for b in 1..r {
        let c = r - b;
        let term = lower.mul_var(b, 1).and_then(|p| p.mul_var(c, 1)).expect("b, c < r");
        quad.add_assign(&term.scale(&frac(r, (b * c) as i64, 2 * r as i64)));
    }
    out.add_assign(&quad.shift_lambda(-2));
    let d1 = upper.derive(1).expect("valid index");
    out.sub_assign(&d1.scale(&QScalar::s(r)));
    out
}

/// `L̃_0 P = Σ (k/r) T_k ∂_k P - s ∂_{r+1} P + (r² - 1)/(24 r) P`, split the
/// same way as [`l_minus_one_component`].
pub fn l_zero_component(lower: &TPolynomial, upper: &TPolynomial) -> TPolynomial {
    let r = lower.r();
    let mut out = shifted_euler(lower, 0);
    out.add_assign(&lower.scale(&frac(r, (r * r - 1) as i64, 24 * r as i64)));
    let d = upper.derive(r + 1).expect("valid index");
    out.sub_assign(&d.scale(&QScalar::s(r)));
    out
}

/// `L̃_{-1} τ = 0`, `L̃_0 τ = 0` through explicit differential operators, and
/// the string and dilaton equations on the extracted correlators.
pub fn check_string_dilaton(tau: &TauExpansion) -> CheckReport {
    let start = Instant::now();
    let r = tau.r();
    let zero = TPolynomial::zero(r);
    let mut residuals = Vec::new();
    let mut failures = Vec::new();
    let mut evaluated = 0;
    // Component i pairs τ^(i) with τ^(i+1); both must be computed.
    for i in 0..tau.max_degree() {
        let lower = tau.piece(i).unwrap_or(&zero);
        let upper = tau.piece(i + 1).unwrap_or(&zero);
        for (name, res) in [
            ("L-1", l_minus_one_component(lower, upper)),
            ("L0", l_zero_component(lower, upper)),
        ] {
            evaluated += 1;
            if !res.is_zero() {
                residuals.push(Residual {
                    label: format!("{name} degree={i}"),
                    polynomial: res,
                });
            }
        }
    }
    match CorrelatorTable::from_tau(tau) {
        Ok(table) => {
            for outcome in [check_string_equation(&table), check_dilaton_equation(&table)] {
                evaluated += outcome.evaluated;
                failures.extend(outcome.failures);
            }
        }
        Err(e) => failures.push(format!("correlator extraction failed: {e}")),
    }
    CheckReport::gated("string_dilaton", residuals, failures, evaluated, 0, start)
}

/// Homogeneity, the Euler eigenvalue, the lambda grading and the selection
/// rule on every extracted correlator.
pub fn check_gradings(tau: &TauExpansion) -> CheckReport {
    let start = Instant::now();
    let r = tau.r();
    let mut residuals = Vec::new();
    let mut failures = Vec::new();
    let mut evaluated = 0;
    if tau.pieces()[0] != TPolynomial::one(r) {
        failures.push("piece 0 is not 1".to_string());
    }
    for (j, p) in tau.pieces().iter().enumerate() {
        evaluated += 1;
        let weight = j as u64 * (r as u64 + 1);
        if !p.is_homogeneous_of(weight) {
            failures.push(format!("piece {j} is not homogeneous of weight {weight}"));
        }
        // (r+1) E P - j (r+1) P with E the Euler operator.
        let mut euler = TPolynomial::zero(r);
        let vars: std::collections::BTreeSet<u32> = p
            .iter()
            .flat_map(|(m, _)| m.exponents().iter().map(|&(n, _)| n))
            .collect();
        for n in vars {
            let term = p.derive(n).and_then(|d| d.mul_var(n, 1)).expect("valid index");
            euler.add_assign(&term.scale_rational(&Rational::from_integer(n.into())));
        }
        euler.sub_assign(&p.scale_rational(&Rational::from_integer(weight.into())));
        if !euler.is_zero() {
            residuals.push(Residual {
                label: format!("euler j={j}"),
                polynomial: euler,
            });
        }
        for (mono, _) in p.iter() {
            let l = mono.lambda();
            if l % 2 != 0 || l < -2 * j as i32 {
                failures.push(format!("piece {j}: monomial {mono} has lambda exponent {l}"));
            }
        }
    }
    match log_tau_pieces(tau) {
        Ok(f) => {
            for (mono, coeff) in f.iter().flat_map(|p| p.iter()) {
                evaluated += 1;
                if let Err(e) = extract_monomial(r, mono, coeff) {
                    failures.push(e.to_string());
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    CheckReport::gated("grading", residuals, failures, evaluated, 0, start)
}

/// Every monomial of `log τ` is a rational correlator of nonnegative genus
/// obeying the selection rule, and carries `λ^{d - n}` in degree `d` with
/// `n` factors.
pub fn check_selection(tau: &TauExpansion) -> CheckReport {
    let start = Instant::now();
    let r = tau.r();
    let mut failures = Vec::new();
    let mut evaluated = 0;
    match log_tau_pieces(tau) {
        Ok(f) => {
            for (d, p) in f.iter().enumerate() {
                for (mono, coeff) in p.iter() {
                    evaluated += 1;
                    if let Err(e) = extract_monomial(r, mono, coeff) {
                        failures.push(e.to_string());
                    }
                    let expected = d as i32 - mono.factor_count() as i32;
                    if mono.lambda() != expected {
                        failures.push(format!("degree {d}: monomial {mono} should carry lambda^{expected}"));
                    }
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    CheckReport::gated("selection", Vec::new(), failures, evaluated, 0, start)
}

/// `(A_i A_j - A_j A_i) τ^(d)` for `i < j` and `d + i + j <= degree`, using
/// the pieces of `tau`. Non-gating.
pub fn check_commutators_on(tau: &TauExpansion, degree: u32) -> CheckReport {
    let start = Instant::now();
    let r = tau.r();
    let mut cases = Vec::new();
    for i in 1..r {
        for j in (i + 1)..r {
            for d in 0..=degree.saturating_sub(i + j) {
                if d + i + j <= degree && d <= tau.max_degree() {
                    cases.push((i, j, d));
                }
            }
        }
    }
    let g = tau.generators();
    let results = exec::map_ordered(&cases, |&(i, j, d)| {
        let p = &tau.pieces()[d as usize];
        let ij = apply_a_operator(r, j, p, d + j, g)
            .and_then(|q| apply_a_operator(r, i, &q, d + j + i, g))
            .expect("homogeneous input");
        let ji = apply_a_operator(r, i, p, d + i, g)
            .and_then(|q| apply_a_operator(r, j, &q, d + i + j, g))
            .expect("homogeneous input");
        &ij - &ji
    });
    let residuals = cases
        .iter()
        .zip(results)
        .filter(|(_, p)| !p.is_zero())
        .map(|(&(i, j, d), p)| Residual {
            label: format!("[A{i},A{j}] on degree {d}"),
            polynomial: p,
        })
        .collect();
    CheckReport::diagnostic("commutators", residuals, cases.len(), 0, start)
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
}

/// Solves to the needed depth and runs [`check_commutators_on`].
pub fn check_commutators(r: u32, degree: u32, generators: Generators) -> Result<CheckReport, VerifyError> {
    let depth = degree.saturating_sub(3);
    let tau = compute_tau_with(r, depth, generators, None)?;
    Ok(check_commutators_on(&tau, degree))
}

/// Compares the exponential formula with the recursion degree by degree.
/// Non-gating.
pub fn check_exponential_agreement(tau: &TauExpansion) -> Result<CheckReport, VerifyError> {
    let start = Instant::now();
    let exp = compute_tau_exponential_with(tau.r(), tau.max_degree(), tau.generators())?;
    let residuals = tau
        .pieces()
        .iter()
        .zip(exp.pieces())
        .enumerate()
        .filter_map(|(j, (a, b))| {
            let diff = b - a;
            (!diff.is_zero()).then(|| Residual {
                label: format!("exp - recursion j={j}"),
                polynomial: diff,
            })
        })
        .collect();
    Ok(CheckReport::diagnostic(
        "exponential",
        residuals,
        tau.pieces().len(),
        0,
        start,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Check {
    Grading,
    Selection,
    StringDilaton,
    WConstraints,
}

impl Check {
    pub const ALL: [Check; 4] = [
        Check::Grading,
        Check::Selection,
        Check::StringDilaton,
        Check::WConstraints,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::Grading => "grading",
            Check::Selection => "selection",
            Check::StringDilaton => "string_dilaton",
            Check::WConstraints => "wconstraints",
        }
    }
}

#[derive(Debug, Error)]
#[error("unknown check `{0}` (expected wconstraints, string_dilaton, grading or selection)")]
pub struct UnknownCheck(pub String);

impl FromStr for Check {
    type Err = UnknownCheck;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownCheck(s.to_string()))
    }
}

/// Runs the requested checks, deduplicated and ordered by name.
pub fn run_checks(tau: &TauExpansion, checks: &[Check], m_max: Option<i64>) -> Vec<CheckReport> {
    let mut list = checks.to_vec();
    list.sort_by_key(|c| c.name());
    list.dedup();
    exec::map_ordered(&list, |c| match c {
        Check::Grading => check_gradings(tau),
        Check::Selection => check_selection(tau),
        Check::StringDilaton => check_string_dilaton(tau),
        Check::WConstraints => check_w_constraints(tau, m_max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::compute_tau;
    use crate::tpoly::TMonomial;

    fn perturbed_r3() -> TauExpansion {
        let tau = compute_tau(3, 2, None).unwrap();
        let mut pieces = tau.pieces().to_vec();
        pieces[1].add_term(TMonomial::var(3, 4).unwrap(), QScalar::one(3));
        TauExpansion::from_pieces(3, pieces).unwrap()
    }

    #[test]
    fn w_constraints_hold_r3() {
        let tau = compute_tau(3, 2, None).unwrap();
        let report = check_w_constraints(&tau, Some(4));
        assert_eq!(report.status, CheckStatus::Pass, "{:?}", report.residuals);
        assert!(report.evaluated > 0 && report.vacuous > 0);
    }

    #[test]
    fn w_constraints_hold_r2() {
        let tau = compute_tau(2, 3, None).unwrap();
        assert_eq!(check_w_constraints(&tau, None).status, CheckStatus::Pass);
    }

    #[test]
    fn seeded_error_is_located() {
        let report = check_w_constraints(&perturbed_r3(), Some(4));
        assert_eq!(report.status, CheckStatus::Fail);
        assert!(report.residuals.iter().any(|x| x.label == "k=2 m=0 j=1"));
    }

    #[test]
    fn default_m_max_examples() {
        assert_eq!(default_m_max(3, 2), 1);
        assert_eq!(default_m_max(2, 5), 6);
        assert_eq!(default_m_max(3, 0), -2);
    }

    #[test]
    fn string_dilaton_r3() {
        let tau = compute_tau(3, 3, None).unwrap();
        let report = check_string_dilaton(&tau);
        assert_eq!(
            report.status,
            CheckStatus::Pass,
            "{:?} {:?}",
            report.residuals,
            report.failures
        );
        assert!(check_string_dilaton(&perturbed_r3()).status == CheckStatus::Fail);
    }

    #[test]
    fn l_tilde_matches_scaled_w_modes() {
        let tau = compute_tau(3, 3, None).unwrap();
        let inv_r = Rational::new(1.into(), 3.into());
        for i in 0..3 {
            let (lo, hi) = (&tau.pieces()[i as usize], &tau.pieces()[i as usize + 1]);
            for (m, ours) in [(-1, l_minus_one_component(lo, hi)), (0, l_zero_component(lo, hi))] {
                let k0 = apply_w_mode(&WModeSpec::new(3, 2, 0, m).unwrap(), lo, u64::MAX);
                let k1 = apply_w_mode(&WModeSpec::new(3, 2, 1, m).unwrap(), hi, u64::MAX);
                assert_eq!(ours, (&k0 + &k1).scale_rational(&inv_r));
            }
        }
        // Off-shell too: a generic pair of inputs.
        let lo = TPolynomial::monomial(TMonomial::new(3, 0, [(1, 2), (5, 1)]).unwrap(), QScalar::one(3));
        let hi = TPolynomial::monomial(TMonomial::new(3, -2, [(1, 1), (4, 2)]).unwrap(), QScalar::s(3));
        for (m, ours) in [(-1, l_minus_one_component(&lo, &hi)), (0, l_zero_component(&lo, &hi))] {
            let k0 = apply_w_mode(&WModeSpec::new(3, 2, 0, m).unwrap(), &lo, u64::MAX);
            let k1 = apply_w_mode(&WModeSpec::new(3, 2, 1, m).unwrap(), &hi, u64::MAX);
            assert_eq!(ours, (&k0 + &k1).scale_rational(&inv_r), "m = {m}");
        }
    }

    #[test]
    fn gradings_and_selection() {
        for (r, d) in [(3, 3), (2, 4)] {
            let tau = compute_tau(r, d, None).unwrap();
            assert_eq!(check_gradings(&tau).status, CheckStatus::Pass);
            assert_eq!(check_selection(&tau).status, CheckStatus::Pass);
        }
    }

    #[test]
    fn euler_catches_a_bad_piece() {
        // Homogeneous but with the wrong lambda grading.
        let mut pieces = compute_tau(3, 1, None).unwrap().pieces().to_vec();
        pieces[1].add_term(TMonomial::new(3, -1, [(4, 1)]).unwrap(), QScalar::one(3));
        let tau = TauExpansion::from_pieces(3, pieces).unwrap();
        assert_eq!(check_gradings(&tau).status, CheckStatus::Fail);
        assert_eq!(check_selection(&tau).status, CheckStatus::Fail);
    }

    #[test]
    fn commutators_reported() {
        let r3 = check_commutators(3, 3, Generators::Elementary).unwrap();
        assert_eq!(r3.status, CheckStatus::Diagnostic);
        assert_eq!(r3.evaluated, 1);
        let r2 = check_commutators(2, 4, Generators::Elementary).unwrap();
        assert_eq!(r2.evaluated, 0);
    }

    #[test]
    fn check_names_parse() {
        for c in Check::ALL {
            assert_eq!(c.name().parse::<Check>().unwrap(), c);
        }
        assert!("nope".parse::<Check>().is_err());
    }

    #[test]
    fn reports_serialize() {
        let tau = perturbed_r3();
        let reports = run_checks(&tau, &[Check::WConstraints, Check::Grading, Check::Grading], Some(1));
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].check_name, "grading");
        let value: serde_json::Value = serde_json::from_slice(&reports_to_json(&reports)).unwrap();
        assert_eq!(value[1]["status"], "fail");
        assert!(!value[1]["residuals"][0]["label"].as_str().unwrap().is_empty());
    }
}
