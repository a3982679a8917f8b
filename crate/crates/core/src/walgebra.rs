//! Oscillator algebra of the fractional modes `β_{u/r}` and the operators
//! built from it.
//!
//! A mode with `u > 0` annihilates: `β_{u/r} = λ ∂/∂T_u`. A mode with `u < 0`
//! creates: `β_{u/r} = λ^{-1} |u| T_{|u|}`. Modes with `r | u` vanish.
//!
//! `W^(k,j)_m` is the part of the W-mode `W^(k)_m` carrying `j` copies of the
//! dilaton shift `-r s λ^{-1}` in place of a β factor. The remaining labels
//! sum to `m + j(r+1)/r`. In the power-sum basis
//!
//! `W^(k,j)_m = (-r s λ^{-1})^j / (j! (k-j)!) Σ :β_{i_1} ⋯ β_{i_{k-j}}:`
//!
//! over ordered tuples, plus `(r^2 - 1)/24` at `(k, j, m) = (2, 0, 0)`. The
//! elementary basis replaces the uniform `1/(k-j)!` by class-dependent
//! weights from [`crate::generators`], including lower-arity layers left by
//! contractions between sheets. Everything here works in the integer units
//! `u = r·i`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;
use smallvec::SmallVec;
use thiserror::Error;

use crate::exec;
use crate::generators::{class_key, class_weights, ClassKey, ClassWeights, Generators, Layer, MAX_ELEMENTARY_RANK};
use crate::scalar::{QScalar, Rational};
use crate::tpoly::{check_index, TMonomial, TPolynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WAlgebraError {
    #[error("β mode {u}/{r} is not a valid oscillator (u must be nonzero and not divisible by r)")]
    InvalidMode { u: i64, r: u32 },
    #[error("W^({k},{j})_{m} is out of range for r = {r}")]
    InvalidSpec { r: u32, k: u32, j: u32, m: i64 },
    #[error("elementary generators are limited to r <= {MAX_ELEMENTARY_RANK}, got r = {r}")]
    RankTooLarge { r: u32 },
    #[error("A_{l} does not exist for r = {r}")]
    InvalidOperator { r: u32, l: u32 },
    #[error("input is not homogeneous of weight {expected_weight}")]
    NotHomogeneous { expected_weight: u64 },
    #[error("target degree {target} is below the operator degree {l}")]
    TargetTooLow { target: u32, l: u32 },
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

fn binomial(n: u32, k: u32) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// The mode `β_{u/r}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaIndex {
    r: u32,
    u: i64,
}

impl BetaIndex {
    pub fn new(r: u32, u: i64) -> Result<Self, WAlgebraError> {
        if u == 0 || u % r as i64 == 0 {
            return Err(WAlgebraError::InvalidMode { u, r });
        }
        Ok(BetaIndex { r, u })
    }

    pub fn u(&self) -> i64 {
        self.u
    }

    pub fn is_creator(&self) -> bool {
        self.u < 0
    }

    /// Index of the time the mode multiplies or differentiates.
    pub fn variable(&self) -> u32 {
        self.u.unsigned_abs() as u32
    }
}

pub fn apply_beta(beta: &BetaIndex, p: &TPolynomial) -> TPolynomial {
    assert_eq!(beta.r, p.r(), "β mode built for a different r");
    let n = beta.variable();
    if beta.is_creator() {
        p.mul_var(n, 1)
            .expect("validated index")
            .scale_rational(&Rational::from_integer(n.into()))
            .shift_lambda(-1)
    } else {
        p.derive(n).expect("validated index").shift_lambda(1)
    }
}

/// `coeff · λ^{lambda_shift} · Π β_{-c} · Π β_{a}` with every annihilator to
/// the right of every creator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalTerm {
    /// Indices of the creators, sorted ascending.
    pub creators: Vec<u32>,
    /// Indices of the annihilators, sorted ascending.
    pub annihilators: Vec<u32>,
    pub coeff: QScalar,
    pub lambda_shift: i32,
}

impl NormalTerm {
    pub fn new(
        mut creators: Vec<u32>,
        mut annihilators: Vec<u32>,
        coeff: QScalar,
        lambda_shift: i32,
    ) -> Result<Self, WAlgebraError> {
        let r = coeff.r();
        for &n in creators.iter().chain(&annihilators) {
            if check_index(r, n).is_err() {
                return Err(WAlgebraError::InvalidMode { u: n as i64, r });
            }
        }
        creators.sort_unstable();
        annihilators.sort_unstable();
        Ok(NormalTerm {
            creators,
            annihilators,
            coeff,
            lambda_shift,
        })
    }

    /// Net change of the λ-exponent.
    pub fn lambda_change(&self) -> i32 {
        self.lambda_shift + self.annihilators.len() as i32 - self.creators.len() as i32
    }

    pub fn creator_weight(&self) -> u64 {
        self.creators.iter().map(|&n| n as u64).sum()
    }

    pub fn annihilator_weight(&self) -> u64 {
        self.annihilators.iter().map(|&n| n as u64).sum()
    }
}

fn grouped(indices: &[u32]) -> SmallVec<[(u32, u32); 4]> {
    let mut out: SmallVec<[(u32, u32); 4]> = SmallVec::new();
    for &n in indices {
        match out.last_mut() {
            Some((m, e)) if *m == n => *e += 1,
            _ => out.push((n, 1)),
        }
    }
    out
}

pub fn apply_normal_term(term: &NormalTerm, p: &TPolynomial) -> TPolynomial {
    let r = p.r();
    let ann = grouped(&term.annihilators);
    let cre = grouped(&term.creators);
    let creator_factor: BigInt = term
        .creators
        .iter()
        .fold(BigInt::one(), |acc, &n| acc * BigInt::from(n));
    let dl = term.lambda_change();
    let mut out = TPolynomial::zero(r);
    'terms: for (mono, c) in p {
        let mut m = mono.clone();
        let mut factor = creator_factor.clone();
        for &(n, a) in &ann {
            let e = m.exponent(n);
            if e < a {
                continue 'terms;
            }
            factor *= factorial(e) / factorial(e - a);
            m = m.div_var(n, a).expect("exponent checked");
        }
        for &(n, b) in &cre {
            m = m.mul_var_unchecked(n, b);
        }
        let lambda = m.lambda() + dl;
        out.add_term(m.with_lambda(lambda), c.scale(&Rational::from_integer(factor)));
    }
    out.scale(&term.coeff)
}

/// Canonical sum of normal-ordered terms, keyed by their operator content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorSum {
    r: u32,
    terms: BTreeMap<(Vec<u32>, Vec<u32>, i32), QScalar>,
}

impl OperatorSum {
    pub fn new(r: u32) -> Self {
        OperatorSum {
            r,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(r: u32, terms: impl IntoIterator<Item = NormalTerm>) -> Self {
        let mut sum = Self::new(r);
        for t in terms {
            sum.push(t);
        }
        sum
    }

    pub fn push(&mut self, term: NormalTerm) {
        let key = (term.creators, term.annihilators, term.lambda_shift);
        let entry = self.terms.entry(key.clone()).or_insert_with(|| QScalar::zero(self.r));
        *entry += &term.coeff;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = NormalTerm> + '_ {
        self.terms.iter().map(|((c, a, l), coeff)| NormalTerm {
            creators: c.clone(),
            annihilators: a.clone(),
            coeff: coeff.clone(),
            lambda_shift: *l,
        })
    }

    pub fn apply(&self, p: &TPolynomial) -> TPolynomial {
        let mut out = TPolynomial::zero(p.r());
        for t in self.terms() {
            out.add_assign(&apply_normal_term(&t, p));
        }
        out
    }
}

/// Labels the operator `W^(k,j)_m` for a given `r` and generator basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WModeSpec {
    pub r: u32,
    pub k: u32,
    pub j: u32,
    pub m: i64,
    pub generators: Generators,
}

impl WModeSpec {
    /// A mode of the default (elementary) basis.
    pub fn new(r: u32, k: u32, j: u32, m: i64) -> Result<Self, WAlgebraError> {
        Self::with_generators(r, k, j, m, Generators::default())
    }

    pub fn with_generators(r: u32, k: u32, j: u32, m: i64, generators: Generators) -> Result<Self, WAlgebraError> {
        if r < 2 || k < 2 || k > r || j >= k || m < -(k as i64 - 1) {
            return Err(WAlgebraError::InvalidSpec { r, k, j, m });
        }
        if generators == Generators::Elementary && r > MAX_ELEMENTARY_RANK {
            return Err(WAlgebraError::RankTooLarge { r });
        }
        Ok(WModeSpec { r, k, j, m, generators })
    }

    /// Number of β factors before any contraction, `k - j`.
    pub fn operator_count(&self) -> u32 {
        self.k - self.j
    }

    /// Required sum of the mode labels `u_i`, `r·m + j·(r + 1)`.
    pub fn mode_sum(&self) -> i64 {
        self.r as i64 * self.m + self.j as i64 * (self.r as i64 + 1)
    }

    /// `(-r s)^j / j!`; the `λ^{-j}` is tracked separately.
    pub fn base_coefficient(&self) -> QScalar {
        QScalar::minus_r_s(self.r)
            .pow(self.j)
            .scale(&Rational::new(BigInt::one(), factorial(self.j)))
    }

    pub fn weights(&self) -> Arc<ClassWeights> {
        class_weights(self.r, self.k, self.generators)
    }

    /// True when the mode has a constant part.
    pub fn has_central_term(&self) -> bool {
        self.j == 0 && self.m == 0 && self.central_term().is_some()
    }

    fn central_term(&self) -> Option<QScalar> {
        self.weights().constant().map(|c| QScalar::from_rational(self.r, c))
    }

    /// β factors left in a layer once `j` of its oscillators are shifts.
    fn layer_operator_count(&self, layer: &Layer) -> Option<u32> {
        layer.arity.checked_sub(self.j)
    }

    /// Class counts of the `j` shift factors, which sit at `u = -(r+1)`.
    fn shift_counts(&self) -> SmallVec<[u8; 16]> {
        let mut counts: SmallVec<[u8; 16]> = SmallVec::from_elem(0, self.r as usize);
        if self.j > 0 {
            counts[self.r as usize - 1] = self.j as u8;
        }
        counts
    }

    fn shift_key(&self) -> ClassKey {
        class_key(&self.shift_counts())
    }
}

/// Class of the mode `β_{u/r}`.
fn class_of(r: u32, u: i64) -> usize {
    u.rem_euclid(r as i64) as usize
}

/// Multisets of `parts` valid indices summing to `total`, as ascending
/// `(n, multiplicity)` lists.
fn partitions(r: u32, total: u64, parts: u32) -> Vec<SmallVec<[(u32, u32); 4]>> {
    fn rec(
        r: u32,
        remaining: u64,
        parts: u32,
        max_part: u64,
        current: &mut Vec<u32>,
        out: &mut Vec<SmallVec<[(u32, u32); 4]>>,
    ) {
        if parts == 0 {
            if remaining == 0 {
                let mut sorted = current.clone();
                sorted.sort_unstable();
                out.push(grouped(&sorted));
            }
            return;
        }
        if remaining < parts as u64 {
            return;
        }
        // The largest remaining part must leave room for the others.
        let hi = max_part.min(remaining - (parts as u64 - 1));
        let lo = remaining.div_ceil(parts as u64);
        for n in (lo..=hi).rev() {
            if n % r as u64 == 0 {
                continue;
            }
            current.push(n as u32);
            rec(r, remaining - n, parts - 1, n, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(r, total, parts, total, &mut Vec::new(), &mut out);
    out
}

fn multiplicity_denominator(groups: &[(u32, u32)]) -> BigInt {
    groups.iter().fold(BigInt::one(), |acc, &(_, e)| acc * factorial(e))
}

fn expand_groups(groups: &[(u32, u32)]) -> Vec<u32> {
    groups
        .iter()
        .flat_map(|&(n, e)| std::iter::repeat_n(n, e as usize))
        .collect()
}

/// Lists the normal-ordered terms of `W^(k,j)_m` whose creators have total
/// weight at most `creator_weight_cap` and whose annihilators have total
/// weight at most `annihilator_weight_cap`.
pub fn enumerate_w_terms(spec: &WModeSpec, creator_weight_cap: u64, annihilator_weight_cap: u64) -> Vec<NormalTerm> {
    let r = spec.r;
    let sum = spec.mode_sum();
    let base = spec.base_coefficient();
    let shift = -(spec.j as i32);
    let weights = spec.weights();
    let mut out = Vec::new();
    for layer in weights.layers() {
        let Some(p) = spec.layer_operator_count(layer) else {
            continue;
        };
        if p == 0 {
            if sum == 0 {
                if let Some(c) = layer.factor(spec.shift_key()) {
                    out.push(NormalTerm {
                        creators: vec![],
                        annihilators: vec![],
                        coeff: base.scale(&c),
                        lambda_shift: shift,
                    });
                }
            }
            continue;
        }
        for q in 0..=p {
            let c = p - q;
            let wa_range = if q == 0 {
                0..=0
            } else {
                q as u64..=annihilator_weight_cap
            };
            for wa in wa_range {
                let wc = wa as i64 - sum;
                let creator_ok = if c == 0 {
                    wc == 0
                } else {
                    wc >= c as i64 && wc as u64 <= creator_weight_cap
                };
                if !creator_ok {
                    continue;
                }
                let ann_sets = partitions(r, wa, q);
                let cre_sets = partitions(r, wc as u64, c);
                for a in &ann_sets {
                    for cr in &cre_sets {
                        let mut counts = spec.shift_counts();
                        for &(n, e) in a.iter() {
                            counts[class_of(r, n as i64)] += e as u8;
                        }
                        for &(n, e) in cr.iter() {
                            counts[class_of(r, -(n as i64))] += e as u8;
                        }
                        let Some(factor) = layer.factor(class_key(&counts)) else {
                            continue;
                        };
                        let denom = multiplicity_denominator(a) * multiplicity_denominator(cr);
                        out.push(NormalTerm {
                            creators: expand_groups(cr),
                            annihilators: expand_groups(a),
                            coeff: base.scale(&(factor / Rational::from_integer(denom))),
                            lambda_shift: shift,
                        });
                    }
                }
            }
        }
    }
    out
}

struct CreatorSet {
    groups: SmallVec<[(u32, u32); 4]>,
    /// `Π n^b / Π b!`
    factor: Rational,
}

#[derive(Default)]
struct CreatorCache {
    sets: HashMap<(u64, u32), std::rc::Rc<Vec<CreatorSet>>>,
}

impl CreatorCache {
    fn get(&mut self, r: u32, weight: u64, count: u32) -> std::rc::Rc<Vec<CreatorSet>> {
        self.sets
            .entry((weight, count))
            .or_insert_with(|| {
                let sets = partitions(r, weight, count)
                    .into_iter()
                    .map(|groups| {
                        let mut num = BigInt::one();
                        let mut den = BigInt::one();
                        for &(n, b) in &groups {
                            num *= BigInt::from(n).pow(b);
                            den *= factorial(b);
                        }
                        CreatorSet {
                            groups,
                            factor: Rational::new(num, den),
                        }
                    })
                    .collect();
                std::rc::Rc::new(sets)
            })
            .clone()
    }
}

struct MonomialAction<'a> {
    spec: &'a WModeSpec,
    layer: &'a Layer,
    /// β factors in this layer.
    ops: u32,
    creator_cap: u64,
    cache: CreatorCache,
    out: TPolynomial,
}

impl MonomialAction<'_> {
    /// Applies the (unscaled) operator sum to `coeff · mono`, enumerating the
    /// sub-multisets of `mono` the annihilators can hit.
    fn apply(&mut self, mono: &TMonomial, coeff: &QScalar) {
        let mut chosen: SmallVec<[(u32, u32); 4]> = SmallVec::new();
        self.descend(mono, coeff, 0, 0, 0, BigInt::one(), &mut chosen);
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &mut self,
        mono: &TMonomial,
        coeff: &QScalar,
        idx: usize,
        count: u32,
        weight: u64,
        binom: BigInt,
        chosen: &mut SmallVec<[(u32, u32); 4]>,
    ) {
        let p = self.ops;
        let vars = mono.exponents();
        if idx == vars.len() {
            self.emit(mono, coeff, count, weight, &binom, chosen);
            return;
        }
        let (n, e) = vars[idx];
        for a in 0..=e.min(p - count) {
            if a > 0 {
                chosen.push((n, a));
            }
            let b = if a > 0 { &binom * binomial(e, a) } else { binom.clone() };
            self.descend(mono, coeff, idx + 1, count + a, weight + (n * a) as u64, b, chosen);
            if a > 0 {
                chosen.pop();
            }
        }
    }

    fn emit(
        &mut self,
        mono: &TMonomial,
        coeff: &QScalar,
        count: u32,
        weight: u64,
        binom: &BigInt,
        chosen: &[(u32, u32)],
    ) {
        let spec = self.spec;
        let r = spec.r;
        let creators = self.ops - count;
        let wc = weight as i64 - spec.mode_sum();
        if creators == 0 {
            if wc != 0 {
                return;
            }
        } else if wc < creators as i64 || wc as u64 > self.creator_cap {
            return;
        }
        let mut counts = spec.shift_counts();
        let mut stripped = mono.clone();
        for &(n, a) in chosen {
            stripped = stripped.div_var(n, a).expect("sub-multiset");
            counts[class_of(r, n as i64)] += a as u8;
        }
        let lambda = mono.lambda() + count as i32 - creators as i32 - spec.j as i32;
        let base = coeff.scale(&Rational::from_integer(binom.clone()));
        let sets = self.cache.get(r, wc as u64, creators);
        for set in sets.iter() {
            let factor = if self.layer.is_uniform() {
                set.factor.clone()
            } else {
                let mut full = counts.clone();
                for &(n, b) in &set.groups {
                    full[class_of(r, -(n as i64))] += b as u8;
                }
                match self.layer.factor(class_key(&full)) {
                    Some(f) => f * &set.factor,
                    None => continue,
                }
            };
            let mut m = stripped.clone();
            for &(n, b) in &set.groups {
                m = m.mul_var_unchecked(n, b);
            }
            self.out.add_term(m.with_lambda(lambda), base.scale(&factor));
        }
    }
}

const CHUNK: usize = 64;

/// Applies `W^(k,j)_m` to `p`, keeping only creator weight up to
/// `target_weight_cap`. For homogeneous input of weight `w` the output is
/// homogeneous of weight `w - (r m + j (r + 1))` and the cap only needs to be
/// at least that.
pub fn apply_w_mode(spec: &WModeSpec, p: &TPolynomial, target_weight_cap: u64) -> TPolynomial {
    let r = spec.r;
    assert_eq!(r, p.r(), "W-mode built for a different r");
    let weights = spec.weights();
    let mut out = TPolynomial::zero(r);
    for layer in weights.layers() {
        let Some(ops) = spec.layer_operator_count(layer) else {
            continue;
        };
        if ops == 0 {
            if spec.mode_sum() == 0 {
                if let Some(c) = layer.factor(spec.shift_key()) {
                    out.add_assign(&p.scale_rational(&c));
                }
            }
            continue;
        }
        let terms: Vec<(&TMonomial, &QScalar)> = p.iter().collect();
        let chunks: Vec<&[(&TMonomial, &QScalar)]> = terms.chunks(CHUNK).collect();
        let partial = exec::map_ordered(&chunks, |chunk| {
            let mut action = MonomialAction {
                spec,
                layer,
                ops,
                creator_cap: target_weight_cap,
                cache: CreatorCache::default(),
                out: TPolynomial::zero(r),
            };
            for (m, c) in chunk.iter() {
                action.apply(m, c);
            }
            action.out
        });
        let mut sum = TPolynomial::zero(r);
        for piece in &partial {
            sum.add_assign(piece);
        }
        out.add_assign(&sum.scale(&spec.base_coefficient()));
    }
    out
}

/// Largest `m` in the sum defining `A_l` whose creator `T_{rm+k-1}` still
/// fits in a monomial of the target degree.
pub fn mode_bound(r: u32, k: u32, target_degree: u32) -> i64 {
    let top = target_degree as i64 * (r as i64 + 1) - (k as i64 - 1);
    top.div_euclid(r as i64)
}

/// The `(k, m)` pairs contributing to `A_l` at the given target degree.
pub(crate) fn a_operator_modes(r: u32, l: u32, target_degree: u32) -> Vec<(u32, i64)> {
    let mut modes = Vec::new();
    for k in (l + 1)..=r {
        for m in 0..=mode_bound(r, k, target_degree) {
            modes.push((k, m));
        }
    }
    modes
}

/// One `(k, m)` summand of `A_l p`:
/// `-(k-1)! λ^{k-1} / ((r+1) (-r s)^{k-1}) · β_{-(rm+k-1)/r} W^(k,k-1-l)_{m-k+1} p`.
pub(crate) fn apply_a_summand(
    r: u32,
    l: u32,
    k: u32,
    m: i64,
    p: &TPolynomial,
    target_weight: u64,
    generators: Generators,
) -> TPolynomial {
    let spec = WModeSpec {
        r,
        k,
        j: k - 1 - l,
        m: m - (k as i64 - 1),
        generators,
    };
    let w = apply_w_mode(&spec, p, target_weight);
    if w.is_zero() {
        return w;
    }
    let n = (r as i64 * m + k as i64 - 1) as u32;
    let denom = QScalar::minus_r_s(r)
        .pow(k - 1)
        .scale(&Rational::from_integer((r as i64 + 1).into()));
    let numer = QScalar::from_rational(r, Rational::from_integer(-factorial(k - 1) * BigInt::from(n)));
    let prefactor = numer.checked_div(&denom).expect("nonzero denominator");
    w.mul_var(n, 1)
        .expect("rm + k - 1 is never divisible by r")
        .shift_lambda(k as i32 - 2)
        .scale(&prefactor)
}

/// Applies `A_l`, which raises degree by exactly `l`, to a polynomial that is
/// homogeneous of degree `target_degree - l`.
pub fn apply_a_operator(
    r: u32,
    l: u32,
    p: &TPolynomial,
    target_degree: u32,
    generators: Generators,
) -> Result<TPolynomial, WAlgebraError> {
    if r < 2 || l == 0 || l >= r {
        return Err(WAlgebraError::InvalidOperator { r, l });
    }
    if generators == Generators::Elementary && r > MAX_ELEMENTARY_RANK {
        return Err(WAlgebraError::RankTooLarge { r });
    }
    if target_degree < l {
        return Err(WAlgebraError::TargetTooLow {
            target: target_degree,
            l,
        });
    }
    let input_weight = (target_degree - l) as u64 * (r as u64 + 1);
    if !p.is_homogeneous_of(input_weight) {
        return Err(WAlgebraError::NotHomogeneous {
            expected_weight: input_weight,
        });
    }
    let target_weight = target_degree as u64 * (r as u64 + 1);
    let modes = a_operator_modes(r, l, target_degree);
    let parts = exec::map_ordered(&modes, |&(k, m)| {
        apply_a_summand(r, l, k, m, p, target_weight, generators)
    });
    let mut out = TPolynomial::zero(r);
    for part in &parts {
        out.add_assign(part);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn mono(r: u32, lambda: i32, exps: &[(u32, u32)]) -> TMonomial {
        TMonomial::new(r, lambda, exps.iter().copied()).unwrap()
    }

    /// `(λ exponent, exponents, coefficient)`.
    type Term<'a> = (i32, &'a [(u32, u32)], QScalar);

    fn poly(r: u32, terms: &[Term]) -> TPolynomial {
        TPolynomial::from_terms(r, terms.iter().map(|(l, e, c)| (mono(r, *l, e), c.clone()))).unwrap()
    }

    fn q(r: u32, a: (i64, i64), b: (i64, i64)) -> QScalar {
        QScalar::new(r, rational(a.0, a.1), rational(b.0, b.1))
    }

    #[test]
    fn beta_examples() {
        let r = 3;
        let one = TPolynomial::one(r);
        let b = BetaIndex::new(r, -2).unwrap();
        assert_eq!(apply_beta(&b, &one), poly(r, &[(-1, &[(2, 1)], q(r, (2, 1), (0, 1)))]));
        let t1sq = poly(r, &[(0, &[(1, 2)], QScalar::one(r))]);
        let b = BetaIndex::new(r, 1).unwrap();
        assert_eq!(apply_beta(&b, &t1sq), poly(r, &[(1, &[(1, 1)], q(r, (2, 1), (0, 1)))]));
        let t2t1 = poly(r, &[(0, &[(1, 1), (2, 1)], QScalar::one(r))]);
        assert!(apply_beta(&BetaIndex::new(r, 4).unwrap(), &t2t1).is_zero());
    }

    #[test]
    fn integral_modes_are_rejected() {
        assert_eq!(BetaIndex::new(3, 6), Err(WAlgebraError::InvalidMode { u: 6, r: 3 }));
        assert!(BetaIndex::new(3, 0).is_err());
        assert!(BetaIndex::new(2, -4).is_err());
    }

    #[test]
    fn normal_term_examples() {
        let r = 3;
        let t = NormalTerm::new(vec![2], vec![1], QScalar::one(r), 0).unwrap();
        let p = poly(r, &[(0, &[(1, 1), (4, 1)], QScalar::one(r))]);
        assert_eq!(
            apply_normal_term(&t, &p),
            poly(r, &[(0, &[(2, 1), (4, 1)], QScalar::from_int(r, 2))])
        );

        let t = NormalTerm::new(vec![], vec![5], QScalar::one(r), 0).unwrap();
        let p = poly(r, &[(0, &[(2, 4)], QScalar::one(r))]);
        assert!(apply_normal_term(&t, &p).is_zero());

        let t = NormalTerm::new(vec![1, 1], vec![], QScalar::one(r), 0).unwrap();
        assert_eq!(
            apply_normal_term(&t, &TPolynomial::one(r)),
            poly(r, &[(-2, &[(1, 2)], QScalar::one(r))])
        );
    }

    #[test]
    fn spec_validation() {
        assert!(WModeSpec::new(3, 4, 0, 0).is_err());
        assert!(WModeSpec::new(3, 2, 2, 0).is_err());
        assert!(WModeSpec::new(3, 3, 0, -3).is_err());
        assert!(WModeSpec::new(3, 3, 0, -2).is_ok());
        assert!(WModeSpec::new(1, 2, 0, 0).is_err());
    }

    #[test]
    fn central_term_alone() {
        let spec = WModeSpec::new(3, 2, 0, 0).unwrap();
        let terms = enumerate_w_terms(&spec, 0, 0);
        assert_eq!(terms.len(), 1);
        assert!(terms[0].creators.is_empty() && terms[0].annihilators.is_empty());
        assert_eq!(terms[0].coeff, q(3, (1, 3), (0, 1)));
    }

    #[test]
    fn creator_pair_in_lowering_virasoro_mode() {
        let spec = WModeSpec::new(3, 2, 0, -1).unwrap();
        let terms = enumerate_w_terms(&spec, 8, 8);
        let pair = terms
            .iter()
            .find(|t| t.creators == vec![1, 2] && t.annihilators.is_empty())
            .expect("creator pair present");
        assert!(pair.coeff.is_one());
        assert_eq!(pair.lambda_shift, 0);
    }

    #[test]
    fn shifted_cubic_mode_has_alternating_sign() {
        let spec = WModeSpec::new(3, 3, 1, -2).unwrap();
        let terms = enumerate_w_terms(&spec, 2, 0);
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].creators, vec![1, 1]);
        assert!(terms[0].annihilators.is_empty());
        assert_eq!(terms[0].coeff, q(3, (0, 1), (-3, 2)));
        assert_eq!(terms[0].lambda_shift, -1);
    }

    #[test]
    fn w_mode_examples() {
        let r = 3;
        let one = TPolynomial::one(r);
        let spec = WModeSpec::new(r, 2, 0, 0).unwrap();
        assert_eq!(
            apply_w_mode(&spec, &one, 0),
            TPolynomial::constant(q(r, (1, 3), (0, 1)))
        );

        let spec = WModeSpec::new(r, 3, 0, -2).unwrap();
        let expected = poly(
            r,
            &[
                (-3, &[(2, 3)], q(r, (4, 3), (0, 1))),
                (-3, &[(1, 2), (4, 1)], QScalar::from_int(r, 2)),
            ],
        );
        assert_eq!(apply_w_mode(&spec, &one, 8), expected);

        let spec = WModeSpec::new(r, 2, 1, -1).unwrap();
        let t1 = poly(r, &[(0, &[(1, 1)], QScalar::one(r))]);
        assert_eq!(
            apply_w_mode(&spec, &t1, 4),
            TPolynomial::constant(q(r, (0, 1), (-3, 1)))
        );
    }

    #[test]
    fn direct_application_matches_enumerated_terms() {
        let r = 3;
        let p = poly(
            r,
            &[
                (-2, &[(1, 2), (2, 1)], q(r, (0, 1), (-1, 9))),
                (0, &[(4, 1)], q(r, (0, 1), (-1, 27))),
                (-2, &[(1, 4), (2, 2)], q(r, (1, 5), (0, 1))),
                (0, &[(7, 1), (1, 1)], q(r, (-7, 81), (0, 1))),
            ],
        );
        let cap = p.max_weight().unwrap();
        for k in 2..=r {
            for j in 0..k {
                for m in -(k as i64 - 1)..=3 {
                    let spec = WModeSpec::new(r, k, j, m).unwrap();
                    let out_cap = 12;
                    let direct = apply_w_mode(&spec, &p, out_cap);
                    let sum = OperatorSum::from_terms(r, enumerate_w_terms(&spec, out_cap, cap));
                    assert_eq!(direct, sum.apply(&p), "mismatch for {spec:?}");
                }
            }
        }
    }

    #[test]
    fn mode_bound_examples() {
        assert_eq!(mode_bound(3, 2, 1), 1);
        assert_eq!(mode_bound(3, 3, 1), 0);
        assert_eq!(mode_bound(2, 2, 3), 4);
    }

    #[test]
    fn mode_bound_is_tight() {
        // The first excluded summand vanishes on every homogeneous input of
        // the right degree; the last included one need not.
        let r = 3;
        let one = TPolynomial::one(r);
        let out = apply_a_summand(r, 1, 2, mode_bound(r, 2, 1) + 1, &one, 4, Generators::Elementary);
        assert!(out.is_zero());
        let out = apply_a_summand(r, 1, 2, mode_bound(r, 2, 1), &one, 4, Generators::Elementary);
        assert!(!out.is_zero());
        let out = apply_a_summand(r, 1, 3, mode_bound(r, 3, 1) + 1, &one, 4, Generators::Elementary);
        assert!(out.is_zero());
    }

    #[test]
    fn a_operator_examples() {
        let r = 3;
        let one = TPolynomial::one(r);
        let a1 = apply_a_operator(r, 1, &one, 1, Generators::Elementary).unwrap();
        let tau1 = poly(
            r,
            &[
                (-2, &[(1, 2), (2, 1)], q(r, (0, 1), (-1, 9))),
                (0, &[(4, 1)], q(r, (0, 1), (-1, 27))),
            ],
        );
        assert_eq!(a1, tau1);

        let a2 = apply_a_operator(r, 2, &one, 2, Generators::Elementary).unwrap();
        let expected = poly(
            r,
            &[
                (-2, &[(2, 4)], q(r, (16, 324), (0, 1))),
                (-2, &[(1, 2), (2, 1), (4, 1)], q(r, (24, 324), (0, 1))),
                (-2, &[(1, 3), (5, 1)], q(r, (5, 324), (0, 1))),
            ],
        );
        assert_eq!(a2, expected);

        let a1a1 = apply_a_operator(r, 1, &a1, 2, Generators::Elementary).unwrap();
        let expected = poly(
            r,
            &[
                (0, &[(4, 2)], q(r, (-13, 243), (0, 1))),
                (0, &[(1, 1), (7, 1)], q(r, (-14, 81), (0, 1))),
                (-2, &[(1, 3), (5, 1)], q(r, (-5, 36), (0, 1))),
                (-2, &[(1, 2), (2, 1), (4, 1)], q(r, (-32, 81), (0, 1))),
                (-4, &[(1, 4), (2, 2)], q(r, (-1, 27), (0, 1))),
            ],
        );
        assert_eq!(a1a1, expected);
    }

    #[test]
    fn a_operator_rejects_bad_input() {
        let r = 3;
        let t1 = poly(r, &[(0, &[(1, 1)], QScalar::one(r))]);
        assert_eq!(
            apply_a_operator(r, 1, &t1, 1, Generators::Elementary),
            Err(WAlgebraError::NotHomogeneous { expected_weight: 0 })
        );
        assert!(apply_a_operator(r, 3, &TPolynomial::one(r), 3, Generators::Elementary).is_err());
        assert!(apply_a_operator(r, 2, &TPolynomial::one(r), 1, Generators::Elementary).is_err());
    }

    #[test]
    fn partitions_skip_multiples_of_r() {
        let parts = partitions(3, 6, 3);
        let flat: Vec<Vec<u32>> = parts.iter().map(|g| expand_groups(g)).collect();
        assert_eq!(flat, vec![vec![1, 1, 4], vec![2, 2, 2]]);
        assert!(partitions(2, 3, 2).is_empty());
        assert_eq!(partitions(3, 0, 0).len(), 1);
    }
}
