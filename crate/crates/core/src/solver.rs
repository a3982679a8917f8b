//! Degree-by-degree solution of the recursion `j τ^(j) = Σ_l A_l τ^(j-l)`.

use thiserror::Error;

use crate::cache::{CacheError, TauCache};
use crate::generators::Generators;
use crate::scalar::Rational;
use crate::tpoly::TPolynomial;
use crate::walgebra::{apply_a_operator, WAlgebraError};

pub use crate::walgebra::mode_bound;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("r must be at least 2, got {0}")]
    InvalidRank(u32),
    #[error("malformed expansion: {0}")]
    Malformed(String),
    #[error(transparent)]
    Operator(#[from] WAlgebraError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

/// The graded pieces `τ^(0), ..., τ^(D)` for one `r` and generator basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauExpansion {
    r: u32,
    generators: Generators,
    pieces: Vec<TPolynomial>,
}

impl TauExpansion {
    /// Checks that `pieces[0] = 1` and that `pieces[j]` is homogeneous of
    /// weight `j(r+1)`. The basis is the default one.
    pub fn from_pieces(r: u32, pieces: Vec<TPolynomial>) -> Result<Self, SolverError> {
        Self::from_pieces_with(r, Generators::default(), pieces)
    }

    pub fn from_pieces_with(r: u32, generators: Generators, pieces: Vec<TPolynomial>) -> Result<Self, SolverError> {
        if r < 2 {
            return Err(SolverError::InvalidRank(r));
        }
        match pieces.first() {
            Some(p) if *p == TPolynomial::one(r) => {}
            _ => return Err(SolverError::Malformed("piece 0 must be the constant 1".into())),
        }
        for (j, p) in pieces.iter().enumerate() {
            if p.r() != r {
                return Err(SolverError::Malformed(format!("piece {j} has r = {}", p.r())));
            }
            let weight = j as u64 * (r as u64 + 1);
            if !p.is_homogeneous_of(weight) {
                return Err(SolverError::Malformed(format!(
                    "piece {j} is not homogeneous of weight {weight}"
                )));
            }
        }
        Ok(TauExpansion { r, generators, pieces })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Basis of the constraints this expansion was solved against.
    pub fn generators(&self) -> Generators {
        self.generators
    }

    pub fn max_degree(&self) -> u32 {
        (self.pieces.len() - 1) as u32
    }

    pub fn pieces(&self) -> &[TPolynomial] {
        &self.pieces
    }

    pub fn piece(&self, j: u32) -> Option<&TPolynomial> {
        self.pieces.get(j as usize)
    }

    /// Keeps degrees `0..=degree`.
    pub fn truncated(&self, degree: u32) -> TauExpansion {
        let keep = (degree as usize + 1).min(self.pieces.len());
        TauExpansion {
            r: self.r,
            generators: self.generators,
            pieces: self.pieces[..keep].to_vec(),
        }
    }

    /// Sum of all pieces.
    pub fn total(&self) -> TPolynomial {
        let mut out = TPolynomial::zero(self.r);
        for p in &self.pieces {
            out.add_assign(p);
        }
        out
    }
}

fn recursion_step(r: u32, j: u32, lower: &[TPolynomial], generators: Generators) -> Result<TPolynomial, SolverError> {
    let mut sum = TPolynomial::zero(r);
    for l in 1..=(r - 1).min(j) {
        let part = apply_a_operator(r, l, &lower[(j - l) as usize], j, generators)?;
        sum.add_assign(&part);
    }
    Ok(sum.scale_rational(&Rational::new(1.into(), j.into())))
}

/// Solves for `τ^(0..=D)` in the default basis. With a cache, each degree is
/// read from disk when present and written after it is computed.
pub fn compute_tau(r: u32, max_degree: u32, cache: Option<&TauCache>) -> Result<TauExpansion, SolverError> {
    compute_tau_with(r, max_degree, Generators::default(), cache)
}

pub fn compute_tau_with(
    r: u32,
    max_degree: u32,
    generators: Generators,
    cache: Option<&TauCache>,
) -> Result<TauExpansion, SolverError> {
    if r < 2 {
        return Err(SolverError::InvalidRank(r));
    }
    let mut pieces = vec![TPolynomial::one(r)];
    for j in 1..=max_degree {
        if let Some(c) = cache {
            if let Some(hit) = c.load(r, generators, j)? {
                pieces.push(hit);
                continue;
            }
        }
        let piece = recursion_step(r, j, &pieces, generators)?;
        if let Some(c) = cache {
            c.store(r, generators, j, &piece)?;
        }
        pieces.push(piece);
    }
    TauExpansion::from_pieces_with(r, generators, pieces)
}

/// Applies `B = Σ_j A_j / j` to a graded series, returning degrees `1..=D`
/// of the image. `series[d]` must be homogeneous of degree `d`.
fn apply_b(
    r: u32,
    series: &[TPolynomial],
    max_degree: u32,
    generators: Generators,
) -> Result<Vec<TPolynomial>, SolverError> {
    let mut out = vec![TPolynomial::zero(r); max_degree as usize + 1];
    for d in 1..=max_degree {
        for l in 1..=(r - 1).min(d) {
            let src = &series[(d - l) as usize];
            if src.is_zero() {
                continue;
            }
            let part = apply_a_operator(r, l, src, d, generators)?;
            out[d as usize].add_assign(&part.scale_rational(&Rational::new(1.into(), l.into())));
        }
    }
    Ok(out)
}

/// `exp(Σ_j A_j / j) · 1` truncated at degree `D`. Agrees with
/// [`compute_tau`] exactly when the `A_l` commute on the relevant pieces.
pub fn compute_tau_exponential(r: u32, max_degree: u32) -> Result<TauExpansion, SolverError> {
    compute_tau_exponential_with(r, max_degree, Generators::default())
}

pub fn compute_tau_exponential_with(
    r: u32,
    max_degree: u32,
    generators: Generators,
) -> Result<TauExpansion, SolverError> {
    if r < 2 {
        return Err(SolverError::InvalidRank(r));
    }
    let size = max_degree as usize + 1;
    let mut total = vec![TPolynomial::zero(r); size];
    let mut term = vec![TPolynomial::zero(r); size];
    term[0] = TPolynomial::one(r);
    total[0] = TPolynomial::one(r);
    // B raises degree by at least one, so B^n 1 vanishes below degree n.
    for n in 1..=max_degree {
        let next = apply_b(r, &term, max_degree, generators)?;
        let inv_n = Rational::new(1.into(), n.into());
        term = next.iter().map(|p| p.scale_rational(&inv_n)).collect();
        for (acc, p) in total.iter_mut().zip(&term) {
            acc.add_assign(p);
        }
    }
    TauExpansion::from_pieces_with(r, generators, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rational, QScalar};
    use crate::tpoly::TMonomial;

    fn mono(r: u32, lambda: i32, exps: &[(u32, u32)]) -> TMonomial {
        TMonomial::new(r, lambda, exps.iter().copied()).unwrap()
    }

    #[test]
    fn degree_zero_is_one() {
        for r in 2..=5 {
            let tau = compute_tau(r, 0, None).unwrap();
            assert_eq!(tau.pieces(), &[TPolynomial::one(r)]);
            assert_eq!(compute_tau_exponential(r, 0).unwrap(), tau);
        }
    }

    #[test]
    fn r2_first_piece() {
        let tau = compute_tau(2, 1, None).unwrap();
        let s = |c: i64, d: i64| QScalar::new(2, rational(0, 1), rational(c, d));
        let expected = TPolynomial::from_terms(
            2,
            [(mono(2, -2, &[(1, 3)]), s(-1, 24)), (mono(2, 0, &[(3, 1)]), s(-1, 32))],
        )
        .unwrap();
        assert_eq!(tau.pieces()[1], expected);
    }

    #[test]
    fn r3_first_piece() {
        let tau = compute_tau(3, 1, None).unwrap();
        let s = |c: i64, d: i64| QScalar::new(3, rational(0, 1), rational(c, d));
        let expected = TPolynomial::from_terms(
            3,
            [
                (mono(3, -2, &[(1, 2), (2, 1)]), s(-1, 9)),
                (mono(3, 0, &[(4, 1)]), s(-1, 27)),
            ],
        )
        .unwrap();
        assert_eq!(tau.pieces()[1], expected);
    }

    #[test]
    fn rejects_small_rank() {
        assert!(matches!(compute_tau(1, 2, None), Err(SolverError::InvalidRank(1))));
        assert!(compute_tau_exponential(0, 1).is_err());
    }

    #[test]
    fn mode_bound_reexport() {
        assert_eq!(mode_bound(3, 2, 1), 1);
        assert_eq!(mode_bound(3, 3, 1), 0);
        assert_eq!(mode_bound(2, 2, 3), 4);
    }

    #[test]
    fn exponential_matches_recursion_for_r2() {
        let a = compute_tau(2, 4, None).unwrap();
        let b = compute_tau_exponential(2, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn from_pieces_validation() {
        assert!(TauExpansion::from_pieces(3, vec![]).is_err());
        let stray = TPolynomial::monomial(mono(3, 0, &[(1, 1)]), QScalar::one(3));
        assert!(TauExpansion::from_pieces(3, vec![TPolynomial::one(3), stray]).is_err());
    }

    #[test]
    fn cache_round_trip_and_hits() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TauCache::new(dir.path());
        let cold = compute_tau(3, 2, Some(&cache)).unwrap();
        assert!(cache.entry_path(3, Generators::Elementary, 1).exists());
        assert!(cache.entry_path(3, Generators::Elementary, 2).exists());
        let warm = compute_tau(3, 2, Some(&cache)).unwrap();
        assert_eq!(cold, warm);

        // A hit is used verbatim, so a planted entry shows up in the output.
        let planted = cold.pieces()[1].scale_rational(&rational(2, 1));
        cache.store(3, Generators::Elementary, 1, &planted).unwrap();
        std::fs::remove_file(cache.entry_path(3, Generators::Elementary, 2)).unwrap();
        let hit = compute_tau(3, 1, Some(&cache)).unwrap();
        assert_eq!(hit.pieces()[1], planted);
    }

    #[test]
    fn corrupt_cache_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TauCache::new(dir.path());
        std::fs::write(cache.entry_path(3, Generators::Elementary, 1), "[]").unwrap();
        assert!(matches!(compute_tau(3, 1, Some(&cache)), Err(SolverError::Cache(_))));
    }
}
