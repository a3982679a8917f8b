//! Canonical JSON documents for scalars, polynomials, tau expansions and cache
//! entries.
//!
//! Output is byte-stable: keys appear in declaration order, terms in the
//! canonical monomial order and rationals in lowest terms.

use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generators::Generators;
use crate::scalar::{QScalar, Rational};
use crate::solver::TauExpansion;
use crate::tpoly::{check_index, TMonomial, TPolynomial};

pub const FORMAT_VERSION: u32 = 1;
pub const S_LEGEND: &str = "s^2 = -r";

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {found} (expected {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
}

fn invalid(location: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Invalid {
        location: location.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarDoc {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDoc {
    pub lambda: i32,
    pub t: Vec<(u32, u32)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub monomial: MonomialDoc,
    pub coeff: ScalarDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauDoc {
    pub format_version: u32,
    pub r: u32,
    #[serde(default)]
    pub generators: Generators,
    pub max_degree: u32,
    pub s_legend: String,
    pub pieces: Vec<Vec<TermDoc>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheDoc {
    pub format_version: u32,
    pub r: u32,
    #[serde(default)]
    pub generators: Generators,
    pub degree: u32,
    pub polynomial: Vec<TermDoc>,
}

pub fn scalar_doc(x: &QScalar) -> ScalarDoc {
    ScalarDoc {
        a: x.a().to_string(),
        b: x.b().to_string(),
    }
}

pub fn polynomial_doc(p: &TPolynomial) -> Vec<TermDoc> {
    p.iter()
        .map(|(m, c)| TermDoc {
            monomial: MonomialDoc {
                lambda: m.lambda(),
                t: m.exponents().to_vec(),
            },
            coeff: scalar_doc(c),
        })
        .collect()
}

pub fn parse_rational(text: &str, location: &str) -> Result<Rational, ParseError> {
    Rational::from_str(text.trim()).map_err(|_| invalid(location, format!("`{text}` is not a rational p/q")))
}

pub fn parse_scalar(r: u32, doc: &ScalarDoc, location: &str) -> Result<QScalar, ParseError> {
    let a = parse_rational(&doc.a, &format!("{location}.a"))?;
    let b = parse_rational(&doc.b, &format!("{location}.b"))?;
    Ok(QScalar::new(r, a, b))
}

/// Rebuilds a polynomial, rejecting anything that could not have been
/// produced by [`polynomial_doc`].
pub fn parse_polynomial(r: u32, terms: &[TermDoc], location: &str) -> Result<TPolynomial, ParseError> {
    let mut out = TPolynomial::zero(r);
    let mut previous: Option<TMonomial> = None;
    for (i, term) in terms.iter().enumerate() {
        let here = format!("{location}[{i}]");
        let mut last_n = 0;
        for (k, &(n, e)) in term.monomial.t.iter().enumerate() {
            let at = format!("{here}.monomial.t[{k}]");
            check_index(r, n).map_err(|err| invalid(&at, err.to_string()))?;
            if n <= last_n {
                return Err(invalid(&at, "indices must be strictly ascending"));
            }
            if e == 0 {
                return Err(invalid(&at, "zero exponent"));
            }
            last_n = n;
        }
        let mono = TMonomial::new(r, term.monomial.lambda, term.monomial.t.iter().copied())
            .map_err(|err| invalid(&here, err.to_string()))?;
        let coeff = parse_scalar(r, &term.coeff, &format!("{here}.coeff"))?;
        if coeff.a().is_zero() && coeff.b().is_zero() {
            return Err(invalid(&here, "zero coefficient"));
        }
        if let Some(prev) = &previous {
            if prev >= &mono {
                return Err(invalid(&here, "terms out of canonical order or duplicated"));
            }
        }
        previous = Some(mono.clone());
        out.add_term(mono, coeff);
    }
    Ok(out)
}

fn to_pretty_bytes<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(doc).expect("documents always serialize");
    bytes.push(b'\n');
    bytes
}

pub fn tau_doc(tau: &TauExpansion) -> TauDoc {
    TauDoc {
        format_version: FORMAT_VERSION,
        r: tau.r(),
        generators: tau.generators(),
        max_degree: tau.max_degree(),
        s_legend: S_LEGEND.to_string(),
        pieces: tau.pieces().iter().map(polynomial_doc).collect(),
    }
}

pub fn serialize_tau(tau: &TauExpansion) -> Vec<u8> {
    to_pretty_bytes(&tau_doc(tau))
}

pub fn parse_tau(bytes: &[u8]) -> Result<TauExpansion, ParseError> {
    let doc: TauDoc = serde_json::from_slice(bytes)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(ParseError::Version {
            found: doc.format_version,
        });
    }
    if doc.r < 2 {
        return Err(invalid("r", "r must be at least 2"));
    }
    if doc.pieces.len() != doc.max_degree as usize + 1 {
        return Err(invalid(
            "pieces",
            format!(
                "expected {} pieces for max_degree {}, found {}",
                doc.max_degree + 1,
                doc.max_degree,
                doc.pieces.len()
            ),
        ));
    }
    let mut pieces = Vec::with_capacity(doc.pieces.len());
    for (j, terms) in doc.pieces.iter().enumerate() {
        let location = format!("pieces[{j}]");
        let piece = parse_polynomial(doc.r, terms, &location)?;
        let weight = j as u64 * (doc.r as u64 + 1);
        if !piece.is_homogeneous_of(weight) {
            return Err(invalid(
                location,
                format!("piece is not homogeneous of weight {weight}"),
            ));
        }
        pieces.push(piece);
    }
    TauExpansion::from_pieces_with(doc.r, doc.generators, pieces).map_err(|err| invalid("pieces", err.to_string()))
}

pub fn serialize_cache_entry(r: u32, generators: Generators, degree: u32, piece: &TPolynomial) -> Vec<u8> {
    to_pretty_bytes(&CacheDoc {
        format_version: FORMAT_VERSION,
        r,
        generators,
        degree,
        polynomial: polynomial_doc(piece),
    })
}

/// Parses a cache entry and checks it matches the requested
/// `(r, generators, degree)`.
pub fn parse_cache_entry(bytes: &[u8], r: u32, generators: Generators, degree: u32) -> Result<TPolynomial, ParseError> {
    let doc: CacheDoc = serde_json::from_slice(bytes)?;
    if doc.format_version != FORMAT_VERSION {
        return Err(ParseError::Version {
            found: doc.format_version,
        });
    }
    if doc.r != r || doc.generators != generators || doc.degree != degree {
        return Err(invalid(
            "header",
            format!(
                "entry is for r = {}, generators = {}, degree = {} but r = {r}, generators = {generators}, degree = {degree} was requested",
                doc.r, doc.generators, doc.degree
            ),
        ));
    }
    let piece = parse_polynomial(r, &doc.polynomial, "polynomial")?;
    let weight = degree as u64 * (r as u64 + 1);
    if !piece.is_homogeneous_of(weight) {
        return Err(invalid("polynomial", format!("not homogeneous of weight {weight}")));
    }
    Ok(piece)
}
