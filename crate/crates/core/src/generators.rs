//! Class-dependent weights of the W-generators.
//!
//! The twisted boson splits into `r` sheets `J_0, ..., J_{r-1}` with
//! `Σ J_a = 0`, and a mode `α_{u/r}` enters sheet `a` with phase `ω^{a u}`.
//! Two bases of generators are provided.
//!
//! * [`Generators::PowerSum`] is `(1/k!) :α^k:` with the mode normal
//!   ordering and the constant `(r^2-1)/24` added to `W^(2)_0` only.
//! * [`Generators::Elementary`] is the twisted field of the elementary
//!   symmetric polynomial `e_k(J_0, ..., J_{r-1})`, rescaled so the generic
//!   `α^k` coefficient is again `1/k!`. Rewriting it in mode-normal-ordered
//!   form produces Wick contractions between sheets. Each contraction of
//!   sheets `a, b` contributes `r · Σ_v h(v) ω^{(a-b) v}` multiplied by
//!   `z^{-2}`, with `h(v) = v (r - v) / (2 r^2)`.
//!
//! The two bases coincide for `k ≤ 3`, including the constant in `W^(2)_0`.
//! From `k = 4` on only the elementary basis is compatible with the lower
//! constraints. With power sums the recursion still runs, but its output
//! violates the string equation once `r ≥ 4`.
//!
//! After contracting `p` pairs, a term keeps `q = k - 2p` oscillators. Its
//! coefficient depends only on the multiset of their classes `u mod r`.
//! [`ClassWeights::factor`] returns `F_p = q! ·` (the coefficient of one
//! ordered `q`-tuple), so `F_0 = 1` for power sums.

use std::collections::HashMap;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Rational;

/// Largest `r` whose class counts fit the packed table key.
pub const MAX_ELEMENTARY_RANK: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generators {
    #[default]
    Elementary,
    PowerSum,
}

impl Generators {
    pub const ALL: [Generators; 2] = [Generators::Elementary, Generators::PowerSum];

    pub fn name(self) -> &'static str {
        match self {
            Generators::Elementary => "elementary",
            Generators::PowerSum => "power_sum",
        }
    }
}

impl std::fmt::Display for Generators {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown generator basis `{0}` (expected elementary or power_sum)")]
pub struct UnknownGenerators(pub String);

impl FromStr for Generators {
    type Err = UnknownGenerators;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "elementary" => Ok(Generators::Elementary),
            "power_sum" | "power-sum" => Ok(Generators::PowerSum),
            other => Err(UnknownGenerators(other.to_string())),
        }
    }
}

/// Class counts packed four bits per class.
pub type ClassKey = u64;

pub fn class_key(counts: &[u8]) -> ClassKey {
    counts
        .iter()
        .enumerate()
        .fold(0, |key, (c, &n)| key | (n as u64) << (4 * c))
}

/// The weights of one Wick layer: `p` contractions, `q` oscillators left.
#[derive(Debug, Clone)]
pub struct Layer {
    pub contractions: u32,
    pub arity: u32,
    /// `None` means every admissible multiset has factor 1.
    table: Option<HashMap<ClassKey, Rational>>,
}

impl Layer {
    pub fn factor(&self, key: ClassKey) -> Option<Rational> {
        match &self.table {
            None => Some(Rational::one()),
            Some(t) => t.get(&key).cloned(),
        }
    }

    pub fn is_uniform(&self) -> bool {
        self.table.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct ClassWeights {
    pub r: u32,
    pub k: u32,
    pub generators: Generators,
    layers: Vec<Layer>,
}

impl ClassWeights {
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// `F_p` for the given multiset of classes, or `None` when it vanishes.
    /// `classes` lists each oscillator's `u mod r`.
    pub fn factor(&self, contractions: u32, classes: &[u32]) -> Option<Rational> {
        let layer = self.layers.iter().find(|l| l.contractions == contractions)?;
        if layer.arity as usize != classes.len() {
            return None;
        }
        let mut counts = vec![0u8; self.r as usize];
        for &c in classes {
            counts[(c % self.r) as usize] += 1;
        }
        layer.factor(class_key(&counts))
    }

    /// Constant part of `W^(k)_0`.
    pub fn constant(&self) -> Option<Rational> {
        self.layers.iter().find(|l| l.arity == 0).and_then(|l| l.factor(0))
    }
}

fn factorial(n: u32) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// `Σ_π μ(π) r^{|π|} Π_B [Σ_B charge ≡ 0 mod r]` over set partitions of the
/// slots, with `μ(π) = Π_B (-1)^{|B|-1} (|B|-1)!`. This is the sum of
/// `Π_s ω^{a_s x_s}` over assignments of pairwise distinct sheets `a_s`.
fn distinct_sheet_sum(r: u32, charges: &[u32]) -> BigInt {
    let n = charges.len();
    let full = (1usize << n) - 1;
    let block_value: Vec<BigInt> = (0..=full)
        .map(|mask| {
            let size = mask.count_ones();
            let total: u32 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| charges[i]).sum();
            if size == 0 || !total.is_multiple_of(r) {
                BigInt::zero()
            } else {
                let mu = factorial(size - 1) * BigInt::from(r);
                if size % 2 == 0 {
                    -mu
                } else {
                    mu
                }
            }
        })
        .collect();
    let mut f = vec![BigInt::zero(); full + 1];
    f[0] = BigInt::one();
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut acc = BigInt::zero();
        // Blocks containing the lowest slot.
        let mut sub = rest;
        loop {
            let block = sub | low;
            if !block_value[block].is_zero() && !f[mask ^ block].is_zero() {
                acc += &block_value[block] * &f[mask ^ block];
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        f[mask] = acc;
    }
    f.swap_remove(full)
}

/// Multisets of `size` classes from `1..r` with total divisible by `r`, as
/// count vectors.
fn admissible_multisets(r: u32, size: u32) -> Vec<Vec<u8>> {
    fn rec(r: u32, class: u32, left: u32, total: u32, counts: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if class == r {
            if left == 0 && total.is_multiple_of(r) {
                out.push(counts.clone());
            }
            return;
        }
        for n in 0..=left {
            counts[class as usize] = n as u8;
            rec(r, class + 1, left - n, total + n * class, counts, out);
        }
        counts[class as usize] = 0;
    }
    let mut out = Vec::new();
    rec(r, 1, size, 0, &mut vec![0; r as usize], &mut out);
    out
}

fn elementary_layer(r: u32, k: u32, p: u32) -> Layer {
    let q = k - 2 * p;
    let rb = BigInt::from(r);
    // N_k = (-1)^{k-1} (k-1)! r rescales the single-block term to 1/k!.
    let mut norm = factorial(k - 1) * &rb;
    if k.is_multiple_of(2) {
        norm = -norm;
    }
    let prefactor = Rational::new(rb.pow(p), factorial(p) * BigInt::from(2u32).pow(p) * norm);
    let h: Vec<Rational> = (0..r)
        .map(|v| Rational::new(BigInt::from(v * (r - v)), BigInt::from(2 * r * r)))
        .collect();
    let mut table = HashMap::new();
    for counts in admissible_multisets(r, q) {
        let mut charges: Vec<u32> = Vec::with_capacity(k as usize);
        for (c, &n) in counts.iter().enumerate() {
            charges.extend(std::iter::repeat_n(c as u32, n as usize));
        }
        let mut total = Rational::zero();
        // Charges (v_i, r - v_i) for each contracted pair.
        let mut vs = vec![1u32; p as usize];
        loop {
            let mut all = charges.clone();
            let mut weight = Rational::one();
            for &v in &vs {
                all.push(v);
                all.push(r - v);
                weight *= &h[v as usize];
            }
            let s = distinct_sheet_sum(r, &all);
            if !s.is_zero() {
                total += weight * Rational::from_integer(s);
            }
            // Odometer over v_i in 1..r.
            let mut i = 0;
            while i < vs.len() {
                vs[i] += 1;
                if vs[i] < r {
                    break;
                }
                vs[i] = 1;
                i += 1;
            }
            if i == vs.len() {
                break;
            }
        }
        let factor = total * &prefactor;
        if !factor.is_zero() {
            table.insert(class_key(&counts), factor);
        }
    }
    let uniform = p == 0 && table.len() == admissible_multisets(r, q).len() && table.values().all(|f| f.is_one());
    Layer {
        contractions: p,
        arity: q,
        table: if uniform { None } else { Some(table) },
    }
}

fn build(r: u32, k: u32, generators: Generators) -> ClassWeights {
    let layers = match generators {
        Generators::PowerSum => {
            let mut layers = vec![Layer {
                contractions: 0,
                arity: k,
                table: None,
            }];
            if k == 2 {
                let c = Rational::new(BigInt::from(r * r - 1), BigInt::from(24));
                layers.push(Layer {
                    contractions: 1,
                    arity: 0,
                    table: Some(HashMap::from([(0, c)])),
                });
            }
            layers
        }
        Generators::Elementary => (0..=k / 2)
            .map(|p| elementary_layer(r, k, p))
            .filter(|l| l.is_uniform() || l.table.as_ref().is_some_and(|t| !t.is_empty()))
            .collect(),
    };
    ClassWeights {
        r,
        k,
        generators,
        layers,
    }
}

type WeightStore = Mutex<HashMap<(u32, u32, Generators), Arc<ClassWeights>>>;

/// Shared, lazily built weights for `W^(k)` at rank `r`.
pub fn class_weights(r: u32, k: u32, generators: Generators) -> Arc<ClassWeights> {
    static STORE: OnceLock<WeightStore> = OnceLock::new();
    let store = STORE.get_or_init(Default::default);
    if let Some(hit) = store.lock().expect("weight store poisoned").get(&(r, k, generators)) {
        return hit.clone();
    }
    // Built outside the lock; a racing duplicate is identical.
    let built = Arc::new(build(r, k, generators));
    store
        .lock()
        .expect("weight store poisoned")
        .entry((r, k, generators))
        .or_insert(built)
        .clone()
}
