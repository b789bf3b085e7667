//! Sparse bivariate series in the rotated kernel coordinates `u, v`.
//!
//! A term is `c * u^m * v^n` where `c` is a [`GradedScalar`]; the map key
//! carries `(m, n, hbar_exp)` so that contributions at different `hbar`
//! grades never mix even when they share a monomial.  Two container types
//! share this representation:
//!
//! * [`BivariatePolynomial`] - plain exact polynomials (potential
//!   differences, residuals), with no completeness contract;
//! * [`KernelSeries`] - a truncated series solution that is complete for all
//!   total degrees `m + n <= truncation_order`.
//!
//! Invariants for both: no zero coefficients are stored, and the scalar at a
//! key has `hbar_exp` equal to the key's.  Iteration follows the canonical
//! term order (total degree, then `m`, then `hbar_exp`), which fixes the
//! serialization byte-for-byte and the floating-point summation order.

use crate::potential::PolynomialPotential;
use crate::scalar::{binomial, GradedScalar, Rat};
use crate::{Error, Result};
use num_complex::Complex64;
use num_traits::ToPrimitive;
use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Monomial key `(m, n)` at a fixed `hbar` grade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TermKey {
    pub m: u32,
    pub n: u32,
    pub hbar: i64,
}

impl TermKey {
    pub fn new(m: u32, n: u32, hbar: i64) -> Self {
        Self { m, n, hbar }
    }

    pub fn total_degree(&self) -> u32 {
        self.m + self.n
    }
}

impl Ord for TermKey {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.total_degree(), self.m, self.hbar).cmp(&(
            other.total_degree(),
            other.m,
            other.hbar,
        ))
    }
}

impl PartialOrd for TermKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) type TermMap = BTreeMap<TermKey, GradedScalar>;

/// Merges `c * u^m v^n` into a term map, keeping the no-zero invariant.
///
/// Returns an error when the key already holds a coefficient at a different
/// `mu` grade; a single key must carry a single grade.
pub(crate) fn merge_term(map: &mut TermMap, m: u32, n: u32, c: GradedScalar) -> Result<()> {
    if c.is_zero() {
        return Ok(());
    }
    let key = TermKey::new(m, n, c.hbar_exp());
    match map.remove(&key) {
        None => {
            map.insert(key, c);
        }
        Some(existing) => {
            if existing.mu_exp() != c.mu_exp() {
                return Err(Error::ConsistencyFailure(format!(
                    "mu-grade conflict at u^{m} v^{n} hbar^{}: mu^{} vs mu^{}",
                    key.hbar,
                    existing.mu_exp(),
                    c.mu_exp()
                )));
            }
            let sum = &existing + &c;
            if !sum.is_zero() {
                map.insert(key, sum);
            }
        }
    }
    Ok(())
}

fn evaluate_terms(map: &TermMap, u: f64, v: f64, mu: f64, hbar: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (key, c) in map {
        acc += c.eval(mu, hbar) * u.powi(key.m as i32) * v.powi(key.n as i32);
    }
    acc
}

/// Exact bivariate polynomial in `u, v`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BivariatePolynomial {
    terms: TermMap,
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, u32, GradedScalar)>>(terms: I) -> Result<Self> {
        let mut map = TermMap::new();
        for (m, n, c) in terms {
            merge_term(&mut map, m, n, c)?;
        }
        Ok(Self { terms: map })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TermKey, &GradedScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: u32, n: u32, hbar: i64) -> Option<&GradedScalar> {
        self.terms.get(&TermKey::new(m, n, hbar))
    }

    /// Smallest total degree present, `None` when zero.
    pub fn min_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(TermKey::total_degree).min()
    }

    pub fn max_total_degree(&self) -> Option<u32> {
        self.terms.keys().map(TermKey::total_degree).max()
    }

    /// True when no term has total degree `<= order`.
    pub fn vanishes_through(&self, order: u32) -> bool {
        self.min_total_degree().map_or(true, |d| d > order)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut map = self.terms.clone();
        for (key, c) in &other.terms {
            merge_term(&mut map, key.m, key.n, c.clone())?;
        }
        Ok(Self { terms: map })
    }

    pub fn scale(&self, factor: &GradedScalar) -> Self {
        let mut map = TermMap::new();
        for (key, c) in &self.terms {
            let scaled = c * factor;
            if !scaled.is_zero() {
                map.insert(TermKey::new(key.m, key.n, scaled.hbar_exp()), scaled);
            }
        }
        Self { terms: map }
    }

    pub fn evaluate(&self, q: &Rat, qprime: &Rat, mu: f64, hbar: f64) -> Complex64 {
        let u = (q + qprime).to_f64().unwrap_or(f64::NAN);
        let v = (q - qprime).to_f64().unwrap_or(f64::NAN);
        evaluate_terms(&self.terms, u, v, mu, hbar)
    }

    /// Evaluates directly in the `(u, v)` coordinates, exactly as stored.
    pub fn evaluate_uv(&self, u: f64, v: f64, mu: f64, hbar: f64) -> Complex64 {
        evaluate_terms(&self.terms, u, v, mu, hbar)
    }
}

/// Truncated series solution, complete through `truncation_order` in total
/// degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSeries {
    terms: TermMap,
    truncation_order: u32,
}

impl KernelSeries {
    pub fn new(truncation_order: u32) -> Self {
        Self {
            terms: TermMap::new(),
            truncation_order,
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (u32, u32, GradedScalar)>>(
        truncation_order: u32,
        terms: I,
    ) -> Result<Self> {
        let mut map = TermMap::new();
        for (m, n, c) in terms {
            merge_term(&mut map, m, n, c)?;
        }
        Ok(Self {
            terms: map,
            truncation_order,
        })
    }

    pub fn truncation_order(&self) -> u32 {
        self.truncation_order
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TermKey, &GradedScalar)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: u32, n: u32, hbar: i64) -> Option<&GradedScalar> {
        self.terms.get(&TermKey::new(m, n, hbar))
    }

    /// All grades stored at the monomial `(m, n)`, in key order.
    pub fn grades_at(&self, m: u32, n: u32) -> Vec<&GradedScalar> {
        self.terms
            .range(TermKey::new(m, n, i64::MIN)..=TermKey::new(m, n, i64::MAX))
            .map(|(_, c)| c)
            .collect()
    }

    pub(crate) fn merge(&mut self, m: u32, n: u32, c: GradedScalar) -> Result<()> {
        merge_term(&mut self.terms, m, n, c)
    }

    /// Termwise sum; the result is only complete to the smaller truncation
    /// order.
    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut map = self.terms.clone();
        for (key, c) in &other.terms {
            merge_term(&mut map, key.m, key.n, c.clone())?;
        }
        Ok(Self {
            terms: map,
            truncation_order: self.truncation_order.min(other.truncation_order),
        })
    }

    pub fn scale(&self, factor: &GradedScalar) -> Self {
        let mut map = TermMap::new();
        for (key, c) in &self.terms {
            let scaled = c * factor;
            if !scaled.is_zero() {
                map.insert(TermKey::new(key.m, key.n, scaled.hbar_exp()), scaled);
            }
        }
        Self {
            terms: map,
            truncation_order: self.truncation_order,
        }
    }

    /// Keeps only terms satisfying the predicate (parity filters, branch
    /// separation).  The truncation order is unchanged: the filtered series
    /// is still complete for the surviving keys.
    pub fn filtered<F: Fn(&TermKey) -> bool>(&self, keep: F) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(key, _)| keep(key))
                .map(|(key, c)| (*key, c.clone()))
                .collect(),
            truncation_order: self.truncation_order,
        }
    }

    /// Evaluates `T(q, q')` at numeric `mu`, `hbar`, summing terms in
    /// canonical order for reproducibility.
    pub fn evaluate(&self, q: &Rat, qprime: &Rat, mu: f64, hbar: f64) -> Complex64 {
        let u = (q + qprime).to_f64().unwrap_or(f64::NAN);
        let v = (q - qprime).to_f64().unwrap_or(f64::NAN);
        evaluate_terms(&self.terms, u, v, mu, hbar)
    }

    pub fn evaluate_uv(&self, u: f64, v: f64, mu: f64, hbar: f64) -> Complex64 {
        evaluate_terms(&self.terms, u, v, mu, hbar)
    }
}

/// Exact termwise equality of two series through total degree
/// `up_to_order`.
///
/// Fails when either series is not complete that far; comparing beyond the
/// truncation order would silently treat missing data as zero.
pub fn series_equal(a: &KernelSeries, b: &KernelSeries, up_to_order: u32) -> Result<bool> {
    let available = a.truncation_order.min(b.truncation_order);
    if up_to_order > available {
        return Err(Error::OrderExceedsTruncation {
            requested: up_to_order,
            available,
        });
    }
    let mut lhs = a
        .terms
        .iter()
        .filter(|(key, _)| key.total_degree() <= up_to_order);
    let mut rhs = b
        .terms
        .iter()
        .filter(|(key, _)| key.total_degree() <= up_to_order);
    loop {
        match (lhs.next(), rhs.next()) {
            (None, None) => return Ok(true),
            (Some((ka, ca)), Some((kb, cb))) if ka == kb && ca == cb => continue,
            _ => return Ok(false),
        }
    }
}

/// Exact expansion of the potential difference
/// `V((u+v)/2) - V((u-v)/2)`.
///
/// Each power `a_s q^s` contributes
/// `(a_s / 2^(s-1)) * sum_k C(s, 2k+1) u^(s-2k-1) v^(2k+1)`,
/// so only odd `v`-degrees appear.  `max_total_degree` must be at least the
/// degree of `V`; the expansion is exact, the argument just pins the
/// caller's expectation (asserted).
pub fn potential_difference_expand(
    v: &PolynomialPotential,
    max_total_degree: u32,
) -> BivariatePolynomial {
    assert!(
        max_total_degree >= v.max_degree(),
        "expansion order {} is below the potential degree {}",
        max_total_degree,
        v.max_degree()
    );
    let mut map = TermMap::new();
    for (s, a_s) in v.iter() {
        let half_pow = Rat::new(1.into(), num_bigint::BigInt::from(2).pow(s - 1));
        let scale = a_s.scale(&half_pow);
        for k in 0..=((s - 1) / 2) {
            let j = 2 * k + 1;
            let c = scale.scale(&Rat::from(binomial(s, j)));
            merge_term(&mut map, s - j, j, c).expect("single potential power cannot conflict");
        }
    }
    BivariatePolynomial { terms: map }
}

impl Serialize for KernelSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.terms.len()))?;
        for (key, c) in &self.terms {
            seq.serialize_element(&(key.m, key.n, key.hbar, c))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for KernelSeries {
    /// Parses the `[[m, n, hbar, scalar], ...]` form; the truncation order is
    /// taken to be the highest total degree present.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<(u32, u32, i64, GradedScalar)> = Vec::deserialize(deserializer)?;
        let mut map = TermMap::new();
        let mut order = 0;
        for (m, n, hbar, c) in rows {
            if c.hbar_exp() != hbar {
                return Err(D::Error::custom(format!(
                    "series term at u^{m} v^{n}: key hbar {} disagrees with scalar hbar {}",
                    hbar,
                    c.hbar_exp()
                )));
            }
            order = order.max(m + n);
            merge_term(&mut map, m, n, c).map_err(D::Error::custom)?;
        }
        Ok(Self {
            terms: map,
            truncation_order: order,
        })
    }
}
