//! Polynomial potentials `V(q) = sum_{s >= 1} a_s q^s`.
//!
//! Coefficients are [`GradedScalar`]s so that physically graded potentials
//! stay exact: the harmonic oscillator `V = (mu omega^2 / 2) q^2` stores
//! `a_2 = (omega^2 / 2) mu`, i.e. rational part `omega^2 / 2` at `mu` grade 1.
//! A constant term is excluded; it cancels identically in the potential
//! difference `V((u+v)/2) - V((u-v)/2)` that drives every solver here.
//!
//! Invariants: all stored coefficients are nonzero and keyed by degree
//! `s >= 1`.

use crate::scalar::{rat, GaussianRational, GradedScalar, Rat};
use rand::{RngCore, SeedableRng};
use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Sparse polynomial potential.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolynomialPotential {
    coeffs: BTreeMap<u32, GradedScalar>,
}

impl PolynomialPotential {
    /// The free particle, `V = 0`.
    pub fn free() -> Self {
        Self::default()
    }

    /// Builds a potential from `(degree, coefficient)` pairs, dropping zero
    /// coefficients and summing duplicates.
    ///
    /// Panics on a degree-0 entry; constant offsets are not representable.
    pub fn from_coeffs<I: IntoIterator<Item = (u32, GradedScalar)>>(coeffs: I) -> Self {
        let mut map: BTreeMap<u32, GradedScalar> = BTreeMap::new();
        for (s, a) in coeffs {
            assert!(s >= 1, "potential degrees start at 1, got a_0");
            if a.is_zero() {
                continue;
            }
            let entry = match map.remove(&s) {
                Some(existing) => &existing + &a,
                None => a,
            };
            if !entry.is_zero() {
                map.insert(s, entry);
            }
        }
        Self { coeffs: map }
    }

    /// Linear potential `V = a q`.
    pub fn linear(a: GradedScalar) -> Self {
        Self::from_coeffs([(1, a)])
    }

    /// Harmonic oscillator `V = (mu omega^2 / 2) q^2` with rational `omega`.
    pub fn harmonic(omega: &Rat) -> Self {
        let half_omega_sq = omega * omega / rat(2, 1);
        Self::from_coeffs([(
            2,
            GradedScalar::new(GaussianRational::from_rat(half_omega_sq), 1, 0),
        )])
    }

    pub fn is_free(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest stored degree, 0 for the free particle.
    pub fn max_degree(&self) -> u32 {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn coeff(&self, s: u32) -> Option<&GradedScalar> {
        self.coeffs.get(&s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &GradedScalar)> {
        self.coeffs.iter().map(|(s, a)| (*s, a))
    }

    /// True when every coefficient is real, the condition under which the
    /// symmetry classifications of solved kernels apply.
    pub fn is_real(&self) -> bool {
        self.coeffs.values().all(GradedScalar::is_real)
    }

    /// Exact coefficients of `V(q)^k` by repeated convolution.
    ///
    /// `V^0 = 1` is the single entry at degree 0.  This is deliberately the
    /// naive product so it can serve as an independent oracle for the
    /// recursive coefficient tables.
    pub fn pow_coeffs(&self, k: u32) -> BTreeMap<u32, GradedScalar> {
        let mut acc: BTreeMap<u32, GradedScalar> = BTreeMap::new();
        acc.insert(0, GradedScalar::one());
        for _ in 0..k {
            let mut next: BTreeMap<u32, GradedScalar> = BTreeMap::new();
            for (da, ca) in &acc {
                for (db, cb) in &self.coeffs {
                    let degree = da + db;
                    let term = ca * cb;
                    let entry = match next.remove(&degree) {
                        Some(existing) => &existing + &term,
                        None => term,
                    };
                    if !entry.is_zero() {
                        next.insert(degree, entry);
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// Deterministic pseudo-random potential of exact degree `degree` with
    /// small nonzero rational coefficients, for randomized identity checks.
    ///
    /// Sampling reduces the raw ChaCha word stream directly so the values
    /// cannot drift with changes to `rand`'s distribution code.
    pub fn random(seed: u64, degree: u32) -> Self {
        assert!(degree >= 1, "random potential needs degree >= 1");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = Vec::new();
        for s in 1..=degree {
            coeffs.push((s, GradedScalar::from_rat(sample_nonzero_rational(&mut rng))));
        }
        Self::from_coeffs(coeffs)
    }
}

/// Nonzero rational with numerator in `[-9, 9]` and denominator in `[1, 9]`.
fn sample_nonzero_rational<R: RngCore>(rng: &mut R) -> Rat {
    let numer = loop {
        let candidate = (rng.next_u64() % 19) as i64 - 9;
        if candidate != 0 {
            break candidate;
        }
    };
    let denom = (rng.next_u64() % 9) as i64 + 1;
    rat(numer, denom)
}

impl Serialize for PolynomialPotential {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.coeffs.len()))?;
        for (s, a) in &self.coeffs {
            seq.serialize_element(&(s, a))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for PolynomialPotential {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries: Vec<(u32, GradedScalar)> = Vec::deserialize(deserializer)?;
        if entries.iter().any(|(s, _)| *s == 0) {
            return Err(D::Error::custom("potential degrees start at 1"));
        }
        Ok(Self::from_coeffs(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational_string;

    #[test]
    fn harmonic_coefficient_grade() {
        let v = PolynomialPotential::harmonic(&rat(3, 2));
        let a2 = v.coeff(2).unwrap();
        assert_eq!(a2.re(), &rat(9, 8));
        assert_eq!(a2.mu_exp(), 1);
        assert_eq!(a2.hbar_exp(), 0);
        assert_eq!(v.max_degree(), 2);
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let v = PolynomialPotential::from_coeffs([
            (1, GradedScalar::rational(1, 2)),
            (3, GradedScalar::zero()),
            (1, GradedScalar::rational(-1, 2)),
        ]);
        assert!(v.is_free());
        assert_eq!(v.max_degree(), 0);
    }

    #[test]
    fn power_coefficients_match_hand_expansion() {
        // (q + 2 q^2)^2 = q^2 + 4 q^3 + 4 q^4
        let v = PolynomialPotential::from_coeffs([
            (1, GradedScalar::one()),
            (2, GradedScalar::rational(2, 1)),
        ]);
        let sq = v.pow_coeffs(2);
        assert_eq!(sq.len(), 3);
        assert_eq!(sq[&2], GradedScalar::rational(1, 1));
        assert_eq!(sq[&3], GradedScalar::rational(4, 1));
        assert_eq!(sq[&4], GradedScalar::rational(4, 1));
        assert_eq!(v.pow_coeffs(0)[&0], GradedScalar::one());
    }

    #[test]
    fn random_potential_is_deterministic_and_full_degree() {
        let a = PolynomialPotential::random(42, 3);
        let b = PolynomialPotential::random(42, 3);
        assert_eq!(a, b);
        assert_eq!(a.max_degree(), 3);
        for (_, c) in a.iter() {
            assert!(!c.is_zero());
            assert!(c.is_real());
        }
        let other = PolynomialPotential::random(43, 3);
        assert_ne!(a, other);
    }

    #[test]
    fn serde_round_trip() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[[2,{"re":"1/2","im":"0/1","mu":1,"hbar":0}]]"#);
        let back: PolynomialPotential = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        let _ = rational_string(&rat(1, 2));
    }
}
