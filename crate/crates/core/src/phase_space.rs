//! Phase-space images of kernels: Wigner-Weyl transforms, local
//! time-of-arrival expansions, and inverse-Hamiltonian series.
//!
//! The Weyl symbol of a kernel `<q|A|q'>` is
//! `A_W(q, p) = integral <q + y/2| A |q - y/2> e^(-i y p / hbar) dy`; in the
//! rotated coordinates this is a Fourier transform over `v` at `u = 2q`.
//! For the kernels treated here the `v`-dependence is polynomial times
//! `sgn(v)`, a Heaviside weight, or plain polynomial, so the transform is a
//! finite combination of the exact identities
//!
//! ```text
//! F[v^n sgn(v)](p/hbar) = 2 n! (hbar / (i p))^(n+1)
//! F[v^n H(+-v)](p/hbar) = i^n pi hbar^(n+1) delta^(n)(p) +- n! (hbar/(i p))^(n+1)
//! F[v^n](p/hbar)        = 2 pi i^n hbar^(n+1) delta^(n)(p)
//! ```
//!
//! using the rescaling `delta^(n)(p/hbar) = hbar^(n+1) delta^(n)(p)`.  A
//! [`PhaseSpaceSeries`] splits the result into regular terms
//! `c q^m p^(-j)` and delta terms `c pi q^m delta^(d)(p)`; every delta
//! coefficient in scope carries exactly one factor of `pi`, so the stored
//! Gaussian rational is the coefficient with `pi` factored out, keeping the
//! algebra exact.

use crate::potential::PolynomialPotential;
use crate::scalar::{factorial, parse_rational, rational_string, GaussianRational, GradedScalar, Rat};
use crate::series::KernelSeries;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive};
use serde::de::{Deserializer, Error as DeError};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Weight function tagging a piecewise-polynomial factor on the real line.
///
/// Used both for the piecewise boundary terms of the modified equation and
/// for the `q`-cofactors of delta terms, whose originating `f(u)` may carry
/// `sgn`/Heaviside weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PieceWeight {
    One,
    Sgn,
    HeavisidePlus,
    HeavisideMinus,
}

impl PieceWeight {
    pub fn tag(&self) -> &'static str {
        match self {
            PieceWeight::One => "one",
            PieceWeight::Sgn => "sgn",
            PieceWeight::HeavisidePlus => "hplus",
            PieceWeight::HeavisideMinus => "hminus",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "one" => Some(PieceWeight::One),
            "sgn" => Some(PieceWeight::Sgn),
            "hplus" => Some(PieceWeight::HeavisidePlus),
            "hminus" => Some(PieceWeight::HeavisideMinus),
            _ => None,
        }
    }

    /// Pointwise value at `x`, with the distributional midpoint convention
    /// at `x = 0` (`sgn(0) = 0`, `H(0) = 1/2`).
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PieceWeight::One => 1.0,
            PieceWeight::Sgn => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            PieceWeight::HeavisidePlus => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
            PieceWeight::HeavisideMinus => {
                if x < 0.0 {
                    1.0
                } else if x > 0.0 {
                    0.0
                } else {
                    0.5
                }
            }
        }
    }
}

/// Key of a regular term `q^m p^(-j)`, `j >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegularKey {
    pub p_inv: u32,
    pub q_pow: u32,
    pub hbar: i64,
    pub mu: i64,
}

/// Key of a delta term `c pi q^m w(q) delta^(d)(p)` (coefficient stored as
/// the rational multiple of `pi`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeltaKey {
    pub order: u32,
    pub q_pow: u32,
    pub weight: PieceWeight,
    pub hbar: i64,
    pub mu: i64,
}

/// Exact phase-space series: regular part plus delta part.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PhaseSpaceSeries {
    regular: BTreeMap<RegularKey, GaussianRational>,
    delta: BTreeMap<DeltaKey, GaussianRational>,
}

impl PhaseSpaceSeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.regular.is_empty() && self.delta.is_empty()
    }

    pub fn regular_len(&self) -> usize {
        self.regular.len()
    }

    pub fn delta_len(&self) -> usize {
        self.delta.len()
    }

    pub fn regular_iter(&self) -> impl Iterator<Item = (&RegularKey, &GaussianRational)> {
        self.regular.iter()
    }

    pub fn delta_iter(&self) -> impl Iterator<Item = (&DeltaKey, &GaussianRational)> {
        self.delta.iter()
    }

    pub fn regular_coeff(&self, key: &RegularKey) -> Option<&GaussianRational> {
        self.regular.get(key)
    }

    pub fn delta_coeff(&self, key: &DeltaKey) -> Option<&GaussianRational> {
        self.delta.get(key)
    }

    pub fn add_regular(&mut self, key: RegularKey, value: GaussianRational) {
        assert!(key.p_inv >= 1, "regular terms have p-inverse power >= 1");
        merge(&mut self.regular, key, value);
    }

    pub fn add_delta(&mut self, key: DeltaKey, value: GaussianRational) {
        merge(&mut self.delta, key, value);
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (key, value) in &other.regular {
            merge(&mut out.regular, *key, value.clone());
        }
        for (key, value) in &other.delta {
            merge(&mut out.delta, *key, value.clone());
        }
        out
    }

    /// Multiplies every term by a graded scalar; the grades move into the
    /// keys.
    pub fn scale_graded(&self, factor: &GradedScalar) -> Self {
        let mut out = Self::new();
        if factor.is_zero() {
            return out;
        }
        for (key, value) in &self.regular {
            let mut key = *key;
            key.hbar += factor.hbar_exp();
            key.mu += factor.mu_exp();
            merge(&mut out.regular, key, value * factor.value());
        }
        for (key, value) in &self.delta {
            let mut key = *key;
            key.hbar += factor.hbar_exp();
            key.mu += factor.mu_exp();
            merge(&mut out.delta, key, value * factor.value());
        }
        out
    }

    /// All `hbar` grades present, ascending.
    pub fn hbar_grades(&self) -> Vec<i64> {
        let mut grades: Vec<i64> = self
            .regular
            .keys()
            .map(|k| k.hbar)
            .chain(self.delta.keys().map(|k| k.hbar))
            .collect();
        grades.sort_unstable();
        grades.dedup();
        grades
    }

    /// Terms at one `hbar` grade.
    pub fn filter_hbar(&self, grade: i64) -> Self {
        Self {
            regular: self
                .regular
                .iter()
                .filter(|(k, _)| k.hbar == grade)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            delta: self
                .delta
                .iter()
                .filter(|(k, _)| k.hbar == grade)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Regular terms with `p`-inverse power at most `max`, deltas dropped.
    pub fn restrict_p_inv(&self, max: u32) -> Self {
        Self {
            regular: self
                .regular
                .iter()
                .filter(|(k, _)| k.p_inv <= max)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            delta: BTreeMap::new(),
        }
    }

    /// Evaluates the regular part at a phase-space point.  Delta terms are
    /// supported only at `p = 0` and contribute nothing at the sampled
    /// points, which must avoid `p = 0`.
    pub fn evaluate_regular(&self, q: &Rat, p: &Rat, mu: f64, hbar: f64) -> Complex64 {
        let qf = q.to_f64().unwrap_or(f64::NAN);
        let pf = p.to_f64().unwrap_or(f64::NAN);
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, value) in &self.regular {
            let scale = mu.powi(key.mu as i32)
                * hbar.powi(key.hbar as i32)
                * qf.powi(key.q_pow as i32)
                * pf.powi(-(key.p_inv as i32));
            acc += value.to_complex64() * scale;
        }
        acc
    }

    /// Splits into the `hbar^0` part and the positive-grade corrections.
    /// Negative grades have no classical limit and are an error.
    pub fn classical_limit(&self) -> Result<ClassicalLimitSplit> {
        if let Some(grade) = self.hbar_grades().first().copied().filter(|g| *g < 0) {
            return Err(Error::NegativeHbarGrade { grade });
        }
        let mut classical = Self::new();
        let mut corrections = Self::new();
        for (key, value) in &self.regular {
            let target = if key.hbar == 0 {
                &mut classical
            } else {
                &mut corrections
            };
            target.add_regular(*key, value.clone());
        }
        for (key, value) in &self.delta {
            let target = if key.hbar == 0 {
                &mut classical
            } else {
                &mut corrections
            };
            target.add_delta(*key, value.clone());
        }
        Ok(ClassicalLimitSplit {
            classical,
            corrections,
        })
    }
}

fn merge<K: Ord + Copy>(map: &mut BTreeMap<K, GaussianRational>, key: K, value: GaussianRational) {
    if value.is_zero() {
        return;
    }
    match map.remove(&key) {
        None => {
            map.insert(key, value);
        }
        Some(existing) => {
            let sum = &existing + &value;
            if !sum.is_zero() {
                map.insert(key, sum);
            }
        }
    }
}

/// `hbar^0` part of a series together with the quantum corrections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalLimitSplit {
    pub classical: PhaseSpaceSeries,
    pub corrections: PhaseSpaceSeries,
}

/// Weyl transform of the kernel `(mu / (i hbar)) T(u, v) sgn(v)`.
///
/// Termwise, `alpha u^m v^n sgn(v)` maps to
/// `mu alpha 2^(m+1) n! q^m / (i^(n+2) p^(n+1))` at `hbar` grade
/// `hbar_exp + n` and `mu` grade `mu_exp + 1`: the `u = 2q` substitution
/// gives `2^m`, the `sgn` Fourier identity supplies `2 n! (hbar/(ip))^(n+1)`,
/// and the kernel prefactor `mu/(i hbar)` contributes the remaining
/// `mu i^(-1) hbar^(-1)`.
pub fn weyl_transform_sgn(t: &KernelSeries) -> PhaseSpaceSeries {
    let mut out = PhaseSpaceSeries::new();
    for (key, c) in t.iter() {
        let n = key.n;
        let scale = Rat::from(BigInt::from(2).pow(key.m + 1) * factorial(n));
        let value = c.value().scale(&scale).mul_i_pow(-(i64::from(n) + 2));
        out.add_regular(
            RegularKey {
                p_inv: n + 1,
                q_pow: key.m,
                hbar: key.hbar + i64::from(n),
                mu: c.mu_exp() + 1,
            },
            value,
        );
    }
    out
}

/// Local time-of-arrival expansion at the origin.
///
/// `t(q, p) = sum_k (-1)^k T_k` with `T_0 = -mu q / p` and
/// `T_k = (mu/p) integral_q^0 V'(x) dT_(k-1)/dp dx`.  Every term of `T_k`
/// has `p`-inverse power `2k + 1` and `mu` grade `k + 1` plus whatever the
/// potential coefficients carry; all `hbar` grades are zero, which is
/// enforced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalToaSeries {
    pub series: PhaseSpaceSeries,
    pub k_max: u32,
}

pub fn local_toa_series(v: &PolynomialPotential, k_max: u32) -> Result<ClassicalToaSeries> {
    for (s, a) in v.iter() {
        if a.hbar_exp() != 0 {
            return Err(Error::InvalidInput(format!(
                "potential coefficient a_{s} carries hbar grade {}; the local expansion is classical",
                a.hbar_exp()
            )));
        }
    }
    // Terms of T_k as (q_pow, p_inv) -> coefficient.
    let mut level: BTreeMap<(u32, u32), GradedScalar> = BTreeMap::new();
    level.insert(
        (1, 1),
        GradedScalar::rational(-1, 1).grade_shifted(1, 0),
    );
    let mut out = PhaseSpaceSeries::new();
    let mut sign = Rat::one();
    for _ in 0..=k_max {
        for ((q_pow, p_inv), c) in &level {
            let signed = c.scale(&sign);
            out.add_regular(
                RegularKey {
                    p_inv: *p_inv,
                    q_pow: *q_pow,
                    hbar: signed.hbar_exp(),
                    mu: signed.mu_exp(),
                },
                signed.value().clone(),
            );
        }
        sign = -sign;
        let mut next: BTreeMap<(u32, u32), GradedScalar> = BTreeMap::new();
        for ((q_pow, p_inv), c) in &level {
            // d/dp then * V'(x), integrate x from q to 0, then * mu/p.
            let dp = c.scale(&Rat::from(BigInt::from(-i64::from(*p_inv))));
            for (s, a_s) in v.iter() {
                let vprime = a_s.scale(&Rat::from(BigInt::from(s)));
                let e = q_pow + s - 1;
                let integrated = (&dp * &vprime).scale(&Rat::new(
                    BigInt::from(-1),
                    BigInt::from(e + 1),
                ));
                let term = integrated.grade_shifted(1, 0);
                let key = (e + 1, p_inv + 2);
                let entry = match next.remove(&key) {
                    Some(existing) => &existing + &term,
                    None => term,
                };
                if !entry.is_zero() {
                    next.insert(key, entry);
                }
            }
        }
        level = next;
        if level.is_empty() {
            break;
        }
    }
    Ok(ClassicalToaSeries {
        series: out,
        k_max,
    })
}

/// Binomial expansion of `H^(-N)` for `H = p^2/(2 mu) + V(q)`:
///
/// ```text
/// H^(-N) = (2 mu / p^2)^N sum_k (-1)^k (Gamma(N+k) / (k! Gamma(N)))
///          (2 mu / p^2)^k V(q)^k
/// ```
///
/// truncated at `k = j_max`.  The Gamma ratio is the integer Pochhammer
/// product `N (N+1) ... (N+k-1)`, kept exact.
pub fn inverse_hamiltonian_series(
    v: &PolynomialPotential,
    n: u32,
    j_max: u32,
) -> PhaseSpaceSeries {
    assert!(n >= 1, "inverse power N must be >= 1");
    let mut out = PhaseSpaceSeries::new();
    for k in 0..=j_max {
        let mut pochhammer = BigInt::one();
        for r in 0..k {
            pochhammer *= BigInt::from(n + r);
        }
        let mut rational = Rat::new(pochhammer, factorial(k));
        rational *= Rat::from(BigInt::from(2).pow(n + k));
        if k % 2 == 1 {
            rational = -rational;
        }
        for (deg, c) in v.pow_coeffs(k) {
            out.add_regular(
                RegularKey {
                    p_inv: 2 * (n + k),
                    q_pow: deg,
                    hbar: c.hbar_exp(),
                    mu: c.mu_exp() + i64::from(n + k),
                },
                c.value().scale(&rational),
            );
        }
    }
    out
}

fn weight_to_json(w: PieceWeight) -> &'static str {
    w.tag()
}

impl Serialize for PhaseSpaceSeries {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct RegularRecord<'a> {
            q: u32,
            p_inv: u32,
            hbar: i64,
            mu: i64,
            re: &'a str,
            im: &'a str,
        }
        #[derive(Serialize)]
        struct DeltaRecord<'a> {
            q: u32,
            order: u32,
            weight: &'a str,
            hbar: i64,
            mu: i64,
            re: &'a str,
            im: &'a str,
        }
        let regular_strings: Vec<(String, String, &RegularKey)> = self
            .regular
            .iter()
            .map(|(k, v)| (rational_string(&v.re), rational_string(&v.im), k))
            .collect();
        let delta_strings: Vec<(String, String, &DeltaKey)> = self
            .delta
            .iter()
            .map(|(k, v)| (rational_string(&v.re), rational_string(&v.im), k))
            .collect();
        let mut s = serializer.serialize_struct("PhaseSpaceSeries", 2)?;
        let regular: Vec<RegularRecord> = regular_strings
            .iter()
            .map(|(re, im, k)| RegularRecord {
                q: k.q_pow,
                p_inv: k.p_inv,
                hbar: k.hbar,
                mu: k.mu,
                re,
                im,
            })
            .collect();
        s.serialize_field("regular", &regular)?;
        let delta: Vec<DeltaRecord> = delta_strings
            .iter()
            .map(|(re, im, k)| DeltaRecord {
                q: k.q_pow,
                order: k.order,
                weight: weight_to_json(k.weight),
                hbar: k.hbar,
                mu: k.mu,
                re,
                im,
            })
            .collect();
        s.serialize_field("delta", &delta)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for PhaseSpaceSeries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct RegularRecord {
            q: u32,
            p_inv: u32,
            hbar: i64,
            mu: i64,
            re: String,
            im: String,
        }
        #[derive(Deserialize)]
        struct DeltaRecord {
            q: u32,
            order: u32,
            weight: String,
            hbar: i64,
            mu: i64,
            re: String,
            im: String,
        }
        #[derive(Deserialize)]
        struct Wire {
            #[serde(default)]
            regular: Vec<RegularRecord>,
            #[serde(default)]
            delta: Vec<DeltaRecord>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let mut out = PhaseSpaceSeries::new();
        for r in wire.regular {
            if r.p_inv < 1 {
                return Err(D::Error::custom("regular term needs p_inv >= 1"));
            }
            let value = GaussianRational::new(
                parse_rational(&r.re).map_err(D::Error::custom)?,
                parse_rational(&r.im).map_err(D::Error::custom)?,
            );
            out.add_regular(
                RegularKey {
                    p_inv: r.p_inv,
                    q_pow: r.q,
                    hbar: r.hbar,
                    mu: r.mu,
                },
                value,
            );
        }
        for d in wire.delta {
            let weight = PieceWeight::from_tag(&d.weight)
                .ok_or_else(|| D::Error::custom(format!("unknown weight tag {:?}", d.weight)))?;
            let value = GaussianRational::new(
                parse_rational(&d.re).map_err(D::Error::custom)?,
                parse_rational(&d.im).map_err(D::Error::custom)?,
            );
            out.add_delta(
                DeltaKey {
                    order: d.order,
                    q_pow: d.q,
                    weight,
                    hbar: d.hbar,
                    mu: d.mu,
                },
                value,
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ShiftSpec;
    use crate::frobenius::solve_tke;
    use crate::scalar::rat;
    use crate::series::KernelSeries;

    fn reg(p_inv: u32, q_pow: u32, hbar: i64, mu: i64) -> RegularKey {
        RegularKey {
            p_inv,
            q_pow,
            hbar,
            mu,
        }
    }

    #[test]
    fn weyl_of_free_toa_kernel() {
        let t = KernelSeries::from_terms(20, [(1, 0, GradedScalar::rational(1, 4))]).unwrap();
        let w = weyl_transform_sgn(&t);
        assert_eq!(w.regular_len(), 1);
        assert_eq!(w.delta_len(), 0);
        let value = w.regular_coeff(&reg(1, 1, 0, 1)).unwrap();
        assert_eq!(value, &GaussianRational::from_rat(rat(-1, 1)));
    }

    #[test]
    fn weyl_of_shift_monomial() {
        // -i beta v  ->  2 beta mu hbar / p^2, with beta = 1.
        let t = KernelSeries::from_terms(1, [(0, 1, GradedScalar::imaginary(-1, 1))]).unwrap();
        let w = weyl_transform_sgn(&t);
        let value = w.regular_coeff(&reg(2, 0, 1, 1)).unwrap();
        assert_eq!(value, &GaussianRational::from_rat(rat(2, 1)));
    }

    #[test]
    fn weyl_of_quadratic_axis_term() {
        // (lambda/4) v^2 -> lambda mu hbar^2 / p^3, with lambda = 1.
        let t = KernelSeries::from_terms(2, [(0, 2, GradedScalar::rational(1, 4))]).unwrap();
        let w = weyl_transform_sgn(&t);
        let value = w.regular_coeff(&reg(3, 0, 2, 1)).unwrap();
        assert_eq!(value, &GaussianRational::from_rat(rat(1, 1)));
    }

    #[test]
    fn local_toa_free_particle() {
        let t = local_toa_series(&PolynomialPotential::free(), 5).unwrap();
        assert_eq!(t.series.regular_len(), 1);
        let value = t.series.regular_coeff(&reg(1, 1, 0, 1)).unwrap();
        assert_eq!(value, &GaussianRational::from_rat(rat(-1, 1)));
    }

    #[test]
    fn local_toa_linear_first_correction() {
        // V = a q: t = -mu q / p + mu^2 a q^2 / (2 p^3) + ...
        let v = PolynomialPotential::linear(GradedScalar::rational(3, 1));
        let t = local_toa_series(&v, 1).unwrap();
        let leading = t.series.regular_coeff(&reg(1, 1, 0, 1)).unwrap();
        assert_eq!(leading, &GaussianRational::from_rat(rat(-1, 1)));
        let correction = t.series.regular_coeff(&reg(3, 2, 0, 2)).unwrap();
        assert_eq!(correction, &GaussianRational::from_rat(rat(3, 2)));
    }

    #[test]
    fn local_toa_harmonic_closed_form() {
        // t = -sum_j ((-1)^j / (2j+1)) mu^(2j+1) omega^(2j) q^(2j+1) p^-(2j+1).
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let t = local_toa_series(&v, 3).unwrap();
        assert_eq!(t.series.regular_len(), 4);
        for j in 0i64..=3 {
            let key = reg(2 * j as u32 + 1, 2 * j as u32 + 1, 0, 2 * j + 1);
            let value = t.series.regular_coeff(&key).unwrap();
            let sign = if j % 2 == 0 { -1 } else { 1 };
            assert_eq!(value, &GaussianRational::from_rat(rat(sign, 2 * j + 1)));
        }
    }

    #[test]
    fn inverse_hamiltonian_free_particle() {
        let w = inverse_hamiltonian_series(&PolynomialPotential::free(), 1, 6);
        assert_eq!(w.regular_len(), 1);
        assert_eq!(
            w.regular_coeff(&reg(2, 0, 0, 1)).unwrap(),
            &GaussianRational::from_rat(rat(2, 1))
        );
        let w2 = inverse_hamiltonian_series(&PolynomialPotential::free(), 2, 3);
        assert_eq!(
            w2.regular_coeff(&reg(4, 0, 0, 2)).unwrap(),
            &GaussianRational::from_rat(rat(4, 1))
        );
    }

    #[test]
    fn inverse_hamiltonian_harmonic_terms() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let w = inverse_hamiltonian_series(&v, 1, 4);
        // k-th term: (2 mu/p^2) (-1)^k (mu^2 omega^2 q^2 / p^2)^k.
        assert_eq!(
            w.regular_coeff(&reg(2, 0, 0, 1)).unwrap(),
            &GaussianRational::from_rat(rat(2, 1))
        );
        assert_eq!(
            w.regular_coeff(&reg(4, 2, 0, 3)).unwrap(),
            &GaussianRational::from_rat(rat(-2, 1))
        );
        assert_eq!(
            w.regular_coeff(&reg(6, 4, 0, 5)).unwrap(),
            &GaussianRational::from_rat(rat(2, 1))
        );
        // N = 2, k = 1: -2 (2 mu/p^2)^3 (mu omega^2 q^2 / 2) = -8 mu^4 omega^2 q^2 / p^6.
        let w2 = inverse_hamiltonian_series(&v, 2, 2);
        assert_eq!(
            w2.regular_coeff(&reg(6, 2, 0, 4)).unwrap(),
            &GaussianRational::from_rat(rat(-8, 1))
        );
    }

    #[test]
    fn classical_limit_splits_grades() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let shift = ShiftSpec::new(1, rat(1, 1)).unwrap().expand();
        let t = solve_tke(&v, &shift, 13).unwrap();
        let w = weyl_transform_sgn(&t);
        let split = w.classical_limit().unwrap();
        assert!(!split.classical.is_empty());
        assert!(!split.corrections.is_empty());
        for (key, _) in split.classical.regular_iter() {
            assert_eq!(key.hbar, 0);
        }
        for (key, _) in split.corrections.regular_iter() {
            assert!(key.hbar > 0);
        }
        // The hbar^0 part is the local time-of-arrival series on the shared
        // p-inverse range.
        let local = local_toa_series(&v, 3).unwrap().series;
        assert_eq!(
            split.classical.restrict_p_inv(7),
            local.restrict_p_inv(7)
        );
    }

    #[test]
    fn classical_limit_rejects_negative_grades() {
        let t = KernelSeries::from_terms(
            1,
            [(1, 0, GradedScalar::rational(1, 4).grade_shifted(0, -1))],
        )
        .unwrap();
        let w = weyl_transform_sgn(&t);
        match w.classical_limit() {
            Err(Error::NegativeHbarGrade { grade: -1 }) => {}
            other => panic!("expected negative-grade error, got {other:?}"),
        }
    }

    #[test]
    fn grade_separation_of_shift_solutions() {
        // TOA branch sits at Weyl grade 0, the N-shift branch at 2N-1, and
        // recurrence corrections at higher odd grades.
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        for n in 1u32..=2 {
            let bc = ShiftSpec::new(n, rat(1, 1)).unwrap().expand();
            let t = solve_tke(&v, &bc, 15).unwrap();
            let w = weyl_transform_sgn(&t);
            for grade in w.hbar_grades() {
                assert!(
                    grade == 0 || (grade >= i64::from(2 * n - 1) && grade % 2 == 1),
                    "unexpected Weyl grade {grade} for N = {n}"
                );
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let t = KernelSeries::from_terms(1, [(0, 1, GradedScalar::imaginary(-1, 1))]).unwrap();
        let w = weyl_transform_sgn(&t);
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(
            json,
            r#"{"regular":[{"q":0,"p_inv":2,"hbar":1,"mu":1,"re":"2/1","im":"0/1"}],"delta":[]}"#
        );
        let back: PhaseSpaceSeries = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
