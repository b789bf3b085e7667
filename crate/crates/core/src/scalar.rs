//! Graded Gaussian-rational scalars.
//!
//! Every exact coefficient in this crate is a complex number with rational
//! real and imaginary parts (a Gaussian rational), tagged with integer
//! exponents of the physical symbols `mu` (mass) and `hbar`.  A
//! [`GradedScalar`] therefore denotes
//!
//! ```text
//! (re + im i) * mu^mu_exp * hbar^hbar_exp
//! ```
//!
//! Invariants:
//!
//! * rationals are always in lowest terms with a positive denominator (the
//!   underlying `BigRational` maintains this);
//! * the zero scalar is canonical: both parts zero and both grades zero, so
//!   equality of scalars is plain structural equality;
//! * addition is defined only between scalars of equal grade (asserted),
//!   except that the canonical zero acts as the identity for every grade.
//!
//! Multiplication adds grades, which is how `mu/(2 hbar^2)` prefactors and
//! `hbar^(n+1)` Fourier factors stay symbolic all the way through the series
//! algebra.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Arbitrary-precision rational number.
pub type Rat = BigRational;

/// Builds a rational from a numerator/denominator pair of machine integers.
pub fn rat(numer: i64, denom: i64) -> Rat {
    assert!(denom != 0, "rational denominator must be nonzero");
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

/// Formats a rational as `p/q` with the denominator always present.
///
/// The fixed shape keeps serialized artifacts byte-stable; `5` and `5/1`
/// would otherwise alternate depending on how a value was produced.
pub fn rational_string(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Parses a rational from `p/q` or bare integer `p` form.
pub fn parse_rational(text: &str) -> Result<Rat, String> {
    let trimmed = text.trim();
    let (numer, denom) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (trimmed, None),
    };
    let n: BigInt = numer
        .parse()
        .map_err(|_| format!("invalid rational numerator {trimmed:?}"))?;
    let d: BigInt = match denom {
        Some(d) => d
            .parse()
            .map_err(|_| format!("invalid rational denominator {trimmed:?}"))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(format!("zero denominator in rational {trimmed:?}"));
    }
    Ok(Rat::new(n, d))
}

/// Exact binomial coefficient `C(n, k)`.
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for r in 0..k {
        acc = acc * BigInt::from(n - r) / BigInt::from(r + 1);
    }
    acc
}

/// Exact factorial `n!`.
pub fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for r in 2..=n {
        acc *= BigInt::from(r);
    }
    acc
}

/// Complex number with rational parts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GaussianRational {
    pub re: Rat,
    pub im: Rat,
}

impl GaussianRational {
    pub fn new(re: Rat, im: Rat) -> Self {
        Self { re, im }
    }

    pub fn zero() -> Self {
        Self::new(Rat::zero(), Rat::zero())
    }

    pub fn one() -> Self {
        Self::new(Rat::one(), Rat::zero())
    }

    pub fn from_rat(re: Rat) -> Self {
        Self::new(re, Rat::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_imaginary(&self) -> bool {
        self.re.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -self.im.clone())
    }

    pub fn scale(&self, factor: &Rat) -> Self {
        Self::new(&self.re * factor, &self.im * factor)
    }

    /// Multiplies by `i^k` for any integer `k` (negative powers allowed).
    pub fn mul_i_pow(&self, k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => self.clone(),
            1 => Self::new(-self.im.clone(), self.re.clone()),
            2 => Self::new(-self.re.clone(), -self.im.clone()),
            3 => Self::new(self.im.clone(), -self.re.clone()),
            _ => unreachable!(),
        }
    }

    /// `|re| + |im|`, an exact upper bound on the modulus used by the
    /// convergence-bound plumbing.
    pub fn one_norm(&self) -> Rat {
        self.re.abs() + self.im.abs()
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

impl Add for &GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub for &GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul for &GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(-self.re.clone(), -self.im.clone())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            write!(f, "{}i", self.im)
        } else if self.im.is_negative() {
            write!(f, "({}{}i)", self.re, self.im)
        } else {
            write!(f, "({}+{}i)", self.re, self.im)
        }
    }
}

/// Gaussian rational with `mu` and `hbar` grades.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GradedScalar {
    value: GaussianRational,
    mu_exp: i64,
    hbar_exp: i64,
}

impl GradedScalar {
    /// Builds a scalar, canonicalizing zero to grade `(0, 0)`.
    pub fn new(value: GaussianRational, mu_exp: i64, hbar_exp: i64) -> Self {
        if value.is_zero() {
            Self::zero()
        } else {
            Self {
                value,
                mu_exp,
                hbar_exp,
            }
        }
    }

    pub fn zero() -> Self {
        Self {
            value: GaussianRational::zero(),
            mu_exp: 0,
            hbar_exp: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            value: GaussianRational::one(),
            mu_exp: 0,
            hbar_exp: 0,
        }
    }

    /// Grade-`(0,0)` real scalar.
    pub fn from_rat(re: Rat) -> Self {
        Self::new(GaussianRational::from_rat(re), 0, 0)
    }

    /// Grade-`(0,0)` real scalar `numer/denom`.
    pub fn rational(numer: i64, denom: i64) -> Self {
        Self::from_rat(rat(numer, denom))
    }

    /// Grade-`(0,0)` purely imaginary scalar `(numer/denom) i`.
    pub fn imaginary(numer: i64, denom: i64) -> Self {
        Self::new(GaussianRational::new(Rat::zero(), rat(numer, denom)), 0, 0)
    }

    pub fn value(&self) -> &GaussianRational {
        &self.value
    }

    pub fn re(&self) -> &Rat {
        &self.value.re
    }

    pub fn im(&self) -> &Rat {
        &self.value.im
    }

    pub fn mu_exp(&self) -> i64 {
        self.mu_exp
    }

    pub fn hbar_exp(&self) -> i64 {
        self.hbar_exp
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.value.is_real()
    }

    pub fn is_imaginary(&self) -> bool {
        self.value.is_imaginary()
    }

    /// Complex conjugate; `mu` and `hbar` are real symbols, so only the
    /// Gaussian-rational part changes.
    pub fn conj(&self) -> Self {
        Self::new(self.value.conj(), self.mu_exp, self.hbar_exp)
    }

    /// Shifts the grades without touching the numeric part (multiplication by
    /// `mu^dmu hbar^dhbar`).  No-op on the canonical zero.
    pub fn grade_shifted(&self, dmu: i64, dhbar: i64) -> Self {
        Self::new(self.value.clone(), self.mu_exp + dmu, self.hbar_exp + dhbar)
    }

    pub fn scale(&self, factor: &Rat) -> Self {
        Self::new(self.value.scale(factor), self.mu_exp, self.hbar_exp)
    }

    pub fn mul_i_pow(&self, k: i64) -> Self {
        Self::new(self.value.mul_i_pow(k), self.mu_exp, self.hbar_exp)
    }

    /// Substitutes numeric values for `mu` and `hbar`.
    pub fn eval(&self, mu: f64, hbar: f64) -> Complex64 {
        let scale = mu.powi(self.mu_exp as i32) * hbar.powi(self.hbar_exp as i32);
        self.value.to_complex64() * scale
    }
}

impl Add for &GradedScalar {
    type Output = GradedScalar;

    /// Adds two scalars of equal grade.  The canonical zero is an identity
    /// for every grade; any other grade mismatch is a caller bug.
    fn add(self, rhs: &GradedScalar) -> GradedScalar {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        assert!(
            self.mu_exp == rhs.mu_exp && self.hbar_exp == rhs.hbar_exp,
            "grade mismatch in addition: (mu^{} hbar^{}) vs (mu^{} hbar^{})",
            self.mu_exp,
            self.hbar_exp,
            rhs.mu_exp,
            rhs.hbar_exp,
        );
        GradedScalar::new(&self.value + &rhs.value, self.mu_exp, self.hbar_exp)
    }
}

impl Sub for &GradedScalar {
    type Output = GradedScalar;
    fn sub(self, rhs: &GradedScalar) -> GradedScalar {
        self + &(-rhs)
    }
}

impl Mul for &GradedScalar {
    type Output = GradedScalar;
    fn mul(self, rhs: &GradedScalar) -> GradedScalar {
        GradedScalar::new(
            &self.value * &rhs.value,
            self.mu_exp + rhs.mu_exp,
            self.hbar_exp + rhs.hbar_exp,
        )
    }
}

impl Neg for &GradedScalar {
    type Output = GradedScalar;
    fn neg(self) -> GradedScalar {
        GradedScalar::new(-&self.value, self.mu_exp, self.hbar_exp)
    }
}

impl fmt::Display for GradedScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        if self.mu_exp != 0 {
            write!(f, " mu^{}", self.mu_exp)?;
        }
        if self.hbar_exp != 0 {
            write!(f, " hbar^{}", self.hbar_exp)?;
        }
        Ok(())
    }
}

impl Serialize for GradedScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("GradedScalar", 4)?;
        s.serialize_field("re", &rational_string(self.re()))?;
        s.serialize_field("im", &rational_string(self.im()))?;
        s.serialize_field("mu", &self.mu_exp)?;
        s.serialize_field("hbar", &self.hbar_exp)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for GradedScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ScalarVisitor;

        impl<'de> Visitor<'de> for ScalarVisitor {
            type Value = GradedScalar;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a scalar object {re, im, mu, hbar}")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Self::Value, A::Error> {
                let mut re: Option<String> = None;
                let mut im: Option<String> = None;
                let mut mu: Option<i64> = None;
                let mut hbar: Option<i64> = None;
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "re" => re = Some(map.next_value()?),
                        "im" => im = Some(map.next_value()?),
                        "mu" => mu = Some(map.next_value()?),
                        "hbar" => hbar = Some(map.next_value()?),
                        other => {
                            return Err(de::Error::unknown_field(
                                other,
                                &["re", "im", "mu", "hbar"],
                            ))
                        }
                    }
                }
                let re = parse_rational(&re.ok_or_else(|| de::Error::missing_field("re"))?)
                    .map_err(de::Error::custom)?;
                let im = parse_rational(&im.unwrap_or_else(|| "0".into()))
                    .map_err(de::Error::custom)?;
                Ok(GradedScalar::new(
                    GaussianRational::new(re, im),
                    mu.unwrap_or(0),
                    hbar.unwrap_or(0),
                ))
            }
        }

        deserializer.deserialize_map(ScalarVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gs(re_n: i64, re_d: i64, im_n: i64, im_d: i64, mu: i64, hbar: i64) -> GradedScalar {
        GradedScalar::new(GaussianRational::new(rat(re_n, re_d), rat(im_n, im_d)), mu, hbar)
    }

    #[test]
    fn zero_is_canonical() {
        let z = gs(1, 2, 0, 1, 3, -2);
        let sum = &z + &(-&z);
        assert_eq!(sum, GradedScalar::zero());
        assert_eq!(sum.mu_exp(), 0);
        assert_eq!(sum.hbar_exp(), 0);
    }

    #[test]
    fn zero_adds_across_grades() {
        let x = gs(2, 3, -1, 5, 1, -2);
        assert_eq!(&GradedScalar::zero() + &x, x);
        assert_eq!(&x + &GradedScalar::zero(), x);
    }

    #[test]
    #[should_panic(expected = "grade mismatch")]
    fn mismatched_grades_panic() {
        let _ = &gs(1, 1, 0, 1, 1, 0) + &gs(1, 1, 0, 1, 0, 1);
    }

    #[test]
    fn multiplication_adds_grades() {
        let a = gs(1, 2, 1, 3, 1, -2);
        let b = gs(2, 1, 0, 1, 2, 1);
        let p = &a * &b;
        assert_eq!(p.mu_exp(), 3);
        assert_eq!(p.hbar_exp(), -1);
        assert_eq!(p.re(), &rat(1, 1));
        assert_eq!(p.im(), &rat(2, 3));
    }

    #[test]
    fn i_powers_cycle() {
        let one = GradedScalar::one();
        assert_eq!(one.mul_i_pow(1), GradedScalar::imaginary(1, 1));
        assert_eq!(one.mul_i_pow(2), GradedScalar::rational(-1, 1));
        assert_eq!(one.mul_i_pow(-1), GradedScalar::imaginary(-1, 1));
        assert_eq!(one.mul_i_pow(6), GradedScalar::rational(-1, 1));
    }

    #[test]
    fn eval_substitutes_grades() {
        let x = gs(3, 4, 0, 1, 2, -1);
        let v = x.eval(2.0, 4.0);
        assert_eq!(v.re, 0.75 * 4.0 / 4.0);
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn rational_strings_round_trip() {
        for text in ["1/4", "-3/7", "0/1", "5/1"] {
            let parsed = parse_rational(text).unwrap();
            assert_eq!(rational_string(&parsed), text);
        }
        assert_eq!(parse_rational("6").unwrap(), rat(6, 1));
        assert_eq!(parse_rational("-4/6").unwrap(), rat(-2, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("a/b").is_err());
    }

    #[test]
    fn serde_round_trip_is_byte_stable() {
        let x = gs(-5, 6, 7, 8, -2, 3);
        let json = serde_json::to_string(&x).unwrap();
        assert_eq!(json, r#"{"re":"-5/6","im":"7/8","mu":-2,"hbar":3}"#);
        let back: GradedScalar = serde_json::from_str(&json).unwrap();
        assert_eq!(back, x);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn binomial_and_factorial() {
        assert_eq!(binomial(4, 2), BigInt::from(6));
        assert_eq!(binomial(5, 0), BigInt::from(1));
        assert_eq!(binomial(3, 5), BigInt::from(0));
        assert_eq!(factorial(6), BigInt::from(720));
    }

    fn arb_rat() -> impl Strategy<Value = Rat> {
        (-40i64..=40, 1i64..=12).prop_map(|(n, d)| rat(n, d))
    }

    fn arb_value() -> impl Strategy<Value = GaussianRational> {
        (arb_rat(), arb_rat()).prop_map(|(re, im)| GaussianRational::new(re, im))
    }

    proptest! {
        #[test]
        fn gaussian_ring_laws(a in arb_value(), b in arb_value(), c in arb_value()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        }

        #[test]
        fn conjugation_is_multiplicative(a in arb_value(), b in arb_value()) {
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
        }

        #[test]
        fn graded_product_respects_values(a in arb_value(), b in arb_value(),
                                          ga in -3i64..=3, gb in -3i64..=3) {
            let x = GradedScalar::new(a.clone(), ga, -ga);
            let y = GradedScalar::new(b.clone(), gb, 2 * gb);
            let p = &x * &y;
            prop_assert_eq!(p.value(), &(&a * &b));
            if !p.is_zero() {
                prop_assert_eq!(p.mu_exp(), ga + gb);
                prop_assert_eq!(p.hbar_exp(), -ga + 2 * gb);
            }
        }
    }
}
