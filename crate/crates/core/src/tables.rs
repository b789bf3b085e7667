//! Coefficient tables for general-potential shift solutions.
//!
//! For `V(q) = sum_s a_s q^s` the polynomial powers expand as
//! `V(q)^j = j! sum_m C_(m,j) q^m` with
//!
//! ```text
//! C_(m,0) = delta_(m,0),    C_(m,j) = (1/m) sum_(s=1)^m s a_s C_(m-s,j-1)
//! ```
//!
//! and the leading (in `hbar`) coefficients of an order-`N` shift solution
//! have the closed form
//!
//! ```text
//! alpha0_(m,j) = -i^(2N-1) (beta / mu^(2N-2))
//!                * (Gamma(N+1/2) / Gamma(N+1/2+j)) * C_(m,j) / 2^m.
//! ```
//!
//! The same numbers satisfy a first-order recurrence; both routes are
//! computed and compared exactly.  Assembling
//! `sum alpha_(m,2N-1+2j) u^m v^(2N-1+2j)` from the table and taking the
//! Wigner-Weyl transform must reproduce the binomial series of `H^(-N)` up
//! to the fixed scale `beta (2N-1)! 2^(1-N) mu^(3-3N) hbar^(2N-1)`; that
//! cross-check validates the general-potential claim at leading order.

use crate::phase_space::{inverse_hamiltonian_series, weyl_transform_sgn};
use crate::potential::PolynomialPotential;
use crate::scalar::{factorial, parse_rational, rational_string, GaussianRational, GradedScalar, Rat};
use crate::series::KernelSeries;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::de::Error as DeError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Adds two graded scalars, propagating a grade conflict as an error
/// instead of panicking.  Conflicts cannot arise for the potentials treated
/// in scope (each table entry is a homogeneous product of coefficients) but
/// artificial mixed-grade inputs are caught rather than miscombined.
fn add_graded(a: GradedScalar, b: &GradedScalar, context: &str) -> Result<GradedScalar> {
    if a.is_zero() {
        return Ok(b.clone());
    }
    if b.is_zero() {
        return Ok(a);
    }
    if a.mu_exp() != b.mu_exp() || a.hbar_exp() != b.hbar_exp() {
        return Err(Error::ConsistencyFailure(format!(
            "{context}: grade conflict between ({}, {}) and ({}, {})",
            a.mu_exp(),
            a.hbar_exp(),
            b.mu_exp(),
            b.hbar_exp()
        )));
    }
    Ok(&a + b)
}

/// Table of the power-expansion coefficients `C_(m,j)` of a potential.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientTable {
    entries: BTreeMap<(u32, u32), GradedScalar>,
    potential: PolynomialPotential,
    m_max: u32,
    j_max: u32,
}

impl CoefficientTable {
    pub fn entry(&self, m: u32, j: u32) -> GradedScalar {
        self.entries
            .get(&(m, j))
            .cloned()
            .unwrap_or_else(GradedScalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &GradedScalar)> {
        self.entries.iter()
    }

    pub fn potential(&self) -> &PolynomialPotential {
        &self.potential
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }
}

/// Builds the `C_(m,j)` table for `m <= m_max`, `j <= j_max` by the
/// first-order recurrence.
pub fn build_c_table(
    v: &PolynomialPotential,
    m_max: u32,
    j_max: u32,
) -> Result<CoefficientTable> {
    let mut entries: BTreeMap<(u32, u32), GradedScalar> = BTreeMap::new();
    entries.insert((0, 0), GradedScalar::one());
    for j in 1..=j_max {
        for m in 1..=m_max {
            let mut acc = GradedScalar::zero();
            for (s, a_s) in v.iter() {
                if s > m {
                    break;
                }
                let prev = match entries.get(&(m - s, j - 1)) {
                    Some(c) => c,
                    None => continue,
                };
                let term = (prev * a_s).scale(&Rat::from(BigInt::from(s)));
                acc = add_graded(acc, &term, "C-table recurrence")?;
            }
            let value = acc.scale(&Rat::new(BigInt::one(), BigInt::from(m)));
            if !value.is_zero() {
                entries.insert((m, j), value);
            }
        }
    }
    Ok(CoefficientTable {
        entries,
        potential: v.clone(),
        m_max,
        j_max,
    })
}

/// Result of checking `k! sum_m C_(m,k) q^m = V(q)^k` against brute-force
/// polynomial powers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PowerIdentityReport {
    pub holds: bool,
    /// One-norm of the worst coefficient mismatch (0 when the identity
    /// holds).
    pub max_discrepancy: String,
    pub worst_entry: Option<(u32, u32)>,
}

/// Verifies the power identity for every `k <= k_max` through degree
/// `m_max`, with the right-hand side computed by repeated polynomial
/// multiplication (an independent oracle for the recurrence).
pub fn power_identity_check(
    v: &PolynomialPotential,
    k_max: u32,
    m_max: u32,
) -> Result<PowerIdentityReport> {
    let table = build_c_table(v, m_max, k_max)?;
    let mut max_discrepancy = Rat::zero();
    let mut worst_entry = None;
    for k in 0..=k_max {
        let factor = Rat::from(factorial(k));
        let brute = v.pow_coeffs(k);
        for m in 0..=m_max {
            let lhs = table.entry(m, k).scale(&factor);
            let rhs = brute.get(&m).cloned().unwrap_or_else(GradedScalar::zero);
            let discrepancy = if lhs.is_zero() || rhs.is_zero() || (lhs.mu_exp(), lhs.hbar_exp()) == (rhs.mu_exp(), rhs.hbar_exp())
            {
                (lhs.value() - rhs.value()).one_norm()
            } else {
                // Grade mismatch: the terms cannot cancel at all.
                lhs.value().one_norm() + rhs.value().one_norm()
            };
            if discrepancy > max_discrepancy {
                max_discrepancy = discrepancy;
                worst_entry = Some((m, k));
            }
        }
    }
    Ok(PowerIdentityReport {
        holds: max_discrepancy.is_zero(),
        max_discrepancy: rational_string(&max_discrepancy),
        worst_entry,
    })
}

/// Leading-order (`s = 0`) coefficients `alpha0_(m,j)` of the order-`N`
/// shift solution with weight `beta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeadingShiftTable {
    entries: BTreeMap<(u32, u32), GradedScalar>,
    potential: PolynomialPotential,
    n: u32,
    beta: Rat,
    m_max: u32,
    j_max: u32,
}

impl LeadingShiftTable {
    pub fn entry(&self, m: u32, j: u32) -> GradedScalar {
        self.entries
            .get(&(m, j))
            .cloned()
            .unwrap_or_else(GradedScalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(u32, u32), &GradedScalar)> {
        self.entries.iter()
    }

    /// Restores the series coefficient `alpha_(m, 2N-1+2j)` at its leading
    /// `hbar` grade: the table stores the `(mu / 2 hbar^2)^j`-stripped
    /// values.
    pub fn full_alpha(&self, m: u32, j: u32) -> GradedScalar {
        self.entry(m, j)
            .scale(&Rat::new(BigInt::one(), BigInt::from(2).pow(j)))
            .grade_shifted(i64::from(j), -2 * i64::from(j))
    }

    /// Assembles `sum_(m,j) alpha_(m,2N-1+2j) u^m v^(2N-1+2j)` as a kernel
    /// series (the leading-grade part of the shift solution).
    pub fn kernel_series(&self) -> Result<KernelSeries> {
        let order = self.m_max + 2 * self.n - 1 + 2 * self.j_max;
        let terms: Vec<(u32, u32, GradedScalar)> = self
            .entries
            .keys()
            .map(|&(m, j)| (m, 2 * self.n - 1 + 2 * j, self.full_alpha(m, j)))
            .collect();
        KernelSeries::from_terms(order, terms)
    }

    pub fn potential(&self) -> &PolynomialPotential {
        &self.potential
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn beta(&self) -> &Rat {
        &self.beta
    }

    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn j_max(&self) -> u32 {
        self.j_max
    }
}

/// Seed value `-i^(2N-1) beta / mu^(2N-2)`.
fn shift_seed(n: u32, beta: &Rat) -> GradedScalar {
    let sign = if n % 2 == 1 { -1 } else { 1 };
    let value = GaussianRational::new(Rat::zero(), beta * Rat::from(BigInt::from(sign)));
    GradedScalar::new(value, -2 * (i64::from(n) - 1), 0)
}

/// Builds the leading-shift table twice — from the closed form through
/// `C_(m,j)` and by direct iteration of the first-order recurrence — and
/// verifies the two agree exactly.
pub fn leading_shift_table(
    v: &PolynomialPotential,
    n: u32,
    beta: &Rat,
    m_max: u32,
    j_max: u32,
) -> Result<LeadingShiftTable> {
    if n < 1 {
        return Err(Error::InvalidInput("shift order N must be >= 1".into()));
    }
    let seed = shift_seed(n, beta);

    // Closed form: seed * 2^j / prod_(r<j)(2N+1+2r) * C_(m,j) / 2^m.
    let c_table = build_c_table(v, m_max, j_max)?;
    let mut closed: BTreeMap<(u32, u32), GradedScalar> = BTreeMap::new();
    let mut gamma_denominator = BigInt::one();
    for j in 0..=j_max {
        if j > 0 {
            gamma_denominator *= BigInt::from(2 * n + 1 + 2 * (j - 1));
        }
        let gamma_ratio = Rat::new(BigInt::from(2).pow(j), gamma_denominator.clone());
        for m in 0..=m_max {
            let c = c_table.entry(m, j);
            if c.is_zero() {
                continue;
            }
            let scale = &gamma_ratio / Rat::from(BigInt::from(2).pow(m));
            closed.insert((m, j), (&seed * &c).scale(&scale));
        }
    }

    // Direct recurrence:
    // alpha0_(m,j) = (1 / (m (2N-1+2j))) sum_(s<=m) (s a_s / 2^(s-1)) alpha0_(m-s,j-1).
    let mut direct: BTreeMap<(u32, u32), GradedScalar> = BTreeMap::new();
    direct.insert((0, 0), seed.clone());
    for j in 1..=j_max {
        for m in 1..=m_max {
            let mut acc = GradedScalar::zero();
            for (s, a_s) in v.iter() {
                if s > m {
                    break;
                }
                let prev = match direct.get(&(m - s, j - 1)) {
                    Some(c) => c,
                    None => continue,
                };
                let weight = Rat::new(
                    BigInt::from(s),
                    BigInt::from(2).pow(s.saturating_sub(1)),
                );
                let term = (prev * a_s).scale(&weight);
                acc = add_graded(acc, &term, "leading-shift recurrence")?;
            }
            let scale = Rat::new(
                BigInt::one(),
                BigInt::from(m) * BigInt::from(2 * n - 1 + 2 * j),
            );
            let value = acc.scale(&scale);
            if !value.is_zero() {
                direct.insert((m, j), value);
            }
        }
    }

    if closed != direct {
        return Err(Error::ConsistencyFailure(
            "closed-form and recurrence leading-shift tables disagree".into(),
        ));
    }
    Ok(LeadingShiftTable {
        entries: closed,
        potential: v.clone(),
        n,
        beta: beta.clone(),
        m_max,
        j_max,
    })
}

/// Cross-checks the table against the inverse-Hamiltonian binomial series:
/// the Wigner-Weyl transform of the assembled leading-grade kernel must
/// equal `beta (2N-1)! 2^(1-N) mu^(3-3N) hbar^(2N-1)` times
/// `inverse_hamiltonian_series(V, N)` through `j <= j_check`.
pub fn leading_shift_ww_check(table: &LeadingShiftTable, j_check: u32) -> Result<bool> {
    if j_check > table.j_max() {
        return Err(Error::InvalidInput(format!(
            "check depth {j_check} exceeds table depth {}",
            table.j_max()
        )));
    }
    let needed = j_check * table.potential().max_degree();
    if table.m_max() < needed {
        return Err(Error::InvalidInput(format!(
            "table m_max {} cannot cover q-degrees up to {needed}",
            table.m_max()
        )));
    }
    let n = table.order();
    let lhs = weyl_transform_sgn(&table.kernel_series()?).restrict_p_inv(2 * (n + j_check));
    let scale = GradedScalar::new(
        GaussianRational::from_rat(
            table.beta() * Rat::new(factorial(2 * n - 1), BigInt::from(2).pow(n - 1)),
        ),
        3 - 3 * i64::from(n),
        2 * i64::from(n) - 1,
    );
    let rhs = inverse_hamiltonian_series(table.potential(), n, j_check)
        .scale_graded(&scale)
        .restrict_p_inv(2 * (n + j_check));
    Ok(lhs == rhs)
}

// --- serde wire formats ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CTableWire {
    potential: PolynomialPotential,
    m_max: u32,
    j_max: u32,
    entries: Vec<(u32, u32, GradedScalar)>,
}

impl Serialize for CoefficientTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CTableWire {
            potential: self.potential.clone(),
            m_max: self.m_max,
            j_max: self.j_max,
            entries: self
                .entries
                .iter()
                .map(|(&(m, j), c)| (m, j, c.clone()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CoefficientTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = CTableWire::deserialize(deserializer)?;
        Ok(CoefficientTable {
            entries: wire
                .entries
                .into_iter()
                .map(|(m, j, c)| ((m, j), c))
                .collect(),
            potential: wire.potential,
            m_max: wire.m_max,
            j_max: wire.j_max,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ShiftTableWire {
    potential: PolynomialPotential,
    #[serde(rename = "N")]
    n: u32,
    beta: String,
    m_max: u32,
    j_max: u32,
    entries: Vec<(u32, u32, GradedScalar)>,
}

impl Serialize for LeadingShiftTable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ShiftTableWire {
            potential: self.potential.clone(),
            n: self.n,
            beta: rational_string(&self.beta),
            m_max: self.m_max,
            j_max: self.j_max,
            entries: self
                .entries
                .iter()
                .map(|(&(m, j), c)| (m, j, c.clone()))
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LeadingShiftTable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ShiftTableWire::deserialize(deserializer)?;
        let beta = parse_rational(&wire.beta).map_err(D::Error::custom)?;
        Ok(LeadingShiftTable {
            entries: wire
                .entries
                .into_iter()
                .map(|(m, j, c)| ((m, j), c))
                .collect(),
            potential: wire.potential,
            n: wire.n,
            beta,
            m_max: wire.m_max,
            j_max: wire.j_max,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ShiftSpec;
    use crate::frobenius::solve_tke;
    use crate::phase_space::RegularKey;
    use crate::scalar::rat;

    #[test]
    fn c_table_axes() {
        let v = PolynomialPotential::from_coeffs([
            (1, GradedScalar::rational(2, 3)),
            (3, GradedScalar::rational(-1, 5)),
        ]);
        let table = build_c_table(&v, 9, 3).unwrap();
        // j = 0 row: delta_(m,0).
        assert_eq!(table.entry(0, 0), GradedScalar::one());
        for m in 1..=9 {
            assert!(table.entry(m, 0).is_zero());
        }
        // j = 1 row: C_(m,1) = a_m.
        assert_eq!(table.entry(1, 1), GradedScalar::rational(2, 3));
        assert!(table.entry(2, 1).is_zero());
        assert_eq!(table.entry(3, 1), GradedScalar::rational(-1, 5));
    }

    #[test]
    fn c_table_linear_square() {
        // V = a q: C_(2,2) = a^2 / 2.
        let v = PolynomialPotential::linear(GradedScalar::rational(3, 7));
        let table = build_c_table(&v, 4, 2).unwrap();
        assert_eq!(table.entry(2, 2), GradedScalar::rational(9, 98));
    }

    #[test]
    fn power_identity_trivial_cases() {
        let v = PolynomialPotential::from_coeffs([
            (1, GradedScalar::rational(1, 2)),
            (2, GradedScalar::rational(-2, 3)),
        ]);
        let report = power_identity_check(&v, 1, 6).unwrap();
        assert!(report.holds);
        assert_eq!(report.max_discrepancy, "0/1");
        assert_eq!(report.worst_entry, None);
    }

    #[test]
    fn power_identity_random_cubics() {
        for seed in [7u64, 42, 1234] {
            let v = PolynomialPotential::random(seed, 3);
            let report = power_identity_check(&v, 5, 15).unwrap();
            assert!(report.holds, "identity failed for seed {seed}");
        }
    }

    #[test]
    fn leading_shift_harmonic_entry() {
        // Harmonic, N = 1: raw (2,1) entry is -i beta mu omega^2 / 12; the
        // grade-restored value is -i beta omega^2 / 24 at grade (2, -2).
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let table = leading_shift_table(&v, 1, &rat(1, 1), 6, 3).unwrap();
        assert_eq!(
            table.entry(2, 1),
            GradedScalar::imaginary(-1, 12).grade_shifted(1, 0)
        );
        assert_eq!(
            table.full_alpha(2, 1),
            GradedScalar::imaginary(-1, 24).grade_shifted(2, -2)
        );
    }

    #[test]
    fn leading_shift_axis_and_free() {
        let v = PolynomialPotential::from_coeffs([
            (1, GradedScalar::rational(1, 3)),
            (2, GradedScalar::rational(1, 2)),
        ]);
        for n in 1u32..=3 {
            let table = leading_shift_table(&v, n, &rat(2, 5), 5, 2).unwrap();
            // j = 0 column: only m = 0 survives, with the seed value.
            assert_eq!(table.entry(0, 0), shift_seed(n, &rat(2, 5)));
            for m in 1..=5 {
                assert!(table.entry(m, 0).is_zero());
            }
        }
        let free = leading_shift_table(&PolynomialPotential::free(), 2, &rat(1, 1), 4, 4).unwrap();
        assert_eq!(free.iter().count(), 1);
        assert_eq!(free.entry(0, 0), shift_seed(2, &rat(1, 1)));
    }

    #[test]
    fn full_solver_reproduces_leading_grades() {
        // The solver's coefficient at the leading (most negative) hbar
        // grade -2j of (m, 2N-1+2j) equals the table entry; the s >= 1
        // corrections sit at grades -2j+2, -2j+4, ...
        let v = PolynomialPotential::from_coeffs([
            (2, GradedScalar::rational(1, 2)),
            (3, GradedScalar::rational(-1, 6)),
        ]);
        let n = 1u32;
        let bc = ShiftSpec::new(n, rat(3, 4)).unwrap().expand();
        let t = solve_tke(&v, &bc, 12).unwrap();
        let table = leading_shift_table(&v, n, &rat(3, 4), 8, 4).unwrap();
        let shift_branch = t.filtered(|key| key.n % 2 == 1);
        for (key, c) in shift_branch.iter() {
            let j = (key.n - (2 * n - 1)) / 2;
            let leading = -2 * i64::from(j);
            if key.hbar == leading {
                assert_eq!(
                    c,
                    &table.full_alpha(key.m, j),
                    "leading coefficient mismatch at ({}, {})",
                    key.m,
                    key.n
                );
            } else {
                assert!(
                    key.hbar > leading && (key.hbar - leading) % 2 == 0,
                    "unexpected grade {} relative to leading {leading} at ({}, {})",
                    key.hbar,
                    key.m,
                    key.n
                );
            }
        }
        // And every nonzero table entry within range is hit.
        for (&(m, j), value) in table.iter() {
            let n_pow = 2 * n - 1 + 2 * j;
            if m + n_pow > 12 {
                continue;
            }
            let expected = table.full_alpha(m, j);
            assert_eq!(
                t.coeff(m, n_pow, expected.hbar_exp()),
                Some(&expected),
                "missing table entry ({m}, {j}) = {value} in solver output"
            );
        }
    }

    #[test]
    fn ww_check_free_and_harmonic() {
        let free = leading_shift_table(&PolynomialPotential::free(), 1, &rat(1, 1), 0, 6).unwrap();
        assert!(leading_shift_ww_check(&free, 6).unwrap());
        // Free N = 1 image is exactly 2 beta mu hbar / p^2.
        let w = weyl_transform_sgn(&free.kernel_series().unwrap());
        assert_eq!(w.regular_len(), 1);
        assert_eq!(
            w.regular_coeff(&RegularKey {
                p_inv: 2,
                q_pow: 0,
                hbar: 1,
                mu: 1
            })
            .unwrap(),
            &GaussianRational::from_rat(rat(2, 1))
        );

        let v = PolynomialPotential::harmonic(&rat(2, 1));
        for n in 1u32..=2 {
            let table = leading_shift_table(&v, n, &rat(1, 3), 12, 6).unwrap();
            assert!(leading_shift_ww_check(&table, 6).unwrap());
        }
    }

    #[test]
    fn ww_check_random_cubic() {
        let v = PolynomialPotential::random(42, 3);
        let table = leading_shift_table(&v, 1, &rat(1, 1), 15, 5).unwrap();
        assert!(leading_shift_ww_check(&table, 5).unwrap());
    }

    #[test]
    fn ww_check_range_validation() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let table = leading_shift_table(&v, 1, &rat(1, 1), 4, 6).unwrap();
        assert!(matches!(
            leading_shift_ww_check(&table, 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn serde_round_trips() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let c = build_c_table(&v, 4, 2).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: CoefficientTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);

        let table = leading_shift_table(&v, 2, &rat(1, 2), 6, 3).unwrap();
        let json = serde_json::to_string(&table).unwrap();
        let back: LeadingShiftTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back, table);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }
}
