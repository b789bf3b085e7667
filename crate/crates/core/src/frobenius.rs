//! Frobenius solution of the time kernel equation.
//!
//! In the rotated coordinates the equation reads
//! `-(2 hbar^2 / mu) d^2 T/du dv + DV(u, v) T = 0`, with
//! `DV(u, v) = V((u+v)/2) - V((u-v)/2)`.  Writing
//! `T = sum alpha_(m,n) u^m v^n` and matching the coefficient of
//! `u^(m-1) v^(n-1)` gives the interior recurrence
//!
//! ```text
//! alpha_(m,n) = (mu / (2 hbar^2)) (1 / (m n))
//!               * sum_(a,b) [DV]_(a,b) alpha_(m-1-a, n-1-b)
//! ```
//!
//! (`m, n >= 1`, terms with negative indices absent).  Every application
//! multiplies by `mu / (2 hbar^2)`, lowering the `hbar` grade by 2 and
//! raising the `mu` grade by 1 beyond whatever grades the potential
//! coefficients carry; the grade bookkeeping in [`GradedScalar`] tracks this
//! automatically.  The axis coefficients `alpha_(m,0)`, `alpha_(0,k)` are the
//! boundary data and seed the recurrence.

use crate::boundary::{boundary_to_axis_coefficients, BoundaryConditionSpec};
use crate::potential::PolynomialPotential;
use crate::scalar::{rat, GradedScalar};
use crate::series::{potential_difference_expand, BivariatePolynomial, KernelSeries, TermKey};
use crate::Result;

/// Solves the Goursat problem to total degree `order`, exactly.
///
/// The returned series is complete for every total degree `m + n <= order`:
/// each interior coefficient there is fully determined by strictly
/// lower-degree data, which the degree-ascending sweep has already fixed.
pub fn solve_tke(
    v: &PolynomialPotential,
    bc: &BoundaryConditionSpec,
    order: u32,
) -> Result<KernelSeries> {
    let axes = boundary_to_axis_coefficients(bc);
    let mut series = KernelSeries::new(order);
    for (m, c) in &axes.row {
        if *m <= order {
            series.merge(*m, 0, c.clone())?;
        }
    }
    for (k, c) in &axes.column {
        if *k <= order {
            series.merge(0, *k, c.clone())?;
        }
    }
    if v.is_free() {
        return Ok(series);
    }
    let dv: Vec<(u32, u32, GradedScalar)> = potential_difference_expand(v, v.max_degree())
        .iter()
        .map(|(key, c)| (key.m, key.n, c.clone()))
        .collect();
    for d in 2..=order {
        for m in 1..d {
            let n = d - m;
            let mut contributions: Vec<GradedScalar> = Vec::new();
            for (a, b, w) in &dv {
                if a + 1 > m || b + 1 > n {
                    continue;
                }
                for alpha in series.grades_at(m - 1 - a, n - 1 - b) {
                    contributions.push(w * alpha);
                }
            }
            if contributions.is_empty() {
                continue;
            }
            let scale = rat(1, 2 * i64::from(m) * i64::from(n));
            for term in contributions {
                series.merge(m, n, term.scale(&scale).grade_shifted(1, -2))?;
            }
        }
    }
    Ok(series)
}

/// Exact residual `-(2 hbar^2 / mu) d^2 T/du dv + DV * T`.
///
/// For a series solved to order `K` the residual vanishes for every total
/// degree `<= K - max(2, deg V)`; what remains is truncation boundary
/// content, sourced by coefficients beyond `K` that the series does not
/// hold.
pub fn tke_residual(t: &KernelSeries, v: &PolynomialPotential) -> Result<BivariatePolynomial> {
    let mut terms: Vec<(u32, u32, GradedScalar)> = Vec::new();
    for (key, c) in t.iter() {
        if key.m >= 1 && key.n >= 1 {
            let factor = rat(-2 * i64::from(key.m) * i64::from(key.n), 1);
            terms.push((key.m - 1, key.n - 1, c.scale(&factor).grade_shifted(-1, 2)));
        }
    }
    let dv = potential_difference_expand(v, v.max_degree());
    for (dk, w) in dv.iter() {
        for (tk, c) in t.iter() {
            terms.push((dk.m + tk.m, dk.n + tk.n, w * c));
        }
    }
    BivariatePolynomial::from_terms(terms)
}

/// Outcome of the conjugacy test on the diagonal boundary.
///
/// A kernel is canonically conjugate exactly when
/// `sum_m alpha_(m,0) 2^(m+1) m q^(m-1) = 1`, i.e. the `v = 0` axis is
/// `u/4 + c`: the `u^1` coefficient is `1/4` at grade `(0, 0)` and no
/// higher axis power survives.  The constant `c` at `(0, 0)` is
/// unconstrained (its `m`-weighted contribution drops out).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConjugacyReport {
    pub conjugate: bool,
    /// Value of the conjugacy sum's constant term, `4 * alpha_(1,0)`;
    /// equals 1 for conjugate kernels and 0 for commutant-only ones.
    pub diagonal_constant: GradedScalar,
    /// Axis terms that break conjugacy: wrong-grade or wrong-value `u^1`
    /// coefficients and every `u^m, m >= 2` axis term.
    pub violations: Vec<(TermKey, GradedScalar)>,
}

pub fn conjugacy_check(t: &KernelSeries) -> ConjugacyReport {
    let quarter = GradedScalar::rational(1, 4);
    let mut diagonal_constant = GradedScalar::zero();
    let mut violations = Vec::new();
    for (key, c) in t.iter() {
        if key.n != 0 || key.m == 0 {
            continue;
        }
        if key.m == 1 && key.hbar == 0 {
            diagonal_constant = c.scale(&rat(4, 1));
            if c != &quarter {
                violations.push((*key, c.clone()));
            }
        } else {
            violations.push((*key, c.clone()));
        }
    }
    ConjugacyReport {
        conjugate: diagonal_constant == GradedScalar::one() && violations.is_empty(),
        diagonal_constant,
        violations,
    }
}

/// Coefficient-level symmetry classification of a kernel series.
///
/// With the `sgn(q - q')` factor of the full kernel taken into account,
/// Hermiticity of the operator is equivalent to
/// `conj(alpha_(m,n)) (-1)^n = alpha_(m,n)` (real coefficients on even `n`,
/// purely imaginary on odd `n`), and time-reversal symmetry to all
/// coefficients being real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryClass {
    pub hermitian: bool,
    pub time_reversal: bool,
}

pub fn classify_symmetry(t: &KernelSeries) -> SymmetryClass {
    let mut hermitian = true;
    let mut time_reversal = true;
    for (key, c) in t.iter() {
        if key.n % 2 == 0 {
            hermitian &= c.is_real();
        } else {
            hermitian &= c.is_imaginary();
        }
        time_reversal &= c.is_real();
    }
    SymmetryClass {
        hermitian,
        time_reversal,
    }
}
