//! Distributional solutions of the modified kernel equation.
//!
//! Dropping the assumed `sgn(v)` factor and working with the full kernel
//! directly turns the hyperbolic equation into a distributional one with an
//! `i hbar delta(q - q')` source.  Its solutions live in a small closed
//! family: polynomials in `u` and `v` weighted by `1`, `sgn`, or Heaviside
//! factors.  This module builds the closed-form free and harmonic solutions
//! over that family, classifies their symmetries, verifies the jump
//! condition that encodes the delta source, and computes their phase-space
//! images including the delta terms.
//!
//! The boundary data is a pair of weights `alpha + beta = 1` on the two
//! `v`-half-planes plus locally integrable pieces `f(u)`, `g(v)`; the free
//! solution is
//!
//! ```text
//! K(u, v) = (mu / 2 i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)
//! ```
//!
//! and the harmonic solution dresses each piece with moment integrals
//! `F_s(u) = integral_0^u x F_(s-1)(x) dx` and explicit coefficient ladders.

use crate::phase_space::{DeltaKey, PhaseSpaceSeries, PieceWeight, RegularKey};
use crate::scalar::{factorial, GaussianRational, GradedScalar, Rat};
use crate::series::KernelSeries;
use crate::{Error, Result};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which variable a piecewise term depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolyVar {
    U,
    V,
}

/// One piece `coeff * x^degree * w(x)` with `w` in `{1, sgn, H(+x), H(-x)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseTerm {
    pub var: PolyVar,
    pub degree: u32,
    pub weight: PieceWeight,
    pub coeff: GradedScalar,
}

impl PiecewiseTerm {
    pub fn new(var: PolyVar, degree: u32, weight: PieceWeight, coeff: GradedScalar) -> Self {
        Self {
            var,
            degree,
            weight,
            coeff,
        }
    }

    /// The moment integral `integral_0^x y * term(y) dy`, which stays inside
    /// the family: `x^k w(x)` maps to `x^(k+2) w(x) / (k+2)` for every
    /// weight.
    pub fn moment_integral(&self) -> PiecewiseTerm {
        PiecewiseTerm {
            var: self.var,
            degree: self.degree + 2,
            weight: self.weight,
            coeff: self
                .coeff
                .scale(&Rat::new(BigInt::one(), BigInt::from(self.degree + 2))),
        }
    }

    /// Pointwise value (midpoint convention on the weight at `x = 0`).
    pub fn eval(&self, x: f64, mu: f64, hbar: f64) -> Complex64 {
        self.coeff.eval(mu, hbar) * x.powi(self.degree as i32) * self.weight.eval(x)
    }

    /// One-sided limit: like [`Self::eval`], but at `x = 0` the weight takes
    /// its limit from the positive (`positive = true`) or negative side.
    pub fn eval_one_sided(&self, x: f64, positive: bool, mu: f64, hbar: f64) -> Complex64 {
        if x != 0.0 {
            return self.eval(x, mu, hbar);
        }
        if self.degree > 0 {
            return Complex64::new(0.0, 0.0);
        }
        let weight = match (self.weight, positive) {
            (PieceWeight::One, _) => 1.0,
            (PieceWeight::Sgn, true) => 1.0,
            (PieceWeight::Sgn, false) => -1.0,
            (PieceWeight::HeavisidePlus, true) | (PieceWeight::HeavisideMinus, false) => 1.0,
            _ => 0.0,
        };
        self.coeff.eval(mu, hbar) * weight
    }
}

/// Moment-integral ladder `F_0 .. F_J` (or `G_0 .. G_J`) of a piece list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentFamily {
    levels: Vec<Vec<PiecewiseTerm>>,
}

impl MomentFamily {
    pub fn generate(seed: &[PiecewiseTerm], j_max: u32) -> Self {
        let mut levels = Vec::with_capacity(j_max as usize + 1);
        levels.push(seed.to_vec());
        for _ in 0..j_max {
            let next: Vec<PiecewiseTerm> = levels
                .last()
                .unwrap()
                .iter()
                .map(PiecewiseTerm::moment_integral)
                .collect();
            levels.push(next);
        }
        Self { levels }
    }

    pub fn level(&self, j: u32) -> &[PiecewiseTerm] {
        &self.levels[j as usize]
    }

    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }
}

/// Boundary data of the modified equation: half-plane weights `alpha`,
/// `beta` with `alpha + beta = 1` and piecewise-polynomial `f(u)`, `g(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionBoundary {
    alpha: GradedScalar,
    beta: GradedScalar,
    f: Vec<PiecewiseTerm>,
    g: Vec<PiecewiseTerm>,
}

impl DistributionBoundary {
    pub fn new(
        alpha: GradedScalar,
        beta: GradedScalar,
        f: Vec<PiecewiseTerm>,
        g: Vec<PiecewiseTerm>,
    ) -> Result<Self> {
        for w in [&alpha, &beta] {
            if w.mu_exp() != 0 || w.hbar_exp() != 0 {
                return Err(Error::BoundaryWeightsInvalid(format!(
                    "half-plane weights must be dimensionless, got grade ({}, {})",
                    w.mu_exp(),
                    w.hbar_exp()
                )));
            }
        }
        let sum = alpha.value() + beta.value();
        if sum != GaussianRational::one() {
            return Err(Error::BoundaryWeightsInvalid(format!(
                "alpha + beta must equal 1, got {sum}"
            )));
        }
        if f.iter().any(|t| t.var != PolyVar::U) {
            return Err(Error::InvalidInput("f terms must depend on u".into()));
        }
        if g.iter().any(|t| t.var != PolyVar::V) {
            return Err(Error::InvalidInput("g terms must depend on v".into()));
        }
        Ok(Self { alpha, beta, f, g })
    }

    /// The symmetric choice `alpha = beta = 1/2`, `f = g = 0` that
    /// reproduces the `sgn`-form arrival-time kernels.
    pub fn symmetric() -> Self {
        Self {
            alpha: GradedScalar::rational(1, 2),
            beta: GradedScalar::rational(1, 2),
            f: Vec::new(),
            g: Vec::new(),
        }
    }

    pub fn alpha(&self) -> &GradedScalar {
        &self.alpha
    }

    pub fn beta(&self) -> &GradedScalar {
        &self.beta
    }

    pub fn f_terms(&self) -> &[PiecewiseTerm] {
        &self.f
    }

    pub fn g_terms(&self) -> &[PiecewiseTerm] {
        &self.g
    }

    /// Checks `f(0) = 0` under the midpoint convention, required for the
    /// stationary-particle reading of the `f` term.
    pub fn f_vanishes_at_origin(&self) -> bool {
        let mut at_zero = GaussianRational::zero();
        for t in &self.f {
            if t.degree != 0 {
                continue;
            }
            match t.weight {
                PieceWeight::One => at_zero = &at_zero + t.coeff.value(),
                PieceWeight::Sgn => {}
                PieceWeight::HeavisidePlus | PieceWeight::HeavisideMinus => {
                    at_zero = &at_zero + &t.coeff.value().scale(&Rat::new(1.into(), 2.into()))
                }
            }
        }
        at_zero.is_zero()
    }

    pub fn validate_stationary(&self) -> Result<()> {
        if self.f_vanishes_at_origin() {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "stationary-particle interpretation requires f(0) = 0".into(),
            ))
        }
    }
}

/// Support side of a Heaviside factor in `v`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum HalfLine {
    Plus,
    Minus,
}

impl HalfLine {
    pub fn weight(&self) -> PieceWeight {
        match self {
            HalfLine::Plus => PieceWeight::HeavisidePlus,
            HalfLine::Minus => PieceWeight::HeavisideMinus,
        }
    }
}

/// One term `coeff * u^m * v^n * H(+-v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeavisideTerm {
    pub m: u32,
    pub n: u32,
    pub coeff: GradedScalar,
    pub side: HalfLine,
}

/// A piece list in one variable times a plain power of the other:
/// `scale * other^cofactor_pow * sum(terms)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CofactorBlock {
    pub var: PolyVar,
    pub cofactor_pow: u32,
    pub scale: GradedScalar,
    pub terms: Vec<PiecewiseTerm>,
}

/// Closed-form solution of the modified equation: a Heaviside ladder plus
/// moment-dressed `f` and `g` blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionKernel {
    pub heaviside: Vec<HeavisideTerm>,
    pub f_blocks: Vec<CofactorBlock>,
    pub g_blocks: Vec<CofactorBlock>,
    /// Ladder depth `J` for truncated (harmonic) solutions; `None` when the
    /// representation is exact.
    pub truncation: Option<u32>,
}

/// Quadrant decomposition used for almost-everywhere equality: maps
/// `(m, n, sgn u, sgn v, mu, hbar)` to the coefficient valid on that open
/// quadrant.  Values on the axes (a null set) are intentionally ignored.
pub type QuadrantForm = BTreeMap<(u32, u32, i8, i8, i64, i64), GaussianRational>;

impl DistributionKernel {
    fn exact(heaviside: Vec<HeavisideTerm>, f_blocks: Vec<CofactorBlock>, g_blocks: Vec<CofactorBlock>) -> Self {
        Self {
            heaviside,
            f_blocks,
            g_blocks,
            truncation: None,
        }
    }

    /// Rewrites a `sgn`-form kernel series `T` as the full kernel
    /// `(mu / i hbar) T(u, v) sgn(v)` over the Heaviside family.
    pub fn from_sgn_kernel(t: &KernelSeries) -> Self {
        let prefactor = GradedScalar::imaginary(-1, 1).grade_shifted(1, -1);
        let mut heaviside = Vec::new();
        for (key, c) in t.iter() {
            let full = c * &prefactor;
            heaviside.push(HeavisideTerm {
                m: key.m,
                n: key.n,
                coeff: full.clone(),
                side: HalfLine::Plus,
            });
            heaviside.push(HeavisideTerm {
                m: key.m,
                n: key.n,
                coeff: -&full,
                side: HalfLine::Minus,
            });
        }
        Self {
            heaviside,
            f_blocks: Vec::new(),
            g_blocks: Vec::new(),
            truncation: Some(t.truncation_order()),
        }
    }

    /// Canonical on-quadrant form; terms whose representations differ only
    /// on the axes collapse to the same map.
    pub fn quadrant_form(&self, max_total_degree: Option<u32>) -> QuadrantForm {
        let mut out = QuadrantForm::new();
        let mut push = |m: u32, n: u32, su: i8, sv: i8, c: &GradedScalar| {
            if c.is_zero() {
                return;
            }
            if let Some(cap) = max_total_degree {
                if m + n > cap {
                    return;
                }
            }
            let key = (m, n, su, sv, c.mu_exp(), c.hbar_exp());
            let sum = match out.remove(&key) {
                Some(existing) => &existing + c.value(),
                None => c.value().clone(),
            };
            if !sum.is_zero() {
                out.insert(key, sum);
            }
        };
        for h in &self.heaviside {
            let sv = match h.side {
                HalfLine::Plus => 1,
                HalfLine::Minus => -1,
            };
            for su in [-1, 1] {
                push(h.m, h.n, su, sv, &h.coeff);
            }
        }
        let mut blocks = |list: &[CofactorBlock]| {
            for block in list {
                for term in &block.terms {
                    let c = &block.scale * &term.coeff;
                    let (m, n) = match block.var {
                        PolyVar::U => (term.degree, block.cofactor_pow),
                        PolyVar::V => (block.cofactor_pow, term.degree),
                    };
                    // Sign carried by the weight on each half of the term's
                    // own variable; the cofactor is weightless.
                    for s_term in [-1i8, 1] {
                        let factor = match term.weight {
                            PieceWeight::One => 1,
                            PieceWeight::Sgn => i64::from(s_term),
                            PieceWeight::HeavisidePlus => i64::from(s_term > 0),
                            PieceWeight::HeavisideMinus => i64::from(s_term < 0),
                        };
                        if factor == 0 {
                            continue;
                        }
                        let signed = if factor < 0 { -&c } else { c.clone() };
                        for s_other in [-1i8, 1] {
                            let (su, sv) = match block.var {
                                PolyVar::U => (s_term, s_other),
                                PolyVar::V => (s_other, s_term),
                            };
                            push(m, n, su, sv, &signed);
                        }
                    }
                }
            }
        };
        blocks(&self.f_blocks);
        blocks(&self.g_blocks);
        out
    }

    /// Pointwise value at `(u, v)` with midpoint conventions on the axes.
    pub fn evaluate(&self, u: f64, v: f64, mu: f64, hbar: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for h in &self.heaviside {
            acc += h.coeff.eval(mu, hbar)
                * u.powi(h.m as i32)
                * v.powi(h.n as i32)
                * h.side.weight().eval(v);
        }
        for block in &self.f_blocks {
            let mut f_val = Complex64::new(0.0, 0.0);
            for term in &block.terms {
                f_val += term.eval(u, mu, hbar);
            }
            acc += block.scale.eval(mu, hbar) * v.powi(block.cofactor_pow as i32) * f_val;
        }
        for block in &self.g_blocks {
            let mut g_val = Complex64::new(0.0, 0.0);
            for term in &block.terms {
                g_val += term.eval(v, mu, hbar);
            }
            acc += block.scale.eval(mu, hbar) * u.powi(block.cofactor_pow as i32) * g_val;
        }
        acc
    }
}

/// `mu / (2 i hbar)` — the prefactor of the Heaviside ladder.
fn half_prefactor() -> GradedScalar {
    GradedScalar::imaginary(-1, 2).grade_shifted(1, -1)
}

/// Exact solution of the modified equation for `V = 0`:
/// `(mu / 2 i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)`.
pub fn mtke_free_solution(dbc: &DistributionBoundary) -> DistributionKernel {
    let base = half_prefactor();
    let mut heaviside = Vec::new();
    let plus = &base * dbc.alpha();
    if !plus.is_zero() {
        heaviside.push(HeavisideTerm {
            m: 1,
            n: 0,
            coeff: plus,
            side: HalfLine::Plus,
        });
    }
    let minus = -&(&base * dbc.beta());
    if !minus.is_zero() {
        heaviside.push(HeavisideTerm {
            m: 1,
            n: 0,
            coeff: minus,
            side: HalfLine::Minus,
        });
    }
    let mut f_blocks = Vec::new();
    if !dbc.f_terms().is_empty() {
        f_blocks.push(CofactorBlock {
            var: PolyVar::U,
            cofactor_pow: 0,
            scale: GradedScalar::one(),
            terms: dbc.f_terms().to_vec(),
        });
    }
    let mut g_blocks = Vec::new();
    if !dbc.g_terms().is_empty() {
        g_blocks.push(CofactorBlock {
            var: PolyVar::V,
            cofactor_pow: 0,
            scale: GradedScalar::one(),
            terms: dbc.g_terms().to_vec(),
        });
    }
    DistributionKernel::exact(heaviside, f_blocks, g_blocks)
}

fn rat_pow(r: &Rat, k: u32) -> Rat {
    let mut out = Rat::one();
    for _ in 0..k {
        out *= r.clone();
    }
    out
}

/// Truncated closed-form solution for the harmonic oscillator
/// `V = mu omega^2 q^2 / 2` through ladder depth `J`:
///
/// ```text
/// K = (mu/2 i hbar) sum_j (omega/2)^(2j) (mu/hbar)^(2j) / (2j+1)!
///       u^(2j+1) v^(2j) [alpha H(v) - beta H(-v)]
///   + sum_j (omega/2)^(2j) (mu/hbar)^(2j) / (2^j j!) [v^(2j) F_j(u) + u^(2j) G_j(v)]
/// ```
///
/// with `F_j`, `G_j` the moment ladders of `f`, `g`.
pub fn mtke_ho_solution(
    dbc: &DistributionBoundary,
    omega: &Rat,
    j_cap: u32,
) -> DistributionKernel {
    let base = half_prefactor();
    let half_omega_sq = rat_pow(&(omega / Rat::from(BigInt::from(2))), 2);
    let mut heaviside = Vec::new();
    let mut f_blocks = Vec::new();
    let mut g_blocks = Vec::new();
    let f_family = MomentFamily::generate(dbc.f_terms(), j_cap);
    let g_family = MomentFamily::generate(dbc.g_terms(), j_cap);
    for j in 0..=j_cap {
        // (omega/2)^(2j) at grade (mu, hbar) = (2j, -2j).
        let ladder = GradedScalar::from_rat(rat_pow(&half_omega_sq, j))
            .grade_shifted(2 * i64::from(j), -2 * i64::from(j));
        let odd_fact = Rat::new(BigInt::one(), factorial(2 * j + 1));
        let h_coeff = (&base * &ladder).scale(&odd_fact);
        let plus = &h_coeff * dbc.alpha();
        if !plus.is_zero() {
            heaviside.push(HeavisideTerm {
                m: 2 * j + 1,
                n: 2 * j,
                coeff: plus,
                side: HalfLine::Plus,
            });
        }
        let minus = -&(&h_coeff * dbc.beta());
        if !minus.is_zero() {
            heaviside.push(HeavisideTerm {
                m: 2 * j + 1,
                n: 2 * j,
                coeff: minus,
                side: HalfLine::Minus,
            });
        }
        let even_scale = ladder.scale(&Rat::new(
            BigInt::one(),
            BigInt::from(2).pow(j) * factorial(j),
        ));
        if !dbc.f_terms().is_empty() {
            f_blocks.push(CofactorBlock {
                var: PolyVar::U,
                cofactor_pow: 2 * j,
                scale: even_scale.clone(),
                terms: f_family.level(j).to_vec(),
            });
        }
        if !dbc.g_terms().is_empty() {
            g_blocks.push(CofactorBlock {
                var: PolyVar::V,
                cofactor_pow: 2 * j,
                scale: even_scale,
                terms: g_family.level(j).to_vec(),
            });
        }
    }
    DistributionKernel {
        heaviside,
        f_blocks,
        g_blocks,
        truncation: Some(j_cap),
    }
}

/// Symmetry classification of boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SymmetryTriple {
    pub hermitian: bool,
    pub time_reversal: bool,
    pub both: bool,
}

/// Half-line decomposition of a piece list: maps
/// `(degree, half, mu, hbar)` to the coefficient valid on that open half.
fn half_form(terms: &[PiecewiseTerm]) -> BTreeMap<(u32, i8, i64, i64), GaussianRational> {
    let mut out = BTreeMap::new();
    let mut push = |degree: u32, half: i8, c: GaussianRational, grades: (i64, i64)| {
        if c.is_zero() {
            return;
        }
        let key = (degree, half, grades.0, grades.1);
        let sum = match out.remove(&key) {
            Some(existing) => &existing + &c,
            None => c,
        };
        if !sum.is_zero() {
            out.insert(key, sum);
        }
    };
    for t in terms {
        let grades = (t.coeff.mu_exp(), t.coeff.hbar_exp());
        let value = t.coeff.value();
        match t.weight {
            PieceWeight::One => {
                push(t.degree, 1, value.clone(), grades);
                push(t.degree, -1, value.clone(), grades);
            }
            PieceWeight::Sgn => {
                push(t.degree, 1, value.clone(), grades);
                push(t.degree, -1, -value, grades);
            }
            PieceWeight::HeavisidePlus => push(t.degree, 1, value.clone(), grades),
            PieceWeight::HeavisideMinus => push(t.degree, -1, value.clone(), grades),
        }
    }
    out
}

/// Exact symmetry classification of the boundary data.
///
/// Hermiticity requires `alpha = conj(beta)` (with `alpha + beta = 1` this
/// pins both real parts to 1/2), real `f`, and `g(v) = conj(g(-v))`.
/// Time-reversal invariance requires real `alpha`, `beta` and purely
/// imaginary `f`, `g`.
pub fn mtke_classify(dbc: &DistributionBoundary) -> SymmetryTriple {
    let alpha = dbc.alpha().value();
    let beta = dbc.beta().value();
    let f_half = half_form(dbc.f_terms());
    let g_half = half_form(dbc.g_terms());

    let mut hermitian = alpha == &beta.conj();
    hermitian &= f_half.values().all(GaussianRational::is_real);
    if hermitian {
        // g(v) = conj(g(-v)): reflecting swaps halves and multiplies x^k by
        // (-1)^k, so the condition reads c(k, -h) = (-1)^k conj(c(k, h)).
        let mut keys: Vec<_> = g_half.keys().copied().collect();
        keys.extend(g_half.keys().map(|(k, h, m, hb)| (*k, -h, *m, *hb)));
        keys.sort_unstable();
        keys.dedup();
        for (k, h, m, hb) in keys {
            let zero = GaussianRational::zero();
            let direct = g_half.get(&(k, h, m, hb)).unwrap_or(&zero);
            let mirrored = g_half.get(&(k, -h, m, hb)).unwrap_or(&zero);
            let mut expected = mirrored.conj();
            if k % 2 == 1 {
                expected = -&expected;
            }
            if direct != &expected {
                hermitian = false;
                break;
            }
        }
    }

    let time_reversal = alpha.is_real()
        && beta.is_real()
        && f_half.values().all(GaussianRational::is_imaginary)
        && g_half.values().all(GaussianRational::is_imaginary);

    SymmetryTriple {
        hermitian,
        time_reversal,
        both: hermitian && time_reversal,
    }
}

/// Jump of `dK/du` across `v = 0` in a neighborhood of `u = 0`, evaluated
/// numerically.  For any solution of the modified equation this equals
/// `mu / (2 i hbar) (alpha + beta) = -i mu / (2 hbar)`: only the `m = 1`,
/// `n = 0` Heaviside terms survive the limit (the `f` block is the same on
/// both sides, the `g` and higher ladder blocks vanish at `u = 0` or carry
/// positive powers of `v`).
pub fn delta_jump_check(k: &DistributionKernel, mu: f64, hbar: f64) -> Complex64 {
    let mut jump = Complex64::new(0.0, 0.0);
    for h in &k.heaviside {
        if h.m != 1 || h.n != 0 {
            continue;
        }
        let sign = match h.side {
            HalfLine::Plus => 1.0,
            HalfLine::Minus => -1.0,
        };
        jump += h.coeff.eval(mu, hbar) * sign;
    }
    jump
}

/// Wigner-Weyl transform of a full kernel, delta terms included.
///
/// The `v`-weight of each piece selects the Fourier identity:
///
/// ```text
/// v^b           -> i^b 2 pi hbar^(b+1) delta^(b)(p)
/// v^b sgn(v)    -> 2 b! hbar^(b+1) / (i p)^(b+1)
/// v^b H(+-v)    -> i^b pi hbar^(b+1) delta^(b)(p) +- b! hbar^(b+1)/(i p)^(b+1)
/// ```
///
/// and `u^a` becomes `(2q)^a`, with any `u`-weight carried onto the delta
/// term's `q`-cofactor.  Pieces with a non-trivial `u`-weight never reach
/// the regular part: by construction only `f` carries `u`-weights and its
/// `v`-dependence is a plain power.
pub fn weyl_transform_distribution(k: &DistributionKernel) -> PhaseSpaceSeries {
    let mut out = PhaseSpaceSeries::new();
    let mut piece = |a: u32, w_u: PieceWeight, b: u32, w_v: PieceWeight, c: &GradedScalar| {
        if c.is_zero() {
            return;
        }
        let hbar = c.hbar_exp() + i64::from(b) + 1;
        let mu = c.mu_exp();
        let two_pow_a = Rat::from(BigInt::from(2).pow(a));
        let delta_key = DeltaKey {
            order: b,
            q_pow: a,
            weight: w_u,
            hbar,
            mu,
        };
        let regular_key = RegularKey {
            p_inv: b + 1,
            q_pow: a,
            hbar,
            mu,
        };
        let regular_value = || {
            debug_assert_eq!(
                w_u,
                PieceWeight::One,
                "regular terms cannot carry a q-weight"
            );
            c.value()
                .scale(&(two_pow_a.clone() * Rat::from(factorial(b))))
                .mul_i_pow(-(i64::from(b) + 1))
        };
        match w_v {
            PieceWeight::One => {
                let value = c
                    .value()
                    .scale(&(two_pow_a.clone() * Rat::from(BigInt::from(2))))
                    .mul_i_pow(i64::from(b));
                out.add_delta(delta_key, value);
            }
            PieceWeight::Sgn => {
                let v = regular_value().scale(&Rat::from(BigInt::from(2)));
                out.add_regular(regular_key, v);
            }
            PieceWeight::HeavisidePlus => {
                let value = c.value().scale(&two_pow_a).mul_i_pow(i64::from(b));
                out.add_delta(delta_key, value);
                out.add_regular(regular_key, regular_value());
            }
            PieceWeight::HeavisideMinus => {
                let value = c.value().scale(&two_pow_a).mul_i_pow(i64::from(b));
                out.add_delta(delta_key, value);
                out.add_regular(regular_key, -&regular_value());
            }
        }
    };
    for h in &k.heaviside {
        piece(h.m, PieceWeight::One, h.n, h.side.weight(), &h.coeff);
    }
    for block in &k.f_blocks {
        for term in &block.terms {
            let c = &block.scale * &term.coeff;
            piece(term.degree, term.weight, block.cofactor_pow, PieceWeight::One, &c);
        }
    }
    for block in &k.g_blocks {
        for term in &block.terms {
            let c = &block.scale * &term.coeff;
            piece(block.cofactor_pow, PieceWeight::One, term.degree, term.weight, &c);
        }
    }
    out
}

// --- serde wire formats ---------------------------------------------------

#[derive(Serialize, Deserialize)]
struct TermWire {
    k: u32,
    weight: String,
    coeff: GradedScalar,
}

fn terms_to_wire(terms: &[PiecewiseTerm]) -> Vec<TermWire> {
    terms
        .iter()
        .map(|t| TermWire {
            k: t.degree,
            weight: t.weight.tag().to_string(),
            coeff: t.coeff.clone(),
        })
        .collect()
}

fn terms_from_wire(
    wire: Vec<TermWire>,
    var: PolyVar,
) -> std::result::Result<Vec<PiecewiseTerm>, String> {
    wire.into_iter()
        .map(|t| {
            let weight = PieceWeight::from_tag(&t.weight)
                .ok_or_else(|| format!("unknown weight tag {:?}", t.weight))?;
            Ok(PiecewiseTerm::new(var, t.k, weight, t.coeff))
        })
        .collect()
}

impl Serialize for DistributionBoundary {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            alpha: &'a GradedScalar,
            beta: &'a GradedScalar,
            f: Vec<TermWire>,
            g: Vec<TermWire>,
        }
        Wire {
            alpha: &self.alpha,
            beta: &self.beta,
            f: terms_to_wire(&self.f),
            g: terms_to_wire(&self.g),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionBoundary {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct Wire {
            alpha: GradedScalar,
            beta: GradedScalar,
            #[serde(default)]
            f: Vec<TermWire>,
            #[serde(default)]
            g: Vec<TermWire>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let f = terms_from_wire(wire.f, PolyVar::U).map_err(D::Error::custom)?;
        let g = terms_from_wire(wire.g, PolyVar::V).map_err(D::Error::custom)?;
        DistributionBoundary::new(wire.alpha, wire.beta, f, g)
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

impl Serialize for DistributionKernel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct HWire<'a> {
            m: u32,
            n: u32,
            side: &'a str,
            coeff: &'a GradedScalar,
        }
        #[derive(Serialize)]
        struct BlockWire<'a> {
            var: PolyVar,
            cofactor: u32,
            scale: &'a GradedScalar,
            terms: Vec<TermWire>,
        }
        #[derive(Serialize)]
        struct Wire<'a> {
            heaviside: Vec<HWire<'a>>,
            f_blocks: Vec<BlockWire<'a>>,
            g_blocks: Vec<BlockWire<'a>>,
            truncation: Option<u32>,
        }
        fn block_wire(b: &CofactorBlock) -> BlockWire<'_> {
            BlockWire {
                var: b.var,
                cofactor: b.cofactor_pow,
                scale: &b.scale,
                terms: terms_to_wire(&b.terms),
            }
        }
        Wire {
            heaviside: self
                .heaviside
                .iter()
                .map(|h| HWire {
                    m: h.m,
                    n: h.n,
                    side: match h.side {
                        HalfLine::Plus => "plus",
                        HalfLine::Minus => "minus",
                    },
                    coeff: &h.coeff,
                })
                .collect(),
            f_blocks: self.f_blocks.iter().map(block_wire).collect(),
            g_blocks: self.g_blocks.iter().map(block_wire).collect(),
            truncation: self.truncation,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionKernel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        #[derive(Deserialize)]
        struct HWire {
            m: u32,
            n: u32,
            side: String,
            coeff: GradedScalar,
        }
        #[derive(Deserialize)]
        struct BlockWire {
            var: PolyVar,
            cofactor: u32,
            scale: GradedScalar,
            terms: Vec<TermWire>,
        }
        #[derive(Deserialize)]
        struct Wire {
            #[serde(default)]
            heaviside: Vec<HWire>,
            #[serde(default)]
            f_blocks: Vec<BlockWire>,
            #[serde(default)]
            g_blocks: Vec<BlockWire>,
            truncation: Option<u32>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let mut heaviside = Vec::new();
        for h in wire.heaviside {
            let side = match h.side.as_str() {
                "plus" => HalfLine::Plus,
                "minus" => HalfLine::Minus,
                other => return Err(D::Error::custom(format!("unknown side tag {other:?}"))),
            };
            heaviside.push(HeavisideTerm {
                m: h.m,
                n: h.n,
                coeff: h.coeff,
                side,
            });
        }
        let blocks = |wire: Vec<BlockWire>| -> std::result::Result<Vec<CofactorBlock>, D::Error> {
            wire.into_iter()
                .map(|b| {
                    let terms = terms_from_wire(b.terms, b.var).map_err(D::Error::custom)?;
                    Ok(CofactorBlock {
                        var: b.var,
                        cofactor_pow: b.cofactor,
                        scale: b.scale,
                        terms,
                    })
                })
                .collect()
        };
        Ok(DistributionKernel {
            heaviside,
            f_blocks: blocks(wire.f_blocks)?,
            g_blocks: blocks(wire.g_blocks)?,
            truncation: wire.truncation,
        })
    }
}
