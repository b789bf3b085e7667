//! Exact series algebra and numerical cross-checks for the time kernel equation
//!
//! The time kernel equation (TKE) governs the position-representation kernel
//! `T(q, q')` of a time-of-arrival operator conjugate to a Hamiltonian
//! `H = p^2/(2 mu) + V(q)`.  In the rotated coordinates `u = q + q'`,
//! `v = q - q'` it reads
//!
//! ```text
//! -(2 hbar^2 / mu) d^2 T / du dv + [V((u+v)/2) - V((u-v)/2)] T = 0
//! ```
//!
//! with the full kernel assembled as `(mu / (i hbar)) T(u, v) sgn(v)`.
//!
//! The crate keeps everything exact for as long as possible: coefficients are
//! Gaussian rationals (complex numbers with rational real and imaginary part)
//! tagged with integer exponents of the symbols `mu` and `hbar`, so results of
//! the Frobenius recurrence, the Wigner-Weyl transform, and the coefficient
//! tables can be compared term by term with no rounding.  Floating point only
//! enters at the outermost evaluation layer (grid solvers and plot sampling).
//!
//! Module map:
//!
//! * [`scalar`] - graded Gaussian-rational scalars.
//! * [`potential`] - polynomial potentials `V(q) = sum a_s q^s`.
//! * [`series`] - sparse bivariate series in `u, v` and exact expansion of
//!   `V((u+v)/2) - V((u-v)/2)`.
//! * [`boundary`] - axis data `T(u, 0)`, `T(0, v)` for the Goursat problem.
//! * [`frobenius`] - the coefficient recurrence, residual, conjugacy and
//!   symmetry checks.
//! * [`phase_space`] - Wigner-Weyl images, local time-of-arrival series,
//!   inverse-Hamiltonian expansions, classical limits.
//! * [`picard`] - floating-point Picard/Goursat iteration on rectangles with
//!   the analytic convergence bound.
//! * [`distribution`] - piecewise kernels of the modified (delta-sourced)
//!   equation and their distributional Weyl transforms.
//! * [`tables`] - potential-power coefficient tables and the leading-order
//!   shift-kernel cross-check.

pub mod boundary;
pub mod distribution;
pub mod frobenius;
pub mod phase_space;
pub mod picard;
pub mod potential;
pub mod scalar;
pub mod series;
pub mod tables;

use thiserror::Error;

/// Errors reported by solvers and checks.
///
/// Precondition violations that indicate a caller bug (rather than data that
/// is merely outside a solver's reach) panic instead; see the individual
/// function docs.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A comparison or lookup asked for orders beyond what a truncated series
    /// actually holds.
    #[error("order {requested} exceeds the series truncation order {available}")]
    OrderExceedsTruncation { requested: u32, available: u32 },

    /// A classical limit was requested for a series with negative `hbar`
    /// grades, which diverge as `hbar -> 0`.
    #[error("term at hbar grade {grade} diverges in the classical limit")]
    NegativeHbarGrade { grade: i64 },

    /// Fixed-point iteration failed to reach the requested tolerance.
    #[error("no convergence after {iterations} iterations (last update {final_delta:e})")]
    NonConvergence { iterations: u32, final_delta: f64 },

    /// Distributional boundary weights must satisfy `alpha + beta = 1`.
    #[error("invalid distribution boundary: {0}")]
    BoundaryWeightsInvalid(String),

    /// A grid specification violates the solver's requirements.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// Two internal computation routes disagreed; the result cannot be
    /// trusted.
    #[error("internal consistency failure: {0}")]
    ConsistencyFailure(String),

    /// Input data is structurally invalid for the requested operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
