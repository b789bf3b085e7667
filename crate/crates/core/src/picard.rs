//! Floating-point Goursat solver by successive approximation.
//!
//! The kernel equation with axis data `T(u, 0)`, `T(0, v)` is equivalent to
//! the integral equation
//!
//! ```text
//! T(u, v) = T_0(u, v) + (mu / 2 hbar^2)
//!           integral_0^v integral_0^u DV(x, y) T(x, y) dx dy
//! ```
//!
//! with `DV(u, v) = V((u+v)/2) - V((u-v)/2)` and `T_0` the superposition of
//! the axis data.  Picard iteration of this map converges absolutely and
//! uniformly on any rectangle; the iterates are computed here on a grid with
//! cumulative composite Simpson quadrature, giving an oracle for the
//! symbolic series solver that shares no code path with it.  The analytic
//! increment envelope is also evaluated ([`picard_bound`]) so convergence
//! behavior itself is checkable.
//!
//! The same iteration solves the modified (delta-sourced) equation when run
//! on the half-planes `v > 0` and `v < 0` independently
//! ([`picard_solve_mtke`]); the jump across `v = 0` is part of the data and
//! must not be smeared by quadrature across the axis, so the two sheets
//! never mix and both one-sided limits are retained.

use crate::boundary::BoundaryConditionSpec;
use crate::distribution::DistributionBoundary;
use crate::potential::PolynomialPotential;
use crate::scalar::Rat;
use crate::series::potential_difference_expand;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;

/// Rectangular grid specification: rational bounds with `0` required to be
/// a grid line on both axes, and odd point counts for Simpson quadrature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    u_min: Rat,
    u_max: Rat,
    v_min: Rat,
    v_max: Rat,
    nu: usize,
    nv: usize,
    u_zero: usize,
    v_zero: usize,
}

fn zero_index(min: &Rat, max: &Rat, count: usize, axis: &str) -> Result<usize> {
    if min >= max {
        return Err(Error::InvalidGrid(format!(
            "{axis} range is empty or reversed"
        )));
    }
    if count < 3 || count % 2 == 0 {
        return Err(Error::InvalidGrid(format!(
            "{axis} point count must be odd and at least 3, got {count}"
        )));
    }
    let h = (max - min) / Rat::from_integer((count as i64 - 1).into());
    let offset = -min / &h;
    if !offset.is_integer() || offset.is_negative() {
        return Err(Error::InvalidGrid(format!(
            "0 must lie on a {axis} grid line"
        )));
    }
    offset
        .to_integer()
        .to_usize()
        .filter(|i| *i < count)
        .ok_or_else(|| Error::InvalidGrid(format!("0 must lie inside the {axis} range")))
}

impl GridSpec {
    pub fn new(
        u_range: (Rat, Rat),
        v_range: (Rat, Rat),
        nu: usize,
        nv: usize,
    ) -> Result<Self> {
        let u_zero = zero_index(&u_range.0, &u_range.1, nu, "u")?;
        let v_zero = zero_index(&v_range.0, &v_range.1, nv, "v")?;
        Ok(Self {
            u_min: u_range.0,
            u_max: u_range.1,
            v_min: v_range.0,
            v_max: v_range.1,
            nu,
            nv,
            u_zero,
            v_zero,
        })
    }

    /// Symmetric grid on `|u| <= r`, `|v| <= r` with `n x n` points.
    pub fn symmetric(r: Rat, n: usize) -> Result<Self> {
        Self::new((-r.clone(), r.clone()), (-r.clone(), r), n, n)
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn u_zero_index(&self) -> usize {
        self.u_zero
    }

    pub fn v_zero_index(&self) -> usize {
        self.v_zero
    }

    fn nodes(min: &Rat, max: &Rat, count: usize) -> Vec<f64> {
        let h = (max - min) / Rat::from_integer((count as i64 - 1).into());
        (0..count)
            .map(|i| (min + &h * Rat::from_integer((i as i64).into())).to_f64().unwrap())
            .collect()
    }

    pub fn u_nodes(&self) -> Vec<f64> {
        Self::nodes(&self.u_min, &self.u_max, self.nu)
    }

    pub fn v_nodes(&self) -> Vec<f64> {
        Self::nodes(&self.v_min, &self.v_max, self.nv)
    }

    fn u_step(&self) -> f64 {
        ((&self.u_max - &self.u_min) / Rat::from_integer((self.nu as i64 - 1).into()))
            .to_f64()
            .unwrap()
    }

    fn v_step(&self) -> f64 {
        ((&self.v_max - &self.v_min) / Rat::from_integer((self.nv as i64 - 1).into()))
            .to_f64()
            .unwrap()
    }

    /// Largest `|u|` over the rectangle (exact, then floated).
    pub fn u_radius(&self) -> f64 {
        self.u_min.abs().max(self.u_max.abs()).to_f64().unwrap()
    }

    pub fn v_radius(&self) -> f64 {
        self.v_min.abs().max(self.v_max.abs()).to_f64().unwrap()
    }
}

/// Converged grid iterate.
#[derive(Debug, Clone)]
pub struct GridKernel {
    pub u_nodes: Vec<f64>,
    pub v_nodes: Vec<f64>,
    /// Values indexed `[u index, v index]`.  For the modified equation the
    /// `v = 0` row holds the average of the two one-sided limits.
    pub values: Array2<Complex64>,
    pub iterations_used: u32,
    /// Sup-norm of the final update.
    pub final_delta: f64,
    /// Sup-norm of every update, in order (`increments[j-1]` is the j-th).
    pub increments: Vec<f64>,
    /// One-sided limits along `v = 0` (modified-equation solves only).
    pub v0_plus: Option<Vec<Complex64>>,
    pub v0_minus: Option<Vec<Complex64>>,
}

impl GridKernel {
    pub fn value(&self, iu: usize, iv: usize) -> Complex64 {
        self.values[(iu, iv)]
    }

    /// Largest pointwise deviation from a reference function.
    pub fn max_error_vs<F: Fn(f64, f64) -> Complex64>(&self, reference: F) -> f64 {
        let mut worst = 0.0f64;
        for (iu, &u) in self.u_nodes.iter().enumerate() {
            for (iv, &v) in self.v_nodes.iter().enumerate() {
                worst = worst.max((self.values[(iu, iv)] - reference(u, v)).norm());
            }
        }
        worst
    }

    /// Largest pointwise difference against another grid of the same shape.
    pub fn max_difference(&self, other: &GridKernel) -> f64 {
        assert_eq!(self.values.dim(), other.values.dim(), "grid shape mismatch");
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Cumulative composite Simpson antiderivative: `out[i]` approximates the
/// integral of `f` from node `0` to node `i`.
///
/// Even indices accumulate full Simpson panels; odd indices add the
/// single-interval integral of the cubic through the four nearest nodes, so
/// the whole table is exact whenever `f` samples a polynomial of degree at
/// most three (degenerate lengths 2 and 3 fall back to the trapezoid and
/// the quadratic half-panel).
fn cumulative_simpson(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = (f[0] + f[1]) * (h / 2.0);
        return out;
    }
    if n == 3 {
        out[1] = (f[0] * 5.0 + f[1] * 8.0 - f[2]) * (h / 12.0);
        out[2] = (f[0] + f[1] * 4.0 + f[2]) * (h / 3.0);
        return out;
    }
    out[1] = (f[0] * 9.0 + f[1] * 19.0 - f[2] * 5.0 + f[3]) * (h / 24.0);
    for i in 2..n {
        out[i] = if i % 2 == 0 {
            out[i - 2] + (f[i - 2] + f[i - 1] * 4.0 + f[i]) * (h / 3.0)
        } else if i + 1 < n {
            out[i - 1]
                + (-f[i - 2] + f[i - 1] * 13.0 + f[i] * 13.0 - f[i + 1]) * (h / 24.0)
        } else {
            out[i - 1]
                + (f[i - 3] - f[i - 2] * 5.0 + f[i - 1] * 19.0 + f[i] * 9.0) * (h / 24.0)
        };
    }
    out
}

/// Cumulative antiderivative anchored at interior node `z`:
/// `out[i]` approximates the integral from node `z` to node `i` (negative
/// for `i < z`).
fn cumulative_from_zero(f: &[Complex64], h: f64, z: usize) -> Vec<Complex64> {
    let n = f.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let forward = cumulative_simpson(&f[z..], h);
    out[z..].copy_from_slice(&forward);
    let reversed: Vec<Complex64> = f[..=z].iter().rev().copied().collect();
    let backward = cumulative_simpson(&reversed, h);
    for (t, value) in backward.into_iter().enumerate() {
        out[z - t] = -value;
    }
    out
}

/// `DV(u, v)` evaluated on the grid.
fn difference_grid(
    v: &PolynomialPotential,
    u_nodes: &[f64],
    v_nodes: &[f64],
    mu: f64,
    hbar: f64,
) -> Array2<Complex64> {
    let terms: Vec<(u32, u32, Complex64)> = if v.is_free() {
        Vec::new()
    } else {
        potential_difference_expand(v, v.max_degree())
            .iter()
            .map(|(key, c)| (key.m, key.n, c.eval(mu, hbar)))
            .collect()
    };
    let mut out = Array2::zeros((u_nodes.len(), v_nodes.len()));
    for (iu, &u) in u_nodes.iter().enumerate() {
        for (iv, &w) in v_nodes.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(a, b, c) in &terms {
                acc += c * u.powi(a as i32) * w.powi(b as i32);
            }
            out[(iu, iv)] = acc;
        }
    }
    out
}

/// One Picard sweep: `T_0 + factor * double integral of (DV T)`, with the
/// `v`-integration anchored at the sub-grid row `v_anchor`.
///
/// Column and row integrations are parallel over the independent index with
/// a fixed in-row summation order, so results do not depend on the thread
/// schedule.
fn sweep(
    t: &Array2<Complex64>,
    t0: &Array2<Complex64>,
    dv: &Array2<Complex64>,
    factor: f64,
    h_u: f64,
    h_v: f64,
    u_zero: usize,
    v_anchor: usize,
) -> Array2<Complex64> {
    let (nu, nv) = t.dim();
    let w = dv * t;
    // Inner pass: for each v row, integrate along u from the u = 0 line.
    let columns: Vec<Vec<Complex64>> = (0..nv)
        .into_par_iter()
        .map(|iv| {
            let column: Vec<Complex64> = (0..nu).map(|iu| w[(iu, iv)]).collect();
            cumulative_from_zero(&column, h_u, u_zero)
        })
        .collect();
    // Outer pass: for each u row, integrate along v from the anchor row.
    let rows: Vec<Vec<Complex64>> = (0..nu)
        .into_par_iter()
        .map(|iu| {
            let row: Vec<Complex64> = (0..nv).map(|iv| columns[iv][iu]).collect();
            cumulative_from_zero(&row, h_v, v_anchor)
        })
        .collect();
    let mut next = t0.clone();
    for iu in 0..nu {
        for iv in 0..nv {
            next[(iu, iv)] += rows[iu][iv] * factor;
        }
    }
    next
}

fn sup_difference(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

struct IterationOutcome {
    values: Array2<Complex64>,
    iterations: u32,
    increments: Vec<f64>,
}

/// Iterates sweeps until the sup-norm update falls below `tol`.
#[allow(clippy::too_many_arguments)]
fn iterate(
    t0: Array2<Complex64>,
    initial: Option<Array2<Complex64>>,
    dv: &Array2<Complex64>,
    factor: f64,
    h_u: f64,
    h_v: f64,
    u_zero: usize,
    v_anchor: usize,
    tol: f64,
    max_iter: u32,
) -> Result<IterationOutcome> {
    let mut current = initial.unwrap_or_else(|| t0.clone());
    let mut increments = Vec::new();
    for iteration in 1..=max_iter {
        let next = sweep(&current, &t0, dv, factor, h_u, h_v, u_zero, v_anchor);
        let delta = sup_difference(&next, &current);
        increments.push(delta);
        current = next;
        if delta <= tol {
            return Ok(IterationOutcome {
                values: current,
                iterations: iteration,
                increments,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        final_delta: increments.last().copied().unwrap_or(f64::NAN),
    })
}

/// Axis-data iterate `T_0(u, v) = slope u + c + g(v)`.
fn goursat_seed(
    bc: &BoundaryConditionSpec,
    u_nodes: &[f64],
    v_nodes: &[f64],
    mu: f64,
    hbar: f64,
) -> Array2<Complex64> {
    let slope = bc.slope().value().to_f64().unwrap();
    let constant = bc.constant().eval(mu, hbar);
    let g_terms: Vec<(u32, Complex64)> = bc
        .g_coefficients()
        .map(|(k, c)| (k, c.eval(mu, hbar)))
        .collect();
    let mut out = Array2::zeros((u_nodes.len(), v_nodes.len()));
    for (iu, &u) in u_nodes.iter().enumerate() {
        for (iv, &v) in v_nodes.iter().enumerate() {
            let mut g = Complex64::new(0.0, 0.0);
            for &(k, c) in &g_terms {
                g += c * v.powi(k as i32);
            }
            out[(iu, iv)] = Complex64::new(slope * u, 0.0) + constant + g;
        }
    }
    out
}

/// Solves the Goursat problem for the `sgn`-form kernel factor on a grid.
///
/// Free potentials converge in one sweep (the integrand vanishes), so the
/// result is the seed `T_0` exactly.
pub fn picard_solve(
    v: &PolynomialPotential,
    bc: &BoundaryConditionSpec,
    grid: &GridSpec,
    mu: f64,
    hbar: f64,
    tol: f64,
    max_iter: u32,
) -> Result<GridKernel> {
    picard_solve_from(v, bc, grid, mu, hbar, tol, max_iter, None)
}

/// [`picard_solve`] with an explicit starting iterate (used to probe the
/// uniqueness of the fixed point; any starting grid converges to it).
#[allow(clippy::too_many_arguments)]
pub fn picard_solve_from(
    v: &PolynomialPotential,
    bc: &BoundaryConditionSpec,
    grid: &GridSpec,
    mu: f64,
    hbar: f64,
    tol: f64,
    max_iter: u32,
    initial: Option<Array2<Complex64>>,
) -> Result<GridKernel> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let u_nodes = grid.u_nodes();
    let v_nodes = grid.v_nodes();
    let dv = difference_grid(v, &u_nodes, &v_nodes, mu, hbar);
    let t0 = goursat_seed(bc, &u_nodes, &v_nodes, mu, hbar);
    let factor = mu / (2.0 * hbar * hbar);
    let outcome = iterate(
        t0,
        initial,
        &dv,
        factor,
        grid.u_step(),
        grid.v_step(),
        grid.u_zero_index(),
        grid.v_zero_index(),
        tol,
        max_iter,
    )?;
    Ok(GridKernel {
        u_nodes,
        v_nodes,
        values: outcome.values,
        iterations_used: outcome.iterations,
        final_delta: outcome.increments.last().copied().unwrap_or(0.0),
        increments: outcome.increments,
        v0_plus: None,
        v0_minus: None,
    })
}

/// Analytic envelope of the `j`-th Picard increment over the grid rectangle:
///
/// ```text
/// bound_j = (mu M / 2 hbar^2)^j U^j V^j / j!
///           * (U + sum_k |beta_k| V^k / ((k+1) (k+2) ... (k+j)))
/// ```
///
/// with `U`, `V` the corner radii and `M` the corner bound on `|DV|`
/// (sum of term magnitudes, monotone on the rectangle).  Decreases to 0 in
/// `j`, and dominates the observed increments up to quadrature error.
pub fn picard_bound(
    v: &PolynomialPotential,
    bc: &BoundaryConditionSpec,
    grid: &GridSpec,
    j: u32,
    mu: f64,
    hbar: f64,
) -> f64 {
    assert!(j >= 1, "the bound indexes increments, which start at j = 1");
    let u_radius = grid.u_radius();
    let v_radius = grid.v_radius();
    let m_bound: f64 = if v.is_free() {
        0.0
    } else {
        potential_difference_expand(v, v.max_degree())
            .iter()
            .map(|(key, c)| {
                c.eval(mu, hbar).norm()
                    * u_radius.powi(key.m as i32)
                    * v_radius.powi(key.n as i32)
            })
            .sum()
    };
    let per_step = mu * m_bound / (2.0 * hbar * hbar) * u_radius * v_radius;
    let mut geometric = 1.0;
    let mut j_factorial = 1.0;
    for i in 1..=j {
        geometric *= per_step;
        j_factorial *= f64::from(i);
    }
    let mut envelope = u_radius;
    for (k, c) in bc.g_coefficients() {
        let mut suppression = 1.0;
        for i in 1..=j {
            suppression *= f64::from(k + i);
        }
        envelope += c.eval(mu, hbar).norm() * v_radius.powi(k as i32) / suppression;
    }
    geometric / j_factorial * envelope
}

/// Solves the modified (delta-sourced) equation on a grid: the two
/// `v`-half-planes are integrated independently with the one-sided seed
///
/// ```text
/// T_0 = (mu / 2 i hbar) u [alpha H(v) - beta H(-v)] + f(u) + g(v)
/// ```
///
/// and the reported `v = 0` row is the average of the two one-sided limits
/// (both limits are returned alongside).
#[allow(clippy::too_many_arguments)]
pub fn picard_solve_mtke(
    v: &PolynomialPotential,
    dbc: &DistributionBoundary,
    grid: &GridSpec,
    mu: f64,
    hbar: f64,
    tol: f64,
    max_iter: u32,
) -> Result<GridKernel> {
    if tol <= 0.0 {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let u_nodes = grid.u_nodes();
    let v_nodes = grid.v_nodes();
    let nu = grid.nu();
    let nv = grid.nv();
    let zv = grid.v_zero_index();
    let factor = mu / (2.0 * hbar * hbar);
    let half_prefactor = Complex64::new(0.0, -mu / (2.0 * hbar));
    let alpha = dbc.alpha().eval(mu, hbar);
    let beta = dbc.beta().eval(mu, hbar);

    // Seed for one half: `positive` selects the v >= 0 sheet.
    let seed_half = |v_slice: &[f64], positive: bool| -> Array2<Complex64> {
        let mut out = Array2::zeros((nu, v_slice.len()));
        for (iu, &u) in u_nodes.iter().enumerate() {
            // f weights depend on the sign of u, not on the sheet, so the
            // midpoint convention applies at u = 0 as in the exact kernel.
            let mut f_val = Complex64::new(0.0, 0.0);
            for term in dbc.f_terms() {
                f_val += term.eval(u, mu, hbar);
            }
            let step = if positive {
                half_prefactor * alpha * u
            } else {
                -half_prefactor * beta * u
            };
            for (i, &w) in v_slice.iter().enumerate() {
                let mut g_val = Complex64::new(0.0, 0.0);
                for term in dbc.g_terms() {
                    g_val += term.eval_one_sided(w, positive, mu, hbar);
                }
                out[(iu, i)] = step + f_val + g_val;
            }
        }
        out
    };

    let upper_nodes = &v_nodes[zv..];
    let lower_nodes = &v_nodes[..=zv];
    let dv_upper = difference_grid(v, &u_nodes, upper_nodes, mu, hbar);
    let dv_lower = difference_grid(v, &u_nodes, lower_nodes, mu, hbar);
    let upper = iterate(
        seed_half(upper_nodes, true),
        None,
        &dv_upper,
        factor,
        grid.u_step(),
        grid.v_step(),
        grid.u_zero_index(),
        0,
        tol,
        max_iter,
    )?;
    let lower = iterate(
        seed_half(lower_nodes, false),
        None,
        &dv_lower,
        factor,
        grid.u_step(),
        grid.v_step(),
        grid.u_zero_index(),
        zv,
        tol,
        max_iter,
    )?;

    let mut values = Array2::zeros((nu, nv));
    for iu in 0..nu {
        for iv in 0..zv {
            values[(iu, iv)] = lower.values[(iu, iv)];
        }
        values[(iu, zv)] =
            (lower.values[(iu, zv)] + upper.values[(iu, 0)]) * 0.5;
        for iv in zv + 1..nv {
            values[(iu, iv)] = upper.values[(iu, iv - zv)];
        }
    }
    let v0_plus = (0..nu).map(|iu| upper.values[(iu, 0)]).collect();
    let v0_minus = (0..nu).map(|iu| lower.values[(iu, zv)]).collect();
    let mut increments = Vec::new();
    let sweeps = upper.increments.len().max(lower.increments.len());
    for i in 0..sweeps {
        let a = upper.increments.get(i).copied().unwrap_or(0.0);
        let b = lower.increments.get(i).copied().unwrap_or(0.0);
        increments.push(a.max(b));
    }
    Ok(GridKernel {
        u_nodes,
        v_nodes,
        values,
        iterations_used: upper.iterations.max(lower.iterations),
        final_delta: increments.last().copied().unwrap_or(0.0),
        increments,
        v0_plus: Some(v0_plus),
        v0_minus: Some(v0_minus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryConditionSpec;
    use crate::distribution::mtke_ho_solution;
    use crate::frobenius::solve_tke;
    use crate::scalar::{rat, GradedScalar};

    fn toa() -> BoundaryConditionSpec {
        BoundaryConditionSpec::time_of_arrival()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::symmetric(rat(1, 1), 41).is_ok());
        // Even count.
        assert!(matches!(
            GridSpec::symmetric(rat(1, 1), 40),
            Err(Error::InvalidGrid(_))
        ));
        // Zero off the grid lines: [-1/3, 1] with 5 points has h = 1/3 but
        // nodes at -1/3, 0, ... fine; [-1/4, 1] with 5 points has h = 5/16.
        assert!(GridSpec::new((rat(-1, 3), rat(1, 1)), (rat(-1, 1), rat(1, 1)), 5, 5).is_ok());
        assert!(matches!(
            GridSpec::new((rat(-1, 4), rat(1, 1)), (rat(-1, 1), rat(1, 1)), 5, 5),
            Err(Error::InvalidGrid(_))
        ));
        // Zero outside the range entirely.
        assert!(matches!(
            GridSpec::new((rat(1, 2), rat(1, 1)), (rat(-1, 1), rat(1, 1)), 5, 5),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn cumulative_simpson_is_exact_on_cubics() {
        // Simpson integrates cubics exactly; the cumulative variant must too.
        let h = 0.25;
        let nodes: Vec<f64> = (0..9).map(|i| f64::from(i) * h).collect();
        let f: Vec<Complex64> = nodes
            .iter()
            .map(|&x| Complex64::new(x * x * x - 2.0 * x + 1.0, 0.5 * x * x))
            .collect();
        let cumulative = cumulative_simpson(&f, h);
        for (i, &x) in nodes.iter().enumerate() {
            let exact = Complex64::new(
                x.powi(4) / 4.0 - x * x + x,
                0.5 * x.powi(3) / 3.0,
            );
            assert!(
                (cumulative[i] - exact).norm() < 1e-13,
                "node {i}: {} vs {exact}",
                cumulative[i]
            );
        }
    }

    #[test]
    fn cumulative_from_zero_splits_at_anchor() {
        let h = 0.2;
        let nodes: Vec<f64> = (0..11).map(|i| -1.0 + f64::from(i) * h).collect();
        let f: Vec<Complex64> = nodes
            .iter()
            .map(|&x| Complex64::new(x * x, 0.0))
            .collect();
        let out = cumulative_from_zero(&f, h, 5);
        for (i, &x) in nodes.iter().enumerate() {
            let exact = x.powi(3) / 3.0;
            assert!(
                (out[i].re - exact).abs() < 1e-13,
                "node {i}: {} vs {exact}",
                out[i].re
            );
            assert_eq!(out[i].im, 0.0);
        }
    }

    #[test]
    fn free_potential_is_exact_after_one_sweep() {
        let grid = GridSpec::symmetric(rat(1, 1), 21).unwrap();
        let solution = picard_solve(
            &PolynomialPotential::free(),
            &toa(),
            &grid,
            1.0,
            1.0,
            1e-12,
            5,
        )
        .unwrap();
        assert_eq!(solution.iterations_used, 1);
        assert_eq!(solution.final_delta, 0.0);
        let error = solution.max_error_vs(|u, _| Complex64::new(u / 4.0, 0.0));
        assert_eq!(error, 0.0);
    }

    #[test]
    fn harmonic_matches_series_solver() {
        let omega = rat(1, 1);
        let v = PolynomialPotential::harmonic(&omega);
        let grid = GridSpec::symmetric(rat(1, 1), 101).unwrap();
        let solution = picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        let series = solve_tke(&v, &toa(), 40).unwrap();
        let error = solution.max_error_vs(|u, w| series.evaluate_uv(u, w, 1.0, 1.0));
        assert!(error < 1e-8, "sup error {error}");
    }

    #[test]
    fn grid_refinement_shows_fourth_order() {
        // omega = 2 keeps the quadrature error well above the iteration
        // tolerance at every resolution tried here.
        let v = PolynomialPotential::harmonic(&rat(2, 1));
        let series = solve_tke(&v, &toa(), 40).unwrap();
        let mut errors = Vec::new();
        for n in [51usize, 101, 201] {
            let grid = GridSpec::symmetric(rat(1, 1), n).unwrap();
            let solution = picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-13, 60).unwrap();
            errors.push(solution.max_error_vs(|u, w| series.evaluate_uv(u, w, 1.0, 1.0)));
        }
        // Halving h should shrink the error by roughly 2^4.
        assert!(errors[1] < errors[0] / 8.0, "errors {errors:?}");
        assert!(errors[2] < errors[1] / 8.0, "errors {errors:?}");
    }

    #[test]
    fn increments_respect_the_analytic_bound() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let bc = BoundaryConditionSpec::new(
            crate::boundary::DiagonalSlope::Conjugate,
            GradedScalar::zero(),
            [(2, GradedScalar::rational(1, 3))],
        )
        .unwrap();
        let grid = GridSpec::symmetric(rat(1, 1), 41).unwrap();
        let solution = picard_solve(&v, &bc, &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        for (index, &observed) in solution.increments.iter().enumerate() {
            let j = index as u32 + 1;
            let envelope = picard_bound(&v, &bc, &grid, j, 1.0, 1.0);
            assert!(
                observed <= 2.0 * envelope + 1e-15,
                "increment {j}: {observed} vs envelope {envelope}"
            );
        }
    }

    #[test]
    fn bound_examples() {
        let grid = GridSpec::symmetric(rat(1, 1), 21).unwrap();
        let free = PolynomialPotential::free();
        for j in 1..=6 {
            assert_eq!(picard_bound(&free, &toa(), &grid, j, 1.0, 1.0), 0.0);
        }
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        // M = 1/2 at the corner, so bound_3 = (1/4)^3 / 3! * 1.
        let bound = picard_bound(&v, &toa(), &grid, 3, 1.0, 1.0);
        assert!((bound - 0.25f64.powi(3) / 6.0).abs() < 1e-15);
        // Consecutive-ratio inequality.
        let per_step = 0.25;
        for j in 1..6 {
            let a = picard_bound(&v, &toa(), &grid, j, 1.0, 1.0);
            let b = picard_bound(&v, &toa(), &grid, j + 1, 1.0, 1.0);
            assert!(b <= per_step / f64::from(j + 1) * a + 1e-18);
        }
    }

    #[test]
    fn different_seeds_converge_to_the_same_fixed_point() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let grid = GridSpec::symmetric(rat(1, 1), 41).unwrap();
        let tol = 1e-11;
        let base = picard_solve(&v, &toa(), &grid, 1.0, 1.0, tol, 40).unwrap();
        let mut perturbed_start = Array2::zeros((grid.nu(), grid.nv()));
        for (iu, &u) in base.u_nodes.iter().enumerate() {
            for (iv, &w) in base.v_nodes.iter().enumerate() {
                perturbed_start[(iu, iv)] = Complex64::new((3.0 * u).cos(), w.sin());
            }
        }
        let perturbed = picard_solve_from(
            &v,
            &toa(),
            &grid,
            1.0,
            1.0,
            tol,
            60,
            Some(perturbed_start),
        )
        .unwrap();
        assert!(base.max_difference(&perturbed) <= 10.0 * tol);
    }

    #[test]
    fn non_convergence_reports_final_delta() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let grid = GridSpec::symmetric(rat(1, 1), 21).unwrap();
        match picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-12, 2) {
            Err(Error::NonConvergence {
                iterations: 2,
                final_delta,
            }) => assert!(final_delta > 1e-12),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn mtke_free_is_exact_sgn_kernel() {
        let grid = GridSpec::symmetric(rat(1, 1), 21).unwrap();
        let solution = picard_solve_mtke(
            &PolynomialPotential::free(),
            &DistributionBoundary::symmetric(),
            &grid,
            1.0,
            1.0,
            1e-12,
            5,
        )
        .unwrap();
        let error = solution.max_error_vs(|u, w| {
            let sgn = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            Complex64::new(0.0, -0.25) * u * sgn
        });
        assert_eq!(error, 0.0);
        let plus = solution.v0_plus.as_ref().unwrap();
        let minus = solution.v0_minus.as_ref().unwrap();
        for (iu, &u) in solution.u_nodes.iter().enumerate() {
            assert!((plus[iu] - Complex64::new(0.0, -0.25) * u).norm() < 1e-15);
            assert!((minus[iu] - Complex64::new(0.0, 0.25) * u).norm() < 1e-15);
        }
    }

    #[test]
    fn mtke_harmonic_matches_closed_form() {
        let omega = rat(1, 1);
        let v = PolynomialPotential::harmonic(&omega);
        let dbc = DistributionBoundary::symmetric();
        let grid = GridSpec::symmetric(rat(1, 1), 101).unwrap();
        let solution = picard_solve_mtke(&v, &dbc, &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        let closed = mtke_ho_solution(&dbc, &omega, 12);
        let error = solution.max_error_vs(|u, w| closed.evaluate(u, w, 1.0, 1.0));
        assert!(error < 1e-8, "sup error {error}");
    }

    #[test]
    fn mtke_with_f_block_matches_closed_form() {
        use crate::distribution::{PiecewiseTerm, PolyVar};
        use crate::phase_space::PieceWeight;
        let omega = rat(1, 1);
        let v = PolynomialPotential::harmonic(&omega);
        let dbc = DistributionBoundary::new(
            GradedScalar::rational(1, 2),
            GradedScalar::rational(1, 2),
            vec![PiecewiseTerm::new(
                PolyVar::U,
                2,
                PieceWeight::One,
                GradedScalar::one(),
            )],
            vec![],
        )
        .unwrap();
        let grid = GridSpec::symmetric(rat(1, 1), 101).unwrap();
        let solution = picard_solve_mtke(&v, &dbc, &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        let closed = mtke_ho_solution(&dbc, &omega, 12);
        let error = solution.max_error_vs(|u, w| closed.evaluate(u, w, 1.0, 1.0));
        assert!(error < 1e-8, "sup error {error}");
        // The even ladder carries scale 1/(8^j j!) and moments u^2, u^4/4,
        // u^6/24; check one interior node against the explicit expansion.
        let iu = 30;
        let iv = 70;
        let (u, w) = (solution.u_nodes[iu], solution.v_nodes[iv]);
        let quarter = Complex64::new(0.0, -0.25);
        let expected: Complex64 = quarter * u * (1.0 + (u * w / 2.0).powi(2) / 6.0)
            + (u.powi(2) + w.powi(2) / 8.0 * u.powi(4) / 4.0)
            + (w.powi(4) / 128.0 * u.powi(6) / 24.0);
        assert!(
            (solution.value(iu, iv) - expected).norm() < 1e-6,
            "{} vs {expected}",
            solution.value(iu, iv)
        );
    }

    #[test]
    fn quartic_cross_oracle() {
        // V = q^4 / 10 against the series solver at K = 24.
        let v = PolynomialPotential::from_coeffs([(4, GradedScalar::rational(1, 10))]);
        let grid = GridSpec::symmetric(rat(1, 1), 101).unwrap();
        let solution = picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        let series = solve_tke(&v, &toa(), 24).unwrap();
        let error = solution.max_error_vs(|u, w| series.evaluate_uv(u, w, 1.0, 1.0));
        assert!(error < 1e-8, "sup error {error}");
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let v = PolynomialPotential::harmonic(&rat(1, 1));
        let grid = GridSpec::symmetric(rat(1, 1), 41).unwrap();
        let reference = picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-12, 40).unwrap();
        for threads in [1usize, 2, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let run = pool
                .install(|| picard_solve(&v, &toa(), &grid, 1.0, 1.0, 1e-12, 40))
                .unwrap();
            assert_eq!(run.values, reference.values, "{threads} threads");
        }
    }
}
