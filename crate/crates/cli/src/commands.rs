//! One function per subcommand, mapping a resolved [`Job`] to an output
//! payload and exit code.

use num_traits::ToPrimitive;
use serde::Serialize;
use timekernel_core::boundary::BoundaryConditionSpec;
use timekernel_core::distribution::{
    delta_jump_check, mtke_classify, mtke_free_solution, mtke_ho_solution,
    weyl_transform_distribution, DistributionBoundary, DistributionKernel,
};
use timekernel_core::frobenius::{classify_symmetry, conjugacy_check, solve_tke};
use timekernel_core::phase_space::{
    inverse_hamiltonian_series, local_toa_series, weyl_transform_sgn, PhaseSpaceSeries,
};
use timekernel_core::picard::{picard_solve, picard_solve_mtke, GridKernel};
use timekernel_core::potential::PolynomialPotential;
use timekernel_core::series::KernelSeries;
use timekernel_core::tables::{build_c_table, power_identity_check};

use crate::config::{BoundaryChoice, Job, OutputFormat};
use crate::output::{
    c_table_csv, complex17, float17, grid_csv, grid_output, json_line, phase_space_csv,
    series_csv, Comparison,
};
use crate::Failure;

/// Payload plus exit code (0 unless a mathematical check failed).
pub struct Outcome {
    pub payload: String,
    pub code: i32,
}

impl Outcome {
    fn ok(payload: String) -> Self {
        Self { payload, code: 0 }
    }
}

fn format_of(job: &Job) -> OutputFormat {
    job.format.unwrap_or(OutputFormat::Json)
}

/// Axis-data boundary for the unmodified equation; shift specifications
/// expand to their equivalent axis data.
fn axis_boundary(job: &Job) -> Result<BoundaryConditionSpec, Failure> {
    match &job.boundary {
        BoundaryChoice::None => Ok(BoundaryConditionSpec::time_of_arrival()),
        BoundaryChoice::Axis(bc) => Ok(bc.clone()),
        BoundaryChoice::Shift(shift) => Ok(shift.expand()),
        BoundaryChoice::Distribution(_) => Err(Failure::validation(
            "this command solves the unmodified equation; use the mtke command \
             for distributional boundary data",
        )),
    }
}

fn distribution_boundary(job: &Job) -> Result<DistributionBoundary, Failure> {
    match &job.boundary {
        BoundaryChoice::None => Ok(DistributionBoundary::symmetric()),
        BoundaryChoice::Distribution(dbc) => Ok(dbc.clone()),
        _ => Err(Failure::validation(
            "the mtke command takes distributional boundary data \
             (the \"distribution\" config field)",
        )),
    }
}

fn solve_axis(job: &Job) -> Result<KernelSeries, Failure> {
    let bc = axis_boundary(job)?;
    solve_tke(&job.potential, &bc, job.order).map_err(Failure::from)
}

/// Closed-form solution of the modified equation: exact for the free
/// particle, ladder-truncated at `order` for the harmonic oscillator.
fn distribution_kernel(
    job: &Job,
    dbc: &DistributionBoundary,
) -> Result<DistributionKernel, Failure> {
    if job.potential.is_free() {
        return Ok(mtke_free_solution(dbc));
    }
    let Some(omega) = &job.omega else {
        return Err(Failure::validation(
            "a non-free modified-equation solve needs \"omega\" with the \
             potential equal to the matching harmonic one",
        ));
    };
    if job.potential != PolynomialPotential::harmonic(omega) {
        return Err(Failure::validation(
            "the modified-equation closed form covers free and harmonic \
             potentials; the given potential does not match omega",
        ));
    }
    Ok(mtke_ho_solution(dbc, omega, job.order))
}

pub fn solve_tke_cmd(job: &Job) -> Result<Outcome, Failure> {
    let t = solve_axis(job)?;
    Ok(Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(&t),
        OutputFormat::Csv => series_csv(&t),
    }))
}

#[derive(Serialize)]
struct CheckReport {
    conjugate: bool,
    hermitian: bool,
    time_reversal: bool,
}

pub fn check_cmd(job: &Job) -> Result<Outcome, Failure> {
    let t = solve_axis(job)?;
    let conjugacy = conjugacy_check(&t);
    let symmetry = classify_symmetry(&t);
    let report = CheckReport {
        conjugate: conjugacy.conjugate,
        hermitian: symmetry.hermitian,
        time_reversal: symmetry.time_reversal,
    };
    Ok(Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(&report),
        OutputFormat::Csv => format!(
            "conjugate,hermitian,time_reversal\n{},{},{}\n",
            report.conjugate, report.hermitian, report.time_reversal
        ),
    }))
}

fn phase_space_outcome(job: &Job, series: &PhaseSpaceSeries) -> Outcome {
    Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(series),
        OutputFormat::Csv => phase_space_csv(series),
    })
}

/// Phase-space image of the configured problem: transform of the series
/// solution for axis data, of the closed-form kernel for distributional
/// data.
fn weyl_series(job: &Job) -> Result<PhaseSpaceSeries, Failure> {
    match &job.boundary {
        BoundaryChoice::Distribution(dbc) => {
            let kernel = distribution_kernel(job, dbc)?;
            Ok(weyl_transform_distribution(&kernel))
        }
        _ => Ok(weyl_transform_sgn(&solve_axis(job)?)),
    }
}

pub fn weyl_cmd(job: &Job) -> Result<Outcome, Failure> {
    let series = weyl_series(job)?;
    Ok(phase_space_outcome(job, &series))
}

pub fn classical_toa_cmd(job: &Job) -> Result<Outcome, Failure> {
    let k_max = job.k_max.unwrap_or(job.order);
    let expansion = local_toa_series(&job.potential, k_max).map_err(Failure::from)?;
    Ok(phase_space_outcome(job, &expansion.series))
}

pub fn inverse_h_cmd(job: &Job) -> Result<Outcome, Failure> {
    let n = match &job.boundary {
        BoundaryChoice::Shift(shift) => shift.order(),
        _ => job.inverse_order.unwrap_or(1),
    };
    if n == 0 {
        return Err(Failure::validation("inverse power must be at least 1"));
    }
    let j_max = job.j_max.unwrap_or(job.order);
    let series = inverse_hamiltonian_series(&job.potential, n, j_max);
    Ok(phase_space_outcome(job, &series))
}

fn float_params(job: &Job) -> (f64, f64) {
    (
        job.mu.to_f64().expect("mu fits in a double"),
        job.hbar.to_f64().expect("hbar fits in a double"),
    )
}

fn picard_grid(job: &Job) -> Result<(GridKernel, Option<Comparison>), Failure> {
    let (mu, hbar) = float_params(job);
    match &job.boundary {
        BoundaryChoice::Distribution(dbc) => {
            let grid = picard_solve_mtke(
                &job.potential,
                dbc,
                &job.grid,
                mu,
                hbar,
                job.tolerance,
                job.max_iterations,
            )
            .map_err(Failure::from)?;
            let comparison = match distribution_kernel(job, dbc) {
                Ok(kernel) => Some(Comparison {
                    reference: "closed_form",
                    order: job.order,
                    sup_error: float17(
                        grid.max_error_vs(|u, v| kernel.evaluate(u, v, mu, hbar)),
                    ),
                }),
                // No closed form for this potential; report the grid alone.
                Err(_) => None,
            };
            Ok((grid, comparison))
        }
        _ => {
            let bc = axis_boundary(job)?;
            let grid = picard_solve(
                &job.potential,
                &bc,
                &job.grid,
                mu,
                hbar,
                job.tolerance,
                job.max_iterations,
            )
            .map_err(Failure::from)?;
            let series = solve_tke(&job.potential, &bc, job.order).map_err(Failure::from)?;
            let comparison = Some(Comparison {
                reference: "series",
                order: job.order,
                sup_error: float17(
                    grid.max_error_vs(|u, v| series.evaluate_uv(u, v, mu, hbar)),
                ),
            });
            Ok((grid, comparison))
        }
    }
}

pub fn picard_cmd(job: &Job) -> Result<Outcome, Failure> {
    let (grid, comparison) = picard_grid(job)?;
    Ok(Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(&grid_output(&grid, comparison)),
        OutputFormat::Csv => grid_csv(&grid),
    }))
}

#[derive(Serialize)]
struct MtkeOutput<'a> {
    kernel: &'a DistributionKernel,
    weyl: &'a PhaseSpaceSeries,
    classification: timekernel_core::distribution::SymmetryTriple,
    jump: [String; 2],
}

pub fn mtke_cmd(job: &Job) -> Result<Outcome, Failure> {
    let dbc = distribution_boundary(job)?;
    let kernel = distribution_kernel(job, &dbc)?;
    let image = weyl_transform_distribution(&kernel);
    let (mu, hbar) = float_params(job);
    let report = MtkeOutput {
        kernel: &kernel,
        weyl: &image,
        classification: mtke_classify(&dbc),
        jump: complex17(delta_jump_check(&kernel, mu, hbar)),
    };
    Ok(Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(&report),
        OutputFormat::Csv => phase_space_csv(&image),
    }))
}

pub fn c_table_cmd(job: &Job) -> Result<Outcome, Failure> {
    let m_max = job.m_max.unwrap_or(10);
    let j_max = job.j_max.unwrap_or(4);
    let table = build_c_table(&job.potential, m_max, j_max).map_err(Failure::from)?;
    Ok(Outcome::ok(match format_of(job) {
        OutputFormat::Json => json_line(&table),
        OutputFormat::Csv => c_table_csv(&table),
    }))
}

#[derive(Serialize)]
struct IdentityReport {
    identity: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_discrepancy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    worst_entry: Option<(u32, u32)>,
}

pub fn identity_check_cmd(job: &Job) -> Result<Outcome, Failure> {
    let k_max = job.k_max.unwrap_or(4);
    let m_max = job.m_max.unwrap_or(10);
    let report = power_identity_check(&job.potential, k_max, m_max).map_err(Failure::from)?;
    let (payload, code) = if report.holds {
        (
            IdentityReport {
                identity: "holds",
                max_discrepancy: None,
                worst_entry: None,
            },
            0,
        )
    } else {
        (
            IdentityReport {
                identity: "fails",
                max_discrepancy: Some(report.max_discrepancy.clone()),
                worst_entry: report.worst_entry,
            },
            4,
        )
    };
    let text = match format_of(job) {
        OutputFormat::Json => json_line(&payload),
        OutputFormat::Csv => format!(
            "identity,max_discrepancy,worst_m,worst_k\n{},{},{},{}\n",
            payload.identity,
            payload.max_discrepancy.as_deref().unwrap_or(""),
            payload
                .worst_entry
                .map(|(m, _)| m.to_string())
                .unwrap_or_default(),
            payload
                .worst_entry
                .map(|(_, k)| k.to_string())
                .unwrap_or_default(),
        ),
    };
    Ok(Outcome {
        payload: text,
        code,
    })
}

/// Samples the regular part of the phase-space image on the configured
/// lattice.  Off `p = 0` the delta sector vanishes pointwise, so the rows
/// are exact samples of the full image.
pub fn plot_data_cmd(job: &Job) -> Result<Outcome, Failure> {
    if job.format == Some(OutputFormat::Json) {
        return Err(Failure::validation(
            "plot-data emits a CSV stream; --format json is not available",
        ));
    }
    let Some(samples) = &job.samples else {
        return Err(Failure::validation(
            "plot-data needs a \"samples\" section with a p_range keeping a \
             positive margin from p = 0",
        ));
    };
    let series = weyl_series(job)?;
    let (mu, hbar) = float_params(job);
    let mut out = String::from("q,p,value\n");
    // An empty series has nothing to sample: header only.
    if series.is_empty() {
        return Ok(Outcome::ok(out));
    }
    for q in &samples.q_nodes {
        for p in &samples.p_nodes {
            let value = series.evaluate_regular(q, p, mu, hbar);
            let q_f = q.to_f64().expect("sample node fits in a double");
            let p_f = p.to_f64().expect("sample node fits in a double");
            out.push_str(&format!(
                "{},{},{}\n",
                float17(q_f),
                float17(p_f),
                float17(value.re)
            ));
        }
    }
    Ok(Outcome::ok(out))
}
