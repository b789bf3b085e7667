//! Output rendering: canonical JSON lines and CSV tables.
//!
//! Rationals print exactly (`"p/q"`); floating-point values appear only in
//! grid and plot outputs and always carry 17 significant digits so that
//! outputs are byte-stable and round-trip through parsing unchanged.

use num_complex::Complex64;
use serde::Serialize;
use timekernel_core::phase_space::{PhaseSpaceSeries, PieceWeight};
use timekernel_core::picard::GridKernel;
use timekernel_core::scalar::rational_string;
use timekernel_core::series::KernelSeries;
use timekernel_core::tables::CoefficientTable;

/// 17 significant digits, scientific notation.
pub fn float17(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn complex17(z: Complex64) -> [String; 2] {
    [float17(z.re), float17(z.im)]
}

/// Canonical single-line JSON with a trailing newline.
pub fn json_line<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string(value).expect("output serialization cannot fail");
    text.push('\n');
    text
}

fn push_csv_row(out: &mut String, fields: &[&str]) {
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// Kernel series rows `m,n,hbar,mu,re,im` (exact rationals).
pub fn series_csv(t: &KernelSeries) -> String {
    let mut out = String::new();
    push_csv_row(&mut out, &["m", "n", "hbar", "mu", "re", "im"]);
    for (key, c) in t.iter() {
        push_csv_row(
            &mut out,
            &[
                &key.m.to_string(),
                &key.n.to_string(),
                &key.hbar.to_string(),
                &c.mu_exp().to_string(),
                &rational_string(c.re()),
                &rational_string(c.im()),
            ],
        );
    }
    out
}

fn weight_kind(weight: PieceWeight) -> &'static str {
    match weight {
        PieceWeight::One => "delta",
        PieceWeight::Sgn => "delta_sgn",
        PieceWeight::HeavisidePlus => "delta_hplus",
        PieceWeight::HeavisideMinus => "delta_hminus",
    }
}

/// Phase-space rows `m,j_or_d,kind,hbar,mu,re,im`: regular terms list the
/// `1/p` power under `j_or_d`, delta terms the derivative order (delta
/// coefficients are the exact rational multiples of pi).
pub fn phase_space_csv(series: &PhaseSpaceSeries) -> String {
    let mut out = String::new();
    push_csv_row(
        &mut out,
        &["m", "j_or_d", "kind", "hbar", "mu", "re", "im"],
    );
    for (key, value) in series.regular_iter() {
        push_csv_row(
            &mut out,
            &[
                &key.q_pow.to_string(),
                &key.p_inv.to_string(),
                "regular",
                &key.hbar.to_string(),
                &key.mu.to_string(),
                &rational_string(&value.re),
                &rational_string(&value.im),
            ],
        );
    }
    for (key, value) in series.delta_iter() {
        push_csv_row(
            &mut out,
            &[
                &key.q_pow.to_string(),
                &key.order.to_string(),
                weight_kind(key.weight),
                &key.hbar.to_string(),
                &key.mu.to_string(),
                &rational_string(&value.re),
                &rational_string(&value.im),
            ],
        );
    }
    out
}

/// Coefficient-table rows `m,j,re,im,mu,hbar` (exact rationals).
pub fn c_table_csv(table: &CoefficientTable) -> String {
    let mut out = String::new();
    push_csv_row(&mut out, &["m", "j", "re", "im", "mu", "hbar"]);
    for ((m, j), c) in table.iter() {
        push_csv_row(
            &mut out,
            &[
                &m.to_string(),
                &j.to_string(),
                &rational_string(c.re()),
                &rational_string(c.im()),
                &c.mu_exp().to_string(),
                &c.hbar_exp().to_string(),
            ],
        );
    }
    out
}

/// Grid rows `u,v,re,im` in row-major (u outer, v inner) order.
pub fn grid_csv(grid: &GridKernel) -> String {
    let mut out = String::new();
    push_csv_row(&mut out, &["u", "v", "re", "im"]);
    for (iu, &u) in grid.u_nodes.iter().enumerate() {
        for (iv, &v) in grid.v_nodes.iter().enumerate() {
            let z = grid.value(iu, iv);
            push_csv_row(
                &mut out,
                &[&float17(u), &float17(v), &float17(z.re), &float17(z.im)],
            );
        }
    }
    out
}

/// Serialized grid solution: floats as 17-significant-digit strings, values
/// row-major with `u` outer.
#[derive(Serialize)]
pub struct GridOutput {
    pub iterations: u32,
    pub final_delta: String,
    pub increments: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<Comparison>,
    pub u: Vec<String>,
    pub v: Vec<String>,
    pub values: Vec<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0_plus: Option<Vec<[String; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0_minus: Option<Vec<[String; 2]>>,
}

#[derive(Serialize)]
pub struct Comparison {
    pub reference: &'static str,
    pub order: u32,
    pub sup_error: String,
}

pub fn grid_output(grid: &GridKernel, comparison: Option<Comparison>) -> GridOutput {
    let mut values = Vec::with_capacity(grid.u_nodes.len() * grid.v_nodes.len());
    for iu in 0..grid.u_nodes.len() {
        for iv in 0..grid.v_nodes.len() {
            values.push(complex17(grid.value(iu, iv)));
        }
    }
    let sided = |side: &Option<Vec<Complex64>>| {
        side.as_ref()
            .map(|row| row.iter().map(|&z| complex17(z)).collect())
    };
    GridOutput {
        iterations: grid.iterations_used,
        final_delta: float17(grid.final_delta),
        increments: grid.increments.iter().map(|&d| float17(d)).collect(),
        comparison,
        u: grid.u_nodes.iter().map(|&x| float17(x)).collect(),
        v: grid.v_nodes.iter().map(|&x| float17(x)).collect(),
        values,
        v0_plus: sided(&grid.v0_plus),
        v0_minus: sided(&grid.v0_minus),
    }
}
