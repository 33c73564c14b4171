//! Figure presets: caption parameters hard-coded, grid defaults documented.

use num_complex::Complex64;

use ncs_core::deformation::{factorial_log_profile, u_function, DeformationSpec};
use ncs_core::measure::{laguerre_measure, MeasureDensity};
use ncs_core::phasespace::{wigner, GridSpec};
use ncs_core::states::{ncs_circle, truncation_for, NcsState};
use ncs_core::Field;

use crate::CliResult;

/// Default figure grid: covers the alpha = 3.5 support with sub-fringe
/// resolution.
pub const FIGURE_GRID_HALF_WIDTH: f64 = 8.0;
pub const FIGURE_GRID_POINTS: usize = 257;

/// Amplitude shared by the cat and circle figures.
pub const FIGURE_ALPHA: f64 = 3.5;

/// Truncation for the eta = 0.5 cat: the series diverges (|alpha| exceeds
/// sqrt(2)/eta), so the figure is a finite-truncation rendering cut just
/// below the first amplitude blow-up; n = 12 keeps the support inside the
/// default grid and the truncated state normalizable.
pub const FIG1B_N_MAX: usize = 12;

pub fn figure_grid() -> GridSpec {
    GridSpec::square(FIGURE_GRID_HALF_WIDTH, FIGURE_GRID_POINTS)
}

/// Cat / circle state behind a Wigner figure preset.
pub fn preset_state(name: &str) -> CliResult<NcsState> {
    let alpha = Complex64::new(FIGURE_ALPHA, 0.0);
    match name {
        // linear even cat
        "fig1a" => {
            let spec = DeformationSpec::Identity;
            let n_max = truncation_for(&spec, alpha, 2, 0)?;
            Ok(ncs_circle(&spec, alpha, 2, 0, n_max)?)
        }
        // nonlinear even cat at eta = 0.5
        "fig1b" => {
            let spec = DeformationSpec::TrappedIon { order: 2, eta2: 0.25 };
            Ok(ncs_circle(&spec, alpha, 2, 0, FIG1B_N_MAX)?)
        }
        // circle states at eta = 0.33
        "fig2a" => circle_preset(3),
        "fig2b" => circle_preset(4),
        other => Err(crate::CliError::InvalidConfig(format!("unknown state preset '{other}'"))),
    }
}

fn circle_preset(order: usize) -> CliResult<NcsState> {
    let eta = 0.33f64;
    let spec = DeformationSpec::TrappedIon { order, eta2: eta * eta };
    let alpha = Complex64::new(FIGURE_ALPHA, 0.0);
    let n_max = truncation_for(&spec, alpha, order, 0)?.max(200);
    Ok(ncs_circle(&spec, alpha, order, 0, n_max)?)
}

/// Wigner field of a figure preset on the default grid.
pub fn preset_field(name: &str) -> CliResult<Field> {
    let state = preset_state(name)?;
    Ok(wigner(&state, &figure_grid())?)
}

/// fig3: the asymptotic envelope function u(sqrt(z)) against z.
pub fn fig3_rows() -> Vec<(f64, f64)> {
    let z_max = 100.0;
    let points = 2001usize;
    (0..points)
        .map(|i| {
            let z = z_max * i as f64 / (points - 1) as f64;
            (z, u_function(z.sqrt()))
        })
        .collect()
}

/// fig4 presets: the log factorial profile for the caption's four eta^2.
pub fn fig4_eta2(name: &str) -> Option<f64> {
    match name {
        "fig4a" => Some(0.01),
        "fig4b" => Some(0.02),
        "fig4c" => Some(0.1),
        "fig4d" => Some(0.2),
        _ => None,
    }
}

pub const FIG4_N_MAX: usize = 10_000;

pub fn fig4_rows(eta2: f64) -> CliResult<Vec<(f64, f64)>> {
    let profile = factorial_log_profile(eta2, FIG4_N_MAX)?;
    Ok(profile.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect())
}

/// fig5: rank-50 Laguerre measures for the caption's four eta^2 values,
/// sampled on a linear x grid.
pub const FIG5_ETA2: [f64; 4] = [0.015, 0.0156, 0.0158, 0.016];
pub const FIG5_RANK: usize = 50;

pub fn fig5_rows() -> CliResult<Vec<(f64, f64, f64)>> {
    let x_max = 200.0;
    let points = 2001usize;
    let mut rows = Vec::with_capacity(points * FIG5_ETA2.len());
    for &eta2 in FIG5_ETA2.iter() {
        let spec = DeformationSpec::TrappedIon { order: 1, eta2 };
        let m = laguerre_measure(&spec, FIG5_RANK)?;
        for i in 0..points {
            let x = x_max * i as f64 / (points - 1) as f64;
            let x_eval = if x == 0.0 { 1e-12 } else { x };
            rows.push((eta2, x, m.density(x_eval)?));
        }
    }
    Ok(rows)
}

pub const ALL_PRESETS: [&str; 10] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig4c", "fig4d", "fig5",
];
