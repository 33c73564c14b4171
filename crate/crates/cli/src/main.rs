//! `ncs` — build deformed-oscillator coherent states, phase-space fields and
//! unity-resolution measures, and emit CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 deformation pole,
//! 4 divergence/overflow, 5 I/O failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use ncs_cli::emit::{self, Format, Metadata};
use ncs_cli::presets;
use ncs_cli::{CliError, CliResult};
use ncs_core::deformation::{
    factorial_log_profile, h_eval, u_function, DeformationSpec, SeriesBase,
};
use ncs_core::measure::{laguerre_measure, resolution_check, MeasureDensity};
use ncs_core::phasespace::{husimi, wigner, GridSpec};
use ncs_core::states::{convergence_probe, ncs_circle, truncation_for};

#[derive(Parser)]
#[command(
    name = "ncs",
    version,
    about = "Nonlinear coherent states of deformed oscillators: states, fields, measures",
    after_help = "Worker count is capped by the NCS_THREADS environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    /// Trapped-ion Laguerre-ratio deformation h_{N+1}(n; eta^2)
    TrappedIon,
    /// q-oscillator deformation sqrt(sinh(lambda n)/(n sinh lambda))
    QOscillator,
    /// Truncated eta^2 series of h1
    SeriesH1,
    /// Truncated eta^2 series of h2
    SeriesH2,
    /// h(n) = 1/sqrt(n)
    Harmonious,
    /// Linear oscillator, h = 1
    Identity,
}

#[derive(Args, Clone)]
struct SpecArgs {
    /// Deformation family
    #[arg(long, value_enum, default_value = "trapped-ion")]
    family: Family,
    /// Squared Lamb-Dicke parameter eta^2 (trapped-ion and series families)
    #[arg(long, default_value_t = 0.1)]
    eta2: f64,
    /// Sideband order N+1 of the trapped-ion deformation
    #[arg(long, default_value_t = 1)]
    deformation_order: usize,
    /// q-oscillator parameter lambda
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Series truncation order (1..=3) for the series families
    #[arg(long, default_value_t = 3)]
    series_order: u8,
}

impl SpecArgs {
    fn build(&self) -> CliResult<DeformationSpec> {
        match self.family {
            Family::TrappedIon => {
                if self.eta2 < 0.0 {
                    return Err(CliError::InvalidConfig("eta2 must be nonnegative".into()));
                }
                if self.deformation_order == 0 {
                    return Err(CliError::InvalidConfig("deformation order must be >= 1".into()));
                }
                // eta2 = 0 is the linear limit
                if self.eta2 == 0.0 {
                    return Ok(DeformationSpec::Identity);
                }
                Ok(DeformationSpec::TrappedIon { order: self.deformation_order, eta2: self.eta2 })
            }
            Family::QOscillator => {
                if self.lambda <= 0.0 {
                    return Err(CliError::InvalidConfig("lambda must be positive".into()));
                }
                Ok(DeformationSpec::QOscillator { lambda: self.lambda })
            }
            Family::SeriesH1 | Family::SeriesH2 => {
                if !(1..=3).contains(&self.series_order) {
                    return Err(CliError::InvalidConfig("series order must be 1..=3".into()));
                }
                if self.eta2 <= 0.0 {
                    return Err(CliError::InvalidConfig("eta2 must be positive".into()));
                }
                Ok(DeformationSpec::TruncatedSeries {
                    base: if self.family == Family::SeriesH1 { SeriesBase::H1 } else { SeriesBase::H2 },
                    eta2: self.eta2,
                    order: self.series_order,
                })
            }
            Family::Harmonious => Ok(DeformationSpec::Harmonious),
            Family::Identity => Ok(DeformationSpec::Identity),
        }
    }
}

#[derive(Args, Clone)]
struct StateArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Real part of alpha
    #[arg(long, default_value_t = 1.0)]
    alpha_re: f64,
    /// Imaginary part of alpha
    #[arg(long, default_value_t = 0.0)]
    alpha_im: f64,
    /// Circle order N+1 (1 for a plain NCS)
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Sector q, 0 <= q < order
    #[arg(long, default_value_t = 0)]
    sector: usize,
    /// Fock truncation; chosen by the 40-log-unit margin policy when omitted
    #[arg(long)]
    n_max: Option<usize>,
}

impl StateArgs {
    fn build(&self) -> CliResult<ncs_core::NcsState> {
        let spec = self.spec.build()?;
        if self.order == 0 || self.sector >= self.order {
            return Err(CliError::InvalidConfig("require 0 <= sector < order".into()));
        }
        let alpha = Complex64::new(self.alpha_re, self.alpha_im);
        let n_max = match self.n_max {
            Some(n) => n,
            None => truncation_for(&spec, alpha, self.order, self.sector)?,
        };
        Ok(ncs_circle(&spec, alpha, self.order, self.sector, n_max)?)
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Half-width of the square grid
    #[arg(long, default_value_t = 8.0)]
    grid_range: f64,
    /// Points per axis
    #[arg(long, default_value_t = 257)]
    grid_points: usize,
}

impl GridArgs {
    fn build(&self) -> CliResult<GridSpec> {
        if self.grid_points < 2 || self.grid_range <= 0.0 {
            return Err(CliError::InvalidConfig("grid needs range > 0 and >= 2 points".into()));
        }
        Ok(GridSpec::square(self.grid_range, self.grid_points))
    }
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output file path
    #[arg(short, long)]
    output: PathBuf,
    /// Output format
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate h(n) for a deformation family (CSV: n,h)
    Deformation {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 100)]
        n_max: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate log([h1(n)^2]! n! eta^(2n)) (CSV: n,value)
    FactorialLog {
        #[arg(long, default_value_t = 0.01)]
        eta2: f64,
        #[arg(long, default_value_t = 10_000)]
        n_max: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Tabulate the oscillating envelope function u(x) (CSV: x,u)
    UFunction {
        #[arg(long, default_value_t = 10.0)]
        x_max: f64,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Build an NCS / circle NCS (JSON amplitudes or CSV: n,re,im)
    State {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Wigner field of a state (CSV: q,p,value)
    Wigner {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Husimi-Kano field of a state (CSV: q,p,value)
    Husimi {
        #[command(flatten)]
        state: StateArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Finite Laguerre unity-resolution measure (CSV: x,density; JSON adds
    /// coefficients and the resolution report)
    Measure {
        #[arg(long, default_value_t = 0.015)]
        eta2: f64,
        /// Measure rank (highest Laguerre degree)
        #[arg(long, default_value_t = 50)]
        n_max: usize,
        #[arg(long, default_value_t = 200.0)]
        x_max: f64,
        #[arg(long, default_value_t = 2001)]
        points: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Scan NCS summability against radius and bracket the convergence
    /// boundary
    Convergence {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 400_000)]
        n_max: usize,
        #[arg(long, default_value_t = 2.0)]
        r_min: f64,
        #[arg(long, default_value_t = 4.5)]
        r_max: f64,
        #[arg(long, default_value_t = 12)]
        r_points: usize,
        #[arg(long, default_value_t = 4)]
        directions: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Reproduce a figure preset (fig1a, fig1b, fig2a, fig2b, fig3,
    /// fig4a..fig4d, fig5)
    Figure {
        #[arg(long)]
        preset: String,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Deformation { spec, n_max, out } => {
            let spec = spec.build()?;
            let mut rows = Vec::with_capacity(n_max);
            for n in spec.min_index()..=n_max {
                rows.push((n as f64, h_eval(&spec, n)?));
            }
            emit::emit_pairs("n,h", &rows, &out.output)
        }
        Command::FactorialLog { eta2, n_max, out } => {
            if eta2 <= 0.0 {
                return Err(CliError::InvalidConfig("eta2 must be positive".into()));
            }
            let profile = factorial_log_profile(eta2, n_max)?;
            let rows: Vec<(f64, f64)> =
                profile.iter().enumerate().map(|(i, &v)| ((i + 1) as f64, v)).collect();
            emit::emit_pairs("n,log_value", &rows, &out.output)
        }
        Command::UFunction { x_max, points, out } => {
            if points < 2 || x_max <= 0.0 {
                return Err(CliError::InvalidConfig("need x_max > 0 and points >= 2".into()));
            }
            let rows: Vec<(f64, f64)> = (0..points)
                .map(|i| {
                    let x = x_max * i as f64 / (points - 1) as f64;
                    (x, u_function(x))
                })
                .collect();
            emit::emit_pairs("x,u", &rows, &out.output)
        }
        Command::State { state, out } => {
            let st = state.build()?;
            match out.format {
                Format::Json => {
                    #[derive(serde::Serialize)]
                    struct StateDoc {
                        metadata: Metadata,
                        norm_status: ncs_core::NormStatus,
                        tail_mass_estimate: f64,
                        amplitudes: Vec<[f64; 2]>,
                    }
                    let doc = StateDoc {
                        metadata: Metadata::from_state(&st),
                        norm_status: st.norm_status,
                        tail_mass_estimate: st.tail_mass_estimate,
                        amplitudes: st.amplitudes.iter().map(|c| [c.re, c.im]).collect(),
                    };
                    emit::emit_json(&doc, &out.output)
                }
                Format::Csv => {
                    let rows: Vec<(f64, f64, f64)> = st
                        .amplitudes
                        .iter()
                        .enumerate()
                        .map(|(n, c)| (n as f64, c.re, c.im))
                        .collect();
                    emit::emit_triples("n,re,im", &rows, &out.output)
                }
            }
        }
        Command::Wigner { state, grid, out } => {
            let st = state.build()?;
            let field = wigner(&st, &grid.build()?)?;
            emit::emit_field(&field, Some(Metadata::from_state(&st)), &out.output, out.format)
        }
        Command::Husimi { state, grid, out } => {
            let st = state.build()?;
            let field = husimi(&st, &grid.build()?)?;
            emit::emit_field(&field, Some(Metadata::from_state(&st)), &out.output, out.format)
        }
        Command::Measure { eta2, n_max, x_max, points, out } => {
            if eta2 <= 0.0 || points < 2 || x_max <= 0.0 {
                return Err(CliError::InvalidConfig(
                    "need eta2 > 0, x_max > 0 and points >= 2".into(),
                ));
            }
            let spec = DeformationSpec::TrappedIon { order: 1, eta2 };
            let measure = laguerre_measure(&spec, n_max)?;
            match out.format {
                Format::Csv => {
                    let rows: Vec<(f64, f64)> = (0..points)
                        .map(|i| {
                            let x = x_max * i as f64 / (points - 1) as f64;
                            let x_eval = if x == 0.0 { 1e-12 } else { x };
                            Ok((x, measure.density(x_eval)?))
                        })
                        .collect::<CliResult<_>>()?;
                    emit::emit_pairs("x,density", &rows, &out.output)
                }
                Format::Json => {
                    let report = resolution_check(&spec, &measure, n_max)?;
                    #[derive(serde::Serialize)]
                    struct MeasureDoc {
                        eta2: f64,
                        rank: usize,
                        coefficients: Vec<f64>,
                        max_diag_error: f64,
                        first_negative_x: Option<f64>,
                        library_version: String,
                    }
                    let doc = MeasureDoc {
                        eta2,
                        rank: n_max,
                        coefficients: measure.coeffs.clone(),
                        max_diag_error: report.max_diag_error,
                        first_negative_x: report.negativity,
                        library_version: env!("CARGO_PKG_VERSION").to_string(),
                    };
                    emit::emit_json(&doc, &out.output)
                }
            }
        }
        Command::Convergence { spec, n_max, r_min, r_max, r_points, directions, out } => {
            if r_points < 2 || r_min <= 0.0 || r_min >= r_max || directions == 0 {
                return Err(CliError::InvalidConfig(
                    "need 0 < r_min < r_max, r_points >= 2, directions >= 1".into(),
                ));
            }
            let spec = spec.build()?;
            let dirs: Vec<Complex64> = (0..directions)
                .map(|k| {
                    Complex64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * k as f64 / directions as f64,
                    )
                })
                .collect();
            let radii: Vec<f64> = (0..r_points)
                .map(|i| r_min + (r_max - r_min) * i as f64 / (r_points - 1) as f64)
                .collect();
            let reports = convergence_probe(&spec, &dirs, &radii, n_max)?;
            emit::emit_json(&reports, &out.output)
        }
        Command::Figure { preset, out } => run_figure(&preset, &out),
    }
}

fn run_figure(preset: &str, out: &OutputArgs) -> CliResult<()> {
    match preset {
        "fig1a" | "fig1b" | "fig2a" | "fig2b" => {
            let state = presets::preset_state(preset)?;
            let field = wigner(&state, &presets::figure_grid())?;
            emit::emit_field(&field, Some(Metadata::from_state(&state)), &out.output, out.format)
        }
        "fig3" => emit::emit_pairs("z,u_of_sqrt_z", &presets::fig3_rows(), &out.output),
        "fig4a" | "fig4b" | "fig4c" | "fig4d" => {
            let eta2 = presets::fig4_eta2(preset).expect("matched above");
            emit::emit_pairs("n,log_value", &presets::fig4_rows(eta2)?, &out.output)
        }
        "fig5" => emit::emit_triples("eta2,x,density", &presets::fig5_rows()?, &out.output),
        other => Err(CliError::InvalidConfig(format!(
            "unknown preset '{other}'; expected one of {:?}",
            presets::ALL_PRESETS
        ))),
    }
}

fn main() {
    if let Ok(threads) = std::env::var("NCS_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("{{\"error\":\"NCS_THREADS must be a positive integer\",\"exit_code\":2}}");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}", e.record());
        std::process::exit(e.exit_code());
    }
}
