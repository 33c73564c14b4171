//! NCS and circle-NCS construction as truncated Fock expansions, truncated
//! operator matrices, and the deformed density functional.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::deformation::{h_factorial_log_seq, h_values, CircleSector, DeformationSpec};
use crate::error::{NcsError, Result};
use crate::logspace::LogWeight;
use crate::specfun::EvalResult;

/// Natural-log margin below the running maximum required of the last kept
/// term when choosing a truncation automatically.
pub const TRUNCATION_MARGIN: f64 = 40.0;
/// Fraction of the trailing indices whose weight makes up the tail estimate.
const TAIL_FRACTION: f64 = 0.05;
/// Per-index slope threshold separating summable from divergent log-term
/// trends; the envelope oscillates, so the slope is a least-squares fit over
/// the trailing window.
pub const TREND_SLOPE_TOL: f64 = 1e-3;
/// Fraction of trailing lattice points entering the trend fit.
const TREND_WINDOW: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormStatus {
    Normalized,
    /// The unnormalized term magnitudes were still growing at the truncation
    /// point; the stored amplitudes are a normalized rendering of the
    /// truncation, not of a normalizable state.
    DivergentAtAlpha,
}

/// Truncated Fock expansion of an NCS or circle NCS.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NcsState {
    pub spec: DeformationSpec,
    pub alpha: Complex64,
    /// N+1; 1 for a plain NCS.
    pub order: usize,
    /// q, the residue class of the occupied Fock indices.
    pub sector: usize,
    pub n_max: usize,
    /// Length n_max + 1, unit norm.
    pub amplitudes: Vec<Complex64>,
    pub tail_mass_estimate: f64,
    pub norm_status: NormStatus,
}

impl NcsState {
    pub fn inner(&self, other: &NcsState) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Unnormalized log-magnitudes of the lattice terms
/// alpha^n / (sqrt(n!) [h]!), n = sector, sector+order, ...
fn lattice_log_terms(
    spec: &DeformationSpec,
    alpha_abs: f64,
    order: usize,
    sector: usize,
    n_max: usize,
) -> Result<Vec<(usize, f64, i8)>> {
    if order == 0 || sector >= order {
        return Err(NcsError::InvalidArgument("lattice requires sector < order".into()));
    }
    let l_max = if n_max >= sector { (n_max - sector) / order } else { 0 };
    let top = sector + l_max * order;
    let fact = if order == 1 && sector == 0 {
        h_factorial_log_seq(spec, top, None)?
    } else {
        h_factorial_log_seq(spec, top, Some(CircleSector { order, sector }))?
    };
    let ln_alpha = if alpha_abs == 0.0 { f64::NEG_INFINITY } else { alpha_abs.ln() };
    let mut out = Vec::with_capacity(l_max + 1);
    for (l, w) in fact.iter().enumerate() {
        let n = sector + l * order;
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let log = if n == 0 {
            -w.log_mag
        } else {
            n as f64 * ln_alpha - 0.5 * ln_gamma(n as f64 + 1.0) - w.log_mag
        };
        out.push((n, log, w.sign));
    }
    Ok(out)
}

/// Least-squares slope of log-magnitude per unit Fock index over the
/// trailing window; NaN when fewer than 3 finite points.
fn trailing_slope(terms: &[(usize, f64, i8)]) -> f64 {
    let len = terms.len();
    let start = ((len as f64) * (1.0 - TREND_WINDOW)) as usize;
    let window: Vec<(f64, f64)> = terms[start..]
        .iter()
        .filter(|(_, log, _)| log.is_finite())
        .map(|(n, log, _)| (*n as f64, *log))
        .collect();
    if window.len() < 3 {
        return f64::NAN;
    }
    let n_mean = window.iter().map(|(n, _)| n).sum::<f64>() / window.len() as f64;
    let y_mean = window.iter().map(|(_, y)| y).sum::<f64>() / window.len() as f64;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (n, y) in &window {
        cov += (n - n_mean) * (y - y_mean);
        var += (n - n_mean) * (n - n_mean);
    }
    cov / var
}

fn build_state(
    spec: &DeformationSpec,
    alpha: Complex64,
    order: usize,
    sector: usize,
    n_max: usize,
) -> Result<NcsState> {
    let terms = lattice_log_terms(spec, alpha.norm(), order, sector, n_max)?;
    let slope = trailing_slope(&terms);
    let norm_status = if slope.is_finite() && slope > TREND_SLOPE_TOL {
        NormStatus::DivergentAtAlpha
    } else {
        NormStatus::Normalized
    };

    let max_log = terms
        .iter()
        .map(|(_, log, _)| *log)
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_max + 1];
    let phase_step = if alpha.norm() == 0.0 { 0.0 } else { alpha.arg() };
    let mut norm_sqr = 0.0;
    for (n, log, sign) in &terms {
        if !log.is_finite() {
            continue;
        }
        let c = Complex64::from_polar((log - max_log).exp(), phase_step * *n as f64)
            * f64::from(*sign);
        amplitudes[*n] = c;
        norm_sqr += c.norm_sqr();
    }
    if norm_sqr == 0.0 {
        // alpha = 0 leaves only the base lattice point
        amplitudes[sector] = Complex64::new(1.0, 0.0);
        norm_sqr = 1.0;
    }
    let norm = norm_sqr.sqrt();
    for c in &mut amplitudes {
        *c /= norm;
    }
    let tail_start = ((n_max as f64) * (1.0 - TAIL_FRACTION)) as usize;
    let tail_mass_estimate: f64 = amplitudes[tail_start..].iter().map(|c| c.norm_sqr()).sum();
    Ok(NcsState {
        spec: spec.clone(),
        alpha,
        order,
        sector,
        n_max,
        amplitudes,
        tail_mass_estimate,
        norm_status,
    })
}

/// Plain NCS |alpha, h> truncated at n_max.
pub fn ncs_amplitudes(spec: &DeformationSpec, alpha: Complex64, n_max: usize) -> Result<NcsState> {
    build_state(spec, alpha, 1, 0, n_max)
}

/// Circle NCS of the given order and sector truncated at n_max.
pub fn ncs_circle(
    spec: &DeformationSpec,
    alpha: Complex64,
    order: usize,
    sector: usize,
    n_max: usize,
) -> Result<NcsState> {
    build_state(spec, alpha, order, sector, n_max)
}

/// Truncation policy: the smallest lattice top whose unnormalized term
/// log-magnitude sits at least `TRUNCATION_MARGIN` below the running
/// maximum. Errors with `Divergent` when no such point exists below the cap.
pub fn truncation_for(
    spec: &DeformationSpec,
    alpha: Complex64,
    order: usize,
    sector: usize,
) -> Result<usize> {
    const CAP: usize = 200_000;
    if alpha.norm() == 0.0 {
        return Ok(sector + 8 * order);
    }
    let terms = lattice_log_terms(spec, alpha.norm(), order, sector, CAP)?;
    let mut running_max = f64::NEG_INFINITY;
    for (n, log, _) in &terms {
        running_max = running_max.max(*log);
        if *n > sector && *log <= running_max - TRUNCATION_MARGIN {
            return Ok(*n);
        }
    }
    Err(NcsError::Divergent)
}

/// Deformed exponential E_h(v) = sum v^n / (n! ([h(n)]!)^2) truncated at
/// n_max, summed in log space with sign tracking.
pub fn h_exponential(spec: &DeformationSpec, v: f64, n_max: usize) -> Result<EvalResult> {
    let fact = h_factorial_log_seq(spec, n_max, None)?;
    let ln_v = if v == 0.0 { f64::NEG_INFINITY } else { v.abs().ln() };
    let mut logs = Vec::with_capacity(n_max + 1);
    for (n, w) in fact.iter().enumerate() {
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let log = if n == 0 {
            0.0
        } else {
            n as f64 * ln_v - ln_gamma(n as f64 + 1.0) - 2.0 * w.log_mag
        };
        let sign: i8 = if v < 0.0 && n % 2 == 1 { -1 } else { 1 };
        logs.push((n, log, sign));
    }
    let slope = trailing_slope(&logs);
    if slope.is_finite() && slope > TREND_SLOPE_TOL {
        return Err(NcsError::Divergent);
    }
    let weights: Vec<LogWeight> =
        logs.iter().map(|(_, log, sign)| LogWeight::new(*sign, *log)).collect();
    let sum = crate::logspace::signed_log_sum(&weights);
    let last = logs.last().map(|(_, log, _)| log.exp()).unwrap_or(0.0);
    Ok(EvalResult {
        value: sum.value(),
        abs_error_estimate: last,
        terms_used: logs.len(),
    })
}

/// E_h at a complex argument; same series, complex phases carried per term.
pub fn h_exponential_complex(
    spec: &DeformationSpec,
    v: Complex64,
    n_max: usize,
) -> Result<Complex64> {
    let fact = h_factorial_log_seq(spec, n_max, None)?;
    let ln_v = if v.norm() == 0.0 { f64::NEG_INFINITY } else { v.norm().ln() };
    let arg = v.arg();
    let mut logs = Vec::with_capacity(n_max + 1);
    for (n, w) in fact.iter().enumerate() {
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let log = if n == 0 {
            0.0
        } else {
            n as f64 * ln_v - ln_gamma(n as f64 + 1.0) - 2.0 * w.log_mag
        };
        logs.push((n, log));
    }
    let max_log = logs
        .iter()
        .map(|(_, l)| *l)
        .filter(|l| l.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = Complex64::new(0.0, 0.0);
    for (n, log) in &logs {
        if log.is_finite() {
            acc += Complex64::from_polar((log - max_log).exp(), arg * *n as f64);
        }
    }
    Ok(acc * max_log.exp())
}

// ---------------------------------------------------------------------------
// Operator matrices
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// A = a h(n)
    Annihilation,
    /// A-dagger = h(n) a-dagger
    Creation,
    /// A_h-dagger = (1/h(n)) a-dagger
    DeformedCreation,
    /// D_h(alpha), non-unitary for nontrivial h
    Displacement,
    /// d_h = D_h(alpha) D(-alpha): diagonal 1/[h(n)]!
    DeformationOp,
    /// A_b = f_{N+1}(n) a^{N+1} - alpha_{N+1} f_0(n)
    Bichromatic,
}

/// Dense truncated operator matrix; entries[(m, n)] = <m|Op|n>.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub entries: DMatrix<Complex64>,
    pub kind: OperatorKind,
}

impl OperatorMatrix {
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let x = nalgebra::DVector::from_column_slice(v);
        let y = &self.entries * x;
        y.iter().copied().collect()
    }
}

/// Parameters of the bichromatic coupling operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BichromaticParams {
    /// N+1
    pub order: usize,
    pub alpha_n1: Complex64,
}

fn checked_exp(log: f64) -> Result<f64> {
    if log > 700.0 {
        return Err(NcsError::MagnitudeOverflow { log_mag: log });
    }
    Ok(log.exp())
}

/// Build a truncated operator matrix on dim = n_max + 1 Fock states.
pub fn operator_matrix(
    kind: OperatorKind,
    spec: &DeformationSpec,
    alpha: Option<Complex64>,
    bichromatic: Option<BichromaticParams>,
    n_max: usize,
) -> Result<OperatorMatrix> {
    let dim = n_max + 1;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    match kind {
        OperatorKind::Annihilation => {
            let hv = h_values(spec, n_max);
            for n in 1..dim {
                m[(n - 1, n)] = Complex64::new((n as f64).sqrt() * hv.get(n)?, 0.0);
            }
        }
        OperatorKind::Creation => {
            let hv = h_values(spec, n_max);
            for n in 0..dim - 1 {
                m[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt() * hv.get(n + 1)?, 0.0);
            }
        }
        OperatorKind::DeformedCreation => {
            let hv = h_values(spec, n_max);
            for n in 0..dim - 1 {
                let h = hv.get(n + 1)?;
                if h == 0.0 {
                    return Err(NcsError::DeformationPole { n: n + 1 });
                }
                m[(n + 1, n)] = Complex64::new(((n + 1) as f64).sqrt() / h, 0.0);
            }
        }
        OperatorKind::DeformationOp => {
            let fact = h_factorial_log_seq(spec, n_max, None)?;
            for (n, w) in fact.iter().enumerate() {
                if w.sign == 0 {
                    return Err(NcsError::DeformationPole { n });
                }
                m[(n, n)] = Complex64::new(f64::from(w.sign) * checked_exp(-w.log_mag)?, 0.0);
            }
        }
        OperatorKind::Displacement => {
            let alpha = alpha.ok_or(NcsError::MissingParameter { what: "alpha" })?;
            return displacement_matrix(spec, alpha, n_max);
        }
        OperatorKind::Bichromatic => {
            let params =
                bichromatic.ok_or(NcsError::MissingParameter { what: "bichromatic params" })?;
            let eta2 = match spec {
                DeformationSpec::TrappedIon { eta2, .. } => *eta2,
                _ => {
                    return Err(NcsError::InvalidArgument(
                        "bichromatic operator requires a trapped-ion spec".into(),
                    ))
                }
            };
            let step = params.order;
            for n in 0..dim {
                m[(n, n)] = -params.alpha_n1 * crate::deformation::f_k(n, 0, eta2);
                if n + step < dim {
                    let upper = n + step;
                    let mut root = 1.0f64;
                    for j in (n + 1)..=upper {
                        root *= j as f64;
                    }
                    let fk = crate::deformation::f_k(n, step, eta2);
                    m[(n, upper)] += Complex64::new(root.sqrt() * fk, 0.0);
                }
            }
        }
    }
    Ok(OperatorMatrix { dim, entries: m, kind })
}

/// D_h(alpha) by the factored normal-order form
/// e^{-|a|^2/2} e^{alpha A_h-dagger} e^{-conj(alpha) A}; both exponentials
/// are exact banded sums in the truncated basis.
fn displacement_matrix(
    spec: &DeformationSpec,
    alpha: Complex64,
    n_max: usize,
) -> Result<OperatorMatrix> {
    let dim = n_max + 1;
    let hv = h_values(spec, n_max);
    let mut h = vec![1.0f64; dim];
    for j in 1..dim {
        h[j] = hv.get(j)?;
        if h[j] == 0.0 {
            return Err(NcsError::DeformationPole { n: j });
        }
    }
    // upper factor: <m| e^{alpha A_h^dag} |n> for m >= n,
    //   entry = alpha^{m-n} prod_{j=n+1}^m (sqrt(j)/h(j)) / (m-n)!
    // lower factor: <m| e^{-conj(alpha) A} |n> for n >= m,
    //   entry = (-conj(alpha))^{n-m} prod_{j=m+1}^n (sqrt(j) h(j)) / (n-m)!
    // Each column/row is built by the one-step band recursion: pure products
    // keep entries accurate to a few ulps, where log-space assembly dragged
    // in lgamma rounding amplified by exponentiation.
    let mut upper = DMatrix::<Complex64>::zeros(dim, dim);
    let mut lower = DMatrix::<Complex64>::zeros(dim, dim);
    let neg_conj = -alpha.conj();
    for n in 0..dim {
        upper[(n, n)] = Complex64::new(1.0, 0.0);
        lower[(n, n)] = Complex64::new(1.0, 0.0);
        let mut up = Complex64::new(1.0, 0.0);
        let mut lo = Complex64::new(1.0, 0.0);
        for mrow in (n + 1)..dim {
            let k = (mrow - n) as f64;
            let root = (mrow as f64).sqrt();
            up *= alpha * root / (k * h[mrow]);
            lo *= neg_conj * root * h[mrow] / k;
            if !up.is_finite() || !lo.is_finite() {
                return Err(NcsError::MagnitudeOverflow { log_mag: f64::INFINITY });
            }
            upper[(mrow, n)] = up;
            lower[(n, mrow)] = lo;
        }
    }
    let scale = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    let entries = (upper * lower) * scale;
    Ok(OperatorMatrix { dim, entries, kind: OperatorKind::Displacement })
}

/// Apply A_{N+1} = a^{N+1} h(n) to an amplitude vector.
pub fn apply_circle_annihilation(
    spec: &DeformationSpec,
    order: usize,
    amplitudes: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n_max = amplitudes.len() - 1;
    let hv = h_values(spec, n_max);
    let mut out = vec![Complex64::new(0.0, 0.0); amplitudes.len()];
    for n in 0..amplitudes.len() {
        let src = n + order;
        if src > n_max {
            break;
        }
        if amplitudes[src].norm() == 0.0 {
            continue;
        }
        let mut root = 1.0f64;
        for j in (n + 1)..=src {
            root *= j as f64;
        }
        out[n] = root.sqrt() * hv.get(src)? * amplitudes[src];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Right,
    Left,
}

/// Displaced Fock states: Right is D_h(alpha)|m>, Left is the row
/// <m| D_h(-alpha). Both unnormalized.
pub fn displaced_fock(
    spec: &DeformationSpec,
    alpha: Complex64,
    m: usize,
    side: Side,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    match side {
        Side::Right => {
            let d = displacement_matrix(spec, alpha, n_max)?;
            Ok(d.entries.column(m).iter().copied().collect())
        }
        Side::Left => {
            let d = displacement_matrix(spec, -alpha, n_max)?;
            Ok(d.entries.row(m).iter().copied().collect())
        }
    }
}

// ---------------------------------------------------------------------------
// Convergence probe
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrendClass {
    Summable,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryEstimate {
    Unbounded,
    Bounded(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub direction: Complex64,
    pub classifications: Vec<(f64, TrendClass)>,
    pub boundary: BoundaryEstimate,
}

/// Classify the NCS term series as summable or divergent per direction and
/// radius, and bracket the convergence boundary.
///
/// The base log-term sequence at radius 1 is fitted once; a radius r shifts
/// the fitted slope by ln r exactly, so each classification is a threshold
/// test on ln r plus the base slope.
pub fn convergence_probe(
    spec: &DeformationSpec,
    directions: &[Complex64],
    radius_grid: &[f64],
    n_max: usize,
) -> Result<Vec<ConvergenceReport>> {
    let base = lattice_log_terms(spec, 1.0, 1, 0, n_max)?;
    let base_slope = trailing_slope(&base);
    if !base_slope.is_finite() {
        return Err(NcsError::Inconclusive { slope: base_slope });
    }
    let mut radii: Vec<f64> = radius_grid.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut reports = Vec::with_capacity(directions.len());
    for &dir in directions {
        let mut classifications = Vec::with_capacity(radii.len());
        for &r in &radii {
            let slope = base_slope + r.ln();
            let class = if slope > TREND_SLOPE_TOL {
                TrendClass::Divergent
            } else if slope < -TREND_SLOPE_TOL {
                TrendClass::Summable
            } else {
                TrendClass::Inconclusive
            };
            classifications.push((r, class));
        }
        let last_summable = classifications
            .iter()
            .rev()
            .find(|(_, c)| *c == TrendClass::Summable)
            .map(|(r, _)| *r);
        let first_divergent = classifications
            .iter()
            .find(|(_, c)| *c == TrendClass::Divergent)
            .map(|(r, _)| *r);
        let boundary = match (last_summable, first_divergent) {
            (Some(_), None) => BoundaryEstimate::Unbounded,
            (Some(s), Some(d)) if s < d => BoundaryEstimate::Bounded(0.5 * (s + d)),
            (None, Some(d)) => BoundaryEstimate::Bounded(d),
            _ => {
                return Err(NcsError::Inconclusive { slope: base_slope });
            }
        };
        reports.push(ConvergenceReport { direction: dir, classifications, boundary });
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Rabi configuration and the density functional
// ---------------------------------------------------------------------------

/// Drive amplitudes fixing the dark-state eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RabiConfig {
    pub omega0: f64,
    pub omega_n1: f64,
    pub eta: f64,
    pub n: usize,
}

/// alpha_{N+1} = (Omega_0 / Omega_{N+1}) (N+1)! / (-i eta)^{N+1}.
pub fn alpha_from_rabi(config: &RabiConfig) -> Complex64 {
    let order = config.n + 1;
    let mut fact = 1.0f64;
    for j in 2..=order {
        fact *= j as f64;
    }
    let inv = Complex64::new(0.0, 1.0) / config.eta; // 1 / (-i eta)
    (config.omega0 / config.omega_n1) * fact * inv.powu(order as u32)
}

/// The deformed antinormal functional
/// rho_{h,A}(z) = (1/pi) <z| d_h^{-1} rho d_h |z>.
pub fn rho_functional(
    density: &DMatrix<Complex64>,
    spec: &DeformationSpec,
    z: Complex64,
) -> Result<Complex64> {
    if density.nrows() != density.ncols() {
        return Err(NcsError::InvalidDensity { reason: "matrix is not square" });
    }
    let dim = density.nrows();
    let trace: Complex64 = (0..dim).map(|i| density[(i, i)]).sum();
    if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
        return Err(NcsError::InvalidDensity { reason: "trace is not 1" });
    }
    let fact = h_factorial_log_seq(spec, dim - 1, None)?;
    let ln_z = if z.norm() == 0.0 { f64::NEG_INFINITY } else { z.norm().ln() };
    let arg_z = z.arg();
    let half = z.norm_sqr() / 2.0;
    // left_m = conj(z)^m [h(m)]! / sqrt(m!) e^{-|z|^2/2}
    // right_n = z^n / ([h(n)]! sqrt(n!)) e^{-|z|^2/2}
    let mut left = vec![Complex64::new(0.0, 0.0); dim];
    let mut right = vec![Complex64::new(0.0, 0.0); dim];
    for n in 0..dim {
        let w = &fact[n];
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let base = if n == 0 { 0.0 } else { n as f64 * ln_z - 0.5 * ln_gamma(n as f64 + 1.0) };
        let log_l = base + w.log_mag - half;
        let log_r = base - w.log_mag - half;
        if log_l > 700.0 || log_r > 700.0 {
            return Err(NcsError::MagnitudeOverflow { log_mag: log_l.max(log_r) });
        }
        let s = f64::from(w.sign);
        left[n] = Complex64::from_polar(log_l.exp(), -arg_z * n as f64) * s;
        right[n] = Complex64::from_polar(log_r.exp(), arg_z * n as f64) * s;
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for mrow in 0..dim {
        let mut row = Complex64::new(0.0, 0.0);
        for n in 0..dim {
            row += density[(mrow, n)] * right[n];
        }
        acc += left[mrow] * row;
    }
    Ok(acc / std::f64::consts::PI)
}

// ---------------------------------------------------------------------------
// Circle decomposition
// ---------------------------------------------------------------------------

/// Decompose a circle NCS into its N+1 first-order components on the circle.
///
/// Components carry the stepped residue-class weights, which makes the
/// roots-of-unity cancellation on off-sector Fock indices exact; the base
/// value of the recursive component deformation is fixed by this choice.
pub fn circle_decomposition(state: &NcsState) -> Result<Vec<(Complex64, NcsState)>> {
    if state.order < 2 {
        return Err(NcsError::InvalidArgument(
            "decomposition requires a circle state of order >= 2".into(),
        ));
    }
    let order = state.order;
    let n_max = state.n_max;
    // per-residue stepped factorial weights
    let mut weights = vec![LogWeight::ONE; n_max + 1];
    for r in 0..order.min(n_max + 1) {
        let top = r + ((n_max - r) / order) * order;
        let seq = h_factorial_log_seq(&state.spec, top, Some(CircleSector { order, sector: r }))?;
        for (l, w) in seq.iter().enumerate() {
            weights[r + l * order] = *w;
        }
    }
    let eps = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / order as f64);
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        let alpha_k = state.alpha * eps.powu(k as u32);
        let ln_a = if alpha_k.norm() == 0.0 { f64::NEG_INFINITY } else { alpha_k.norm().ln() };
        let arg_a = alpha_k.arg();
        let mut logs = Vec::with_capacity(n_max + 1);
        for (n, w) in weights.iter().enumerate() {
            if w.sign == 0 {
                return Err(NcsError::DeformationPole { n });
            }
            let log = if n == 0 {
                -w.log_mag
            } else {
                n as f64 * ln_a - 0.5 * ln_gamma(n as f64 + 1.0) - w.log_mag
            };
            logs.push((log, w.sign));
        }
        let max_log = logs
            .iter()
            .map(|(l, _)| *l)
            .filter(|l| l.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_max + 1];
        let mut norm_sqr = 0.0;
        for (n, (log, sign)) in logs.iter().enumerate() {
            if log.is_finite() {
                let c = Complex64::from_polar((log - max_log).exp(), arg_a * n as f64)
                    * f64::from(*sign);
                amplitudes[n] = c;
                norm_sqr += c.norm_sqr();
            }
        }
        let norm = norm_sqr.sqrt();
        for c in &mut amplitudes {
            *c /= norm;
        }
        let tail_start = ((n_max as f64) * (1.0 - TAIL_FRACTION)) as usize;
        let tail: f64 = amplitudes[tail_start..].iter().map(|c| c.norm_sqr()).sum();
        let component = NcsState {
            spec: state.spec.clone(),
            alpha: alpha_k,
            order: 1,
            sector: 0,
            n_max,
            amplitudes,
            tail_mass_estimate: tail,
            norm_status: state.norm_status,
        };
        let phase = eps.conj().powu((state.sector * k) as u32);
        out.push((phase, component));
    }
    Ok(out)
}
