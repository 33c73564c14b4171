//! Wigner and Husimi-Kano fields of NCS states on rectangular grids.
//!
//! Conventions: the Wigner function uses w = (q + ip)/sqrt(2), so the vacuum
//! is (1/pi) exp(-(q^2+p^2)), the plane integral over dq dp is 1, and
//! W(0,0) = (1/pi) <parity>. The Husimi function samples the coherent-state
//! label plane directly, Q(q,p) = (1/pi) |<q+ip|psi>|^2, which again gives a
//! unit plane integral and Q(0,0) = 1/pi for the vacuum. Q is then the
//! Gaussian smoothing of W evaluated at the dilated point (sqrt(2) q, sqrt(2) p).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{NcsError, Result};
use crate::states::NcsState;

/// Rectangular phase-space grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nq: usize,
    pub np: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, points: usize) -> Self {
        GridSpec {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            nq: points,
            np: points,
        }
    }

    pub fn q_at(&self, i: usize) -> f64 {
        self.q_min + (self.q_max - self.q_min) * i as f64 / (self.nq - 1) as f64
    }

    pub fn p_at(&self, j: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * j as f64 / (self.np - 1) as f64
    }

    fn validate(&self) -> Result<()> {
        if self.nq < 2 || self.np < 2 || self.q_min >= self.q_max || self.p_min >= self.p_max {
            return Err(NcsError::InvalidArgument("degenerate grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldKind {
    Wigner,
    Husimi,
}

/// Scalar field sampled on a grid, row-major in q then p:
/// values[i * np + j] belongs to (q_at(i), p_at(j)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Field {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub kind: FieldKind,
}

impl Field {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Wigner kernel band sum at one phase-space point.
///
/// For each band k = m - n (restricted to multiples of the state's order),
/// the scaled Laguerre recurrence
/// G_{n+1} = [(2n+k+1-x) G_n - sqrt(n(n+k)) G_{n-1}] / sqrt((n+1)(n+k+1))
/// runs G_n = sqrt(n!/(n+k)!) L_n^k(x) with periodic renormalization, and the
/// band prefactor (sqrt(2) r)^k e^{-r^2} / sqrt(k!) is applied in log space.
fn wigner_point(amps: &[Complex64], support: &[usize], order: usize, q: f64, p: f64) -> f64 {
    let r2 = q * q + p * p;
    let x = 2.0 * r2;
    let r = r2.sqrt();
    let u = if r > 0.0 {
        Complex64::new(q / r, -p / r)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let n_top = *support.last().unwrap();
    let ln_sqrt2r = if r > 0.0 { (std::f64::consts::SQRT_2 * r).ln() } else { f64::NEG_INFINITY };

    let mut total = 0.0f64;
    let mut band = 0usize;
    while band <= n_top {
        let k = band as f64;
        // complex band accumulator sum_n (-1)^n c_{n+band} conj(c_n) Gtilde_n
        let mut acc = Complex64::new(0.0, 0.0);
        // G scaled so Gtilde_0 = 1; log prefactor absorbs sqrt(1/k!) etc.
        let mut g_prev = 0.0f64; // Gtilde_{-1}
        let mut g = 1.0f64; // Gtilde_0
        let mut log_rescale = 0.0f64;
        let mut pending: Vec<(usize, f64, f64)> = Vec::new(); // (n, gtilde, log_rescale)
        for n in 0..=(n_top - band) {
            let idx = n + band;
            if amps[idx].norm_sqr() > 0.0 && amps[n].norm_sqr() > 0.0 {
                pending.push((n, g, log_rescale));
            }
            // advance recurrence to n+1
            let nf = n as f64;
            let next = ((2.0 * nf + k + 1.0 - x) * g - (nf * (nf + k)).sqrt() * g_prev)
                / (((nf + 1.0) * (nf + k + 1.0)).sqrt());
            g_prev = g;
            g = next;
            if g.abs() > 1e100 {
                g *= 1e-100;
                g_prev *= 1e-100;
                log_rescale += 100.0 * std::f64::consts::LN_10;
            }
        }
        if !pending.is_empty() {
            let log_pref = if band == 0 {
                -r2
            } else {
                k * ln_sqrt2r - r2 - 0.5 * ln_gamma(k + 1.0)
            };
            for (n, gtilde, resc) in pending {
                let idx = n + band;
                let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
                let mag = log_pref + resc;
                if mag < -745.0 || gtilde == 0.0 {
                    continue;
                }
                let kernel = parity * mag.exp() * gtilde;
                acc += amps[idx] * amps[n].conj() * kernel;
            }
            let contrib = acc * u.powu(band as u32);
            total += if band == 0 { contrib.re } else { 2.0 * contrib.re };
        }
        band += order.max(1);
    }
    total / std::f64::consts::PI
}

/// Wigner field of a state; grid evaluation is data-parallel over rows and
/// deterministic regardless of the worker count.
pub fn wigner(state: &NcsState, grid: &GridSpec) -> Result<Field> {
    grid.validate()?;
    let support: Vec<usize> = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(n, _)| n)
        .collect();
    if support.is_empty() {
        return Err(NcsError::InvalidArgument("state has empty support".into()));
    }
    let order = if state.order >= 1 { state.order } else { 1 };
    let amps = &state.amplitudes;
    let support_ref = &support;
    let values: Vec<f64> = (0..grid.nq)
        .into_par_iter()
        .flat_map_iter(|i| {
            let q = grid.q_at(i);
            (0..grid.np).map(move |j| wigner_point(amps, support_ref, order, q, grid.p_at(j)))
        })
        .collect();
    Ok(Field { grid: *grid, values, kind: FieldKind::Wigner })
}

/// Husimi-Kano field Q(q,p) = (1/pi) |<q+ip | psi>|^2.
pub fn husimi(state: &NcsState, grid: &GridSpec) -> Result<Field> {
    grid.validate()?;
    let amps = &state.amplitudes;
    let support: Vec<usize> = amps
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(n, _)| n)
        .collect();
    if support.is_empty() {
        return Err(NcsError::InvalidArgument("state has empty support".into()));
    }
    let support_ref = &support;
    let values: Vec<f64> = (0..grid.nq)
        .into_par_iter()
        .flat_map_iter(|i| {
            let q = grid.q_at(i);
            let support = support_ref;
            (0..grid.np).map(move |j| {
                let p = grid.p_at(j);
                let beta = Complex64::new(q, p);
                let r = beta.norm();
                let half = beta.norm_sqr() / 2.0;
                let mut overlap = Complex64::new(0.0, 0.0);
                if r == 0.0 {
                    overlap = amps[0];
                } else {
                    let ln_r = r.ln();
                    let arg = beta.arg();
                    for &n in support {
                        // <beta|n> = e^{-|b|^2/2} conj(beta)^n / sqrt(n!)
                        let log = n as f64 * ln_r - 0.5 * ln_gamma(n as f64 + 1.0) - half;
                        overlap +=
                            amps[n] * Complex64::from_polar(log.exp(), -arg * n as f64);
                    }
                }
                overlap.norm_sqr() / std::f64::consts::PI
            })
        })
        .collect();
    Ok(Field { grid: *grid, values, kind: FieldKind::Husimi })
}

/// 2D trapezoidal integral over the grid. Errors when the boundary carries
/// non-negligible field values.
pub fn integrate(field: &Field) -> Result<f64> {
    let g = &field.grid;
    let peak = field.max_abs();
    let mut boundary: f64 = 0.0;
    for i in 0..g.nq {
        boundary = boundary.max(field.at(i, 0).abs()).max(field.at(i, g.np - 1).abs());
    }
    for j in 0..g.np {
        boundary = boundary.max(field.at(0, j).abs()).max(field.at(g.nq - 1, j).abs());
    }
    if boundary >= 1e-10 * peak {
        return Err(NcsError::SupportExceedsGrid { boundary, peak });
    }
    let dq = (g.q_max - g.q_min) / (g.nq - 1) as f64;
    let dp = (g.p_max - g.p_min) / (g.np - 1) as f64;
    let mut sum = 0.0;
    for i in 0..g.nq {
        let wq = if i == 0 || i == g.nq - 1 { 0.5 } else { 1.0 };
        for j in 0..g.np {
            let wp = if j == 0 || j == g.np - 1 { 0.5 } else { 1.0 };
            sum += wq * wp * field.at(i, j);
        }
    }
    Ok(sum * dq * dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::DeformationSpec;
    use crate::states::{ncs_amplitudes, ncs_circle, NcsState, NormStatus};

    fn fock_state(n: usize, n_max: usize) -> NcsState {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_max + 1];
        amplitudes[n] = Complex64::new(1.0, 0.0);
        NcsState {
            spec: DeformationSpec::Identity,
            alpha: Complex64::new(0.0, 0.0),
            order: 1,
            sector: 0,
            n_max,
            amplitudes,
            tail_mass_estimate: 0.0,
            norm_status: NormStatus::Normalized,
        }
    }

    #[test]
    fn vacuum_wigner_is_gaussian() {
        let st = fock_state(0, 8);
        let grid = GridSpec::square(6.0, 81);
        let w = wigner(&st, &grid).unwrap();
        for i in (0..81).step_by(8) {
            for j in (0..81).step_by(8) {
                let (q, p) = (grid.q_at(i), grid.p_at(j));
                let expect = (-(q * q + p * p)).exp() / std::f64::consts::PI;
                assert!((w.at(i, j) - expect).abs() < 1e-12, "q={q} p={p}");
            }
        }
        assert!((integrate(&w).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fock_one_wigner_negative_at_origin() {
        let st = fock_state(1, 8);
        let grid = GridSpec::square(6.0, 121);
        let w = wigner(&st, &grid).unwrap();
        let center = w.at(60, 60);
        assert!((center - (-1.0 / std::f64::consts::PI)).abs() < 1e-10);
        assert!((integrate(&w).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn coherent_wigner_peak_orientation() {
        // peak of W for |alpha> sits at (sqrt(2) Re alpha, sqrt(2) Im alpha)
        let alpha = Complex64::new(0.5, 0.8);
        let st = ncs_amplitudes(&DeformationSpec::Identity, alpha, 40).unwrap();
        let grid = GridSpec::square(5.0, 161);
        let w = wigner(&st, &grid).unwrap();
        let mut best = (0usize, 0usize, f64::MIN);
        for i in 0..grid.nq {
            for j in 0..grid.np {
                if w.at(i, j) > best.2 {
                    best = (i, j, w.at(i, j));
                }
            }
        }
        let (q, p) = (grid.q_at(best.0), grid.p_at(best.1));
        assert!((q - 2.0f64.sqrt() * 0.5).abs() < 0.1, "q peak {q}");
        assert!((p - 2.0f64.sqrt() * 0.8).abs() < 0.1, "p peak {p}");
    }

    #[test]
    fn linear_cat_wigner_closed_form() {
        let alpha = 2.2f64;
        let st = ncs_circle(&DeformationSpec::Identity, Complex64::new(alpha, 0.0), 2, 0, 60)
            .unwrap();
        let grid = GridSpec::square(7.0, 91);
        let w = wigner(&st, &grid).unwrap();
        let norm = 2.0 * (1.0 + (-2.0 * alpha * alpha).exp());
        for i in (0..91).step_by(5) {
            for j in (0..91).step_by(5) {
                let (q, p) = (grid.q_at(i), grid.p_at(j));
                let g1 = (-(q - 2.0f64.sqrt() * alpha).powi(2) - p * p).exp();
                let g2 = (-(q + 2.0f64.sqrt() * alpha).powi(2) - p * p).exp();
                let fringe =
                    2.0 * (-(q * q + p * p)).exp() * (2.0 * 2.0f64.sqrt() * alpha * p).cos();
                let expect = (g1 + g2 + fringe) / (std::f64::consts::PI * norm);
                assert!(
                    (w.at(i, j) - expect).abs() < 1e-10,
                    "q={q} p={p}: {} vs {expect}",
                    w.at(i, j)
                );
            }
        }
        // even-parity value at the origin
        assert!((w.at(45, 45) - 1.0 / std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn vacuum_husimi() {
        let st = fock_state(0, 8);
        let grid = GridSpec::square(6.0, 81);
        let q = husimi(&st, &grid).unwrap();
        let center = q.at(40, 40);
        assert!((center - 1.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!((integrate(&q).unwrap() - 1.0).abs() < 1e-6);
        assert!(q.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn husimi_matches_direct_sum_oracle() {
        let spec = DeformationSpec::TrappedIon { order: 2, eta2: 0.1089 };
        let st = ncs_circle(&spec, Complex64::new(3.5, 0.0), 2, 0, 220).unwrap();
        let grid = GridSpec::square(5.0, 41);
        let qf = husimi(&st, &grid).unwrap();
        for i in (0..41).step_by(4) {
            for j in (0..41).step_by(4) {
                let w = Complex64::new(grid.q_at(i), grid.p_at(j));
                // naive direct sum
                let mut overlap = Complex64::new(0.0, 0.0);
                let mut term = Complex64::new(1.0, 0.0); // conj(w)^n / sqrt(n!)
                for (n, c) in st.amplitudes.iter().enumerate() {
                    if n > 0 {
                        term *= w.conj() / (n as f64).sqrt();
                    }
                    overlap += c * term;
                }
                let oracle =
                    overlap.norm_sqr() * (-w.norm_sqr()).exp() / std::f64::consts::PI;
                assert!(
                    (qf.at(i, j) - oracle).abs() < 1e-10,
                    "({i},{j}): {} vs {oracle}",
                    qf.at(i, j)
                );
            }
        }
    }

    #[test]
    fn husimi_is_smoothed_wigner() {
        // Q(q,p) = (2/pi) sum_{grid} W(q',p') exp(-(sqrt2 q - q')^2 - (sqrt2 p - p')^2) dq' dp'
        let spec = DeformationSpec::Identity;
        let st = ncs_circle(&spec, Complex64::new(1.5, 0.0), 2, 0, 40).unwrap();
        let h = 0.1;
        let nw = 161; // [-8, 8]
        let wgrid = GridSpec::square(8.0, nw);
        let wf = wigner(&st, &wgrid).unwrap();
        let nq = 41; // interior block, spacing h/sqrt2
        let qpts: Vec<f64> =
            (0..nq).map(|k| (k as i64 - 20) as f64 * h / 2.0f64.sqrt()).collect();
        let qgrid = GridSpec {
            q_min: qpts[0],
            q_max: qpts[nq - 1],
            p_min: qpts[0],
            p_max: qpts[nq - 1],
            nq,
            np: nq,
        };
        let qf = husimi(&st, &qgrid).unwrap();
        for a in (0..nq).step_by(5) {
            for b in (0..nq).step_by(5) {
                let (tq, tp) = (2.0f64.sqrt() * qpts[a], 2.0f64.sqrt() * qpts[b]);
                let mut conv = 0.0;
                for i in 0..nw {
                    for j in 0..nw {
                        let (q1, p1) = (wgrid.q_at(i), wgrid.p_at(j));
                        conv += wf.at(i, j)
                            * (-(tq - q1).powi(2) - (tp - p1).powi(2)).exp();
                    }
                }
                conv *= 2.0 / std::f64::consts::PI * h * h;
                assert!(
                    (qf.at(a, b) - conv).abs() < 1e-3,
                    "({a},{b}): {} vs {conv}",
                    qf.at(a, b)
                );
            }
        }
    }

    #[test]
    fn wigner_parity_symmetry_even_support() {
        // sector-0 states of even order occupy even Fock indices only, so
        // they have definite parity and W is even under (q,p) -> (-q,-p)
        for order in [2usize, 4] {
            let spec = DeformationSpec::TrappedIon { order, eta2: 0.1089 };
            let st = ncs_circle(&spec, Complex64::new(3.5, 0.0), order, 0, 240).unwrap();
            let grid = GridSpec::square(7.5, 61);
            let w = wigner(&st, &grid).unwrap();
            for i in 0..61 {
                for j in 0..61 {
                    let v1 = w.at(i, j);
                    let v2 = w.at(60 - i, 60 - j);
                    assert!((v1 - v2).abs() < 1e-10, "order {order} at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn wigner_marginal_is_position_density() {
        // integral of W over p at fixed q equals |psi(q)|^2 with harmonic
        // oscillator eigenfunctions
        let spec = DeformationSpec::TrappedIon { order: 1, eta2: 0.1 };
        let st = ncs_amplitudes(&spec, Complex64::new(1.2, 0.0), 60).unwrap();
        let grid = GridSpec::square(8.0, 321);
        let w = wigner(&st, &grid).unwrap();
        let dp = (grid.p_max - grid.p_min) / (grid.np - 1) as f64;
        for &qi in &[120usize, 140, 160, 180, 200] {
            let q = grid.q_at(qi);
            let mut marginal = 0.0;
            for j in 0..grid.np {
                let wp = if j == 0 || j == grid.np - 1 { 0.5 } else { 1.0 };
                marginal += wp * w.at(qi, j);
            }
            marginal *= dp;
            // psi(q) = sum c_n H_n(q) e^{-q^2/2} / sqrt(2^n n! sqrt(pi))
            let mut psi = Complex64::new(0.0, 0.0);
            let mut h_prev = 0.0f64;
            let mut h_cur = 1.0f64; // H_0
            for (n, c) in st.amplitudes.iter().enumerate() {
                if n > 0 {
                    let next = 2.0 * q * h_cur - 2.0 * (n as f64 - 1.0) * h_prev;
                    h_prev = h_cur;
                    h_cur = next;
                }
                let log_norm = -0.5
                    * (n as f64 * std::f64::consts::LN_2
                        + ln_gamma(n as f64 + 1.0)
                        + 0.5 * std::f64::consts::PI.ln());
                psi += c * h_cur * (log_norm - q * q / 2.0).exp();
            }
            let density = psi.norm_sqr();
            assert!(
                (marginal - density).abs() < 1e-3,
                "q={q}: marginal {marginal} vs density {density}"
            );
        }
    }

    #[test]
    fn integrate_rejects_clipped_support() {
        let st = ncs_amplitudes(&DeformationSpec::Identity, Complex64::new(3.0, 0.0), 80).unwrap();
        let grid = GridSpec::square(3.0, 41); // coherent peak at 4.2 is outside
        let w = wigner(&st, &grid).unwrap();
        assert!(matches!(integrate(&w), Err(NcsError::SupportExceedsGrid { .. })));
    }
}
