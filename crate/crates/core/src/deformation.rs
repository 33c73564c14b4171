//! Deformation families h(n), their sign-tracked log factorials, rational
//! approximants, and large-n asymptotics.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{NcsError, Result};
use crate::logspace::LogWeight;
use crate::specfun::{self, polylog_unit_circle, EPS_POLE};

/// Guard distance (radians) from a pole of tan for the asymptotic form.
pub const DELTA_TAN: f64 = 1e-3;

/// Which deformation the series truncation expands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesBase {
    H1,
    H2,
}

/// A deformation family h(n) of the oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DeformationSpec {
    /// Laguerre-ratio deformation of a trapped ion driven at the
    /// `order`-th sideband; `order` is N+1 >= 1 and `eta2` the squared
    /// Lamb-Dicke parameter.
    TrappedIon { order: usize, eta2: f64 },
    /// q-oscillator deformation sqrt(sinh(lambda n) / (n sinh lambda)).
    QOscillator { lambda: f64 },
    /// Rational deformation gamma * prod(n + a_i) / prod(n + b_j).
    Rational { gamma: f64, a: Vec<f64>, b: Vec<f64> },
    /// Truncated power-series deformation in eta^2, keeping `order` (1..=3)
    /// correction terms of the chosen base family.
    TruncatedSeries { base: SeriesBase, eta2: f64, order: u8 },
    /// h(n) = 1/sqrt(n); the states fill the unit disk.
    Harmonious,
    /// h == 1: the linear oscillator.
    Identity,
}

impl DeformationSpec {
    /// Smallest index at which h is defined.
    pub fn min_index(&self) -> usize {
        match self {
            DeformationSpec::TrappedIon { order, .. } => *order,
            _ => 1,
        }
    }

    /// Spec for 1/h when it is representable inside the same family.
    pub fn inverse(&self) -> Option<DeformationSpec> {
        match self {
            DeformationSpec::Identity => Some(DeformationSpec::Identity),
            DeformationSpec::Rational { gamma, a, b } => Some(DeformationSpec::Rational {
                gamma: 1.0 / gamma,
                a: b.clone(),
                b: a.clone(),
            }),
            _ => None,
        }
    }
}

/// Per-index values of h on 1..=n_hi with pole bookkeeping.
///
/// `h[n-1]` is h(n); indices below `defined_from` hold NaN. `poles` lists
/// indices where the Laguerre denominator fell under the pole threshold.
pub(crate) struct HValues {
    pub h: Vec<f64>,
    pub defined_from: usize,
    pub poles: Vec<usize>,
}

impl HValues {
    /// h(n), erroring on poles and out-of-domain indices.
    pub fn get(&self, n: usize) -> Result<f64> {
        if n < self.defined_from {
            return Err(NcsError::UndefinedIndex { n, min: self.defined_from });
        }
        if self.poles.binary_search(&n).is_ok() {
            return Err(NcsError::DeformationPole { n });
        }
        Ok(self.h[n - 1])
    }
}

/// Evaluate h on 1..=n_hi.
pub(crate) fn h_values(spec: &DeformationSpec, n_hi: usize) -> HValues {
    match spec {
        DeformationSpec::Identity => HValues {
            h: vec![1.0; n_hi],
            defined_from: 1,
            poles: vec![],
        },
        DeformationSpec::Harmonious => HValues {
            h: (1..=n_hi).map(|n| 1.0 / (n as f64).sqrt()).collect(),
            defined_from: 1,
            poles: vec![],
        },
        DeformationSpec::QOscillator { lambda } => HValues {
            h: (1..=n_hi)
                .map(|n| {
                    let nf = n as f64;
                    (0.5 * (ln_sinh(lambda * nf) - nf.ln() - ln_sinh(*lambda))).exp()
                })
                .collect(),
            defined_from: 1,
            poles: vec![],
        },
        DeformationSpec::Rational { gamma, a, b } => HValues {
            h: (1..=n_hi)
                .map(|n| {
                    let nf = n as f64;
                    let num: f64 = a.iter().map(|ai| nf + ai).product();
                    let den: f64 = b.iter().map(|bj| nf + bj).product();
                    gamma * num / den
                })
                .collect(),
            defined_from: 1,
            poles: (1..=n_hi)
                .filter(|&n| {
                    let nf = n as f64;
                    b.iter().any(|bj| (nf + bj).abs() < 1e-12)
                        || a.iter().any(|ai| (nf + ai).abs() < 1e-12)
                })
                .collect(),
        },
        DeformationSpec::TruncatedSeries { base, eta2, order } => {
            let coeffs = series_polynomials(
                match base {
                    SeriesBase::H1 => 1,
                    SeriesBase::H2 => 2,
                },
                *order as usize,
            );
            HValues {
                h: (1..=n_hi)
                    .map(|n| {
                        let nf = n as f64;
                        let mut pow = 1.0;
                        let mut sum = 0.0;
                        for poly in &coeffs {
                            sum += poly_eval(poly, nf) * pow;
                            pow *= eta2;
                        }
                        sum
                    })
                    .collect(),
                defined_from: 1,
                poles: vec![],
            }
        }
        DeformationSpec::TrappedIon { order, eta2 } => trapped_ion_values(*order, *eta2, n_hi),
    }
}

fn trapped_ion_values(order: usize, eta2: f64, n_hi: usize) -> HValues {
    let mut h = vec![f64::NAN; n_hi];
    let mut poles = Vec::new();
    if n_hi < order {
        return HValues { h, defined_from: order, poles };
    }
    if order == 1 {
        // h1(n) = d_n / (eta2 L_{n-1}) with d_n = L_{n-1} - L_n run by its
        // own one-pass recurrence d_{n+1} = (eta2 L_n + n d_n)/(n+1); this is
        // the ratio recurrence reorganized so small eta2 costs no
        // cancellation. Pole where the denominator Laguerre value vanishes.
        let mut l_prev = 1.0f64; // L_{n-1}
        let mut d = eta2; // d_1 = L_0 - L_1 = eta2
        let mut amplitude = 1.0f64;
        for n in 1..=n_hi {
            if l_prev.abs() < EPS_POLE * amplitude.max(1.0) {
                poles.push(n);
            } else {
                h[n - 1] = d / (eta2 * l_prev);
            }
            let l = l_prev - d;
            amplitude = amplitude.max(l.abs());
            d = (eta2 * l + n as f64 * d) / (n as f64 + 1.0);
            l_prev = l;
        }
    } else {
        // h_{N+1}(n) = (N+1)! L^{N+1}_{n-N-1} / ((n-N)_{N+1} L_{n-N-1});
        // both Laguerre sequences run by the value recurrence (x >= 0 keeps
        // them polynomially bounded).
        let m_hi = n_hi - order;
        let kf = order as f64;
        let mut fact = 1.0;
        for j in 2..=order {
            fact *= j as f64;
        }
        let (mut l0m1, mut l0) = (1.0f64, 1.0 - eta2); // L_0, L_1
        let (mut lkm1, mut lk) = (1.0f64, 1.0 + kf - eta2);
        let mut amplitude = 1.0f64;
        for m in 0..=m_hi {
            let (v0, vk) = if m == 0 {
                (1.0, 1.0)
            } else if m == 1 {
                (1.0 - eta2, 1.0 + kf - eta2)
            } else {
                (l0, lk)
            };
            let n = m + order;
            let mut poch = 1.0f64;
            for j in 0..order {
                poch *= (n - j) as f64;
            }
            if v0.abs() < EPS_POLE * amplitude.max(1.0) {
                poles.push(n);
            } else {
                h[n - 1] = fact * vk / (poch * v0);
            }
            amplitude = amplitude.max(v0.abs());
            if m >= 1 {
                let mf = m as f64;
                let next0 = ((2.0 * mf + 1.0 - eta2) * l0 - mf * l0m1) / (mf + 1.0);
                let nextk = ((2.0 * mf + kf + 1.0 - eta2) * lk - (mf + kf) * lkm1) / (mf + 1.0);
                l0m1 = l0;
                l0 = next0;
                lkm1 = lk;
                lk = nextk;
            }
        }
    }
    HValues { h, defined_from: order, poles }
}

fn ln_sinh(y: f64) -> f64 {
    assert!(y > 0.0);
    y + (-(-2.0 * y).exp()).ln_1p() - std::f64::consts::LN_2
}

/// h(n) for the selected family.
pub fn h_eval(spec: &DeformationSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(NcsError::InvalidArgument("h_eval requires n >= 1".into()));
    }
    h_values(spec, n).get(n)
}

/// The operator kernel f_k(n, eta2) = k! L_n^k(eta2) / (n+1)_k, with the
/// Pochhammer factor handled in log space.
pub fn f_k(n: usize, k: usize, eta2: f64) -> f64 {
    let l = specfun::laguerre(n, k, eta2);
    if l == 0.0 {
        return 0.0;
    }
    let log = ln_gamma(k as f64 + 1.0) + l.abs().ln() - (ln_gamma((n + k) as f64 + 1.0) - ln_gamma(n as f64 + 1.0));
    l.signum() * log.exp()
}

/// Stepping pattern of a deformation factorial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircleSector {
    /// Step N+1 between occupied Fock indices.
    pub order: usize,
    /// Residue q of the occupied indices, 0 <= sector < order.
    pub sector: usize,
}

/// Sign-tracked log factorial [h(n)]!.
///
/// Without `circle` this is the running product h(1)...h(n) with the
/// empty-product convention at n = 0. With `circle` the product steps by
/// `order` starting after the sector index: h(q + order) ... h(n), for
/// n = l*order + q.
pub fn h_factorial_log(
    spec: &DeformationSpec,
    n: usize,
    circle: Option<CircleSector>,
) -> Result<LogWeight> {
    let seq = h_factorial_log_seq(spec, n, circle)?;
    Ok(*seq.last().expect("factorial sequence is never empty"))
}

/// Cumulative factorial sequence.
///
/// Plain: entry l is [h(l)]! for l = 0..=n (length n+1).
/// Circle: entry l is the stepped factorial at Fock index l*order + sector,
/// for l = 0..=(n - sector)/order.
pub fn h_factorial_log_seq(
    spec: &DeformationSpec,
    n: usize,
    circle: Option<CircleSector>,
) -> Result<Vec<LogWeight>> {
    match circle {
        None => {
            let hv = h_values(spec, n);
            let mut out = Vec::with_capacity(n + 1);
            let mut acc = LogWeight::ONE;
            out.push(acc);
            for j in 1..=n {
                acc = acc.mul(&LogWeight::from_value(hv.get(j)?));
                out.push(acc);
            }
            Ok(out)
        }
        Some(CircleSector { order, sector }) => {
            if order == 0 || sector >= order {
                return Err(NcsError::InvalidArgument(
                    "circle factorial requires sector < order".into(),
                ));
            }
            if n % order != sector % order {
                return Err(NcsError::InvalidArgument(
                    "index is not congruent to sector modulo order".into(),
                ));
            }
            let l_max = (n - sector) / order;
            let hv = h_values(spec, n);
            let mut out = Vec::with_capacity(l_max + 1);
            let mut acc = LogWeight::ONE;
            out.push(acc);
            for l in 1..=l_max {
                let idx = sector + l * order;
                acc = acc.mul(&LogWeight::from_value(hv.get(idx)?));
                out.push(acc);
            }
            Ok(out)
        }
    }
}

/// Large-n form of h1: tan(2 sqrt(n eta^2) - pi/4) / sqrt(n eta^2).
pub fn h1_asymptotic(n: usize, eta2: f64) -> Result<f64> {
    let s = (n as f64 * eta2).sqrt();
    let theta = 2.0 * s - std::f64::consts::FRAC_PI_4;
    // distance from odd multiples of pi/2
    let r = (theta - std::f64::consts::FRAC_PI_2).rem_euclid(std::f64::consts::PI);
    let dist = r.min(std::f64::consts::PI - r);
    if dist < DELTA_TAN {
        return Err(NcsError::NearTangentPole { n });
    }
    Ok(theta.tan() / s)
}

/// The oscillating entire function u(x) controlling the log-factorial
/// envelope, assembled from polylogarithms on the unit circle.
///
/// The cosine series
/// `(4/pi) sum_k (-1)^k (4x(2k+1) - 1) cos((2k+1) 4x) / (2k+1)^3`
/// resums, with psi = 4x + pi/2, into
/// `(4/pi) [4x (Cl2(psi) - Cl2(2 psi)/4) - (Sl3(psi) - Sl3(2 psi)/8)]`
/// where Cl2 = Im Li2 and Sl3 = Im Li3 on the unit circle.
pub fn u_function(x: f64) -> f64 {
    let psi = 4.0 * x + std::f64::consts::FRAC_PI_2;
    let li2 = polylog_unit_circle(2, psi).im;
    let li2_2 = polylog_unit_circle(2, 2.0 * psi).im;
    let li3 = polylog_unit_circle(3, psi).im;
    let li3_2 = polylog_unit_circle(3, 2.0 * psi).im;
    (4.0 / std::f64::consts::PI) * (4.0 * x * (li2 - 0.25 * li2_2) - (li3 - 0.125 * li3_2))
}

/// The sequence log([h1(n)^2]! n! eta^{2n}) for n = 1..=n_max, entirely in
/// log space.
pub fn factorial_log_profile(eta2: f64, n_max: usize) -> Result<Vec<f64>> {
    let hv = h_values(&DeformationSpec::TrappedIon { order: 1, eta2 }, n_max);
    let mut out = Vec::with_capacity(n_max);
    let mut log_h2_fact = 0.0f64;
    let ln_eta2 = eta2.ln();
    for n in 1..=n_max {
        let h = hv.get(n)?;
        if h == 0.0 {
            return Err(NcsError::DeformationPole { n });
        }
        log_h2_fact += 2.0 * h.abs().ln();
        out.push(log_h2_fact + ln_gamma(n as f64 + 1.0) + n as f64 * ln_eta2);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Series expansion machinery and rational approximants
// ---------------------------------------------------------------------------

/// Dense polynomial in n, ascending coefficients.
type Poly = Vec<f64>;

fn poly_eval(p: &Poly, x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_scale(p: &Poly, s: f64) -> Poly {
    p.iter().map(|c| c * s).collect()
}

fn poly_add(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, &c) in b.iter().enumerate() {
        out[i] += c;
    }
    out
}

fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ca) in a.iter().enumerate() {
        for (j, &cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn poly_trim(p: &mut Poly) {
    let max = p.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    while p.len() > 1 && p.last().unwrap().abs() <= 1e-12 * max {
        p.pop();
    }
}

/// Binomial coefficient C(n - shift, j) as a polynomial in n.
fn binom_poly(shift: usize, j: usize) -> Poly {
    let mut p = vec![1.0];
    for i in 0..j {
        // multiply by (n - shift - i) / (i + 1)
        let root = (shift + i) as f64;
        let factor = vec![-root, 1.0];
        p = poly_scale(&poly_mul(&p, &factor), 1.0 / (i + 1) as f64);
    }
    p
}

/// Coefficients s_m(n) of the eta^2 expansion of h_order(n), m = 0..=terms,
/// as polynomials in n (s_m has degree m).
///
/// Both the numerator (N+1)! L^{N+1}_{n-N-1} / (n-N)_{N+1} and the
/// denominator L_{n-N-1} are expanded in eta^2 with binomial-polynomial
/// coefficients, then divided as formal power series.
pub(crate) fn series_polynomials(order: usize, terms: usize) -> Vec<Poly> {
    let mut fact_order = 1.0;
    for j in 2..=order {
        fact_order *= j as f64;
    }
    // With N+1 = order, both expansions carry C(n - N - 1, k) = C(n - order, k)
    // coefficients: binom_poly(s, k) builds C(n - s, k).
    let s = order;
    let mut num: Vec<Poly> = Vec::with_capacity(terms + 1);
    let mut den: Vec<Poly> = Vec::with_capacity(terms + 1);
    for k in 0..=terms {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let mut fact_k = 1.0; // k!
        for j in 2..=k {
            fact_k *= j as f64;
        }
        let mut fact_kp = fact_k; // (k + order)!
        for j in (k + 1)..=(k + order) {
            fact_kp *= j as f64;
        }
        num.push(poly_scale(&binom_poly(s, k), sign * fact_order / fact_kp));
        den.push(poly_scale(&binom_poly(s, k), sign / fact_k));
    }
    // series division: s_0 = num_0 / den_0 (= 1); s_m = num_m - sum den_i s_{m-i}
    let mut out: Vec<Poly> = Vec::with_capacity(terms + 1);
    for m in 0..=terms {
        let mut sm = num[m].clone();
        for i in 1..=m {
            sm = poly_add(&sm, &poly_scale(&poly_mul(&den[i], &out[m - i]), -1.0));
        }
        poly_trim(&mut sm);
        out.push(sm);
    }
    out
}

/// Real roots of a polynomial via companion-matrix eigenvalues with one
/// Newton polish step per root.
fn real_roots(p: &Poly) -> Result<Vec<f64>> {
    let deg = p.len() - 1;
    if deg == 0 {
        return Ok(vec![]);
    }
    let lead = *p.last().unwrap();
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -p[i] / lead;
    }
    let eigen = comp.complex_eigenvalues();
    let dp: Poly = p.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect();
    let mut roots = Vec::with_capacity(deg);
    for ev in eigen.iter() {
        let mut z: Complex64 = *ev;
        // one Newton step
        let pv = p.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        let dv = dp.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c);
        if dv.norm() > 1e-300 {
            z -= pv / dv;
        }
        if z.im.abs() > 1e-8 * (1.0 + z.re.abs()) {
            return Err(NcsError::NonRealRoots);
        }
        roots.push(z.re);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(roots)
}

/// Working index range over which a rational root may not hit an integer.
const ROOT_CHECK_RANGE: f64 = 1e6;

fn check_roots_off_integers(roots: &[f64]) -> Result<()> {
    for &r in roots {
        // the polynomial vanishes at n = r, so h has a zero or pole there
        if r >= 1.0 - 1e-9 && r <= ROOT_CHECK_RANGE && (r - r.round()).abs() < 1e-9 {
            return Err(NcsError::RootAtEvaluationPoint { n: r.round() as usize });
        }
    }
    Ok(())
}

/// Rational approximant of the first-sideband deformation h1, built from
/// truncated Laguerre expansions.
///
/// For B = 0 the approximant is the degree-A polynomial matching the eta^2
/// series of h1 (so A = 1 reproduces 1 + (n-1) eta^2 / 2); for B >= 1 the
/// numerator difference P_{A+1}(n-1) - P_{A+1}(n) and denominator
/// eta^2 P_B(n-1) are truncated separately and factored.
pub fn rational_from_truncation(a_deg: usize, b_deg: usize, eta2: f64) -> Result<DeformationSpec> {
    if a_deg < b_deg {
        return Err(NcsError::ExistenceViolated { a_count: a_deg, b_count: b_deg });
    }
    if a_deg == 0 && b_deg == 0 {
        return Ok(DeformationSpec::Rational { gamma: 1.0, a: vec![], b: vec![] });
    }

    let assemble = |polys: &[Poly], eta2: f64| -> Poly {
        let mut acc: Poly = vec![0.0];
        let mut pow = 1.0;
        for p in polys {
            acc = poly_add(&acc, &poly_scale(p, pow));
            pow *= eta2;
        }
        poly_trim(&mut acc);
        acc
    };

    let (num_poly, den_poly): (Poly, Poly) = if b_deg == 0 {
        let coeffs = series_polynomials(1, a_deg);
        (assemble(&coeffs, eta2), vec![1.0])
    } else {
        // numerator: (P_{A+1}(n-1) - P_{A+1}(n)) / eta^2
        //          = sum_{j=0}^{A} (-1)^j C(n-1, j) eta^{2j} / (j+1)!
        // denominator: P_B(n-1) = sum_{j=0}^{B} (-1)^j C(n-1, j) eta^{2j} / j!
        let mut nterms: Vec<Poly> = Vec::with_capacity(a_deg + 1);
        let mut dterms: Vec<Poly> = Vec::with_capacity(b_deg + 1);
        for j in 0..=a_deg {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let mut f = 1.0; // (j+1)!
            for i in 2..=(j + 1) {
                f *= i as f64;
            }
            nterms.push(poly_scale(&binom_poly(1, j), sign / f));
        }
        for j in 0..=b_deg {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let mut f = 1.0;
            for i in 2..=j {
                f *= i as f64;
            }
            dterms.push(poly_scale(&binom_poly(1, j), sign / f));
        }
        (assemble(&nterms, eta2), assemble(&dterms, eta2))
    };

    let gamma = num_poly.last().unwrap() / den_poly.last().unwrap();
    let a_roots = real_roots(&num_poly)?;
    let b_roots = real_roots(&den_poly)?;
    check_roots_off_integers(&a_roots)?;
    check_roots_off_integers(&b_roots)?;
    Ok(DeformationSpec::Rational {
        gamma,
        a: a_roots.iter().map(|r| -r).collect(),
        b: b_roots.iter().map(|r| -r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_k_values() {
        assert!((f_k(0, 3, 0.7) - 1.0).abs() < 1e-14);
        assert!((f_k(1, 0, 0.1) - 0.9).abs() < 1e-14);
        // 1! L_1^1(0.1) / (2)_1 = 1.9 / 2
        assert!((f_k(1, 1, 0.1) - 0.95).abs() < 1e-14);
    }

    #[test]
    fn h1_small_values() {
        let spec = DeformationSpec::TrappedIon { order: 1, eta2: 0.1 };
        assert!((h_eval(&spec, 1).unwrap() - 1.0).abs() < 1e-14);
        assert!((h_eval(&spec, 2).unwrap() - 19.0 / 18.0).abs() < 1e-13);
    }

    #[test]
    fn h2_at_definition_edge() {
        let spec = DeformationSpec::TrappedIon { order: 2, eta2: 0.37 };
        assert!((h_eval(&spec, 2).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            h_eval(&spec, 1),
            Err(NcsError::UndefinedIndex { .. })
        ));
    }

    #[test]
    fn h_order_matches_laguerre_definition() {
        for order in 1..=3usize {
            let eta2 = 0.13;
            let spec = DeformationSpec::TrappedIon { order, eta2 };
            for n in order..=(order + 40) {
                let m = n - order;
                let num = specfun::laguerre(m, order, eta2);
                let den = specfun::laguerre(m, 0, eta2);
                let mut fact = 1.0;
                for j in 2..=order {
                    fact *= j as f64;
                }
                let mut poch = 1.0;
                for j in 0..order {
                    poch *= (n - j) as f64;
                }
                let expect = fact * num / (poch * den);
                let got = h_eval(&spec, n).unwrap();
                assert!(
                    (got - expect).abs() <= 1e-11 * expect.abs().max(1e-12),
                    "order={order} n={n}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn truncated_series_example() {
        let spec = DeformationSpec::TruncatedSeries {
            base: SeriesBase::H1,
            eta2: 0.1,
            order: 3,
        };
        let v = h_eval(&spec, 2).unwrap();
        assert!((v - 1.0555).abs() < 1e-12);
    }

    #[test]
    fn series_polynomials_match_printed_coefficients() {
        // h1: 1 + (n-1)/2 x + (2n^2-3n+1)/6 x^2 + (11n^3-22n^2+13n-2)/48 x^3
        let s = series_polynomials(1, 3);
        for n in 1..=8 {
            let nf = n as f64;
            assert!((poly_eval(&s[0], nf) - 1.0).abs() < 1e-12);
            assert!((poly_eval(&s[1], nf) - (nf - 1.0) / 2.0).abs() < 1e-12);
            assert!(
                (poly_eval(&s[2], nf) - (2.0 * nf * nf - 3.0 * nf + 1.0) / 6.0).abs() < 1e-11
            );
            let c3 = (11.0 * nf.powi(3) - 22.0 * nf * nf + 13.0 * nf - 2.0) / 48.0;
            assert!((poly_eval(&s[3], nf) - c3).abs() < 1e-10);
        }
        // h2: 1 + 2(n-2)/3 x + (11n^2-39n+34)/24 x^2 + (19n^3-96n^2+159n-86)/60 x^3
        let s = series_polynomials(2, 3);
        for n in 1..=8 {
            let nf = n as f64;
            assert!((poly_eval(&s[1], nf) - 2.0 * (nf - 2.0) / 3.0).abs() < 1e-12);
            assert!(
                (poly_eval(&s[2], nf) - (11.0 * nf * nf - 39.0 * nf + 34.0) / 24.0).abs() < 1e-11
            );
            let c3 = (19.0 * nf.powi(3) - 96.0 * nf * nf + 159.0 * nf - 86.0) / 60.0;
            assert!((poly_eval(&s[3], nf) - c3).abs() < 1e-10);
        }
    }

    #[test]
    fn factorial_conventions() {
        let spec = DeformationSpec::TrappedIon { order: 1, eta2: 0.1 };
        let w = h_factorial_log(&spec, 0, None).unwrap();
        assert_eq!(w, LogWeight::ONE);
        let w = h_factorial_log(&DeformationSpec::Identity, 17, None).unwrap();
        assert_eq!(w.sign, 1);
        assert!(w.log_mag.abs() < 1e-12);
        let w = h_factorial_log(&spec, 2, None).unwrap();
        assert_eq!(w.sign, 1);
        assert!((w.log_mag - (19.0f64 / 18.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn factorial_recurrence_property() {
        let spec = DeformationSpec::TrappedIon { order: 1, eta2: 0.2 };
        let seq = h_factorial_log_seq(&spec, 60, None).unwrap();
        let hv = h_values(&spec, 60);
        for n in 1..=60 {
            let step = seq[n - 1].mul(&LogWeight::from_value(hv.get(n).unwrap()));
            assert_eq!(step.sign, seq[n].sign, "sign mismatch at n={n}");
            assert!((step.log_mag - seq[n].log_mag).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_factorial_steps() {
        let spec = DeformationSpec::TrappedIon { order: 2, eta2: 0.1089 };
        // sector 0, order 2: factorial at n=4 is h(2) h(4)
        let w = h_factorial_log(&spec, 4, Some(CircleSector { order: 2, sector: 0 })).unwrap();
        let expect = h_eval(&spec, 2).unwrap() * h_eval(&spec, 4).unwrap();
        assert!((w.value() - expect).abs() < 1e-12 * expect.abs());
        // base entry is the empty product
        let w0 = h_factorial_log(&spec, 0, Some(CircleSector { order: 2, sector: 0 })).unwrap();
        assert_eq!(w0, LogWeight::ONE);
    }

    #[test]
    fn asymptotic_guard() {
        // choose eta2 so 2 sqrt(n eta2) - pi/4 lands exactly on pi/2 at n = 1000
        let n = 1000usize;
        let eta2 = (3.0 * std::f64::consts::PI / 8.0).powi(2) / n as f64;
        assert!(matches!(
            h1_asymptotic(n, eta2),
            Err(NcsError::NearTangentPole { .. })
        ));
        // a zero of tan: 2 sqrt(n eta2) - pi/4 = 0
        let eta2 = (std::f64::consts::PI / 8.0).powi(2) / n as f64;
        let v = h1_asymptotic(n, eta2).unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn u_at_zero_is_minus_pi2_over_8() {
        let expect = -std::f64::consts::PI * std::f64::consts::PI / 8.0;
        assert!((u_function(0.0) - expect).abs() < 1e-10);
    }

    #[test]
    fn u_matches_cosine_series() {
        for &x in &[0.25, 1.0, 2.7, 5.5, 10.0] {
            let mut oracle = 0.0;
            for k in 0..100_000usize {
                let m = (2 * k + 1) as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                oracle += sign * (4.0 * x * m - 1.0) * (m * 4.0 * x).cos() / (m * m * m);
            }
            oracle *= 4.0 / std::f64::consts::PI;
            assert!(
                (u_function(x) - oracle).abs() < 1e-8,
                "x={x}: {} vs {oracle}",
                u_function(x)
            );
        }
    }

    #[test]
    fn u_envelope_bound() {
        // termwise: |u(x)| <= (4/pi)(4x sum 1/m^2 + sum 1/m^3) over odd m
        let pi = std::f64::consts::PI;
        let lambda2 = pi * pi / 8.0;
        let lambda3 = 1.0517997903438077; // sum over odd m of 1/m^3 = 7 zeta(3)/8
        for i in 0..=100 {
            let x = i as f64 * 0.25;
            let bound = (4.0 / pi) * (4.0 * x * lambda2 + lambda3);
            assert!(u_function(x).abs() <= bound + 1e-12);
        }
    }

    #[test]
    fn profile_identity_limit() {
        // eta2 -> 0: profile -> log n! + n log eta2
        let eta2 = 1e-12;
        let prof = factorial_log_profile(eta2, 20).unwrap();
        for (i, &p) in prof.iter().enumerate() {
            let n = (i + 1) as f64;
            let expect = ln_gamma(n + 1.0) + n * eta2.ln();
            assert!((p - expect).abs() < 1e-6 * expect.abs());
        }
    }

    #[test]
    fn profile_sign_changes_at_eta2_0_1() {
        let prof = factorial_log_profile(0.1, 1000).unwrap();
        let crossings = prof.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert!(crossings >= 2, "expected multiple zero crossings, got {crossings}");
    }

    #[test]
    fn rational_linear_approximant() {
        let eta2 = 0.3; // keeps a = 2/eta2 - 1 off the integers
        let spec = rational_from_truncation(1, 0, eta2).unwrap();
        match &spec {
            DeformationSpec::Rational { gamma, a, b } => {
                assert!((gamma - eta2 / 2.0).abs() < 1e-12);
                assert_eq!(a.len(), 1);
                assert!(b.is_empty());
                assert!((a[0] - (2.0 / eta2 - 1.0)).abs() < 1e-9);
            }
            _ => panic!("expected rational"),
        }
        for n in 1..=30 {
            let nf = n as f64;
            let expect = 1.0 + (nf - 1.0) * eta2 / 2.0;
            assert!((h_eval(&spec, n).unwrap() - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn rational_identity_case() {
        let spec = rational_from_truncation(0, 0, 0.1).unwrap();
        match &spec {
            DeformationSpec::Rational { gamma, a, b } => {
                assert_eq!(*gamma, 1.0);
                assert!(a.is_empty() && b.is_empty());
            }
            _ => panic!(),
        }
    }

    #[test]
    fn rational_1_1_matches_truncation_oracle() {
        // [P_2(n-1) - P_2(n)] / (eta^2 P_1(n-1))
        //   = (1 - (n-1) eta^2/2) / (1 - (n-1) eta^2);
        // eta2 = 0.3 keeps the zero at n = 1 + 2/eta2 off the integers
        let eta2 = 0.3;
        let spec = rational_from_truncation(1, 1, eta2).unwrap();
        for n in 1..=4 {
            let nf = n as f64;
            let expect = (1.0 - (nf - 1.0) * eta2 / 2.0) / (1.0 - (nf - 1.0) * eta2);
            let got = h_eval(&spec, n).unwrap();
            assert!(
                (got - expect).abs() < 1e-9 * expect.abs(),
                "n={n}: {got} vs {expect}"
            );
        }
        // denominator root sits at b1 = -(1/eta2 + 1)
        match &spec {
            DeformationSpec::Rational { b, .. } => {
                assert!((b[0] - (-(1.0 / eta2 + 1.0))).abs() < 1e-8);
            }
            _ => panic!(),
        }
        // the eta2 = 0.1 member has its numerator zero exactly at n = 21,
        // which the construction rejects
        assert!(matches!(
            rational_from_truncation(1, 1, 0.1),
            Err(NcsError::RootAtEvaluationPoint { n: 21 })
        ));
    }

    #[test]
    fn rational_factorial_matches_gamma_ratio() {
        // [h(n)]! for h = gamma prod(n+a)/prod(n+b) equals
        // gamma^n * Gamma[(a)+n+1] Gamma[(b)+1] / (Gamma[(a)+1] Gamma[(b)+n+1]);
        // valid only while the roots stay off the integers, hence eta2 = 0.3
        let spec = rational_from_truncation(1, 1, 0.3).unwrap();
        let (gamma, a, b) = match &spec {
            DeformationSpec::Rational { gamma, a, b } => (*gamma, a.clone(), b.clone()),
            _ => unreachable!(),
        };
        for n in [1usize, 5, 17, 50] {
            let direct = h_factorial_log(&spec, n, None).unwrap();
            let nf = n as f64;
            let num = specfun::log_gamma_ratio(&a, &b, nf + 1.0).unwrap();
            let den = specfun::log_gamma_ratio(&a, &b, 1.0).unwrap();
            let gamma_pow = LogWeight::from_value(gamma).powi(n as i32);
            let via_gamma = gamma_pow.mul(&num).mul(&den.recip());
            assert_eq!(direct.sign, via_gamma.sign, "n={n}");
            assert!(
                (direct.log_mag - via_gamma.log_mag).abs() < 1e-8,
                "n={n}: {} vs {}",
                direct.log_mag,
                via_gamma.log_mag
            );
        }
    }

    #[test]
    fn root_at_integer_detected() {
        // the linear-approximant zero sits at n = 1 - 2/eta2 < 0, outside the
        // index range, so construction succeeds even at integer 2/eta2
        assert!(rational_from_truncation(1, 0, 0.2).is_ok());
        // a polynomial root on a positive integer is rejected
        let err = check_roots_off_integers(&[3.0]);
        assert!(matches!(err, Err(NcsError::RootAtEvaluationPoint { n: 3 })));
    }

    #[test]
    fn qoscillator_monotone_trapped_ion_not() {
        let q = DeformationSpec::QOscillator { lambda: 0.5 };
        let mut prev = 0.0;
        for n in 1..=100 {
            let v = h_eval(&q, n).unwrap();
            assert!(v > prev);
            prev = v;
        }
        let ion = DeformationSpec::TrappedIon { order: 1, eta2: 0.2 };
        let signs: Vec<f64> = (1..=200).map(|n| h_eval(&ion, n).unwrap().signum()).collect();
        assert!(signs.windows(2).any(|w| w[0] != w[1]), "h1 should change sign");
    }

    #[test]
    fn inverse_specs() {
        let r = DeformationSpec::Rational { gamma: 2.0, a: vec![1.5], b: vec![0.25] };
        let inv = r.inverse().unwrap();
        for n in 1..=20 {
            let prod = h_eval(&r, n).unwrap() * h_eval(&inv, n).unwrap();
            assert!((prod - 1.0).abs() < 1e-12);
        }
        assert!(DeformationSpec::TrappedIon { order: 1, eta2: 0.1 }.inverse().is_none());
    }
}
