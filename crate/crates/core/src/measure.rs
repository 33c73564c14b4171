//! Unity-resolution measures: finite Laguerre combinations and
//! Mellin-antitransform hypergeometric measures for rational deformations.
//!
//! The moment conditions read  integral m_h(x) x^n dx = n! ([h(n)]!)^2.
//! Laguerre measures satisfy them exactly by construction (binomial
//! inversion); rational-deformation measures are gamma-ratio Mellin
//! antitransforms evaluated either through their hypergeometric term list or
//! through a saddle-point Mellin-Barnes contour when the series route loses
//! too many digits (large argument or near-integer exponent spacing).

use num_complex::Complex64;
use statrs::function::gamma::{digamma, ln_gamma};

use crate::deformation::{h_factorial_log_seq, DeformationSpec};
use crate::error::{NcsError, Result};
use crate::logspace::LogWeight;
use crate::specfun::{ln_gamma_complex, pfq, signed_ln_gamma};

/// Exponent-pair separation for the degenerate Mellin terms.
const DEGENERACY_EPS: f64 = 1e-6;
/// Collision tolerance when detecting repeated exponents.
const COLLISION_TOL: f64 = 1e-9;
/// Log-spaced negativity scan: points per decade and range.
const SCAN_PER_DECADE: usize = 400;
const SCAN_LO: f64 = 1e-4;
const SCAN_HI: f64 = 1e3;

/// A nonnegative-axis density with moments against x^n.
pub trait MeasureDensity {
    fn density(&self, x: f64) -> Result<f64>;

    /// integral of density(x) x^n dx; the default is adaptive quadrature.
    fn moment(&self, n: usize) -> Result<f64>
    where
        Self: Sized,
    {
        numeric_moment(self, n)
    }
}

/// Wrapper turning a plain closure into a measure evaluator.
pub struct FnMeasure<F: Fn(f64) -> f64>(pub F);

impl<F: Fn(f64) -> f64> MeasureDensity for FnMeasure<F> {
    fn density(&self, x: f64) -> Result<f64> {
        Ok((self.0)(x))
    }
}

// ---------------------------------------------------------------------------
// Laguerre measures
// ---------------------------------------------------------------------------

/// m_h(x) = e^{-x} sum_{k <= n_max} m_k L_k(x) with coefficients fixed by the
/// moment conditions for n <= n_max.
///
/// `coeffs_lo` carries the rounding residue of each coefficient; the binomial
/// reconstruction amplifies single-ulp coefficient errors by C(n, n/2), so the
/// moment identity needs those extra bits to hold at 1e-9 up to rank 50.
#[derive(Debug, Clone)]
pub struct LaguerreMeasure {
    pub coeffs: Vec<f64>,
    coeffs_lo: Vec<f64>,
    pub n_max: usize,
    pub spec: DeformationSpec,
}

/// Build the finite Laguerre measure: m_k = sum_m (-1)^m C(k,m) ([h(m)]!)^2.
pub fn laguerre_measure(spec: &DeformationSpec, n_max: usize) -> Result<LaguerreMeasure> {
    let fact = h_factorial_log_seq(spec, n_max, None)?;
    let mut targets = Vec::with_capacity(n_max + 1);
    for (n, w) in fact.iter().enumerate() {
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let log2 = 2.0 * w.log_mag;
        if log2 > 700.0 {
            return Err(NcsError::MagnitudeOverflow { log_mag: log2 });
        }
        targets.push(log2.exp());
    }
    let mut coeffs = Vec::with_capacity(n_max + 1);
    let mut coeffs_lo = Vec::with_capacity(n_max + 1);
    let mut binom_row = vec![1.0f64]; // row k of Pascal's triangle
    for k in 0..=n_max {
        if k > 0 {
            let mut next = vec![1.0; k + 1];
            for j in 1..k {
                next[j] = binom_row[j - 1] + binom_row[j];
            }
            binom_row = next;
        }
        // compensated alternating sum with exact product splitting; the
        // residue is kept as a second limb
        let mut mk = 0.0;
        let mut comp = 0.0;
        for (m, &c) in binom_row.iter().enumerate() {
            let signed = if m % 2 == 0 { c } else { -c };
            let term = signed * targets[m];
            comp += signed.mul_add(targets[m], -term);
            let t = mk + term;
            comp += if mk.abs() >= term.abs() { (mk - t) + term } else { (term - t) + mk };
            mk = t;
        }
        let hi = mk + comp;
        coeffs.push(hi);
        coeffs_lo.push((mk - hi) + comp);
    }
    Ok(LaguerreMeasure { coeffs, coeffs_lo, n_max, spec: spec.clone() })
}

/// Exact n-th moment of a Laguerre measure via
/// integral e^{-x} L_k(x) x^n dx = (-1)^k C(n,k) n!.
pub fn measure_moment(measure: &LaguerreMeasure, n: usize) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut binom = 1.0f64; // C(n, k)
    for (k, &mk) in measure.coeffs.iter().enumerate() {
        if k > n {
            break;
        }
        let signed = if k % 2 == 0 { binom } else { -binom };
        let term = signed * mk;
        comp += signed.mul_add(mk, -term);
        comp += signed * measure.coeffs_lo[k];
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        binom *= (n - k) as f64 / (k + 1) as f64;
    }
    let mut fact = 1.0;
    for j in 2..=n {
        fact *= j as f64;
    }
    (sum + comp) * fact
}

impl MeasureDensity for LaguerreMeasure {
    fn density(&self, x: f64) -> Result<f64> {
        let mut sum = 0.0;
        let mut lm1 = 1.0f64;
        let mut l = 1.0 - x;
        for (k, &mk) in self.coeffs.iter().enumerate() {
            let lk = if k == 0 {
                1.0
            } else if k == 1 {
                l
            } else {
                let kf = (k - 1) as f64;
                let next = ((2.0 * kf + 1.0 - x) * l - kf * lm1) / (kf + 1.0);
                lm1 = l;
                l = next;
                l
            };
            sum += mk * lk;
        }
        Ok((-x).exp() * sum)
    }

    fn moment(&self, n: usize) -> Result<f64> {
        Ok(measure_moment(self, n))
    }
}

// ---------------------------------------------------------------------------
// Mellin antitransform measures for rational deformations
// ---------------------------------------------------------------------------

/// One hypergeometric term of the antitransform expansion.
#[derive(Debug, Clone)]
pub struct MellinTerm {
    pub prefactor: LogWeight,
    /// Exponent a_mu of the x^{a_mu} factor.
    pub power: f64,
    pub pfq_numer: Vec<f64>,
    pub pfq_denom: Vec<f64>,
    /// Sign of the pFq argument, (-1)^{A+B}.
    pub sign_of_argument: f64,
}

/// Gamma-ratio Mellin antitransform measure of a rational deformation.
///
/// Degenerate exponent pairs are separated by `DEGENERACY_EPS` before the
/// term lists are stored; evaluation Richardson-combines the lists built at
/// eps and eps/2, which reproduces the analytic two-fold limit. Where the
/// series route is unreliable the density falls back to a saddle-point
/// Mellin-Barnes contour on the unperturbed gamma ratio.
#[derive(Debug, Clone)]
pub struct HypergeometricMeasure {
    pub gamma: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Terms at separation eps; None when integer-spaced exponents make the
    /// expansion singular.
    pub terms: Option<Vec<MellinTerm>>,
    /// Terms at separation eps/2 for the Richardson combination.
    pub terms_half: Option<Vec<MellinTerm>>,
    /// Unperturbed numerator exponents (0 and each a_i twice) for the contour.
    exponents: Vec<f64>,
    /// Denominator shifts (each b_j twice).
    denominators: Vec<f64>,
    /// log of the constant prod Gamma^2(b_j+1) / prod Gamma^2(a_i+1).
    log_constant: f64,
    /// Largest safe argument for the series route.
    series_safe_x: f64,
}

fn build_terms(exponents: &[f64], denominators: &[f64]) -> Result<Vec<MellinTerm>> {
    let m_count = exponents.len();
    let d_count = denominators.len();
    let arg_sign = if (m_count + d_count) % 2 == 0 { 1.0 } else { -1.0 };
    let mut terms = Vec::with_capacity(m_count);
    for mu in 0..m_count {
        let e_mu = exponents[mu];
        let mut prefactor = LogWeight::ONE;
        let mut pfq_denom = Vec::with_capacity(m_count - 1);
        for (i, &e_i) in exponents.iter().enumerate() {
            if i == mu {
                continue;
            }
            prefactor = prefactor.mul(&signed_ln_gamma(e_i - e_mu)?);
            pfq_denom.push(1.0 + e_mu - e_i);
        }
        let mut pfq_numer = Vec::with_capacity(d_count);
        for &d_j in denominators {
            prefactor = prefactor.mul(&signed_ln_gamma(d_j - e_mu)?.recip());
            pfq_numer.push(1.0 + e_mu - d_j);
        }
        terms.push(MellinTerm {
            prefactor,
            power: e_mu,
            pfq_numer,
            pfq_denom,
            sign_of_argument: arg_sign,
        });
    }
    Ok(terms)
}

fn eval_terms(terms: &[MellinTerm], x: f64) -> Result<f64> {
    let mut sum = 0.0;
    for t in terms {
        let f = pfq(&t.pfq_numer, &t.pfq_denom, t.sign_of_argument * x)?;
        let mag = t.prefactor.log_mag + t.power * x.ln();
        if mag > 700.0 {
            return Err(NcsError::MagnitudeOverflow { log_mag: mag });
        }
        sum += f64::from(t.prefactor.sign) * mag.exp() * f.value;
    }
    Ok(sum)
}

/// Construct the measure for h(n) = gamma prod(n + a_i)/prod(n + b_j).
pub fn mellin_measure_rational(rational: &DeformationSpec) -> Result<HypergeometricMeasure> {
    let (gamma, a, b) = match rational {
        DeformationSpec::Rational { gamma, a, b } => (*gamma, a.clone(), b.clone()),
        _ => {
            return Err(NcsError::InvalidArgument(
                "mellin measure requires a rational deformation".into(),
            ))
        }
    };
    if a.len() < b.len() {
        return Err(NcsError::ExistenceViolated { a_count: a.len(), b_count: b.len() });
    }
    // constant C and its poles double as the factorial-existence check
    let mut log_constant = 0.0;
    for &bj in &b {
        log_constant += 2.0 * signed_ln_gamma(bj + 1.0)?.log_mag;
    }
    for &ai in &a {
        log_constant -= 2.0 * signed_ln_gamma(ai + 1.0)?.log_mag;
    }
    // numerator exponents: 0 from Gamma(s), each a_i twice
    let mut exponents = vec![0.0];
    for &ai in &a {
        exponents.push(ai);
        exponents.push(ai);
    }
    let mut denominators = Vec::with_capacity(2 * b.len());
    for &bj in &b {
        denominators.push(bj);
        denominators.push(bj);
    }
    // detect collisions and order-split them
    let mut sorted = exponents.clone();
    sorted.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for &e in &sorted {
        match groups.last_mut() {
            Some((v, c)) if (e - *v).abs() <= COLLISION_TOL => *c += 1,
            _ => groups.push((e, 1)),
        }
    }
    for &(v, c) in &groups {
        if c > 2 {
            return Err(NcsError::UnresolvedDegeneracy { value: v, multiplicity: c });
        }
    }
    // near-integer spacing between distinct exponent groups puts gamma
    // prefactors next to poles and 1/eps spikes inside the pFq series; those
    // cases go through the contour only
    let mut integer_spaced = false;
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let diff = groups[j].0 - groups[i].0;
            if (diff - diff.round()).abs() < 0.05 {
                integer_spaced = true;
            }
        }
    }
    let split = |eps: f64| -> Vec<f64> {
        let mut out = Vec::with_capacity(exponents.len());
        for &(v, c) in &groups {
            if c == 1 {
                out.push(v);
            } else {
                out.push(v - eps / 2.0);
                out.push(v + eps / 2.0);
            }
        }
        out
    };
    let (terms, terms_half) = if integer_spaced {
        (None, None)
    } else {
        (
            build_terms(&split(DEGENERACY_EPS), &denominators).ok(),
            build_terms(&split(DEGENERACY_EPS / 2.0), &denominators).ok(),
        )
    };

    // the pFq route loses roughly M x^{1/M} / ln 10 digits to internal
    // cancellation on top of the ~6 digits spent by the eps-split prefactors,
    // so it is only trusted while the former stays under ~3 digits
    let m_count = exponents.len() as f64;
    let series_safe_x = (3.0 * std::f64::consts::LN_10 / m_count).powf(m_count);

    Ok(HypergeometricMeasure {
        gamma,
        a,
        b,
        terms,
        terms_half,
        exponents,
        denominators,
        log_constant,
        series_safe_x,
    })
}

impl HypergeometricMeasure {
    /// Monic-part density (before the gamma scaling).
    fn monic_density(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Err(NcsError::InvalidArgument("measure density requires x > 0".into()));
        }
        if x <= self.series_safe_x {
            if let (Some(terms), Some(half)) = (&self.terms, &self.terms_half) {
                let coarse = eval_terms(terms, x)?;
                let fine = eval_terms(half, x)?;
                // Richardson in eps^2
                return Ok(self.log_constant.exp() * (4.0 * fine - coarse) / 3.0);
            }
        }
        self.contour_density(x)
    }

    /// Saddle-point Mellin-Barnes inversion of the unperturbed gamma ratio.
    fn contour_density(&self, x: f64) -> Result<f64> {
        let ln_x = x.ln();
        let domain = self
            .exponents
            .iter()
            .chain(self.denominators.iter())
            .fold(0.0f64, |m, &e| m.max(-e));
        let lo = domain + 1e-9;
        let phi_prime = |c: f64| -> f64 {
            let mut s = 0.0;
            for &e in &self.exponents {
                s += digamma(e + c);
            }
            for &d in &self.denominators {
                s -= digamma(d + c);
            }
            s - ln_x
        };
        // bracket the saddle
        let mut c_lo = lo + 1e-6;
        let mut c_hi = (lo + 1.0).max(1.0);
        while phi_prime(c_hi) < 0.0 {
            c_hi *= 2.0;
            if c_hi > 1e12 {
                return Err(NcsError::NoConvergence { terms: 0 });
            }
        }
        if phi_prime(c_lo) > 0.0 {
            // saddle sits against the domain edge; keep the edge abscissa
            c_hi = c_lo;
        }
        for _ in 0..200 {
            let mid = 0.5 * (c_lo + c_hi);
            if phi_prime(mid) < 0.0 {
                c_lo = mid;
            } else {
                c_hi = mid;
            }
        }
        let c = 0.5 * (c_lo + c_hi);
        // curvature -> Gaussian half-width
        let dh = 1e-4 * (1.0 + c);
        let curv = ((phi_prime(c + dh) - phi_prime(c - dh)) / (2.0 * dh)).max(1e-12);
        let sigma = curv.sqrt().recip();

        let phase = |t: f64| -> Complex64 {
            let s = Complex64::new(c, t);
            let mut acc = Complex64::new(self.log_constant, 0.0);
            for &e in &self.exponents {
                acc += ln_gamma_complex(s + e);
            }
            for &d in &self.denominators {
                acc -= ln_gamma_complex(s + d);
            }
            acc - s * ln_x
        };
        let s0 = phase(0.0).re;
        if s0 > 700.0 {
            return Err(NcsError::MagnitudeOverflow { log_mag: s0 });
        }
        let integrand = |t: f64| -> f64 { (phase(t) - s0).exp().re };

        // trapezoid over t >= 0 with step halving until stable
        let mut dt = sigma / 8.0;
        let mut prev = f64::NAN;
        let mut value = 0.0;
        for _ in 0..6 {
            let mut sum = 0.5 * integrand(0.0);
            let mut t = dt;
            let mut tail_run = 0usize;
            loop {
                let f = integrand(t);
                sum += f;
                if f.abs() < 1e-18 * sum.abs().max(1e-280) {
                    tail_run += 1;
                    if tail_run > 20 {
                        break;
                    }
                } else {
                    tail_run = 0;
                }
                t += dt;
                if t > 1e7 * sigma {
                    break;
                }
            }
            value = sum * dt / std::f64::consts::PI;
            if prev.is_finite() && (value - prev).abs() <= 1e-10 * value.abs().max(1e-280) {
                break;
            }
            prev = value;
            dt *= 0.5;
        }
        Ok(value * s0.exp())
    }
}

impl MeasureDensity for HypergeometricMeasure {
    /// m_h(x) = gamma^{-2} m_monic(gamma^{-2} x).
    fn density(&self, x: f64) -> Result<f64> {
        let g2 = self.gamma * self.gamma;
        Ok(self.monic_density(x / g2)? / g2)
    }
}

// ---------------------------------------------------------------------------
// Scaling and checks
// ---------------------------------------------------------------------------

/// The measure of the deformation beta*h: x -> beta^{-2} m_h(beta^{-2} x).
pub struct ScaledMeasure<M: MeasureDensity> {
    pub inner: M,
    pub beta: f64,
}

pub fn measure_scale<M: MeasureDensity>(inner: M, beta: f64) -> ScaledMeasure<M> {
    ScaledMeasure { inner, beta }
}

impl<M: MeasureDensity> MeasureDensity for ScaledMeasure<M> {
    fn density(&self, x: f64) -> Result<f64> {
        let b2 = self.beta * self.beta;
        Ok(self.inner.density(x / b2)? / b2)
    }

    fn moment(&self, n: usize) -> Result<f64> {
        Ok(self.beta.powi(2 * n as i32) * self.inner.moment(n)?)
    }
}

/// Adaptive-quadrature moment of an arbitrary density, integrating
/// density(e^u) e^{u(n+1)} over the log axis.
pub fn numeric_moment<M: MeasureDensity>(measure: &M, n: usize) -> Result<f64> {
    let f = |u: f64| -> Result<f64> {
        let x = u.exp();
        Ok(measure.density(x)? * x.powi(n as i32 + 1))
    };
    // locate the integrand peak on a coarse log grid, then expand the window
    // until the ends are negligible
    let mut u_lo = (1e-8f64).ln();
    let mut u_hi = (10.0f64).ln();
    let mut peak = 0.0f64;
    for _ in 0..60 {
        peak = 0.0;
        let steps = 40;
        for i in 0..=steps {
            let u = u_lo + (u_hi - u_lo) * i as f64 / steps as f64;
            peak = peak.max(f(u)?.abs());
        }
        let lo_val = f(u_lo)?.abs();
        let hi_val = f(u_hi)?.abs();
        let mut grown = false;
        if hi_val > 1e-13 * peak {
            u_hi += 1.0;
            grown = true;
        }
        if lo_val > 1e-13 * peak && u_lo > (1e-300f64).ln() {
            u_lo -= 1.0;
            grown = true;
        }
        if !grown {
            break;
        }
    }
    // fixed panels keep the adaptive error estimate honest on needle-shaped
    // integrands whose mass the first coarse samples would miss entirely
    let panels = 64usize;
    let du = (u_hi - u_lo) / panels as f64;
    let tol = 1e-10 * peak * du;
    let mut total = 0.0;
    for p in 0..panels {
        let a = u_lo + p as f64 * du;
        total += adaptive_simpson(&f, a, a + du, tol, 0)?;
    }
    Ok(total)
}

fn adaptive_simpson<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    simpson_step(f, a, b, fa, fm, fb, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    if depth >= 28 || err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, tol / 2.0, depth + 1)?
        + simpson_step(f, m, b, fm, frm, fb, tol / 2.0, depth + 1)?)
}

/// Outcome of the unity-resolution verification.
#[derive(Debug, Clone)]
pub struct ResolutionReport {
    pub max_diag_error: f64,
    /// First x (log-spaced scan) where the density turns negative, if any.
    pub negativity: Option<f64>,
}

/// Verify the diagonal moment conditions against n! ([h(n)]!)^2 and scan the
/// density sign on a log-spaced grid. Off-diagonal conditions vanish
/// identically by angular integration and are not recomputed.
pub fn resolution_check<M: MeasureDensity>(
    spec: &DeformationSpec,
    measure: &M,
    n_max: usize,
) -> Result<ResolutionReport> {
    let fact = h_factorial_log_seq(spec, n_max, None)?;
    let mut max_diag_error = 0.0f64;
    for n in 0..=n_max {
        let w = &fact[n];
        if w.sign == 0 {
            return Err(NcsError::DeformationPole { n });
        }
        let log_target = ln_gamma(n as f64 + 1.0) + 2.0 * w.log_mag;
        if log_target > 700.0 {
            return Err(NcsError::MagnitudeOverflow { log_mag: log_target });
        }
        let target = log_target.exp();
        let moment = measure.moment(n)?;
        max_diag_error = max_diag_error.max((moment - target).abs() / target.abs());
    }
    let decades = (SCAN_HI / SCAN_LO).log10();
    let points = (decades * SCAN_PER_DECADE as f64) as usize;
    let mut negativity = None;
    for i in 0..=points {
        let x = SCAN_LO * 10f64.powf(i as f64 / SCAN_PER_DECADE as f64);
        if measure.density(x)? < 0.0 {
            negativity = Some(x);
            break;
        }
    }
    Ok(ResolutionReport { max_diag_error, negativity })
}
