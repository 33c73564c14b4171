//! Python bindings: deformation families, NCS construction, phase-space
//! fields and unity-resolution measures.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ncs_core::deformation::{self, DeformationSpec, SeriesBase};
use ncs_core::measure::{self, MeasureDensity};
use ncs_core::phasespace::{self, GridSpec};
use ncs_core::specfun;
use ncs_core::states;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A deformation family h(n).
#[pyclass]
#[derive(Clone)]
struct Deformation {
    spec: DeformationSpec,
}

#[pymethods]
impl Deformation {
    #[staticmethod]
    fn trapped_ion(order: usize, eta2: f64) -> PyResult<Self> {
        if order == 0 || eta2 <= 0.0 {
            return Err(PyValueError::new_err("need order >= 1 and eta2 > 0"));
        }
        Ok(Deformation { spec: DeformationSpec::TrappedIon { order, eta2 } })
    }

    #[staticmethod]
    fn identity() -> Self {
        Deformation { spec: DeformationSpec::Identity }
    }

    #[staticmethod]
    fn q_oscillator(lambda: f64) -> PyResult<Self> {
        if lambda <= 0.0 {
            return Err(PyValueError::new_err("lambda must be positive"));
        }
        Ok(Deformation { spec: DeformationSpec::QOscillator { lambda } })
    }

    #[staticmethod]
    fn harmonious() -> Self {
        Deformation { spec: DeformationSpec::Harmonious }
    }

    #[staticmethod]
    fn rational(gamma: f64, a: Vec<f64>, b: Vec<f64>) -> Self {
        Deformation { spec: DeformationSpec::Rational { gamma, a, b } }
    }

    #[staticmethod]
    fn truncated_series(base: &str, eta2: f64, order: u8) -> PyResult<Self> {
        let base = match base {
            "h1" => SeriesBase::H1,
            "h2" => SeriesBase::H2,
            _ => return Err(PyValueError::new_err("base must be 'h1' or 'h2'")),
        };
        if !(1..=3).contains(&order) || eta2 <= 0.0 {
            return Err(PyValueError::new_err("need eta2 > 0 and order in 1..=3"));
        }
        Ok(Deformation { spec: DeformationSpec::TruncatedSeries { base, eta2, order } })
    }

    /// Rational approximant of h1 from truncated Laguerre expansions.
    #[staticmethod]
    fn from_truncation(a_deg: usize, b_deg: usize, eta2: f64) -> PyResult<Self> {
        Ok(Deformation {
            spec: deformation::rational_from_truncation(a_deg, b_deg, eta2).map_err(err)?,
        })
    }

    fn h(&self, n: usize) -> PyResult<f64> {
        deformation::h_eval(&self.spec, n).map_err(err)
    }

    /// Sign and natural-log magnitude of [h(n)]!.
    fn factorial_log(&self, n: usize) -> PyResult<(i8, f64)> {
        let w = deformation::h_factorial_log(&self.spec, n, None).map_err(err)?;
        Ok((w.sign, w.log_mag))
    }

    fn min_index(&self) -> usize {
        self.spec.min_index()
    }

    fn __repr__(&self) -> String {
        format!("Deformation({:?})", self.spec)
    }
}

/// Truncated Fock expansion of an NCS or circle NCS.
#[pyclass]
struct State {
    inner: states::NcsState,
}

#[pymethods]
impl State {
    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes.clone()
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.inner.alpha
    }

    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order
    }

    #[getter]
    fn sector(&self) -> usize {
        self.inner.sector
    }

    #[getter]
    fn tail_mass_estimate(&self) -> f64 {
        self.inner.tail_mass_estimate
    }

    #[getter]
    fn norm_status(&self) -> &'static str {
        match self.inner.norm_status {
            states::NormStatus::Normalized => "normalized",
            states::NormStatus::DivergentAtAlpha => "divergent-at-alpha",
        }
    }

    /// Wigner field on a square grid; returns (values, nq, np) with values
    /// row-major in q then p.
    fn wigner(&self, half_width: f64, points: usize) -> PyResult<(Vec<f64>, usize, usize)> {
        let grid = GridSpec::square(half_width, points);
        let f = phasespace::wigner(&self.inner, &grid).map_err(err)?;
        Ok((f.values, grid.nq, grid.np))
    }

    /// Husimi-Kano field on a square grid; same layout as `wigner`.
    fn husimi(&self, half_width: f64, points: usize) -> PyResult<(Vec<f64>, usize, usize)> {
        let grid = GridSpec::square(half_width, points);
        let f = phasespace::husimi(&self.inner, &grid).map_err(err)?;
        Ok((f.values, grid.nq, grid.np))
    }

    fn __repr__(&self) -> String {
        format!(
            "State(order={}, sector={}, n_max={}, status={})",
            self.inner.order,
            self.inner.sector,
            self.inner.n_max,
            self.norm_status()
        )
    }
}

/// Finite Laguerre unity-resolution measure.
#[pyclass]
struct LaguerreMeasure {
    inner: measure::LaguerreMeasure,
}

#[pymethods]
impl LaguerreMeasure {
    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    fn density(&self, x: f64) -> PyResult<f64> {
        self.inner.density(x).map_err(err)
    }

    /// Exact moment against x^n.
    fn moment(&self, n: usize) -> f64 {
        measure::measure_moment(&self.inner, n)
    }
}

#[pyfunction]
#[pyo3(signature = (deformation, alpha, n_max=None))]
fn ncs(deformation: &Deformation, alpha: Complex64, n_max: Option<usize>) -> PyResult<State> {
    let n_max = match n_max {
        Some(n) => n,
        None => states::truncation_for(&deformation.spec, alpha, 1, 0).map_err(err)?,
    };
    Ok(State { inner: states::ncs_amplitudes(&deformation.spec, alpha, n_max).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (deformation, alpha, order, sector, n_max=None))]
fn ncs_circle(
    deformation: &Deformation,
    alpha: Complex64,
    order: usize,
    sector: usize,
    n_max: Option<usize>,
) -> PyResult<State> {
    let n_max = match n_max {
        Some(n) => n,
        None => states::truncation_for(&deformation.spec, alpha, order, sector).map_err(err)?,
    };
    Ok(State {
        inner: states::ncs_circle(&deformation.spec, alpha, order, sector, n_max).map_err(err)?,
    })
}

#[pyfunction]
fn laguerre(n: usize, k: usize, x: f64) -> f64 {
    specfun::laguerre(n, k, x)
}

#[pyfunction]
fn pfq(numer: Vec<f64>, denom: Vec<f64>, x: f64) -> PyResult<(f64, f64, usize)> {
    let r = specfun::pfq(&numer, &denom, x).map_err(err)?;
    Ok((r.value, r.abs_error_estimate, r.terms_used))
}

#[pyfunction]
fn polylog_unit_circle(order: u32, phi: f64) -> PyResult<Complex64> {
    if order != 2 && order != 3 {
        return Err(PyValueError::new_err("order must be 2 or 3"));
    }
    Ok(specfun::polylog_unit_circle(order, phi))
}

#[pyfunction]
fn u_function(x: f64) -> f64 {
    deformation::u_function(x)
}

#[pyfunction]
fn h_exponential(deformation: &Deformation, v: f64, n_max: usize) -> PyResult<f64> {
    Ok(states::h_exponential(&deformation.spec, v, n_max).map_err(err)?.value)
}

#[pyfunction]
fn alpha_from_rabi(omega0: f64, omega_n1: f64, eta: f64, n: usize) -> Complex64 {
    states::alpha_from_rabi(&states::RabiConfig { omega0, omega_n1, eta, n })
}

#[pyfunction]
fn laguerre_measure(deformation: &Deformation, rank: usize) -> PyResult<LaguerreMeasure> {
    Ok(LaguerreMeasure {
        inner: measure::laguerre_measure(&deformation.spec, rank).map_err(err)?,
    })
}

#[pymodule]
fn ncs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Deformation>()?;
    m.add_class::<State>()?;
    m.add_class::<LaguerreMeasure>()?;
    m.add_function(wrap_pyfunction!(ncs, m)?)?;
    m.add_function(wrap_pyfunction!(ncs_circle, m)?)?;
    m.add_function(wrap_pyfunction!(laguerre, m)?)?;
    m.add_function(wrap_pyfunction!(pfq, m)?)?;
    m.add_function(wrap_pyfunction!(polylog_unit_circle, m)?)?;
    m.add_function(wrap_pyfunction!(u_function, m)?)?;
    m.add_function(wrap_pyfunction!(h_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_from_rabi, m)?)?;
    m.add_function(wrap_pyfunction!(laguerre_measure, m)?)?;
    Ok(())
}
