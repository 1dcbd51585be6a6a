//! Python bindings: the Euler configuration, phase-set analysis, the
//! periodic/pulse bilinear operators and the periodic amplitude solver.

use machstem::amplitude_solver::{solve_periodic, MachStemProblem, ThetaDomain};
use machstem::bilinear_ops::{f_per, f_sym};
use machstem::euler_example::{build_euler_system, euler_zeta, EulerParams};
use machstem::fields::{PeriodicField, PulseField};
use machstem::resonance::{resonance_scan, small_divisor_estimate};
use machstem::spectral_geometry::build_phase_set;
use machstem::{Frequency, MachStemError, ToleranceSet};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: MachStemError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A band-limited Theta-periodic real field.
#[pyclass(name = "PeriodicField")]
#[derive(Clone)]
struct PyPeriodicField {
    inner: PeriodicField,
}

#[pymethods]
impl PyPeriodicField {
    /// Sample `f(theta)` on `2 kmax + 1` uniform nodes and truncate.
    #[staticmethod]
    fn from_samples(period: f64, kmax: usize, samples: Vec<f64>) -> PyResult<Self> {
        let n = 2 * kmax + 1;
        if samples.len() != n {
            return Err(PyValueError::new_err(format!("need {n} samples")));
        }
        let inner = PeriodicField::from_fn(period, kmax, |th| {
            let i = (th / period * n as f64).round() as usize % n;
            samples[i]
        });
        Ok(Self { inner })
    }

    fn eval(&self, theta: f64) -> f64 {
        self.inner.eval(theta)
    }

    fn derivative(&self) -> Self {
        Self { inner: self.inner.derivative() }
    }

    fn zero_mean_part(&self) -> Self {
        Self { inner: self.inner.zero_mean_part() }
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn values(&self, n: usize) -> Vec<f64> {
        self.inner.values(n)
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    #[getter]
    fn kmax(&self) -> usize {
        self.inner.kmax()
    }
}

/// A decaying field on a uniform grid over `[-half_width, half_width]`.
#[pyclass(name = "PulseField")]
#[derive(Clone)]
struct PyPulseField {
    inner: PulseField,
}

#[pymethods]
impl PyPulseField {
    #[new]
    fn new(half_width: f64, step: f64, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: PulseField::new(half_width, step, values, f64::INFINITY).map_err(err)? })
    }

    fn eval(&self, theta: f64) -> f64 {
        self.inner.eval(theta)
    }

    fn derivative(&self) -> Self {
        Self { inner: self.inner.derivative() }
    }

    fn moment(&self, p: u32) -> f64 {
        self.inner.moment(p)
    }

    fn sup_norm(&self) -> f64 {
        self.inner.sup_norm()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn half_width(&self) -> f64 {
        self.inner.half_width()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.inner.step()
    }
}

/// Spectral analysis of the built-in Euler configuration at
/// `tau = cbar * eta`: phases, coefficients and resonance diagnostics.
#[pyclass(name = "EulerAnalysis")]
struct PyEulerAnalysis {
    #[pyo3(get)]
    mach: f64,
    #[pyo3(get)]
    zeta: f64,
    #[pyo3(get)]
    omegas: Vec<f64>,
    #[pyo3(get)]
    incoming: Vec<usize>,
    #[pyo3(get)]
    outgoing: Vec<usize>,
    #[pyo3(get)]
    delta1: f64,
    #[pyo3(get)]
    delta3: f64,
    #[pyo3(get)]
    burgers_c: f64,
    #[pyo3(get)]
    mu_pul: f64,
    #[pyo3(get)]
    resonant_alphas: Vec<Vec<i64>>,
    #[pyo3(get)]
    small_divisor_c_min: f64,
}

/// Analyze the Euler system at boundary frequency `(cbar * eta, eta)`.
#[pyfunction]
#[pyo3(signature = (vbar=1.3, ubar=0.6, cbar=1.1, cprime=-0.4, eta=0.9, alpha_bound=8, gamma=2.5))]
#[allow(clippy::too_many_arguments)]
fn analyze_euler(
    vbar: f64,
    ubar: f64,
    cbar: f64,
    cprime: f64,
    eta: f64,
    alpha_bound: i64,
    gamma: f64,
) -> PyResult<PyEulerAnalysis> {
    let tol = ToleranceSet::default();
    let params = EulerParams::new(vbar, ubar, cbar, cprime).map_err(err)?;
    let system = build_euler_system(&params, &tol).map_err(err)?;
    let freq = Frequency::new(cbar * eta, vec![eta]).map_err(err)?;
    let ps = build_phase_set(&system, &freq, &tol).map_err(err)?;
    let scan = resonance_scan(&system, &ps, alpha_bound, &tol);
    let c_min = if scan.resonant_modes.is_empty() {
        small_divisor_estimate(&system, &ps, gamma, alpha_bound, &tol).map_err(err)?.0
    } else {
        f64::NAN
    };
    let red = ps.coeffs.reduced.as_ref().ok_or_else(|| {
        PyValueError::new_err("expected the three-phase reduction for the Euler system")
    })?;
    Ok(PyEulerAnalysis {
        mach: params.mach(),
        zeta: euler_zeta(&params, cbar * eta, eta).map_err(err)?,
        omegas: ps.omegas.clone(),
        incoming: ps.incoming.clone(),
        outgoing: ps.outgoing.clone(),
        delta1: red.delta1,
        delta3: red.delta3,
        burgers_c: red.c,
        mu_pul: red.mu_pul,
        resonant_alphas: scan.resonant_modes.iter().map(|m| m.alpha.clone()).collect(),
        small_divisor_c_min: c_min,
    })
}

/// The periodic nonlocal operator `F_per[u, v]` for kernel slopes
/// `(delta1, delta3 = 1 + delta1)`; both inputs must have zero mean.
#[pyfunction]
fn f_periodic(
    u: &PyPeriodicField,
    v: &PyPeriodicField,
    delta1: f64,
    delta3: f64,
) -> PyResult<PyPeriodicField> {
    let tol = ToleranceSet::default();
    Ok(PyPeriodicField { inner: f_per(&u.inner, &v.inner, delta1, delta3, &tol).map_err(err)? })
}

/// The limiting symmetric kernel `F_sym^s[u', v]` of the large-period study.
#[pyfunction]
fn f_symmetric(
    u: &PyPulseField,
    v: &PyPulseField,
    s: f64,
    delta1: f64,
    delta3: f64,
) -> PyResult<PyPulseField> {
    Ok(PyPulseField { inner: f_sym(&u.inner, &v.inner, s, delta1, delta3).map_err(err)? })
}

/// Integrate the y-independent periodic amplitude equation
/// `a_t + c a a_theta + mu F_per(a_theta, a_theta) = g` from rest; returns
/// `(times, sup_norms, final_field)`.
#[pyfunction]
#[pyo3(signature = (g, c, mu, delta1, delta3, dt, t_final, blowup_cap=100.0))]
#[allow(clippy::too_many_arguments)]
fn solve_periodic_forced(
    g: &PyPeriodicField,
    c: f64,
    mu: f64,
    delta1: f64,
    delta3: f64,
    dt: f64,
    t_final: f64,
    blowup_cap: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, PyPeriodicField)> {
    let tol = ToleranceSet::default();
    let problem = MachStemProblem {
        domain: ThetaDomain::Periodic { period: g.inner.period(), kmax: g.inner.kmax() },
        w: 0.0,
        c,
        mu,
        delta: (delta1, delta3),
        y: None,
        dt,
        t_final,
        blowup_cap,
    };
    let forcing = |t: f64, _y: f64| g.inner.scaled(if t > 0.0 { t * t / (1.0 + t * t) } else { 0.0 });
    let traj = solve_periodic(&problem, &forcing, None, &tol).map_err(err)?;
    let sups = traj.monitors.iter().map(|m| m.sup).collect();
    let last = PyPeriodicField { inner: traj.last()[0].clone() };
    Ok((traj.times, sups, last))
}

#[pymodule]
fn machstem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPeriodicField>()?;
    m.add_class::<PyPulseField>()?;
    m.add_class::<PyEulerAnalysis>()?;
    m.add_function(wrap_pyfunction!(analyze_euler, m)?)?;
    m.add_function(wrap_pyfunction!(f_periodic, m)?)?;
    m.add_function(wrap_pyfunction!(f_symmetric, m)?)?;
    m.add_function(wrap_pyfunction!(solve_periodic_forced, m)?)?;
    Ok(())
}
