//! Time integration of the reduced leading-amplitude equation
//! `∂t a + w ∂y a + c a ∂θ a + μ F(∂θ a, ∂θ a) = g`
//! in its periodic (Fourier pseudospectral) and pulse (finite-difference)
//! forms, plus the linearization around a frozen background, with the
//! invariant monitors (zero mean / zero moment, norm time series).

use crate::bilinear_ops::{f_per, f_pul_quadrature};
use crate::error::{MachStemError, Result};
use crate::fields::{PeriodicField, PulseField};
use crate::tolerances::ToleranceSet;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// Fast-variable discretization.
#[derive(Debug, Clone)]
pub enum ThetaDomain {
    /// Band-limited `Theta`-periodic fields, `|k| <= kmax`.
    Periodic { period: f64, kmax: usize },
    /// Decaying fields sampled on `[-L, L]` with step `h`.
    Pulse { half_width: f64, step: f64 },
}

/// One periodic tangential direction, spectral derivative across the nodes.
#[derive(Debug, Clone)]
pub struct YDomain {
    pub length: f64,
    pub points: usize,
}

/// Everything that defines one amplitude-equation run except the forcing
/// (which is a closure and therefore passed to the solver separately).
#[derive(Debug, Clone)]
pub struct MachStemProblem {
    pub domain: ThetaDomain,
    /// Tangential transport speed (d = 2: one scalar).
    pub w: f64,
    /// Burgers coefficient.
    pub c: f64,
    /// Nonlocal coefficient (of `F_per` in the periodic case, `F_pul` in the
    /// pulse case).
    pub mu: f64,
    /// `(delta_1, delta_3)` of the nonlocal kernel, `delta_3 = 1 + delta_1`.
    pub delta: (f64, f64),
    /// `None` = y-independent mode (the `w ∂y` term drops).
    pub y: Option<YDomain>,
    pub dt: f64,
    pub t_final: f64,
    /// Abort threshold for `‖a‖_∞` (wave breaking is reported, not handled).
    pub blowup_cap: f64,
}

impl MachStemProblem {
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0) {
            errs.push(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_final > 0.0) {
            errs.push(format!("t_final must be positive (got {})", self.t_final));
        }
        if !(self.blowup_cap > 0.0) {
            errs.push(format!("blowup_cap must be positive (got {})", self.blowup_cap));
        }
        match &self.domain {
            ThetaDomain::Periodic { period, kmax } => {
                if !(*period > 0.0) {
                    errs.push(format!("period must be positive (got {period})"));
                }
                if *kmax == 0 {
                    errs.push("kmax must be at least 1".into());
                }
            }
            ThetaDomain::Pulse { half_width, step } => {
                if !(*half_width > 0.0 && *step > 0.0 && step < half_width) {
                    errs.push(format!(
                        "need 0 < step < half_width (got L = {half_width}, h = {step})"
                    ));
                }
            }
        }
        if let Some(y) = &self.y {
            if !(y.length > 0.0) || y.points < 2 {
                errs.push(format!(
                    "y domain needs positive length and >= 2 points (got {} / {})",
                    y.length, y.points
                ));
            }
        }
        if errs.is_empty() { Ok(()) } else { Err(MachStemError::ValidationError(errs)) }
    }

    fn y_nodes(&self) -> Vec<f64> {
        match &self.y {
            None => vec![0.0],
            Some(y) => (0..y.points).map(|i| y.length * i as f64 / y.points as f64).collect(),
        }
    }
}

/// Per-step scalar monitors.
#[derive(Debug, Clone)]
pub struct MonitorRow {
    pub t: f64,
    /// Worst |θ-mean| (periodic) or |θ-moment| (pulse) over the y nodes.
    pub mean: f64,
    pub sup: f64,
    pub l2: f64,
    /// Γ^k norm (pulse runs only; 0 for periodic).
    pub gamma: f64,
}

/// Trajectory of a periodic run: one `PeriodicField` per y node per stored
/// time level.
#[derive(Debug, Clone)]
pub struct PeriodicTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<PeriodicField>>,
    pub monitors: Vec<MonitorRow>,
    pub period: f64,
    pub y_length: Option<f64>,
}

impl PeriodicTrajectory {
    pub fn last(&self) -> &[PeriodicField] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    /// Cubic interpolation of the y-node fields at time `t` (coefficients
    /// interpolated; exact at stored levels).
    pub fn at(&self, t: f64) -> Vec<PeriodicField> {
        let n = self.times.len();
        assert!(n >= 2, "trajectory too short to interpolate");
        let dt = self.times[1] - self.times[0];
        let x = (t - self.times[0]) / dt;
        let i0 = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
        let tt = x - i0 as f64;
        let kmax = self.states[0][0].kmax();
        let ny = self.states[0].len();
        let mut out = Vec::with_capacity(ny);
        for iy in 0..ny {
            let mut coeffs = vec![Complex64::ZERO; 2 * kmax + 1];
            for (j, off) in (-1_isize..=2).enumerate() {
                let mut w = 1.0;
                for (l, off2) in (-1_isize..=2).enumerate() {
                    if l != j {
                        w *= (tt - off2 as f64) / (off as f64 - off2 as f64);
                    }
                }
                let lvl = &self.states[(i0 as isize + off) as usize][iy];
                for (c, &s) in coeffs.iter_mut().zip(lvl.coeffs()) {
                    *c += w * s;
                }
            }
            out.push(
                PeriodicField::from_coeffs(self.period, coeffs)
                    .expect("interpolation preserves Hermitian symmetry"),
            );
        }
        out
    }
}

/// Trajectory of a pulse run (y-independent mode).
#[derive(Debug, Clone)]
pub struct PulseTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<PulseField>,
    pub monitors: Vec<MonitorRow>,
}

fn periodic_monitors(t: f64, state: &[PeriodicField]) -> MonitorRow {
    let mean = state.iter().map(|f| f.mean().abs()).fold(0.0_f64, f64::max);
    let sup = state.iter().map(|f| f.sup_norm()).fold(0.0_f64, f64::max);
    let l2 = state.iter().map(|f| f.l2_norm()).fold(0.0_f64, f64::max);
    MonitorRow { t, mean, sup, l2, gamma: 0.0 }
}

/// Spectral `∂y` across the y nodes, coefficient by coefficient.
fn y_derivative(state: &[PeriodicField], y_length: f64) -> Vec<PeriodicField> {
    let ny = state.len();
    let kmax = state[0].kmax();
    let period = state[0].period();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(ny);
    let inv = planner.plan_fft_inverse(ny);
    let mut out_coeffs = vec![vec![Complex64::ZERO; 2 * kmax + 1]; ny];
    for idx in 0..(2 * kmax + 1) {
        let mut buf: Vec<Complex64> = state.iter().map(|f| f.coeffs()[idx]).collect();
        fwd.process(&mut buf);
        for (j, c) in buf.iter_mut().enumerate() {
            let ky = if j <= ny / 2 { j as f64 } else { j as f64 - ny as f64 };
            // The Nyquist mode of an odd derivative is set to zero.
            let ky = if ny % 2 == 0 && j == ny / 2 { 0.0 } else { ky };
            *c *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * ky / y_length);
        }
        inv.process(&mut buf);
        for (iy, c) in buf.iter().enumerate() {
            out_coeffs[iy][idx] = c / ny as f64;
        }
    }
    out_coeffs
        .into_iter()
        .map(|c| {
            // Exact arithmetic keeps the slices Hermitian; symmetrize the
            // rounding noise by hand (near-zero slices would otherwise trip
            // the relative validation of `from_coeffs`).
            let mut f = PeriodicField::zeros(period, kmax);
            for k in 0..=kmax as i64 {
                let avg = 0.5 * (c[(kmax as i64 + k) as usize]
                    + c[(kmax as i64 - k) as usize].conj());
                f.set_pair(k, avg);
            }
            f
        })
        .collect()
}

/// `c a ∂θ a` in conservative form: exact spectral convolution of `a²`
/// on the doubled band, derivative, then truncation back to the state band.
fn burgers_term(a: &PeriodicField, c: f64, kmax: usize) -> PeriodicField {
    a.product(a).derivative().truncated(kmax).scaled(0.5 * c)
}

#[allow(clippy::too_many_arguments)]
fn periodic_rhs(
    t: f64,
    state: &[PeriodicField],
    problem: &MachStemProblem,
    forcing: &dyn Fn(f64, f64) -> PeriodicField,
    y_nodes: &[f64],
    kmax: usize,
    linear_background: Option<&dyn Fn(f64) -> PeriodicField>,
    tol: &ToleranceSet,
) -> Result<Vec<PeriodicField>> {
    let dy = match &problem.y {
        Some(y) if state.len() > 1 => Some(y_derivative(state, y.length)),
        _ => None,
    };
    let (d1, d3) = problem.delta;
    let mut out = Vec::with_capacity(state.len());
    for (iy, a) in state.iter().enumerate() {
        let mut rhs = forcing(t, y_nodes[iy]).truncated(kmax);
        match linear_background {
            None => {
                rhs = rhs.sub(&burgers_term(a, problem.c, kmax));
                if problem.mu != 0.0 {
                    let da = a.derivative();
                    rhs = rhs.sub(
                        &f_per(&da, &da, d1, d3, tol)?.truncated(kmax).scaled(problem.mu),
                    );
                }
            }
            Some(background) => {
                // Linearized form: c ∂θ(ā a₁) + μ [F(∂ā, ∂a₁) + F(∂a₁, ∂ā)].
                let bg = background(t).truncated(kmax);
                rhs = rhs.sub(
                    &bg.product(a).derivative().truncated(kmax).scaled(problem.c),
                );
                if problem.mu != 0.0 {
                    let dbg = bg.derivative();
                    let da = a.derivative();
                    rhs = rhs
                        .sub(&f_per(&dbg, &da, d1, d3, tol)?.truncated(kmax).scaled(problem.mu))
                        .sub(&f_per(&da, &dbg, d1, d3, tol)?.truncated(kmax).scaled(problem.mu));
                }
            }
        }
        if let (Some(dy), w) = (&dy, problem.w) {
            if w != 0.0 {
                rhs = rhs.sub(&dy[iy].scaled(w));
            }
        }
        // The mean mode stays pinned at zero (projection each stage).
        out.push(rhs.zero_mean_part());
    }
    Ok(out)
}

fn periodic_step_checks(
    state: &[PeriodicField],
    problem: &MachStemProblem,
    kmax: usize,
    period: f64,
) -> Result<()> {
    let sup = state.iter().map(|f| f.sup_norm()).fold(0.0_f64, f64::max);
    if sup > problem.blowup_cap {
        return Err(MachStemError::BlowUpDetected(sup, problem.blowup_cap));
    }
    let speed = (problem.c * sup).abs();
    if speed > 0.0 {
        let dtheta = period / (2 * kmax + 1) as f64;
        let limit = 0.5 * dtheta / speed;
        if problem.dt > limit {
            return Err(MachStemError::CflViolation { dt: problem.dt, limit });
        }
    }
    Ok(())
}

fn add_state(a: &[PeriodicField], b: &[PeriodicField], s: f64) -> Vec<PeriodicField> {
    a.iter().zip(b).map(|(x, y)| x.add(&y.scaled(s))).collect()
}

fn periodic_run(
    problem: &MachStemProblem,
    forcing: &dyn Fn(f64, f64) -> PeriodicField,
    initial: Option<Vec<PeriodicField>>,
    linear_background: Option<&dyn Fn(f64) -> PeriodicField>,
    tol: &ToleranceSet,
) -> Result<PeriodicTrajectory> {
    problem.validate()?;
    let (period, kmax) = match problem.domain {
        ThetaDomain::Periodic { period, kmax } => (period, kmax),
        _ => {
            return Err(MachStemError::ValidationError(vec![
                "periodic solver needs a periodic theta domain".into(),
            ]))
        }
    };
    let y_nodes = problem.y_nodes();
    let mut state: Vec<PeriodicField> = match initial {
        Some(s) => {
            if s.len() != y_nodes.len() {
                return Err(MachStemError::ValidationError(vec![format!(
                    "initial state has {} y slices, expected {}",
                    s.len(),
                    y_nodes.len()
                )]));
            }
            s.iter().map(|f| f.truncated(kmax).zero_mean_part()).collect()
        }
        None => vec![PeriodicField::zeros(period, kmax); y_nodes.len()],
    };
    let steps = (problem.t_final / problem.dt).round() as usize;
    let dt = problem.t_final / steps.max(1) as f64;
    let mut times = vec![0.0];
    let mut states = vec![state.clone()];
    let mut monitors = vec![periodic_monitors(0.0, &state)];
    for step in 0..steps {
        let t = step as f64 * dt;
        periodic_step_checks(&state, problem, kmax, period)?;
        let rhs = |tt: f64, s: &[PeriodicField]| {
            periodic_rhs(tt, s, problem, forcing, &y_nodes, kmax, linear_background, tol)
        };
        let k1 = rhs(t, &state)?;
        let k2 = rhs(t + 0.5 * dt, &add_state(&state, &k1, 0.5 * dt))?;
        let k3 = rhs(t + 0.5 * dt, &add_state(&state, &k2, 0.5 * dt))?;
        let k4 = rhs(t + dt, &add_state(&state, &k3, dt))?;
        state = state
            .iter()
            .zip(k1.iter().zip(k2.iter()).zip(k3.iter().zip(k4.iter())))
            .map(|(a, ((c1, c2), (c3, c4)))| {
                a.add(
                    &c1.add(&c2.scaled(2.0)).add(&c3.scaled(2.0)).add(c4).scaled(dt / 6.0),
                )
            })
            .collect();
        let tn = (step + 1) as f64 * dt;
        times.push(tn);
        states.push(state.clone());
        monitors.push(periodic_monitors(tn, &state));
    }
    Ok(PeriodicTrajectory {
        times,
        states,
        monitors,
        period,
        y_length: problem.y.as_ref().map(|y| y.length),
    })
}

/// Integrate the periodic Mach stem equation by RK4 from rest (or from
/// `initial`). The mean mode is projected out every stage; the CFL guard
/// `dt <= 0.5 Δθ / max|c a|` and the blow-up cap are checked every step.
pub fn solve_periodic(
    problem: &MachStemProblem,
    forcing: &dyn Fn(f64, f64) -> PeriodicField,
    initial: Option<Vec<PeriodicField>>,
    tol: &ToleranceSet,
) -> Result<PeriodicTrajectory> {
    periodic_run(problem, forcing, initial, None, tol)
}

/// Integrate the linearization of the periodic equation around the frozen
/// background trajectory `a(t)` (y-independent background):
/// `∂t a₁ + w ∂y a₁ + c ∂θ(ā a₁) + μ [F(∂ā, ∂a₁) + F(∂a₁, ∂ā)] = g`.
pub fn solve_periodic_linearized(
    problem: &MachStemProblem,
    background: &dyn Fn(f64) -> PeriodicField,
    forcing: &dyn Fn(f64, f64) -> PeriodicField,
    initial: Option<Vec<PeriodicField>>,
    tol: &ToleranceSet,
) -> Result<PeriodicTrajectory> {
    periodic_run(problem, forcing, initial, Some(background), tol)
}

/// Upwind-biased fourth-order Burgers term `c a ∂θ(a²/2)` in flux-difference
/// form: interface fluxes
/// `F_{i+1/2} = (f_{i-2} - 5 f_{i-1} + 13 f_i + 3 f_{i+1}) / 12` (speed > 0,
/// mirrored otherwise) with `f = c a² / 2`, so that the θ-integral of the
/// term telescopes to zero exactly and the moment invariant survives the
/// per-interface upwind switching.
fn pulse_burgers_term(a: &PulseField, c: f64) -> PulseField {
    let n = a.len();
    let h = a.step();
    let v = |i: isize| -> f64 { if i < 0 || i >= n as isize { 0.0 } else { a.values()[i as usize] } };
    let f = |i: isize| -> f64 {
        let x = v(i);
        0.5 * c * x * x
    };
    // flux[i] = F_{i - 1/2}.
    let mut flux = vec![0.0; n + 1];
    for (i, fl) in flux.iter_mut().enumerate() {
        let i = i as isize - 1; // interface between nodes i and i + 1
        let speed = 0.5 * c * (v(i) + v(i + 1));
        *fl = if speed >= 0.0 {
            (f(i - 2) - 5.0 * f(i - 1) + 13.0 * f(i) + 3.0 * f(i + 1)) / 12.0
        } else {
            (3.0 * f(i) + 13.0 * f(i + 1) - 5.0 * f(i + 2) + f(i + 3)) / 12.0
        };
    }
    let mut out = a.zeros_like();
    for i in 0..n {
        out.values_mut()[i] = (flux[i + 1] - flux[i]) / h;
    }
    out
}

fn pulse_rhs(
    t: f64,
    a: &PulseField,
    problem: &MachStemProblem,
    forcing: &dyn Fn(f64) -> PulseField,
) -> Result<PulseField> {
    let mut rhs = forcing(t).sub(&pulse_burgers_term(a, problem.c));
    if problem.mu != 0.0 {
        let da = a.derivative();
        let (d1, d3) = problem.delta;
        rhs = rhs.sub(&f_pul_quadrature(&da, &da, d1, d3)?.scaled(problem.mu));
    }
    Ok(rhs)
}

/// Integrate the pulse Mach stem equation by RK4 (method of lines,
/// y-independent mode): upwind-biased fourth-order finite differences for
/// the Burgers term, `f_pul_quadrature` for the nonlocal term. The moment
/// `∫ a dθ` and the `Γ^k` norm are monitored every step; the run aborts with
/// `TruncationInadequate` once mass reaches the grid edge.
pub fn solve_pulse(
    problem: &MachStemProblem,
    forcing: &dyn Fn(f64) -> PulseField,
    initial: Option<PulseField>,
    gamma_k: usize,
) -> Result<PulseTrajectory> {
    problem.validate()?;
    let (half_width, step) = match problem.domain {
        ThetaDomain::Pulse { half_width, step } => (half_width, step),
        _ => {
            return Err(MachStemError::ValidationError(vec![
                "pulse solver needs a pulse theta domain".into(),
            ]))
        }
    };
    let mut a = match initial {
        Some(f) => f,
        None => PulseField::from_fn(half_width, step, f64::INFINITY, |_| 0.0),
    };
    let steps = (problem.t_final / problem.dt).round() as usize;
    let dt = problem.t_final / steps.max(1) as f64;
    let monitor = |t: f64, f: &PulseField| MonitorRow {
        t,
        mean: f.moment(0).abs(),
        sup: f.sup_norm(),
        l2: f.l2_norm(),
        gamma: f.gamma_norm(gamma_k),
    };
    let mut times = vec![0.0];
    let mut states = vec![a.clone()];
    let mut monitors = vec![monitor(0.0, &a)];
    for step_idx in 0..steps {
        let t = step_idx as f64 * dt;
        let sup = a.sup_norm();
        if sup > problem.blowup_cap {
            return Err(MachStemError::BlowUpDetected(sup, problem.blowup_cap));
        }
        let speed = (problem.c * sup).abs();
        if speed > 0.0 {
            let limit = 0.5 * step / speed;
            if dt > limit {
                return Err(MachStemError::CflViolation { dt, limit });
            }
        }
        a.check_truncation(1e-8)?;
        let k1 = pulse_rhs(t, &a, problem, forcing)?;
        let k2 = pulse_rhs(t + 0.5 * dt, &a.add(&k1.scaled(0.5 * dt)), problem, forcing)?;
        let k3 = pulse_rhs(t + 0.5 * dt, &a.add(&k2.scaled(0.5 * dt)), problem, forcing)?;
        let k4 = pulse_rhs(t + dt, &a.add(&k3.scaled(dt)), problem, forcing)?;
        a = a.add(
            &k1.add(&k2.scaled(2.0)).add(&k3.scaled(2.0)).add(&k4).scaled(dt / 6.0),
        );
        let tn = (step_idx + 1) as f64 * dt;
        times.push(tn);
        states.push(a.clone());
        monitors.push(monitor(tn, &a));
    }
    Ok(PulseTrajectory { times, states, monitors })
}

/// Implicit-characteristics solution of the pure Burgers equation
/// `∂t σ + c σ ∂θ σ = 0` with Θ-periodic initial data: Newton (tolerance
/// 1e-12) on `θ₀ + c t σ₀(θ₀) = θ` per query, previous root as the next
/// initial guess, bisection fallback over one period.
pub fn burgers_characteristic(
    a0: &PeriodicField,
    c: f64,
    t: f64,
    thetas: &[f64],
) -> Result<Vec<f64>> {
    let da0 = a0.derivative();
    let mut guess = thetas.first().copied().unwrap_or(0.0);
    let mut out = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let g = |th0: f64| th0 + c * t * a0.eval(th0) - theta;
        let mut th0 = guess;
        let mut converged = false;
        for _ in 0..60 {
            let gv = g(th0);
            let gp = 1.0 + c * t * da0.eval(th0);
            if gp <= 0.0 {
                return Err(MachStemError::ShockFormed(theta));
            }
            let step = gv / gp;
            th0 -= step;
            if step.abs() < 1e-12 {
                converged = true;
                break;
            }
        }
        if !converged {
            // Bisection bracket over one period around theta.
            let (mut lo, mut hi) = (theta - a0.period(), theta + a0.period());
            if g(lo) > 0.0 || g(hi) < 0.0 {
                return Err(MachStemError::ShockFormed(theta));
            }
            for _ in 0..200 {
                th0 = 0.5 * (lo + hi);
                if g(th0) > 0.0 { hi = th0 } else { lo = th0 }
            }
        }
        guess = th0;
        out.push(a0.eval(th0));
    }
    Ok(out)
}
