//! The six pipeline commands. Each builds its inputs from the validated
//! configuration, runs the library, and writes the documented artifacts plus
//! a manifest through [`RunWriter`].

use machstem::amplitude_solver::{solve_periodic, solve_pulse, MachStemProblem, ThetaDomain, YDomain};
use machstem::euler_example::{euler_reference_check, euler_zeta, EulerParams};
use machstem::fields::{PeriodicField, PulseField};
use machstem::resonance::{resonance_scan, small_divisor_estimate};
use machstem::spectral_geometry::{build_phase_set, PhaseSet, ReducedCoefficients};
use machstem::wkb_assembler::{large_period_study, run_epsilon_sweep, LargePeriodRow, SweepConfig};
use machstem::{MachStemError, Result, ToleranceSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::path::Path;

use crate::config::{ForcingConfig, RunConfig, SystemConfig, ThetaConfig};
use crate::output::{FieldManifest, GridMeta, RunWriter, SnapshotEntry};

fn ramp(t: f64) -> f64 {
    if t > 0.0 {
        t * t / (1.0 + t * t)
    } else {
        0.0
    }
}

fn reduced(ps: &PhaseSet) -> Result<&ReducedCoefficients> {
    ps.coeffs.reduced.as_ref().ok_or_else(|| {
        MachStemError::InvalidSystem(
            "this command needs the three-phase reduction (two incoming phases, one outgoing)"
                .into(),
        )
    })
}

fn periodic_theta(cfg: &RunConfig) -> Result<(f64, usize)> {
    match cfg.solver.theta {
        ThetaConfig::Periodic { period, kmax } => Ok((period, kmax)),
        ThetaConfig::Pulse { .. } => Err(MachStemError::ValidationError(vec![
            "this command needs solver.theta.kind = \"periodic\"".into(),
        ])),
    }
}

/// Periodic forcing field at fixed time; the random family draws its mode
/// coefficients once from the run seed.
fn periodic_forcing(
    cfg: &RunConfig,
    period: f64,
    kmax: usize,
) -> Result<Box<dyn Fn(f64, f64) -> PeriodicField>> {
    match cfg.forcing.clone() {
        ForcingConfig::Zero => Ok(Box::new(move |_, _| PeriodicField::zeros(period, kmax))),
        ForcingConfig::Sine { amplitude, mode } => Ok(Box::new(move |t, _| {
            let mut f = PeriodicField::zeros(period, kmax);
            let k = mode.unsigned_abs().min(kmax as u64) as i64;
            if k != 0 && mode != 0 {
                // sin(2 pi k theta / period) has coefficient -i/2 at +k;
                // a negative mode flips the sign.
                let a = 0.5 * amplitude * ramp(t) * mode.signum() as f64;
                f.set_pair(k, Complex64::new(0.0, -a));
            }
            f
        })),
        ForcingConfig::GaussianDerivative { amplitude, width } => Ok(Box::new(move |t, _| {
            let a = amplitude * ramp(t);
            PeriodicField::from_fn(period, kmax, move |th| {
                // Centered in the cell; one copy only (width << period).
                let x = (th - 0.5 * period).rem_euclid(period) - 0.5 * period;
                let g = (-(x / width) * (x / width)).exp();
                a * (-2.0 * x / (width * width)) * g
            })
        })),
        ForcingConfig::RandomModes { amplitude, modes } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut base = PeriodicField::zeros(period, kmax);
            for k in 1..=modes.min(kmax) {
                let re: f64 = rng.gen_range(-1.0..1.0);
                let im: f64 = rng.gen_range(-1.0..1.0);
                let scale = amplitude / (k * k) as f64;
                base.set_pair(k as i64, Complex64::new(scale * re, scale * im));
            }
            Ok(Box::new(move |t, _| base.scaled(ramp(t))))
        }
    }
}

fn pulse_forcing(
    cfg: &RunConfig,
    half_width: f64,
    step: f64,
) -> Result<Box<dyn Fn(f64) -> PulseField>> {
    match cfg.forcing.clone() {
        ForcingConfig::Zero => {
            Ok(Box::new(move |_| PulseField::from_fn(half_width, step, f64::INFINITY, |_| 0.0)))
        }
        ForcingConfig::GaussianDerivative { amplitude, width } => Ok(Box::new(move |t| {
            let a = amplitude * ramp(t);
            PulseField::from_fn(half_width, step, f64::INFINITY, move |x| {
                a * (-2.0 * x / (width * width)) * (-(x / width) * (x / width)).exp()
            })
        })),
        ForcingConfig::Sine { .. } | ForcingConfig::RandomModes { .. } => {
            Err(MachStemError::ValidationError(vec![
                "pulse runs need a decaying forcing family (zero or gaussian_derivative)".into(),
            ]))
        }
    }
}

// --- analyze -------------------------------------------------------------

#[derive(Serialize)]
struct ReducedReport {
    lo: usize,
    hi: usize,
    out: usize,
    delta1: f64,
    delta3: f64,
    q_lo_hi: f64,
    q_hi_lo: f64,
    bbr_out: f64,
    c: f64,
    mu_pul: f64,
    w: Vec<f64>,
}

#[derive(Serialize)]
struct ResonanceHit {
    alpha: Vec<i64>,
    det: f64,
    /// Determinant relative to the scan threshold (< 1 means resonant).
    scaled: f64,
}

#[derive(Serialize)]
struct AnalyzeReport {
    omegas: Vec<f64>,
    group_velocities: Vec<Vec<f64>>,
    incoming: Vec<usize>,
    outgoing: Vec<usize>,
    e: Vec<f64>,
    e_scalars: Vec<f64>,
    b_bar: Vec<f64>,
    burgers_c: Vec<f64>,
    upsilon: f64,
    xlop_t: f64,
    xlop_y: Vec<f64>,
    bbar_b_r_out: Vec<f64>,
    reduced: Option<ReducedReport>,
    resonance_bound: i64,
    resonant_modes: Vec<ResonanceHit>,
    small_divisor_gamma: f64,
    small_divisor_c_min: f64,
    small_divisor_argmin: Option<Vec<i64>>,
}

pub fn analyze(cfg: &RunConfig, out: &Path, tol: &ToleranceSet) -> Result<()> {
    let (system, _) = cfg.build_system(tol)?;
    let freq = cfg.frequency()?;
    let ps = build_phase_set(&system, &freq, tol)?;
    let scan = resonance_scan(&system, &ps, cfg.sweep.alpha_bound, tol);
    // The small-divisor estimate itself fails on a resonant configuration;
    // the scan hits are the more informative report in that case.
    let divisor = if scan.resonant_modes.is_empty() {
        small_divisor_estimate(&system, &ps, cfg.sweep.gamma, cfg.sweep.alpha_bound, tol)?
    } else {
        (f64::NAN, None)
    };
    let report = AnalyzeReport {
        omegas: ps.omegas.clone(),
        group_velocities: ps.group_velocities.clone(),
        incoming: ps.incoming.clone(),
        outgoing: ps.outgoing.clone(),
        e: ps.e.iter().copied().collect(),
        e_scalars: ps.e_scalars.clone(),
        b_bar: ps.b_bar.iter().copied().collect(),
        burgers_c: ps.coeffs.c.clone(),
        upsilon: ps.coeffs.upsilon,
        xlop_t: ps.coeffs.xlop_t,
        xlop_y: ps.coeffs.xlop_y.clone(),
        bbar_b_r_out: ps.coeffs.bbar_b_r_out.clone(),
        reduced: ps.coeffs.reduced.as_ref().map(|r| ReducedReport {
            lo: r.lo,
            hi: r.hi,
            out: r.out,
            delta1: r.delta1,
            delta3: r.delta3,
            q_lo_hi: r.q_lo_hi,
            q_hi_lo: r.q_hi_lo,
            bbr_out: r.bbr_out,
            c: r.c,
            mu_pul: r.mu_pul,
            w: r.w.clone(),
        }),
        resonance_bound: scan.bound,
        resonant_modes: scan
            .resonant_modes
            .iter()
            .map(|m| ResonanceHit {
                alpha: m.alpha.clone(),
                det: m.det,
                scaled: m.det.abs() / m.threshold,
            })
            .collect(),
        small_divisor_gamma: cfg.sweep.gamma,
        small_divisor_c_min: divisor.0,
        small_divisor_argmin: divisor.1,
    };
    let mut writer = RunWriter::new(out, cfg)?;
    writer.write_json("analyze.json", &report)?;
    writer.finish("analyze")?;
    if let Some(hit) = scan.resonant_modes.first() {
        return Err(MachStemError::ResonanceFound {
            alpha: hit.alpha.clone(),
            det: hit.det.abs(),
            threshold: hit.threshold,
        });
    }
    Ok(())
}

// --- solve-periodic / solve-pulse ----------------------------------------

fn monitor_rows(monitors: &[machstem::amplitude_solver::MonitorRow]) -> Vec<Vec<f64>> {
    monitors.iter().map(|m| vec![m.t, m.mean, m.sup, m.l2, m.gamma]).collect()
}

const MONITOR_HEADER: [&str; 5] = ["t", "mean", "max", "l2", "gamma_k"];

fn snapshot_stride(cfg: &RunConfig, levels: usize) -> usize {
    if cfg.solver.snapshot_stride > 0 {
        cfg.solver.snapshot_stride
    } else {
        (levels / 16).max(1)
    }
}

pub fn solve_periodic_cmd(cfg: &RunConfig, out: &Path, tol: &ToleranceSet) -> Result<()> {
    let (system, _) = cfg.build_system(tol)?;
    let ps = build_phase_set(&system, &cfg.frequency()?, tol)?;
    let red = reduced(&ps)?;
    let (period, kmax) = periodic_theta(cfg)?;
    let problem = MachStemProblem {
        domain: ThetaDomain::Periodic { period, kmax },
        w: red.w.first().copied().unwrap_or(0.0),
        c: red.c,
        mu: red.mu_per(period),
        delta: (red.delta1, red.delta3),
        y: cfg.solver.n_y.map(|points| YDomain { length: cfg.solver.y_length, points }),
        dt: cfg.solver.dt,
        t_final: cfg.solver.t_final,
        blowup_cap: cfg.solver.blowup_cap,
    };
    let forcing = periodic_forcing(cfg, period, kmax)?;
    let traj = solve_periodic(&problem, forcing.as_ref(), None, tol)?;

    let mut writer = RunWriter::new(out, cfg)?;
    writer.write_csv("monitors.csv", &MONITOR_HEADER, &monitor_rows(&traj.monitors))?;
    let samples = (4 * kmax).max(64);
    let stride = snapshot_stride(cfg, traj.states.len());
    let mut snapshots = Vec::new();
    for (i, state) in traj.states.iter().enumerate() {
        if i % stride != 0 && i + 1 != traj.states.len() {
            continue;
        }
        let file = format!("state_{i:06}.f64");
        writer.write_periodic_snapshot(&file, state, samples)?;
        snapshots.push(SnapshotEntry { file, t: traj.times[i] });
    }
    writer.write_json(
        "fields.json",
        &FieldManifest {
            dtype: "float64",
            endianness: "little",
            grid: GridMeta::Periodic {
                period,
                kmax,
                samples,
                y_nodes: traj.states[0].len(),
            },
            snapshots,
        },
    )?;
    writer.finish("solve-periodic")
}

pub fn solve_pulse_cmd(cfg: &RunConfig, out: &Path, tol: &ToleranceSet) -> Result<()> {
    let (system, _) = cfg.build_system(tol)?;
    let ps = build_phase_set(&system, &cfg.frequency()?, tol)?;
    let red = reduced(&ps)?;
    let (half_width, step) = match cfg.solver.theta {
        ThetaConfig::Pulse { half_width, step } => (half_width, step),
        ThetaConfig::Periodic { .. } => {
            return Err(MachStemError::ValidationError(vec![
                "solve-pulse needs solver.theta.kind = \"pulse\"".into(),
            ]))
        }
    };
    let problem = MachStemProblem {
        domain: ThetaDomain::Pulse { half_width, step },
        w: red.w.first().copied().unwrap_or(0.0),
        c: red.c,
        mu: red.mu_pul,
        delta: (red.delta1, red.delta3),
        y: None,
        dt: cfg.solver.dt,
        t_final: cfg.solver.t_final,
        blowup_cap: cfg.solver.blowup_cap,
    };
    let forcing = pulse_forcing(cfg, half_width, step)?;
    let traj = solve_pulse(&problem, forcing.as_ref(), None, cfg.solver.gamma_k)?;

    let mut writer = RunWriter::new(out, cfg)?;
    writer.write_csv("monitors.csv", &MONITOR_HEADER, &monitor_rows(&traj.monitors))?;
    let stride = snapshot_stride(cfg, traj.states.len());
    let mut snapshots = Vec::new();
    for (i, state) in traj.states.iter().enumerate() {
        if i % stride != 0 && i + 1 != traj.states.len() {
            continue;
        }
        let file = format!("state_{i:06}.f64");
        writer.write_pulse_snapshot(&file, state)?;
        snapshots.push(SnapshotEntry { file, t: traj.times[i] });
    }
    writer.write_json(
        "fields.json",
        &FieldManifest {
            dtype: "float64",
            endianness: "little",
            grid: GridMeta::Pulse { half_width, step, len: traj.states[0].len() },
            snapshots,
        },
    )?;
    writer.finish("solve-pulse")
}

// --- residual-sweep -------------------------------------------------------

#[derive(Serialize)]
struct SweepSummary {
    interior_slope: f64,
    boundary_slope: f64,
}

pub fn residual_sweep(cfg: &RunConfig, out: &Path, tol: &ToleranceSet) -> Result<()> {
    let (system, _) = cfg.build_system(tol)?;
    let ps = build_phase_set(&system, &cfg.frequency()?, tol)?;
    let (period, kmax) = periodic_theta(cfg)?;
    let mut sweep = SweepConfig::standard(period);
    sweep.kmax = kmax;
    sweep.amplitude = cfg.sweep.amplitude;
    sweep.epsilons = cfg.sweep.epsilons.clone();
    let report = run_epsilon_sweep(&system, &ps, &sweep, tol)?;

    let mut writer = RunWriter::new(out, cfg)?;
    let rows: Vec<Vec<f64>> = report
        .rows
        .iter()
        .map(|r| vec![r.epsilon, r.interior_sup, r.interior_l2, r.boundary_full, r.boundary_projected])
        .collect();
    writer.write_csv(
        "sweep.csv",
        &["epsilon", "interior_sup", "interior_L2", "boundary_full", "boundary_projected"],
        &rows,
    )?;
    writer.write_json(
        "sweep_summary.json",
        &SweepSummary {
            interior_slope: report.interior_slope,
            boundary_slope: report.boundary_slope,
        },
    )?;
    writer.finish("residual-sweep")
}

// --- limit-study ----------------------------------------------------------

#[derive(Serialize)]
struct LimitSummary {
    s: f64,
    delta1: f64,
    delta3: f64,
    window: f64,
    rows: Vec<LimitRowOut>,
}

#[derive(Serialize)]
struct LimitRowOut {
    theta_period: f64,
    distance: f64,
}

pub fn limit_study(cfg: &RunConfig, out: &Path, threads: usize, tol: &ToleranceSet) -> Result<()> {
    let (system, _) = cfg.build_system(tol)?;
    let ps = build_phase_set(&system, &cfg.frequency()?, tol)?;
    let red = reduced(&ps)?;
    let sw = &cfg.sweep;
    let (wu, wv) = (sw.u_width, sw.v_width);
    let u = PulseField::from_fn(sw.pulse_half_width, sw.pulse_step, f64::INFINITY, |x| {
        (-(x / wu) * (x / wu)).exp()
    });
    let v = PulseField::from_fn(sw.pulse_half_width, sw.pulse_step, f64::INFINITY, |x| {
        (1.2 - 0.4 * x) * (-(x / wv) * (x / wv)).exp()
    });
    let thetas = sw.theta_periods.clone();
    let workers = threads.clamp(1, thetas.len());
    // Independent periods run in parallel; results keep the config order.
    let mut results: Vec<Option<Result<Vec<LargePeriodRow>>>> =
        (0..thetas.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for w in 0..workers {
            let (u, v) = (&u, &v);
            let thetas = &thetas;
            handles.push(scope.spawn(move || {
                let mut local = Vec::new();
                for i in (w..thetas.len()).step_by(workers) {
                    local.push((
                        i,
                        large_period_study(
                            u,
                            v,
                            sw.s,
                            red.delta1,
                            red.delta3,
                            &thetas[i..=i],
                            sw.window,
                            sw.n_window,
                            tol,
                        ),
                    ));
                }
                local
            }));
        }
        for h in handles {
            for (i, r) in h.join().expect("limit-study worker panicked") {
                results[i] = Some(r);
            }
        }
    });
    let mut rows = Vec::new();
    for r in results {
        let mut part = r.expect("every period is assigned to a worker")?;
        rows.append(&mut part);
    }

    let mut writer = RunWriter::new(out, cfg)?;
    let csv: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.theta_period, r.distance]).collect();
    writer.write_csv("limit_study.csv", &["theta_period", "distance"], &csv)?;
    writer.write_json(
        "limit_study.json",
        &LimitSummary {
            s: sw.s,
            delta1: red.delta1,
            delta3: red.delta3,
            window: sw.window,
            rows: rows
                .iter()
                .map(|r| LimitRowOut { theta_period: r.theta_period, distance: r.distance })
                .collect(),
        },
    )?;
    writer.finish("limit-study")
}

// --- euler-demo -----------------------------------------------------------

#[derive(Serialize)]
struct DemoItem {
    name: String,
    rel_err: f64,
}

#[derive(Serialize)]
struct DemoReport {
    mach: f64,
    zeta: f64,
    items: Vec<DemoItem>,
    max_rel_err: f64,
    tolerance: f64,
    passed: bool,
}

pub fn euler_demo(cfg: &RunConfig, out: &Path, tol: &ToleranceSet) -> Result<()> {
    let params = match cfg.system {
        SystemConfig::Euler { vbar, ubar, cbar, cprime } => {
            EulerParams::new(vbar, ubar, cbar, cprime)?
        }
        SystemConfig::Matrices { .. } => {
            return Err(MachStemError::ValidationError(vec![
                "euler-demo needs system.kind = \"euler\"".into(),
            ]))
        }
    };
    let eta = cfg.frequency.eta[0];
    let (report, _ps) = euler_reference_check(&params, eta, tol, cfg.sweep.demo_tolerance)?;
    let zeta = euler_zeta(&params, params.cbar * eta, eta)?;
    let demo = DemoReport {
        mach: params.mach(),
        zeta,
        items: report
            .items
            .iter()
            .map(|i| DemoItem { name: i.name.clone(), rel_err: i.rel_err })
            .collect(),
        max_rel_err: report.max_rel_err,
        tolerance: report.tolerance,
        passed: report.passed,
    };
    let mut writer = RunWriter::new(out, cfg)?;
    writer.write_json("euler_reference.json", &demo)?;
    writer.finish("euler-demo")?;
    if !demo.passed {
        return Err(MachStemError::MismatchBeyondTolerance(format!(
            "max relative error {:.3e} exceeds {:.3e}",
            demo.max_rel_err, demo.tolerance
        )));
    }
    Ok(())
}
