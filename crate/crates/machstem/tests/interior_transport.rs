//! Interior ray transport: characteristic oracle, semigroup property and
//! an independent finite-volume cross-check.

use machstem::amplitude_solver::burgers_characteristic;
use machstem::euler_example::{build_euler_system, EulerParams};
use machstem::fields::PeriodicField;
use machstem::interior_transport::{shock_time_bound, FnTrace, RaySolution, TraceSource};
use machstem::spectral_geometry::build_phase_set;
use machstem::{Frequency, ToleranceSet};

fn euler_phaseset() -> machstem::spectral_geometry::PhaseSet {
    let params = EulerParams::new(1.3, 0.6, 1.1, -0.4).unwrap();
    let system = build_euler_system(&params, &ToleranceSet::default()).unwrap();
    let eta = 0.9;
    let freq = Frequency { tau: params.cbar * eta, eta: vec![eta] };
    build_phase_set(&system, &freq, &ToleranceSet::default()).unwrap()
}

#[test]
fn ray_solution_matches_characteristic_oracle() {
    let ps = euler_phaseset();
    let period = 2.0 * std::f64::consts::PI;
    let kmax = 48;
    let ramp = |t: f64| if t > 0.0 { t * t } else { 0.0 };
    let dramp = |t: f64| if t > 0.0 { 2.0 * t } else { 0.0 };
    let trace = FnTrace {
        field: |t: f64| PeriodicField::from_fn(period, kmax, move |th| ramp(t) * th.sin()),
        field_dt: |t: f64| PeriodicField::from_fn(period, kmax, move |th| dramp(t) * th.sin()),
    };
    let m = ps.incoming[1];
    let ray = RaySolution::new(&ps, m, &trace).unwrap();
    println!("phase {m}: v = {:?}, c = {:.4}, e = {:.4}", ray.velocity, ray.c, ray.e_scalar);

    // Outgoing phase refused.
    assert!(RaySolution::new(&ps, ps.outgoing[0], &trace).is_err());

    // Pre-onset: t0 < 0 gives zero.
    let thetas: Vec<f64> = (0..65).map(|i| period * i as f64 / 65.0).collect();
    let far = ray.values(0.1, 10.0 * ray.velocity.last().unwrap(), &thetas).unwrap();
    assert!(far.iter().all(|&v| v == 0.0));

    // Characteristic oracle cross-check: σ at (t, xd) equals Burgers
    // evolution of the trace for elapsed s.
    let (t, xd) = (0.8, 0.3);
    let s = xd / ray.velocity.last().unwrap();
    let t0 = t - s;
    let sigma0 = trace.field(t0).scaled(ray.e_scalar);
    let oracle = burgers_characteristic(&sigma0, ray.c, s, &thetas).unwrap();
    let got = ray.values(t, xd, &thetas).unwrap();
    let err = got.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
    println!("char cross-check err = {err:.3e}");
    assert!(err < 1e-10);

    // Zero-mean propagation.
    let f = ray.field(t, xd, period, 96).unwrap();
    println!("interior mean = {:.3e}", f.mean());
    assert!(f.mean().abs() < 1e-8);

    // Semigroup: evolve s/2, re-interpolate, evolve s/2.
    let half = s / 2.0;
    let n = 193;
    let grid: Vec<f64> = (0..n).map(|i| period * i as f64 / n as f64).collect();
    let mid_vals = burgers_characteristic(&sigma0, ray.c, half, &grid).unwrap();
    let mid = PeriodicField::from_fn(period, 96, |th| {
        let idx = (th / period * n as f64).round() as usize % n;
        mid_vals[idx]
    });
    let two_step = burgers_characteristic(&mid, ray.c, half, &thetas).unwrap();
    let err2 = got.iter().zip(&two_step).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
    println!("semigroup err = {err2:.3e}");
    assert!(err2 < 1e-6);

    // Derivative consistency against finite differences of the solver itself.
    let h = 1e-5;
    let p = ray.slice(t, xd, &thetas).unwrap();
    let pt = ray.values(t + h, xd, &thetas).unwrap();
    let mt = ray.values(t - h, xd, &thetas).unwrap();
    let px = ray.values(t, xd + h, &thetas).unwrap();
    let mx = ray.values(t, xd - h, &thetas).unwrap();
    let mut dterr = 0.0_f64;
    let mut dxerr = 0.0_f64;
    for i in 0..thetas.len() {
        dterr = dterr.max((p[i].d_t - (pt[i] - mt[i]) / (2.0 * h)).abs());
        dxerr = dxerr.max((p[i].d_xd - (px[i] - mx[i]) / (2.0 * h)).abs());
    }
    println!("slow derivative errs: dt {dterr:.3e}, dxd {dxerr:.3e}");
    assert!(dterr < 1e-7 && dxerr < 1e-7);
}

#[test]
fn shock_time_bound_scales_inversely() {
    let period = 2.0 * std::f64::consts::PI;
    let flat = PeriodicField::from_fn(period, 8, |_| 0.4);
    assert_eq!(shock_time_bound(&flat, 2.0), f64::INFINITY);
    let s = PeriodicField::from_fn(period, 32, |th| th.sin());
    let t1 = shock_time_bound(&s, 1.0);
    let t2 = shock_time_bound(&s, 2.0);
    println!("T*(c=1) = {t1:.6}, T*(c=2) = {t2:.6}");
    assert!((t1 - 1.0).abs() < 1e-10);
    assert!((t1 / t2 - 2.0).abs() < 1e-10);
}

/// Second-order MUSCL (minmod) finite-volume oracle with Godunov flux for
/// `∂t u + ∂θ (c u²/2) = 0`, periodic.
fn fv_oracle(u0: &[f64], c: f64, period: f64, t_final: f64) -> Vec<f64> {
    let n = u0.len();
    let h = period / n as f64;
    let minmod = |a: f64, b: f64| {
        if a * b <= 0.0 { 0.0 } else if a.abs() < b.abs() { a } else { b }
    };
    let flux = |ul: f64, ur: f64| -> f64 {
        // Godunov flux for f(u) = c u^2 / 2 (convex for c > 0).
        let f = |u: f64| 0.5 * c * u * u;
        if ul <= ur {
            // rarefaction-capable: min over [ul, ur]
            if ul <= 0.0 && 0.0 <= ur { 0.0 } else { f(ul).min(f(ur)) }
        } else {
            f(ul).max(f(ur))
        }
    };
    let rhs = |u: &[f64]| -> Vec<f64> {
        let mut slopes = vec![0.0; n];
        for i in 0..n {
            let um = u[(i + n - 1) % n];
            let up = u[(i + 1) % n];
            slopes[i] = minmod(u[i] - um, up - u[i]);
        }
        let mut fl = vec![0.0; n]; // fl[i] = flux at interface i-1/2
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ul = u[im] + 0.5 * slopes[im];
            let ur = u[i] - 0.5 * slopes[i];
            fl[i] = flux(ul, ur);
        }
        (0..n).map(|i| -(fl[(i + 1) % n] - fl[i]) / h).collect()
    };
    let mut u = u0.to_vec();
    let mut t = 0.0;
    while t < t_final {
        let umax = u.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let dt = (0.4 * h / (c.abs() * umax.max(1e-12))).min(t_final - t);
        // SSP-RK2
        let k1 = rhs(&u);
        let u1: Vec<f64> = u.iter().zip(&k1).map(|(a, b)| a + dt * b).collect();
        let k2 = rhs(&u1);
        u = u
            .iter()
            .zip(u1.iter().zip(&k2))
            .map(|(a, (b, k))| 0.5 * (a + b + dt * k))
            .collect();
        t += dt;
    }
    u
}

#[test]
fn characteristic_solver_matches_finite_volume_oracle() {
    // Smooth pre-shock: characteristic solver vs conservative FV oracle.
    let period = 2.0 * std::f64::consts::PI;
    let a0 = PeriodicField::from_fn(period, 48, |th| 0.8 * th.sin());
    let c = 1.2;
    let t = 0.5; // T* = 1/(1.2*0.8) ≈ 1.04
    let n = 8192;
    let grid: Vec<f64> = (0..n).map(|i| period * (i as f64 + 0.5) / n as f64).collect();
    let u0: Vec<f64> = grid.iter().map(|&th| a0.eval(th)).collect();
    let t0 = std::time::Instant::now();
    let fv = fv_oracle(&u0, c, period, t);
    let exact = burgers_characteristic(&a0, c, t, &grid).unwrap();
    let err = fv.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0_f64, f64::max);
    println!("fv oracle err = {err:.3e} in {:?}", t0.elapsed());
    assert!(err < 1e-4);
}
