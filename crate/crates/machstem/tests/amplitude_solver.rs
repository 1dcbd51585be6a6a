//! The periodic and pulse amplitude solvers: exact oracles, manufactured
//! solutions and self-convergence.

use machstem::amplitude_solver::*;
use machstem::fields::{PeriodicField, PulseField};
use machstem::ToleranceSet;

fn problem(kmax: usize, c: f64, mu: f64, dt: f64, t_final: f64) -> MachStemProblem {
    MachStemProblem {
        domain: ThetaDomain::Periodic { period: 2.0 * std::f64::consts::PI, kmax },
        w: 0.0,
        c,
        mu,
        delta: (1.0 + 5.0_f64.sqrt(), 2.0 + 5.0_f64.sqrt()),
        y: None,
        dt,
        t_final,
        blowup_cap: 1e6,
    }
}

#[test]
fn periodic_solver_oracles() {
    let tol = ToleranceSet::default();
    let period = 2.0 * std::f64::consts::PI;

    // From rest with g = 0: identically zero.
    let p = problem(32, 1.0, 0.3, 1e-2, 0.5);
    let traj = solve_periodic(&p, &|_, _| PeriodicField::zeros(period, 32), None, &tol).unwrap();
    assert_eq!(traj.monitors.last().unwrap().sup, 0.0);

    // Burgers limit vs characteristic oracle.
    let a0 = PeriodicField::from_fn(period, 48, |th| th.sin());
    let c = 1.0;
    let tstar = 0.3; // max |a0'| = 1, so t* = 0.3 / (c max|a0'|)
    let p = problem(48, c, 0.0, 2.5e-3, tstar);
    let traj = solve_periodic(&p, &|_, _| PeriodicField::zeros(period, 48), Some(vec![a0.clone()]), &tol).unwrap();
    let nth = 257;
    let thetas: Vec<f64> = (0..nth).map(|i| period * i as f64 / nth as f64).collect();
    let oracle = burgers_characteristic(&a0, c, tstar, &thetas).unwrap();
    let solved = traj.last()[0].clone();
    let err = thetas
        .iter()
        .zip(&oracle)
        .map(|(&th, &o)| (solved.eval(th) - o).abs())
        .fold(0.0_f64, f64::max);
    println!("burgers oracle sup err = {err:.3e}");
    assert!(err < 1e-6);

    // Manufactured solution a* = sin(t) cos(theta), g* from the discrete operators.
    let kmax = 32;
    let c = 0.8;
    let mu = 0.4;
    let (d1, d3) = (1.0 + 5.0_f64.sqrt(), 2.0 + 5.0_f64.sqrt());
    let astar = |t: f64| PeriodicField::from_fn(period, kmax, |th| t.sin() * th.cos());
    let g = move |t: f64, _y: f64| -> PeriodicField {
        let a = astar(t);
        let dadt = PeriodicField::from_fn(period, kmax, |th| t.cos() * th.cos());
        let da = a.derivative();
        dadt.add(&a.product(&a).derivative().truncated(kmax).scaled(0.5 * c))
            .add(
                &machstem::bilinear_ops::f_per(&da, &da, d1, d3, &ToleranceSet::default())
                    .unwrap()
                    .truncated(kmax)
                    .scaled(mu),
            )
    };
    let p = problem(kmax, c, mu, 1e-2, 1.0);
    let traj = solve_periodic(&p, &g, None, &tol).unwrap();
    let diff = traj.last()[0].sub(&astar(1.0)).sup_norm();
    println!("manufactured sup err = {diff:.3e}");
    assert!(diff < 1e-7);
    let worst_mean = traj.monitors.iter().map(|m| m.mean).fold(0.0_f64, f64::max);
    println!("worst mean = {worst_mean:.3e}");
    assert_eq!(worst_mean, 0.0);

    // RK4 self-convergence on the manufactured run.
    let mut errs = Vec::new();
    for dt in [4e-2, 2e-2, 1e-2] {
        let p = problem(kmax, c, mu, dt, 1.0);
        let traj = solve_periodic(&p, &g, None, &tol).unwrap();
        errs.push(traj.last()[0].sub(&astar(1.0)).sup_norm());
    }
    println!("rk4 errors: {errs:?} ratios {} {}", errs[0] / errs[1], errs[1] / errs[2]);
    assert!(errs[0] / errs[1] >= 14.0);
}

#[test]
fn linearized_solver_is_linear_and_exact_on_transport() {
    let tol = ToleranceSet::default();
    let period = 2.0 * std::f64::consts::PI;
    let kmax = 24;
    let bg = |t: f64| PeriodicField::from_fn(period, kmax, |th| (0.3 + t).sin() * (th).sin());
    // zero forcing -> zero
    let p = problem(kmax, 0.7, 0.2, 1e-2, 0.4);
    let traj =
        solve_periodic_linearized(&p, &bg, &|_, _| PeriodicField::zeros(period, kmax), None, &tol)
            .unwrap();
    assert_eq!(traj.monitors.last().unwrap().sup, 0.0);

    // background zero -> pure integration of g.
    let g = |t: f64, _y: f64| PeriodicField::from_fn(period, kmax, |th| t * th.cos());
    let traj = solve_periodic_linearized(
        &p,
        &|_| PeriodicField::zeros(period, kmax),
        &g,
        None,
        &tol,
    )
    .unwrap();
    let expect = PeriodicField::from_fn(period, kmax, |th| 0.5 * 0.4_f64.powi(2) * th.cos());
    let err = traj.last()[0].sub(&expect).sup_norm();
    println!("transport oracle err = {err:.3e}");
    assert!(err < 1e-10);

    // linearity
    let g2 = |t: f64, y: f64| g(t, y).scaled(2.0);
    let traj2 = solve_periodic_linearized(
        &p,
        &bg,
        &g2,
        None,
        &tol,
    )
    .unwrap();
    let traj1 = solve_periodic_linearized(&p, &bg, &g, None, &tol).unwrap();
    let lin_err = traj2.last()[0].sub(&traj1.last()[0].scaled(2.0)).sup_norm();
    println!("linearity err = {lin_err:.3e}");
    assert!(lin_err < 1e-13);
}

#[test]
fn tangential_transport_shifts_the_profile() {
    // w dy transport with zero c, mu: a(t, y) = A(y - w t) for initial A.
    let tol = ToleranceSet::default();
    let period = 2.0 * std::f64::consts::PI;
    let kmax = 8;
    let mut p = problem(kmax, 0.0, 0.0, 5e-3, 0.7);
    p.w = 0.6;
    p.y = Some(YDomain { length: 2.0 * std::f64::consts::PI, points: 32 });
    let init: Vec<PeriodicField> = (0..32)
        .map(|i| {
            let y = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
            PeriodicField::from_fn(period, kmax, move |th| y.sin() * th.sin())
        })
        .collect();
    let traj = solve_periodic(&p, &|_, _| PeriodicField::zeros(period, kmax), Some(init), &tol)
        .unwrap();
    let last = traj.last();
    let mut err = 0.0_f64;
    for (i, f) in last.iter().enumerate() {
        let y = 2.0 * std::f64::consts::PI * i as f64 / 32.0;
        let expect = PeriodicField::from_fn(period, kmax, move |th| (y - 0.6 * 0.7).sin() * th.sin());
        err = err.max(f.sub(&expect).sup_norm());
    }
    println!("y transport err = {err:.3e}");
    assert!(err < 1e-8);
}

#[test]
fn pulse_solver_moment_and_periodic_embedding() {
    let half_width = 14.0;
    let step = 0.04;
    let p = MachStemProblem {
        domain: ThetaDomain::Pulse { half_width, step },
        w: 0.0,
        c: 0.9,
        mu: 0.25,
        delta: (-2.0, -1.0),
        y: None,
        dt: 5e-3,
        t_final: 0.4,
        blowup_cap: 1e6,
    };
    // zero-moment compact forcing: derivative of a Gaussian bump
    let g = |t: f64| {
        PulseField::from_fn(half_width, step, f64::INFINITY, move |th| {
            0.2 * (1.0 + 0.5 * t).sin() * (-3.0 * th * (-1.5 * th * th).exp())
        })
    };
    let t0 = std::time::Instant::now();
    let traj = solve_pulse(&p, &g, None, 2).unwrap();
    let worst_moment = traj.monitors.iter().map(|m| m.mean).fold(0.0_f64, f64::max);
    let gammas: Vec<f64> = traj.monitors.iter().step_by(20).map(|m| m.gamma).collect();
    println!(
        "pulse run {:?}: worst moment {:.3e}, sup {:.3e}, gammas {:?}",
        t0.elapsed(),
        worst_moment,
        traj.monitors.last().unwrap().sup,
        gammas
    );
    assert!(worst_moment < 1e-8);

    // Embedding: mu = 0 pulse run vs periodic solver on a periodized copy.
    let mut p2 = p.clone();
    p2.mu = 0.0;
    let pulse_traj = solve_pulse(&p2, &g, None, 0).unwrap();
    let period = 2.0 * half_width + step;
    let kmax = 160;
    let pper = MachStemProblem {
        domain: ThetaDomain::Periodic { period, kmax },
        w: 0.0,
        c: 0.9,
        mu: 0.0,
        delta: (-2.0, -1.0),
        y: None,
        dt: 5e-3,
        t_final: 0.4,
        blowup_cap: 1e6,
    };
    // shift: periodic grid lives on [0, period) = theta + half_width
    let gper = move |t: f64, _y: f64| {
        let gp = g(t);
        PeriodicField::from_fn(period, kmax, move |th| gp.eval(th - half_width))
    };
    let tol = ToleranceSet::default();
    let per_traj = solve_periodic(&pper, &gper, None, &tol).unwrap();
    let a_pulse = pulse_traj.states.last().unwrap();
    let a_per = per_traj.last()[0].clone();
    let mut diff = 0.0_f64;
    for i in 0..a_pulse.len() {
        let th = a_pulse.grid_point(i);
        diff = diff.max((a_pulse.values()[i] - a_per.eval(th + half_width)).abs());
    }
    println!("embedding diff = {diff:.3e}");
    assert!(diff < 1e-5);
}
