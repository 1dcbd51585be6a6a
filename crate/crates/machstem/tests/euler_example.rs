//! The built-in Euler configuration against its closed forms.

use machstem::euler_example::*;
use machstem::tolerances::ToleranceSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn reference_check_at_default_parameters() {
    let tol = ToleranceSet::default();
    let params = EulerParams::new(1.3, 0.6, 1.1, -0.4).unwrap();
    let (report, ps) = euler_reference_check(&params, 0.9, &tol, 1e-10).unwrap();
    assert!(report.passed, "max rel err {:.3e}", report.max_rel_err);
    // Everything agrees to rounding, not merely to the acceptance tolerance.
    assert!(report.max_rel_err < 1e-14, "{:.3e}", report.max_rel_err);
    // The comparison covers roots, eigenvectors, e, b_bar and the kernel.
    for name in ["omega_1", "r_2", "l_3", "e", "b_bar", "qper_kernel_2_5"] {
        assert!(report.items.iter().any(|i| i.name == name), "missing {name}");
    }

    // Frozen spectral data of this parameter set.
    assert_eq!(ps.incoming, vec![0, 1]);
    assert_eq!(ps.outgoing, vec![2]);
    assert!(ps.omegas.windows(2).all(|w| w[0] < w[1]));
    assert!((ps.omegas[0] + 1.65).abs() < 1e-12);
    assert!(ps.omegas[1].abs() < 1e-12);
    assert!((ps.omegas[2] - 1.3976470588235297).abs() < 1e-12);
    let red = ps.coeffs.reduced.as_ref().unwrap();
    // The kernel slopes are exactly rational here: delta1 = -157/85.
    assert!((red.delta1 + 157.0 / 85.0).abs() < 1e-12);
    assert!((red.delta3 + 72.0 / 85.0).abs() < 1e-12);
    assert!((red.delta3 - 1.0 - red.delta1).abs() < 1e-14);
    assert!((red.c + 0.21761690487897806).abs() < 1e-12);
    assert!((red.mu_pul - 0.5813480173195572).abs() < 1e-12);
    assert!((red.w[0] + 1.1).abs() < 1e-12);
    assert!((ps.coeffs.upsilon + 0.41053314134640523).abs() < 1e-12);
    assert!((ps.coeffs.xlop_t - 0.9590023978059545).abs() < 1e-12);
}

#[test]
fn reference_check_over_random_subsonic_parameters() {
    let tol = ToleranceSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..20 {
        let cbar: f64 = rng.gen_range(0.5..2.0);
        let m2: f64 = rng.gen_range(0.05..0.9);
        let params = EulerParams::new(
            rng.gen_range(0.5..2.0),
            cbar * m2.sqrt(),
            cbar,
            rng.gen_range(-1.0..1.0),
        )
        .unwrap();
        let eta: f64 = rng.gen_range(0.3..1.5);
        let (report, _) = euler_reference_check(&params, eta, &tol, 1e-10).unwrap();
        assert!(
            report.passed,
            "trial {trial}: max rel err {:.3e} for {params:?}, eta = {eta}",
            report.max_rel_err
        );
    }
}

#[test]
fn zeta_closed_form_and_domain() {
    let params = EulerParams::new(1.3, 0.6, 1.1, -0.4).unwrap();
    // At tau = cbar * eta, zeta equals the squared Mach number.
    let m2 = params.mach() * params.mach();
    let z = euler_zeta(&params, params.cbar * 0.7, 0.7).unwrap();
    assert!((z - m2).abs() < 1e-14);
    // Outside the hyperbolic region the parameter is undefined.
    let slow = (params.cbar * params.cbar - params.ubar * params.ubar).sqrt();
    assert!(euler_zeta(&params, 0.5 * slow, 1.0).is_err());
    assert!(euler_zeta(&params, 0.0, 0.0).is_err());
}

#[test]
fn parameter_validation() {
    assert!(EulerParams::new(1.0, 1.2, 1.1, 0.0).is_err()); // supersonic
    assert!(EulerParams::new(-1.0, 0.6, 1.1, 0.0).is_err());
    assert!(EulerParams::new(1.0, 0.0, 1.1, 0.0).is_err());
    let p = EulerParams::with_mach_squared(0.25).unwrap();
    assert!((p.mach() - 0.5).abs() < 1e-14);
    assert!(EulerParams::with_mach_squared(1.0).is_err());
}
