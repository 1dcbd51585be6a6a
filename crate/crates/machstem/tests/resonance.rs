//! Resonance scans, small-divisor constants and the diophantine oracle.

use machstem::euler_example::*;
use machstem::resonance::*;
use machstem::spectral_geometry::build_phase_set;
use machstem::system::Frequency;
use machstem::tolerances::ToleranceSet;

#[test]
fn rational_mach_configuration_is_resonant() {
    let tol = ToleranceSet::default();
    // zeta equals the squared Mach number at tau = cbar * eta; M^2 = 1/3
    // makes infinitely many integer phase combinations singular.
    let params = EulerParams::with_mach_squared(1.0 / 3.0).unwrap();
    let sys = build_euler_system(&params, &tol).unwrap();
    let freq = Frequency::new(params.cbar, vec![1.0]).unwrap();
    let ps = build_phase_set(&sys, &freq, &tol).unwrap();
    let report = resonance_scan(&sys, &ps, 5, &tol);
    assert!(!report.resonant_modes.is_empty());
    // The documented resonant combination, expressed in sorted phase order
    // (the middle root of this configuration is the largest phase label).
    assert!(
        report.resonant_modes.iter().any(|m| m.alpha == vec![1, -2, 0]),
        "hits: {:?}",
        report.resonant_modes.iter().map(|m| &m.alpha).collect::<Vec<_>>()
    );
    for m in &report.resonant_modes {
        assert!(m.det.abs() < m.threshold);
    }
}

#[test]
fn golden_mach_configuration_is_resonance_free() {
    let tol = ToleranceSet::default();
    let params = EulerParams::with_mach_squared((5.0_f64.sqrt() - 1.0) / 2.0).unwrap();
    let sys = build_euler_system(&params, &tol).unwrap();
    let freq = Frequency::new(params.cbar, vec![1.0]).unwrap();
    let ps = build_phase_set(&sys, &freq, &tol).unwrap();
    let report = resonance_scan(&sys, &ps, 60, &tol);
    assert!(report.resonant_modes.is_empty(), "{:?}", report.resonant_modes);

    let (c_min, argmin) = small_divisor_estimate(&sys, &ps, 2.0, 100, &tol).unwrap();
    // Frozen: the minimum sits on the lowest incoming-difference mode.
    assert!((c_min - 1.2360679).abs() < 1e-6, "c_min = {c_min}");
    assert_eq!(argmin, Some(vec![1, -1, 0]));
}

#[test]
fn symbol_determinant_is_homogeneous() {
    let tol = ToleranceSet::default();
    let params = EulerParams::new(1.3, 0.6, 1.1, -0.4).unwrap();
    let sys = build_euler_system(&params, &tol).unwrap();
    let freq = Frequency::new(1.1 * 0.9, vec![0.9]).unwrap();
    let ps = build_phase_set(&sys, &freq, &tol).unwrap();
    for alpha in [[1i64, 1, 0], [2, -1, 3], [0, 1, 1], [3, 2, -2]] {
        let double: Vec<i64> = alpha.iter().map(|a| 2 * a).collect();
        let d1 = det_alpha(&sys, &ps, &alpha);
        let d2 = det_alpha(&sys, &ps, &double);
        // det L is homogeneous of degree N = 3 in the frequency.
        assert!(
            (d2 - 8.0 * d1).abs() <= 1e-12 * (1.0 + d2.abs()),
            "alpha {alpha:?}: {d2} vs 8 * {d1}"
        );
    }
}

#[test]
fn diophantine_constant_matches_brute_force() {
    let m2 = (5.0_f64.sqrt() - 1.0) / 2.0;
    // Windowed scan vs the direct double loop on a small bound.
    let bound = 200i64;
    let mut brute = f64::INFINITY;
    for p in -bound..=bound {
        for q in -bound..=bound {
            if q == 0 || (p == 0 && q == 0) {
                continue;
            }
            let norm = ((p * p + q * q) as f64).sqrt();
            brute = brute.min((p as f64 + q as f64 * m2).abs() * norm);
        }
    }
    let fast = euler_diophantine(m2, 1.0, bound).unwrap();
    assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");

    // Frozen large-bound value for the golden ratio: the constant stays
    // bounded away from zero (badly approximable number).
    let c = euler_diophantine(m2, 1.0, 10_000).unwrap();
    assert!((c - 0.5257311).abs() < 1e-6, "c = {c}");
    assert!(c > 0.4);

    // A rational parameter collapses the constant to zero.
    let c0 = euler_diophantine(1.0 / 3.0, 1.0, 10).unwrap();
    assert_eq!(c0, 0.0);

    assert!(euler_diophantine(1.5, 1.0, 10).is_err());
    assert!(euler_diophantine(0.5, -1.0, 10).is_err());
}
