//! Built-in example: two-dimensional isentropic Euler equations in
//! `(specific volume, velocity)` form, linearized around an incoming
//! subsonic state behind a planar shock. Every spectral quantity has a
//! closed form here, which makes this configuration the end-to-end check
//! for the whole spectral pipeline.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{MachStemError, Result};
use crate::spectral_geometry::{build_phase_set, PhaseSet};
use crate::system::{Frequency, HyperbolicSystem};
use crate::tolerances::ToleranceSet;

/// Base state of the incoming subsonic fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    /// Specific volume `vbar > 0`.
    pub vbar: f64,
    /// Normal velocity, `0 < ubar < cbar`.
    pub ubar: f64,
    /// Sound speed `cbar > 0`.
    pub cbar: f64,
    /// Derivative of the sound speed with respect to the specific volume.
    pub cprime: f64,
}

impl EulerParams {
    pub fn new(vbar: f64, ubar: f64, cbar: f64, cprime: f64) -> Result<Self> {
        let mut errs = Vec::new();
        if !(vbar > 0.0) {
            errs.push(format!("vbar must be positive (got {vbar})"));
        }
        if !(cbar > 0.0) {
            errs.push(format!("cbar must be positive (got {cbar})"));
        }
        if !(ubar > 0.0 && ubar < cbar) {
            errs.push(format!("need 0 < ubar < cbar (got ubar = {ubar}, cbar = {cbar})"));
        }
        if !cprime.is_finite() {
            errs.push(format!("cprime must be finite (got {cprime})"));
        }
        if errs.is_empty() {
            Ok(Self { vbar, ubar, cbar, cprime })
        } else {
            Err(MachStemError::ValidationError(errs))
        }
    }

    /// Mach number `M = ubar / cbar`.
    pub fn mach(&self) -> f64 {
        self.ubar / self.cbar
    }

    /// Convenience state with prescribed squared Mach number (`cbar = 1`,
    /// `vbar = 1`, a generic `cprime`).
    pub fn with_mach_squared(m2: f64) -> Result<Self> {
        if !(m2 > 0.0 && m2 < 1.0) {
            return Err(MachStemError::ValidationError(vec![format!(
                "squared Mach number must lie in (0, 1) (got {m2})"
            )]));
        }
        Self::new(1.0, m2.sqrt(), 1.0, -0.7)
    }
}

/// Assemble the Euler [`HyperbolicSystem`] in the state variables
/// `(v, u_1, u_2)` (specific volume, tangential velocity, normal velocity),
/// with the normal direction last and the linear boundary operator
/// `B = [[0, vbar, 0], [ubar, 0, vbar]]`.
pub fn build_euler_system(params: &EulerParams, tol: &ToleranceSet) -> Result<HyperbolicSystem> {
    let EulerParams { vbar, ubar, cbar, cprime } = *params;
    let a1 = DMatrix::from_row_slice(3, 3, &[
        0.0, -vbar, 0.0,
        -cbar * cbar / vbar, 0.0, 0.0,
        0.0, 0.0, 0.0,
    ]);
    let a2 = DMatrix::from_row_slice(3, 3, &[
        ubar, 0.0, -vbar,
        0.0, ubar, 0.0,
        -cbar * cbar / vbar, 0.0, ubar,
    ]);
    // d/dv of c^2/v at the base state.
    let kappa = -2.0 * cbar * cprime / vbar + cbar * cbar / (vbar * vbar);
    let da1_v = DMatrix::from_row_slice(3, 3, &[
        0.0, -1.0, 0.0,
        kappa, 0.0, 0.0,
        0.0, 0.0, 0.0,
    ]);
    let da1_u1 = DMatrix::identity(3, 3);
    let da1_u2 = DMatrix::zeros(3, 3);
    let da2_v = DMatrix::from_row_slice(3, 3, &[
        0.0, 0.0, -1.0,
        0.0, 0.0, 0.0,
        kappa, 0.0, 0.0,
    ]);
    let da2_u1 = DMatrix::zeros(3, 3);
    let da2_u2 = DMatrix::identity(3, 3);
    let b = DMatrix::from_row_slice(2, 3, &[
        0.0, vbar, 0.0,
        ubar, 0.0, vbar,
    ]);
    let d2b = vec![DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)];
    HyperbolicSystem::new(
        vec![a1, a2],
        vec![vec![da1_v, da1_u1, da1_u2], vec![da2_v, da2_u1, da2_u2]],
        b,
        d2b,
        tol,
    )
}

/// The parameter `zeta = (ubar/cbar) sqrt(tau^2 - (cbar^2 - ubar^2) eta^2) / tau`,
/// defined inside the hyperbolic region `|tau| > sqrt(cbar^2 - ubar^2) |eta|`.
/// At `tau = cbar * eta` it equals the squared Mach number.
pub fn euler_zeta(params: &EulerParams, tau: f64, eta: f64) -> Result<f64> {
    let disc = tau * tau - (params.cbar * params.cbar - params.ubar * params.ubar) * eta * eta;
    if disc <= 0.0 || tau == 0.0 {
        return Err(MachStemError::OutsideHyperbolicRegion(format!(
            "need |tau| > sqrt(cbar^2 - ubar^2) |eta|, got tau = {tau}, eta = {eta}"
        )));
    }
    Ok(params.ubar / params.cbar * disc.sqrt() / tau)
}

/// One comparison line of [`euler_reference_check`].
#[derive(Debug, Clone)]
pub struct ReferenceItem {
    pub name: String,
    pub rel_err: f64,
}

/// Full comparison report between the numerical pipeline and the closed
/// forms of the Euler configuration.
#[derive(Debug, Clone)]
pub struct EulerReferenceReport {
    pub items: Vec<ReferenceItem>,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl EulerReferenceReport {
    fn push(&mut self, name: &str, rel_err: f64) {
        self.items.push(ReferenceItem { name: name.to_string(), rel_err });
        if rel_err > self.max_rel_err {
            self.max_rel_err = rel_err;
        }
    }
}

fn unit_signed(v: &DVector<f64>) -> DVector<f64> {
    let mut u = v / v.norm();
    let imax = u
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .unwrap()
        .0;
    if u[imax] < 0.0 {
        u = -u;
    }
    u
}

fn vec_rel_err(computed: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    (unit_signed(computed) - unit_signed(reference)).norm()
}

/// Run the full spectral pipeline on the Euler system at `tau = cbar * eta`
/// and compare every quantity against its closed form, after projecting out
/// the scale freedoms of the eigenvectors, of `e` and of `b_bar`.
pub fn euler_reference_check(
    params: &EulerParams,
    eta: f64,
    tol: &ToleranceSet,
    rel_tolerance: f64,
) -> Result<(EulerReferenceReport, PhaseSet)> {
    if eta <= 0.0 {
        return Err(MachStemError::ValidationError(vec![
            "reference check requires eta > 0".into(),
        ]));
    }
    let EulerParams { vbar, ubar, cbar, .. } = *params;
    let m2 = params.mach() * params.mach();
    let tau = cbar * eta;
    let system = build_euler_system(params, tol)?;
    let freq = Frequency::new(tau, vec![eta])?;
    let ps = build_phase_set(&system, &freq, tol)?;

    let mut report = EulerReferenceReport {
        items: Vec::new(),
        max_rel_err: 0.0,
        tolerance: rel_tolerance,
        passed: false,
    };

    // Closed-form roots at tau = cbar * eta: sqrt(tau^2 - (c^2-u^2) eta^2)
    // collapses to ubar * eta.
    let w_paper_1 = (ubar * tau - cbar * ubar * eta) / (cbar * cbar - ubar * ubar); // = 0
    let w_paper_2 = (ubar * tau + cbar * ubar * eta) / (cbar * cbar - ubar * ubar);
    let w_paper_3 = -tau / ubar;
    // Sorted order: w3 < w1 = 0 < w2.
    let mut refs = [(w_paper_3, 3usize), (w_paper_1, 1), (w_paper_2, 2)];
    refs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let scale_w = refs.iter().map(|(w, _)| w.abs()).fold(0.0_f64, f64::max);
    // Position of each labeled phase in the sorted pipeline output.
    let mut pos_of = [usize::MAX; 4];
    for (i, &(w, label)) in refs.iter().enumerate() {
        pos_of[label] = i;
        report.push(&format!("omega_{label}"), (ps.omegas[i] - w).abs() / scale_w);
    }

    // Kernel vectors.
    let r1 = DVector::from_vec(vec![vbar, cbar, 0.0]);
    let r2 = DVector::from_vec(vec![
        (1.0 + m2) / (1.0 - m2) * vbar,
        cbar,
        2.0 * ubar / (1.0 - m2),
    ]);
    let r3 = DVector::from_vec(vec![0.0, cbar, ubar]);
    let l1 = DVector::from_vec(vec![1.0 / (2.0 * vbar * ubar), 1.0 / (2.0 * ubar * cbar), 0.0]);
    let l2 = DVector::from_vec(vec![
        -1.0 / (2.0 * vbar * ubar),
        -(1.0 - m2) / ((1.0 + m2) * 2.0 * ubar * cbar),
        -1.0 / ((1.0 + m2) * cbar * cbar),
    ]);
    let l3 = DVector::from_vec(vec![
        0.0,
        1.0 / ((1.0 + m2) * ubar * cbar),
        1.0 / ((1.0 + m2) * cbar * cbar),
    ]);
    for (label, r_ref, l_ref) in [(1usize, &r1, &l1), (2, &r2, &l2), (3, &r3, &l3)] {
        let m = pos_of[label];
        report.push(&format!("r_{label}"), vec_rel_err(&ps.r[m], r_ref));
        report.push(
            &format!("l_{label}"),
            vec_rel_err(&ps.l[m].transpose(), l_ref),
        );
        // Scale consistency: the pipeline ties l to r by l A_d r = 1, so the
        // products l_ref(r)·computed quantities must agree without projection.
        let s = (&ps.r[m]).dot(r_ref) / r_ref.norm_squared();
        let l_scaled = l_ref / s;
        let diff = (ps.l[m].transpose() - &l_scaled).norm() / l_scaled.norm();
        report.push(&format!("l_{label}_scale"), diff);
    }

    // Classification: phases 1 and 3 incoming, phase 2 outgoing; v_3 = (0, ubar).
    let class_ok = ps.incoming.contains(&pos_of[1])
        && ps.incoming.contains(&pos_of[3])
        && ps.outgoing == vec![pos_of[2]];
    report.push("classification", if class_ok { 0.0 } else { 1.0 });
    let v3 = &ps.group_velocities[pos_of[3]];
    report.push(
        "group_velocity_3",
        ((v3[0] - 0.0).powi(2) + (v3[1] - ubar).powi(2)).sqrt() / ubar,
    );

    // Boundary structure: e parallel to r_1 - r_3, b_bar parallel to (ubar, -cbar).
    let e_ref = &r1 - &r3;
    report.push("e", vec_rel_err(&ps.e, &e_ref));
    let bbar_ref = DVector::from_vec(vec![ubar, -cbar]);
    report.push("b_bar", vec_rel_err(&ps.b_bar.transpose(), &bbar_ref));

    // Q_per kernel against the closed form
    //   vbar ubar cbar (1 + 2 (1 - M^2) k1 / (k3 + (2 k1 + k3) M^2)),
    // where k1 rides phase 1 and k3 rides phase 3. The closed form is stated
    // for e = r_1 - r_3 and b_bar = (ubar, -cbar); undo our normalizations:
    // the kernel is linear in b_bar and quadratic in e (the r_2 scale cancels
    // between l_2 and b_bar B r_2).
    // The annihilator is only defined up to a nonzero scalar; the sign
    // (-ubar, cbar) is the one consistent with the closed-form kernel below.
    let s_b = {
        let bb = RowDVector::from_vec(vec![-ubar, cbar]);
        (&bb * ps.b_bar.transpose())[0]
    };
    let t_e = ps.e.dot(&e_ref) / e_ref.norm_squared();
    let kernel_scale = s_b / (t_e * t_e);
    let samples: [(i64, i64); 6] = [(1, 1), (1, 2), (2, 1), (3, 1), (1, 3), (2, 5)];
    for (k1, k3) in samples {
        let reference = vbar * ubar * cbar
            * (1.0
                + 2.0 * (1.0 - m2) * k1 as f64
                    / (k3 as f64 + (2 * k1 + k3) as f64 * m2));
        let computed = kernel_scale
            * ps.qper_kernel(pos_of[2], pos_of[1], pos_of[3], k1, k3, tol)?;
        report.push(
            &format!("qper_kernel_{k1}_{k3}"),
            (computed - reference).abs() / reference.abs().max(vbar * ubar * cbar),
        );
    }

    report.passed = report.max_rel_err <= rel_tolerance;
    Ok((report, ps))
}
