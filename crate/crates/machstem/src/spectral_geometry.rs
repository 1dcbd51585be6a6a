//! Constant-coefficient linear algebra of the boundary value problem:
//! dispersion roots, eigenvectors, projectors, partial inverses, the
//! boundary kernel vectors and all scalar coefficients entering the
//! leading-amplitude equations.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{MachStemError, Result};
use crate::system::{Frequency, HyperbolicSystem};
use crate::tolerances::ToleranceSet;

/// Scalar/vector data of the leading-amplitude equations, derived from a
/// [`PhaseSet`].
#[derive(Debug, Clone)]
pub struct AmplitudeCoefficients {
    /// Burgers self-interaction coefficients, one per phase.
    pub c: Vec<f64>,
    /// Quadratic boundary coefficient `upsilon`.
    pub upsilon: f64,
    /// Time coefficient of `X_Lop` (sum of `b̄ B R_m e_m` over incoming `m`).
    pub xlop_t: f64,
    /// Tangential coefficients of `X_Lop` (length `d - 1`).
    pub xlop_y: Vec<f64>,
    /// Interaction vectors `E_{m1,m2}` for ordered incoming pairs, stored as
    /// `e_vectors[(i1, i2)]` with `i1, i2` positions in `incoming`.
    pub e_vectors: Vec<Vec<DVector<f64>>>,
    /// `b̄ B r_m` for each outgoing `m` (indexed like `outgoing`).
    pub bbar_b_r_out: Vec<f64>,
    /// Three-phase reduction (present when `M = 3` and `|I| = 2`).
    pub reduced: Option<ReducedCoefficients>,
}

/// Constants of the reduced scalar amplitude equation
/// `∂_t a + w·∇_y a + c a ∂_θ a + μ F(∂_θ a, ∂_θ a) = g`
/// in the three-phase case (two incoming phases `lo`, `hi`, one outgoing `o`).
#[derive(Debug, Clone)]
pub struct ReducedCoefficients {
    /// Index (into `omegas`) of the incoming phase with the smaller root.
    pub lo: usize,
    /// Index of the incoming phase with the larger root.
    pub hi: usize,
    /// Index of the outgoing phase.
    pub out: usize,
    /// `delta_1 = (w_lo - w_o) / (w_hi - w_lo)`.
    pub delta1: f64,
    /// `delta_3 = (w_hi - w_o) / (w_hi - w_lo) = 1 + delta_1`.
    pub delta3: f64,
    /// `l_o · E_{lo,hi}`.
    pub q_lo_hi: f64,
    /// `l_o · E_{hi,lo}`.
    pub q_hi_lo: f64,
    /// `b̄ B r_o`.
    pub bbr_out: f64,
    /// Burgers coefficient of the reduced equation.
    pub c: f64,
    /// Nonlocal coefficient for the pulse operator `F_pul`; the periodic
    /// coefficient is `mu_per(theta_period) = theta_period / (2 pi) * mu_pul`.
    pub mu_pul: f64,
    /// Tangential transport velocity `w` of the reduced equation.
    pub w: Vec<f64>,
}

impl ReducedCoefficients {
    /// Coefficient of `F_per(∂_θ a, ∂_θ a)` for period `theta_period`.
    pub fn mu_per(&self, theta_period: f64) -> f64 {
        theta_period / (2.0 * std::f64::consts::PI) * self.mu_pul
    }
}

/// Full spectral decomposition attached to one boundary frequency.
#[derive(Debug, Clone)]
pub struct PhaseSet {
    pub freq: Frequency,
    /// Sorted pairwise-distinct real roots `w_m` of the dispersion relation.
    pub omegas: Vec<f64>,
    /// Right kernel vectors `r_m` of `L(d phi_m)`.
    pub r: Vec<DVector<f64>>,
    /// Left kernel row vectors, normalized by `l_m A_d r_{m'} = delta_{mm'}`.
    pub l: Vec<RowDVector<f64>>,
    /// Group velocities `v_m` in `R^d`.
    pub group_velocities: Vec<Vec<f64>>,
    /// Indices of incoming phases (positive normal group velocity).
    pub incoming: Vec<usize>,
    /// Indices of outgoing phases.
    pub outgoing: Vec<usize>,
    /// Projectors `P_m X = (l_m A_d X) r_m`.
    pub p: Vec<DMatrix<f64>>,
    /// Projectors `Q_m X = (l_m X) A_d r_m`.
    pub q: Vec<DMatrix<f64>>,
    /// Partial inverses `R_m`.
    pub partial_inverses: Vec<DMatrix<f64>>,
    /// Spanning vector of `Ker B ∩ E^s`.
    pub e: DVector<f64>,
    /// Scalars `e_m` with `e = Σ e_m r_m` over incoming phases
    /// (aligned with `incoming`; `max |e_m| = 1`).
    pub e_scalars: Vec<f64>,
    /// Unit row vector with `b̄ B r_m = 0` for every incoming `m`.
    pub b_bar: RowDVector<f64>,
    pub coeffs: AmplitudeCoefficients,
}

impl PhaseSet {
    /// Phase gradient `d phi_m = (tau, eta, w_m)`; spatial part only.
    pub fn dphi_space(&self, m: usize) -> Vec<f64> {
        let mut xi = self.freq.eta.clone();
        xi.push(self.omegas[m]);
        xi
    }

    /// `e_m = e_scalar * r_m` for the incoming phase at position `pos` in
    /// `incoming`.
    pub fn e_component(&self, pos: usize) -> DVector<f64> {
        &self.r[self.incoming[pos]] * self.e_scalars[pos]
    }

    /// Q_per kernel entry for outgoing phase `m`, ordered incoming pair
    /// `(m1, m2)` and integer mode pair `(k1, k2)`:
    /// `-b̄ B r_m (k1 l_m E_{m1,m2} + k2 l_m E_{m2,m1})
    ///  / (k1 (w_{m1} - w_m) + k2 (w_{m2} - w_m))`.
    pub fn qper_kernel(
        &self,
        m: usize,
        m1: usize,
        m2: usize,
        k1: i64,
        k2: i64,
        tol: &ToleranceSet,
    ) -> Result<f64> {
        let pos_out = self
            .outgoing
            .iter()
            .position(|&o| o == m)
            .ok_or_else(|| MachStemError::Internal(format!("phase {m} is not outgoing")))?;
        let p1 = self
            .incoming
            .iter()
            .position(|&i| i == m1)
            .ok_or_else(|| MachStemError::Internal(format!("phase {m1} is not incoming")))?;
        let p2 = self
            .incoming
            .iter()
            .position(|&i| i == m2)
            .ok_or_else(|| MachStemError::Internal(format!("phase {m2} is not incoming")))?;
        let denom = k1 as f64 * (self.omegas[m1] - self.omegas[m])
            + k2 as f64 * (self.omegas[m2] - self.omegas[m]);
        let scale = (self.omegas[m1] - self.omegas[m]).abs() + (self.omegas[m2] - self.omegas[m]).abs();
        if denom.abs() < tol.kernel_denominator.max(tol.resonance * scale) {
            return Err(MachStemError::ResonantKernel { k1, k2, value: denom });
        }
        let le12 = (&self.l[m] * &self.coeffs.e_vectors[p1][p2])[0];
        let le21 = (&self.l[m] * &self.coeffs.e_vectors[p2][p1])[0];
        let bbr = self.coeffs.bbar_b_r_out[pos_out];
        Ok(-bbr * (k1 as f64 * le12 + k2 as f64 * le21) / denom)
    }
}

/// Roots of `det[tau I + Σ_{j<d} eta_j A_j + w A_d] = 0`, sorted ascending.
pub fn solve_dispersion(
    system: &HyperbolicSystem,
    freq: &Frequency,
    tol: &ToleranceSet,
) -> Result<Vec<f64>> {
    let d = system.dim_space;
    let n = system.size;
    if freq.eta.len() != d - 1 {
        return Err(MachStemError::InvalidSystem(format!(
            "eta must have length {}",
            d - 1
        )));
    }
    // Generalized eigenvalue formulation: w is an eigenvalue of
    // -A_d^{-1} (tau I + Σ eta_j A_j).
    let mut tangential = DMatrix::identity(n, n) * freq.tau;
    for (j, e) in freq.eta.iter().enumerate() {
        tangential += &system.a[j] * *e;
    }
    let ad_lu = system.ad().clone().lu();
    let m = -ad_lu
        .solve(&tangential)
        .ok_or_else(|| MachStemError::InvalidSystem("A_d(0) is singular".into()))?;
    let scale = m.abs().max().max(1.0);
    let eigs = m.complex_eigenvalues();
    let mut roots = Vec::with_capacity(n);
    for ev in eigs.iter() {
        if ev.im.abs() > tol.relative * scale {
            return Err(MachStemError::ComplexRoot(format!(
                "root {:.6e} + {:.6e} i",
                ev.re, ev.im
            )));
        }
        roots.push(ev.re);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in roots.windows(2) {
        if (w[1] - w[0]).abs() <= tol.root_gap * scale {
            return Err(MachStemError::RepeatedRoot(w[0], w[1]));
        }
    }
    Ok(roots)
}

/// Right/left kernel vectors of every `L(d phi_m)`, normalized so that
/// `l_m A_d r_{m'} = delta_{mm'}` and the largest-magnitude entry of each
/// `r_m` is positive.
pub fn eigenvectors(
    system: &HyperbolicSystem,
    freq: &Frequency,
    omegas: &[f64],
    tol: &ToleranceSet,
) -> Result<(Vec<DVector<f64>>, Vec<RowDVector<f64>>)> {
    let n = system.size;
    let mut rs = Vec::with_capacity(omegas.len());
    let mut ls = Vec::with_capacity(omegas.len());
    for (m, &omega) in omegas.iter().enumerate() {
        let ldphi = system.l_dphi(freq, omega);
        let svd = ldphi.clone().svd(true, true);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let smin = sv[n - 1];
        let snext = sv[n - 2];
        if smin > tol.relative * snext.max(1.0) || snext <= tol.relative * sv[0].max(1.0) {
            return Err(MachStemError::DegenerateKernel {
                index: m,
                ratio: smin / snext.max(f64::MIN_POSITIVE),
            });
        }
        // Singular values from nalgebra are not sorted; locate the smallest.
        let pos = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        let v_t = svd.v_t.as_ref().unwrap();
        let u = svd.u.as_ref().unwrap();
        let mut r: DVector<f64> = v_t.row(pos).transpose();
        let l_raw: RowDVector<f64> = u.column(pos).transpose();
        // Deterministic sign: largest-magnitude entry of r_m positive.
        let imax = r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        if r[imax] < 0.0 {
            r = -r;
        }
        let pairing = (&l_raw * system.ad() * &r)[0];
        if pairing.abs() <= tol.absolute {
            return Err(MachStemError::GlancingPhase { index: m, speed: pairing.abs() });
        }
        let l = l_raw / pairing;
        rs.push(r);
        ls.push(l);
    }
    Ok((rs, ls))
}

/// Group velocities and incoming/outgoing partition.
///
/// The group velocity is obtained by implicit differentiation of the full
/// symbol eigenvalue: `v_{m,j} = (l_m A_j r_m) / (l_m r_m)`, where `r_m, l_m`
/// are kernel vectors of `L(d phi_m)`. A phase is incoming iff the normal
/// component is positive.
#[allow(clippy::type_complexity)]
pub fn classify_phases(
    system: &HyperbolicSystem,
    rs: &[DVector<f64>],
    ls: &[RowDVector<f64>],
    tol: &ToleranceSet,
) -> Result<(Vec<usize>, Vec<usize>, Vec<Vec<f64>>)> {
    let d = system.dim_space;
    let mut incoming = Vec::new();
    let mut outgoing = Vec::new();
    let mut velocities = Vec::with_capacity(rs.len());
    for m in 0..rs.len() {
        let lr = (&ls[m] * &rs[m])[0];
        if lr.abs() <= tol.absolute {
            return Err(MachStemError::DegenerateKernel { index: m, ratio: lr.abs() });
        }
        let v: Vec<f64> = (1..=d).map(|j| (&ls[m] * &system.a[j - 1] * &rs[m])[0] / lr).collect();
        let speed_scale = v.iter().map(|x| x.abs()).fold(0.0_f64, f64::max).max(1.0);
        if v[d - 1].abs() <= tol.glancing * speed_scale {
            return Err(MachStemError::GlancingPhase { index: m, speed: v[d - 1].abs() });
        }
        if v[d - 1] > 0.0 {
            incoming.push(m);
        } else {
            outgoing.push(m);
        }
        velocities.push(v);
    }
    Ok((incoming, outgoing, velocities))
}

/// Projectors `P_m`, `Q_m` and partial inverses `R_m`.
#[allow(clippy::type_complexity)]
pub fn projectors(
    system: &HyperbolicSystem,
    omegas: &[f64],
    rs: &[DVector<f64>],
    ls: &[RowDVector<f64>],
) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let mcount = omegas.len();
    let mut ps = Vec::with_capacity(mcount);
    let mut qs = Vec::with_capacity(mcount);
    let mut rinvs = Vec::with_capacity(mcount);
    let ad = system.ad();
    for m in 0..mcount {
        ps.push(&rs[m] * (&ls[m] * ad));
        qs.push((ad * &rs[m]) * &ls[m]);
        let n = system.size;
        let mut rm = DMatrix::zeros(n, n);
        for mp in 0..mcount {
            if mp != m {
                rm += (&rs[mp] * &ls[mp]) / (omegas[m] - omegas[mp]);
            }
        }
        rinvs.push(rm);
    }
    (ps, qs, rinvs)
}

/// Kernel vector `e` of `B` restricted to the stable subspace
/// `E^s = span{r_m : m incoming}`, its scalar components, and the row vector
/// `b̄` annihilating `B E^s`.
#[allow(clippy::type_complexity)]
pub fn boundary_structure(
    system: &HyperbolicSystem,
    rs: &[DVector<f64>],
    incoming: &[usize],
    tol: &ToleranceSet,
) -> Result<(DVector<f64>, Vec<f64>, RowDVector<f64>)> {
    let p = system.b.nrows();
    if incoming.len() != p {
        return Err(MachStemError::InvalidSystem(format!(
            "rank of B ({p}) must equal the number of incoming phases ({})",
            incoming.len()
        )));
    }
    // p x |I| matrix with columns B r_m.
    let mut br = DMatrix::zeros(p, incoming.len());
    for (col, &m) in incoming.iter().enumerate() {
        br.set_column(col, &(&system.b * &rs[m]));
    }
    let scale = br.abs().max().max(1.0);
    let svd = br.clone().svd(false, false);
    let small = svd
        .singular_values
        .iter()
        .filter(|&&s| s <= tol.relative * scale)
        .count();
    match small {
        0 => return Err(MachStemError::UniformlyStable),
        1 => {}
        _ => return Err(MachStemError::ViolentlyUnstable),
    }
    // Null vectors of the (numerically rank-deficient) square matrix from
    // the symmetric eigenproblems of its Gram matrices. The SVD above is
    // trusted only for the singular values: nalgebra's small-matrix SVD can
    // return singular vectors that do not reproduce the input (observed for
    // near-sonic Euler states), while the symmetric eigensolver stays
    // accurate.
    let argmin = |g: &DMatrix<f64>| -> DVector<f64> {
        let se = nalgebra::SymmetricEigen::new(g.clone());
        let mut imin = 0;
        for (i, &lam) in se.eigenvalues.iter().enumerate() {
            if lam < se.eigenvalues[imin] {
                imin = i;
            }
        }
        se.eigenvectors.column(imin).into_owned()
    };
    // e-scalars: right null vector, from BR' BR.
    let mut e_scalars: Vec<f64> =
        argmin(&(br.transpose() * &br)).iter().copied().collect();
    let emax = e_scalars.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    for s in &mut e_scalars {
        *s /= emax; // max |e_m| = 1, largest-magnitude component positive
    }
    let mut e = DVector::zeros(system.size);
    for (posi, &m) in incoming.iter().enumerate() {
        e += &rs[m] * e_scalars[posi];
    }
    // b̄: left null vector, from BR BR'; unit norm.
    let mut b_bar: RowDVector<f64> = argmin(&(&br * br.transpose())).transpose();
    let bmax = b_bar.iter().cloned().fold(0.0_f64, |a, b| if b.abs() > a.abs() { b } else { a });
    if bmax < 0.0 {
        b_bar = -b_bar;
    }
    Ok((e, e_scalars, b_bar))
}

/// All coefficients of the leading-amplitude equations.
pub fn amplitude_coefficients(
    system: &HyperbolicSystem,
    freq: &Frequency,
    omegas: &[f64],
    rs: &[DVector<f64>],
    ls: &[RowDVector<f64>],
    rinvs: &[DMatrix<f64>],
    incoming: &[usize],
    outgoing: &[usize],
    e_scalars: &[f64],
    b_bar: &RowDVector<f64>,
) -> Result<AmplitudeCoefficients> {
    let d = system.dim_space;
    let mcount = omegas.len();

    // Burgers coefficients c_m = (Σ_j ∂_j phi_m l_m (dA_j · r_m) r_m) / (l_m r_m).
    let mut c = Vec::with_capacity(mcount);
    for m in 0..mcount {
        let mut xi = freq.eta.clone();
        xi.push(omegas[m]);
        let mut num = 0.0;
        for j in 1..=d {
            num += xi[j - 1] * (&ls[m] * system.da_dot(j, &rs[m]) * &rs[m])[0];
        }
        c.push(num / (&ls[m] * &rs[m])[0]);
    }

    // e components and E_{m1,m2} = Σ_j ∂_j phi_{m1} (dA_j · e_{m2}) e_{m1}.
    let e_comp: Vec<DVector<f64>> = incoming
        .iter()
        .zip(e_scalars)
        .map(|(&m, &s)| &rs[m] * s)
        .collect();
    let ni = incoming.len();
    let mut e_vectors = vec![vec![DVector::zeros(system.size); ni]; ni];
    for (p1, &m1) in incoming.iter().enumerate() {
        let mut xi = freq.eta.clone();
        xi.push(omegas[m1]);
        for p2 in 0..ni {
            let mut v = DVector::zeros(system.size);
            for j in 1..=d {
                v += xi[j - 1] * system.da_dot(j, &e_comp[p2]) * &e_comp[p1];
            }
            e_vectors[p1][p2] = v;
        }
    }

    // upsilon = ½ b̄ d²b(0)(e,e) - ½ Σ_{m in I} b̄ B R_m E_{m,m}.
    let e: DVector<f64> = e_comp.iter().fold(DVector::zeros(system.size), |acc, v| acc + v);
    let mut upsilon = 0.5 * (b_bar * system.d2b_dot(&e, &e))[0];
    for (p1, &m) in incoming.iter().enumerate() {
        upsilon -= 0.5 * (b_bar * &system.b * &rinvs[m] * &e_vectors[p1][p1])[0];
    }

    // X_Lop coefficients.
    let mut xlop_t = 0.0;
    let mut xlop_y = vec![0.0; d - 1];
    for (p1, &m) in incoming.iter().enumerate() {
        xlop_t += (b_bar * &system.b * &rinvs[m] * &e_comp[p1])[0];
        for (j, coef) in xlop_y.iter_mut().enumerate() {
            *coef += (b_bar * &system.b * &rinvs[m] * &system.a[j] * &e_comp[p1])[0];
        }
    }
    if xlop_t.abs() < 1e-14 {
        return Err(MachStemError::InvalidSystem(
            "time coefficient of X_Lop vanishes".into(),
        ));
    }

    let bbar_b_r_out: Vec<f64> =
        outgoing.iter().map(|&m| (b_bar * &system.b * &rs[m])[0]).collect();

    // Three-phase reduction.
    let reduced = if mcount == 3 && ni == 2 && outgoing.len() == 1 {
        let (mut lo, mut hi) = (incoming[0], incoming[1]);
        if omegas[lo] > omegas[hi] {
            std::mem::swap(&mut lo, &mut hi);
        }
        let out = outgoing[0];
        let (wlo, whi, wo) = (omegas[lo], omegas[hi], omegas[out]);
        let delta1 = (wlo - wo) / (whi - wlo);
        let delta3 = (whi - wo) / (whi - wlo);
        let plo = incoming.iter().position(|&m| m == lo).unwrap();
        let phi = incoming.iter().position(|&m| m == hi).unwrap();
        let q_lo_hi = (&ls[out] * &e_vectors[plo][phi])[0];
        let q_hi_lo = (&ls[out] * &e_vectors[phi][plo])[0];
        let bbr_out = bbar_b_r_out[0];
        let sum = q_lo_hi / (wlo - wo) + q_hi_lo / (whi - wo);
        let diff = q_lo_hi / (wlo - wo) - q_hi_lo / (whi - wo);
        Some(ReducedCoefficients {
            lo,
            hi,
            out,
            delta1,
            delta3,
            q_lo_hi,
            q_hi_lo,
            bbr_out,
            c: -(2.0 * upsilon - bbr_out * sum) / xlop_t,
            mu_pul: bbr_out * diff / xlop_t,
            w: xlop_y.iter().map(|b| b / xlop_t).collect(),
        })
    } else {
        None
    };

    Ok(AmplitudeCoefficients {
        c,
        upsilon,
        xlop_t,
        xlop_y,
        e_vectors,
        bbar_b_r_out,
        reduced,
    })
}

/// Run the whole pipeline for one boundary frequency.
pub fn build_phase_set(
    system: &HyperbolicSystem,
    freq: &Frequency,
    tol: &ToleranceSet,
) -> Result<PhaseSet> {
    let omegas = solve_dispersion(system, freq, tol)?;
    let (rs, ls) = eigenvectors(system, freq, &omegas, tol)?;
    let (incoming, outgoing, group_velocities) = classify_phases(system, &rs, &ls, tol)?;
    let (p, q, partial_inverses) = projectors(system, &omegas, &rs, &ls);
    let (e, e_scalars, b_bar) = boundary_structure(system, &rs, &incoming, tol)?;
    let coeffs = amplitude_coefficients(
        system,
        freq,
        &omegas,
        &rs,
        &ls,
        &partial_inverses,
        &incoming,
        &outgoing,
        &e_scalars,
        &b_bar,
    )?;
    Ok(PhaseSet {
        freq: freq.clone(),
        omegas,
        r: rs,
        l: ls,
        group_velocities,
        incoming,
        outgoing,
        p,
        q,
        partial_inverses,
        e,
        e_scalars,
        b_bar,
        coeffs,
    })
}
