//! Pulse profile calculus: a closed symbolic grammar of profile terms
//! (singles, products, triples and transversal ray integrals), the averaging
//! operators `E_P` / `E_Q`, the solution operator `R_∞` of the fast profile
//! equation `𝓛 U = H`, and the assembly of the computable pulse corrector.

use std::rc::Rc;

use nalgebra::DVector;

use crate::error::{MachStemError, Result};
use crate::spectral_geometry::PhaseSet;
use crate::system::HyperbolicSystem;

/// Scalar constituent function with declared decay order and (optionally)
/// an analytic derivative.
#[derive(Clone)]
pub struct Constituent {
    f: Rc<dyn Fn(f64) -> f64>,
    df: Option<Rc<dyn Fn(f64) -> f64>>,
    pub decay_order: f64,
}

impl std::fmt::Debug for Constituent {
    fn fmt(&self, fo: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fo, "Constituent(decay {})", self.decay_order)
    }
}

impl Constituent {
    /// Declared decay is trusted but spot-checked at three far-field samples.
    pub fn new(f: impl Fn(f64) -> f64 + 'static, decay_order: f64) -> Result<Self> {
        let scale = 100.0 * (f(0.0).abs().max(f(1.0).abs()).max(f(-1.0).abs()) + 1.0);
        for x in [40.0, 80.0, 160.0] {
            for s in [x, -x] {
                if f(s).abs() > scale * (1.0 + s.abs()).powf(-decay_order) {
                    return Err(MachStemError::ValidationError(vec![format!(
                        "constituent violates its declared decay order {decay_order} at {s}"
                    )]));
                }
            }
        }
        Ok(Self { f: Rc::new(f), df: None, decay_order })
    }

    pub fn with_derivative(mut self, df: impl Fn(f64) -> f64 + 'static) -> Self {
        self.df = Some(Rc::new(df));
        self
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn deriv(&self) -> Result<Self> {
        match &self.df {
            Some(df) => Ok(Self {
                f: df.clone(),
                df: None,
                decay_order: self.decay_order,
            }),
            None => Err(MachStemError::UnsupportedTerm(
                "constituent has no registered derivative".into(),
            )),
        }
    }

    /// `∫ f dθ` over a wide window (trapezoid; decayed constituents).
    pub fn moment(&self, half_width: f64, step: f64) -> f64 {
        let n = (2.0 * half_width / step).round() as usize;
        let mut acc = 0.5 * (self.eval(-half_width) + self.eval(half_width));
        for i in 1..n {
            acc += self.eval(-half_width + i as f64 * step);
        }
        acc * step
    }
}

/// One term of the grammar. `phase` indices refer to positions in
/// `PhaseSet::omegas`.
#[derive(Clone, Debug)]
pub enum TermKind {
    /// `f(θ0 + ω_k ξd)`
    Single { phase: usize, f: Constituent },
    /// `f(θ0 + ω_ℓ ξd) g(θ0 + ω_m ξd)`
    Product { phases: (usize, usize), f: Constituent, g: Constituent },
    /// `f g h` with three phase arguments
    Triple {
        phases: (usize, usize, usize),
        f: Constituent,
        g: Constituent,
        h: Constituent,
    },
    /// `I^i_{ℓ,m}(θ0, ξd) = ∫_{ξd}^∞ f(θ0 + ω_i(ξd − s) + ω_ℓ s)
    ///                               g(θ0 + ω_i(ξd − s) + ω_m s) ds`,
    /// `i, ℓ, m` mutually distinct.
    TransversalIntegral { base: usize, phases: (usize, usize), f: Constituent, g: Constituent },
    /// `f(θ0 + ω_k ξd) · I^n_{p,q}[g, h]`
    DressedIntegral {
        phase: usize,
        base: usize,
        phases: (usize, usize),
        f: Constituent,
        g: Constituent,
        h: Constituent,
    },
}

#[derive(Clone, Debug)]
pub struct ProfileTerm {
    pub kind: TermKind,
    pub direction: DVector<f64>,
    pub scalar: f64,
}

/// Finite sum of profile terms; evaluation is linear in the term list.
#[derive(Clone, Debug)]
pub struct ProfileSum {
    pub terms: Vec<ProfileTerm>,
    /// Ray-integral quadrature step and truncation length for the
    /// transversal-integral kinds.
    pub ds: f64,
    pub s_max: f64,
}

fn simpson(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, step: f64) -> f64 {
    let n = (((b - a) / step).ceil() as usize).max(2);
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

impl ProfileSum {
    pub fn new(terms: Vec<ProfileTerm>) -> Result<Self> {
        for t in &terms {
            match &t.kind {
                TermKind::TransversalIntegral { base, phases, f, g } => {
                    if *base == phases.0 || *base == phases.1 || phases.0 == phases.1 {
                        return Err(MachStemError::UnsupportedTerm(
                            "transversal integral needs mutually distinct phases".into(),
                        ));
                    }
                    if f.decay_order < 3.0 || g.decay_order < 3.0 {
                        return Err(MachStemError::UnsupportedTerm(
                            "integral constituents must decay with order >= 3".into(),
                        ));
                    }
                }
                TermKind::DressedIntegral { base, phases, g, h, .. } => {
                    if *base == phases.0 || *base == phases.1 || phases.0 == phases.1 {
                        return Err(MachStemError::UnsupportedTerm(
                            "transversal integral needs mutually distinct phases".into(),
                        ));
                    }
                    if g.decay_order < 3.0 || h.decay_order < 3.0 {
                        return Err(MachStemError::UnsupportedTerm(
                            "integral constituents must decay with order >= 3".into(),
                        ));
                    }
                }
                TermKind::Single { f, .. } => {
                    if f.decay_order < 2.0 {
                        return Err(MachStemError::UnsupportedTerm(
                            "constituents must decay with order >= 2".into(),
                        ));
                    }
                }
                TermKind::Product { f, g, .. } => {
                    if f.decay_order < 2.0 || g.decay_order < 2.0 {
                        return Err(MachStemError::UnsupportedTerm(
                            "constituents must decay with order >= 2".into(),
                        ));
                    }
                }
                TermKind::Triple { f, g, h, .. } => {
                    if f.decay_order < 2.0 || g.decay_order < 2.0 || h.decay_order < 2.0 {
                        return Err(MachStemError::UnsupportedTerm(
                            "constituents must decay with order >= 2".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { terms, ds: 0.05, s_max: 200.0 })
    }

    pub fn empty() -> Self {
        Self { terms: Vec::new(), ds: 0.05, s_max: 200.0 }
    }

    fn transversal(
        &self,
        omegas: &[f64],
        base: usize,
        phases: (usize, usize),
        f: &Constituent,
        g: &Constituent,
        theta0: f64,
        xid: f64,
    ) -> f64 {
        let (wi, wl, wm) = (omegas[base], omegas[phases.0], omegas[phases.1]);
        simpson(
            |s| {
                let back = theta0 + wi * (xid - s);
                f.eval(back + wl * s) * g.eval(back + wm * s)
            },
            xid,
            xid + self.s_max,
            self.ds,
        )
    }

    /// Value of the vector-valued sum at one `(θ0, ξd)`.
    pub fn eval(&self, omegas: &[f64], theta0: f64, xid: f64) -> DVector<f64> {
        let n = self.terms.first().map(|t| t.direction.len()).unwrap_or(0);
        let mut acc = DVector::zeros(n);
        for t in &self.terms {
            let v = self.eval_scalar(omegas, t, theta0, xid);
            acc += &t.direction * (t.scalar * v);
        }
        acc
    }

    /// Scalar factor of one term at `(θ0, ξd)` (direction and scalar factor
    /// excluded).
    pub fn eval_scalar(&self, omegas: &[f64], t: &ProfileTerm, theta0: f64, xid: f64) -> f64 {
        match &t.kind {
            TermKind::Single { phase, f } => f.eval(theta0 + omegas[*phase] * xid),
            TermKind::Product { phases, f, g } => {
                f.eval(theta0 + omegas[phases.0] * xid) * g.eval(theta0 + omegas[phases.1] * xid)
            }
            TermKind::Triple { phases, f, g, h } => {
                f.eval(theta0 + omegas[phases.0] * xid)
                    * g.eval(theta0 + omegas[phases.1] * xid)
                    * h.eval(theta0 + omegas[phases.2] * xid)
            }
            TermKind::TransversalIntegral { base, phases, f, g } => {
                self.transversal(omegas, *base, *phases, f, g, theta0, xid)
            }
            TermKind::DressedIntegral { phase, base, phases, f, g, h } => {
                f.eval(theta0 + omegas[*phase] * xid)
                    * self.transversal(omegas, *base, *phases, g, h, theta0, xid)
            }
        }
    }

    /// All phase indices of a term, or `None` for integral kinds.
    fn uniform_phase(kind: &TermKind) -> Option<usize> {
        match kind {
            TermKind::Single { phase, .. } => Some(*phase),
            TermKind::Product { phases, .. } => (phases.0 == phases.1).then_some(phases.0),
            TermKind::Triple { phases, .. } => {
                (phases.0 == phases.1 && phases.1 == phases.2).then_some(phases.0)
            }
            TermKind::TransversalIntegral { .. } | TermKind::DressedIntegral { .. } => None,
        }
    }
}

/// `E_Q`: keeps the terms whose every phase index is a single `m` (matched
/// singles and self-products) and projects their direction by
/// `Q_m d = (ℓ_m · d) A_d r_m`; ray-integral terms average to zero.
pub fn e_q_average(h: &ProfileSum, system: &HyperbolicSystem, ps: &PhaseSet) -> ProfileSum {
    project_matched(h, ps, |m, d| {
        let w = (&ps.l[m] * d)[0];
        (system.ad() * &ps.r[m]) * w
    })
}

/// `E_P`: same extraction with `P_m d = (ℓ_m A_d d) r_m`.
pub fn e_p_average(h: &ProfileSum, system: &HyperbolicSystem, ps: &PhaseSet) -> ProfileSum {
    project_matched(h, ps, |m, d| {
        let w = (&ps.l[m] * system.ad() * d)[0];
        &ps.r[m] * w
    })
}

fn project_matched(
    h: &ProfileSum,
    _ps: &PhaseSet,
    proj: impl Fn(usize, &DVector<f64>) -> DVector<f64>,
) -> ProfileSum {
    let mut out = Vec::new();
    for t in &h.terms {
        if let Some(m) = ProfileSum::uniform_phase(&t.kind) {
            let d = proj(m, &t.direction);
            if d.amax() > 0.0 {
                out.push(ProfileTerm { kind: t.kind.clone(), direction: d, scalar: t.scalar });
            }
        }
    }
    ProfileSum { terms: out, ds: h.ds, s_max: h.s_max }
}

/// Ramp-weighted (second-order Cesàro) windowed average of `ℓ_m · H` along
/// the `m`-ray through `(θ0, ξd)`:
/// `(2/T²) ∫_0^T s · (ℓ_m H)(θ0 + ω_m(ξd − (ξd + s)) + ..., ξd + s) ds`.
/// Exact on matched terms (whose ray restriction is constant); transient
/// contributions decay like `T^{-2}` instead of the `T^{-1}` of the flat
/// window, which is what makes the desk-scale tolerance reachable at
/// `T = 10^4`.
pub fn windowed_q_average(
    h: &ProfileSum,
    ps: &PhaseSet,
    m: usize,
    theta0: f64,
    xid: f64,
    t_window: f64,
) -> f64 {
    windowed_ray_average(h, ps, &ps.l[m].clone_owned(), m, theta0, xid, t_window)
}

/// Same windowed ray average with the `E_P` weight `ℓ_m A_d`.
pub fn windowed_p_average(
    h: &ProfileSum,
    system: &HyperbolicSystem,
    ps: &PhaseSet,
    m: usize,
    theta0: f64,
    xid: f64,
    t_window: f64,
) -> f64 {
    windowed_ray_average(h, ps, &(&ps.l[m] * system.ad()), m, theta0, xid, t_window)
}

fn windowed_ray_average(
    h: &ProfileSum,
    ps: &PhaseSet,
    weight: &nalgebra::RowDVector<f64>,
    m: usize,
    theta0: f64,
    xid: f64,
    t_window: f64,
) -> f64 {
    let wm = ps.omegas[m];
    let ray = |s: f64| {
        let v = h.eval(&ps.omegas, theta0 - wm * s, xid + s);
        (weight * v)[0]
    };
    // Panels grow geometrically: the integrand structure lives near s = 0.
    let mut acc = 0.0;
    let mut a = 0.0;
    let mut b: f64 = 1.0;
    while a < t_window {
        let hi = b.min(t_window);
        acc += simpson(|s| s * ray(s), a, hi, (hi - a) / 64.0);
        a = hi;
        b *= 2.0;
    }
    2.0 * acc / (t_window * t_window)
}

/// Uniform rectangular `(θ0, ξd)` evaluation grid.
#[derive(Debug, Clone)]
pub struct ProfileGrid {
    pub theta0: Vec<f64>,
    pub xid: Vec<f64>,
}

impl ProfileGrid {
    pub fn uniform(t0_min: f64, t0_max: f64, nt: usize, xi_min: f64, xi_max: f64, nx: usize) -> Self {
        let theta0 = (0..nt)
            .map(|i| t0_min + (t0_max - t0_min) * i as f64 / (nt - 1) as f64)
            .collect();
        let xid = (0..nx)
            .map(|i| xi_min + (xi_max - xi_min) * i as f64 / (nx - 1) as f64)
            .collect();
        Self { theta0, xid }
    }
}

/// Solution operator of `𝓛 U = H`:
/// `U(θ0, ξd) = −Σ_j (∫_{ξd}^∞ (ℓ_j H)(θ0 + ω_j(ξd − s), s) ds) r_j`,
/// by composite Simpson with tail truncation at `H.s_max`; precondition
/// `E_Q H = 0` is verified numerically at the grid corners.
pub fn r_infinity(
    h: &ProfileSum,
    system: &HyperbolicSystem,
    ps: &PhaseSet,
    grid: &ProfileGrid,
) -> Result<Vec<Vec<DVector<f64>>>> {
    // Numeric precondition check (terms of different kinds may cancel, so
    // the extraction is evaluated, not just inspected).
    let eq = e_q_average(h, system, ps);
    if !eq.terms.is_empty() {
        let mut worst = 0.0_f64;
        let mut scale = 0.0_f64;
        for &t0 in [grid.theta0[0], *grid.theta0.last().unwrap(), 0.0].iter() {
            for &xi in [grid.xid[0], *grid.xid.last().unwrap()].iter() {
                worst = worst.max(eq.eval(&ps.omegas, t0, xi).amax());
                scale = scale.max(h.eval(&ps.omegas, t0, xi).amax());
            }
        }
        if worst > 1e-9 * scale.max(1.0) {
            return Err(MachStemError::NonzeroQAverage(worst));
        }
    }
    let n = system.size;
    let mut out = vec![vec![DVector::zeros(n); grid.xid.len()]; grid.theta0.len()];
    for (it, &theta0) in grid.theta0.iter().enumerate() {
        for (ix, &xid) in grid.xid.iter().enumerate() {
            let mut u = DVector::zeros(n);
            for j in 0..ps.omegas.len() {
                let wj = ps.omegas[j];
                let ray = |s: f64| {
                    let v = h.eval(&ps.omegas, theta0 + wj * (xid - s), s);
                    (&ps.l[j] * v)[0]
                };
                // Tail adequacy at the truncation point.
                let tail = ray(xid + h.s_max).abs().max(ray(xid + 0.97 * h.s_max).abs());
                if tail > 1e-10 {
                    return Err(MachStemError::SlowDecay(tail, xid + h.s_max));
                }
                let integral = simpson(ray, xid, xid + h.s_max, h.ds);
                u -= &ps.r[j] * integral;
            }
            out[it][ix] = u;
        }
    }
    Ok(out)
}

/// Symbolic application of the fast operator
/// `𝓛 = (τ I + Σ_j η_j A_j) ∂θ0 + A_d ∂ξd` to the non-integral kinds
/// (their constituents must carry registered derivatives): each factor's
/// derivative picks up the direction `L(dφ_k) d` of its own phase.
pub fn l_apply(h: &ProfileSum, system: &HyperbolicSystem, ps: &PhaseSet) -> Result<ProfileSum> {
    let ldphi = |k: usize| system.l_dphi(&ps.freq, ps.omegas[k]);
    let mut terms = Vec::new();
    for t in &h.terms {
        match &t.kind {
            TermKind::Single { phase, f } => {
                terms.push(ProfileTerm {
                    kind: TermKind::Single { phase: *phase, f: f.deriv()? },
                    direction: ldphi(*phase) * &t.direction,
                    scalar: t.scalar,
                });
            }
            TermKind::Product { phases, f, g } => {
                terms.push(ProfileTerm {
                    kind: TermKind::Product {
                        phases: *phases,
                        f: f.deriv()?,
                        g: g.clone(),
                    },
                    direction: ldphi(phases.0) * &t.direction,
                    scalar: t.scalar,
                });
                terms.push(ProfileTerm {
                    kind: TermKind::Product {
                        phases: *phases,
                        f: f.clone(),
                        g: g.deriv()?,
                    },
                    direction: ldphi(phases.1) * &t.direction,
                    scalar: t.scalar,
                });
            }
            _ => {
                return Err(MachStemError::UnsupportedTerm(
                    "symbolic 𝓛 is implemented for single and product kinds".into(),
                ))
            }
        }
    }
    Ok(ProfileSum { terms, ds: h.ds, s_max: h.s_max })
}

/// Finite-difference residual `max |𝓛U − H|` over the interior nodes of a
/// uniform grid (4th-order centered differences in both fast variables).
pub fn l_residual(
    u: &[Vec<DVector<f64>>],
    h: &ProfileSum,
    system: &HyperbolicSystem,
    ps: &PhaseSet,
    grid: &ProfileGrid,
) -> f64 {
    let nt = grid.theta0.len();
    let nx = grid.xid.len();
    let dt0 = grid.theta0[1] - grid.theta0[0];
    let dxi = grid.xid[1] - grid.xid[0];
    let mut a_tang = nalgebra::DMatrix::identity(system.size, system.size) * ps.freq.tau;
    for (j, &e) in ps.freq.eta.iter().enumerate() {
        a_tang += &system.a[j] * e;
    }
    let ad = system.ad();
    let d4 = |fm2: &DVector<f64>, fm1: &DVector<f64>, fp1: &DVector<f64>, fp2: &DVector<f64>, h: f64| {
        (fm2 - fm1 * 8.0 + fp1 * 8.0 - fp2) / (12.0 * h)
    };
    let mut worst = 0.0_f64;
    for it in 2..nt - 2 {
        for ix in 2..nx - 2 {
            let dth = d4(&u[it - 2][ix], &u[it - 1][ix], &u[it + 1][ix], &u[it + 2][ix], dt0);
            let dxi_v = d4(&u[it][ix - 2], &u[it][ix - 1], &u[it][ix + 1], &u[it][ix + 2], dxi);
            let lhs = &a_tang * dth + ad * dxi_v;
            let rhs = h.eval(&ps.omegas, grid.theta0[it], grid.xid[ix]);
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst
}

/// Least-squares slope of `log sup_θ0 |u(·, ξd)|` against `log ξd`.
pub fn decay_slope(xids: &[f64], sups: &[f64]) -> f64 {
    let n = xids.len() as f64;
    let xs: Vec<f64> = xids.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = sups.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// The computable pulse corrector pieces from two incoming amplitude
/// profiles `σ_lo`, `σ_hi` (slow dependence frozen on the evaluation
/// window; the slow transport sources are approximated by the Burgers
/// time derivative, which is exactly what makes `E_Q F₀ = 0`).
pub struct PulseCorrector {
    /// `F₀` in the term grammar.
    pub f0: ProfileSum,
    /// `(I − E_P) U₁ = R_∞ F₀` on the grid.
    pub u1: Vec<Vec<DVector<f64>>>,
}

/// Assemble `F₀ = −L_s(∂)U₀ − M(U₀, U₀)` for
/// `U₀ = Σ σ_m(θ0 + ω_m ξd) r_m` over the two incoming phases and solve for
/// the non-polarized corrector. `sigmas` are aligned with
/// `phaseset.incoming` and must have zero moment (their ray integrals are
/// unbounded otherwise).
pub fn build_pulse_corrector(
    sigmas: &[Constituent],
    system: &HyperbolicSystem,
    ps: &PhaseSet,
    grid: &ProfileGrid,
) -> Result<PulseCorrector> {
    if sigmas.len() != ps.incoming.len() {
        return Err(MachStemError::ValidationError(vec![format!(
            "need one sigma per incoming phase ({})",
            ps.incoming.len()
        )]));
    }
    for s in sigmas {
        let m = s.moment(60.0, 0.01);
        if m.abs() > 1e-8 {
            return Err(MachStemError::MomentNotZero(m));
        }
    }
    // V_{k,m} = Σ_j ∂_j φ_m (dA_j · r_k) r_m  (quadratic interaction
    // directions; j runs over the spatial coordinates, ∂_j φ_m = (η, ω_m)).
    let d = system.dim_space;
    let mut terms = Vec::new();
    for (pk, &mk) in ps.incoming.iter().enumerate() {
        for (pm, &mm) in ps.incoming.iter().enumerate() {
            let mut xi = ps.freq.eta.clone();
            xi.push(ps.omegas[mm]);
            let mut v = DVector::zeros(system.size);
            for j in 1..=d {
                v += xi[j - 1] * system.da_dot(j, &ps.r[mk]) * &ps.r[mm];
            }
            let sk = sigmas[pk].clone();
            let dsm = sigmas[pm].deriv()?;
            if pk == pm {
                // Self-interaction −σ_m σ_m' V_{m,m} combines with the
                // Burgers slow source +c_m σ_m σ_m' r_m; their Q_m parts
                // cancel exactly.
                let c_m = ps.coeffs.c[mm];
                let skc = sk.clone();
                let dsmc = dsm.clone();
                let fused = Constituent {
                    f: Rc::new(move |x: f64| skc.eval(x) * dsmc.eval(x)),
                    df: None,
                    decay_order: sk.decay_order + dsm.decay_order,
                };
                terms.push(ProfileTerm {
                    kind: TermKind::Single { phase: mm, f: fused },
                    direction: &ps.r[mm] * c_m,
                    scalar: 1.0,
                });
                terms.push(ProfileTerm {
                    kind: TermKind::Product { phases: (mk, mm), f: sk, g: dsm },
                    direction: v,
                    scalar: -1.0,
                });
            } else {
                terms.push(ProfileTerm {
                    kind: TermKind::Product { phases: (mk, mm), f: sk, g: dsm },
                    direction: v,
                    scalar: -1.0,
                });
            }
        }
    }
    let mut f0 = ProfileSum::new(terms)?;
    // The interaction products live on the compressed scales ω_k − ω_j;
    // the default ray quadrature step is too coarse for them.
    f0.ds = 0.01;
    let u1 = r_infinity(&f0, system, ps, grid)?;
    Ok(PulseCorrector { f0, u1 })
}
