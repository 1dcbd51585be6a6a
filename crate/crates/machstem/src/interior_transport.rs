//! Interior propagation of the incoming boundary amplitudes: each scalar
//! amplitude rides its constant group velocity and evolves by a 1D Burgers
//! equation in the fast variable, solved exactly (pre-shock) by implicit
//! characteristics.

use crate::error::{MachStemError, Result};
use crate::fields::PeriodicField;
use crate::spectral_geometry::PhaseSet;

/// Boundary trace of one incoming amplitude as a function of time:
/// `a(t, y, theta)` restricted to a fixed tangential position (the solver
/// works one y-ray at a time; `y` enters only through the backtraced
/// boundary hit point, which the caller resolves).
pub trait TraceSource {
    /// `a(t, ·)` as a periodic field. Must vanish for `t < 0`.
    fn field(&self, t: f64) -> PeriodicField;
    /// `∂t a(t, ·)`.
    fn field_dt(&self, t: f64) -> PeriodicField;
}

/// Trace given by closures producing the field and its time derivative.
pub struct FnTrace<F, G>
where
    F: Fn(f64) -> PeriodicField,
    G: Fn(f64) -> PeriodicField,
{
    pub field: F,
    pub field_dt: G,
}

impl<F, G> TraceSource for FnTrace<F, G>
where
    F: Fn(f64) -> PeriodicField,
    G: Fn(f64) -> PeriodicField,
{
    fn field(&self, t: f64) -> PeriodicField {
        (self.field)(t)
    }
    fn field_dt(&self, t: f64) -> PeriodicField {
        (self.field_dt)(t)
    }
}

/// One interior amplitude `σ_m(t, x, θ)` (phase `m` incoming).
pub struct RaySolution<'a> {
    pub phase: usize,
    /// Group velocity `v_m ∈ R^d`.
    pub velocity: Vec<f64>,
    /// Interior Burgers coefficient `c_m`.
    pub c: f64,
    /// Boundary coefficient `e_m` (σ trace is `e_m · a`).
    pub e_scalar: f64,
    trace: &'a dyn TraceSource,
}

/// Value and first derivatives of σ at one point, from the implicit
/// characteristic solve.
#[derive(Debug, Clone, Copy)]
pub struct SigmaPoint {
    pub value: f64,
    /// `∂θ σ`.
    pub d_theta: f64,
    /// `∂t σ` at fixed `x`.
    pub d_t: f64,
    /// `∂_{x_d} σ` at fixed `t` (tangential slow derivatives vanish in the
    /// one-ray reduction).
    pub d_xd: f64,
}

impl<'a> RaySolution<'a> {
    /// Build a ray solution for the incoming phase `m` of `phaseset`.
    pub fn new(phaseset: &PhaseSet, m: usize, trace: &'a dyn TraceSource) -> Result<Self> {
        let pos = phaseset
            .incoming
            .iter()
            .position(|&i| i == m)
            .ok_or(MachStemError::OutgoingPhase(m))?;
        Ok(Self {
            phase: m,
            velocity: phaseset.group_velocities[m].clone(),
            c: phaseset.coeffs.c[m],
            e_scalar: phaseset.e_scalars[pos],
            trace,
        })
    }

    fn vd(&self) -> f64 {
        *self.velocity.last().expect("nonempty velocity")
    }

    /// Boundary hit time of the backward characteristic through `(t, x_d)`.
    pub fn hit_time(&self, t: f64, xd: f64) -> f64 {
        t - xd / self.vd()
    }

    /// σ and its first derivatives on a θ-slice at `(t, x_d)`.
    ///
    /// The backtraced data is `σ₀(θ) = e_m a(t₀, θ)` with `t₀ = t − x_d/v_d`;
    /// σ then solves `∂s σ + c σ ∂θ σ = 0` for the elapsed time
    /// `s = x_d / v_d` by Newton on `θ₀ + c s σ₀(θ₀) = θ` (tolerance 1e-12,
    /// previous root as initial guess, bisection fallback). Slow derivatives
    /// come from the implicit differentiation of the same relation:
    /// with `J = 1 + c s ∂θ σ₀(θ₀)`,
    /// `∂θ σ = σ₀'/J`, `∂_{t₀} σ = ∂_{t₀}σ₀ / J`, `∂_s σ = −c σ σ₀'/J`.
    pub fn slice(&self, t: f64, xd: f64, thetas: &[f64]) -> Result<Vec<SigmaPoint>> {
        let s = xd / self.vd();
        let t0 = t - s;
        if t0 < 0.0 {
            // The trace vanishes for negative times; so does σ.
            return Ok(thetas
                .iter()
                .map(|_| SigmaPoint { value: 0.0, d_theta: 0.0, d_t: 0.0, d_xd: 0.0 })
                .collect());
        }
        let a = self.trace.field(t0);
        let adt = self.trace.field_dt(t0);
        let sigma0 = a.scaled(self.e_scalar);
        let dsigma0 = sigma0.derivative();
        let tbound = shock_time_bound(&sigma0, self.c);
        if s >= 0.9 * tbound {
            return Err(MachStemError::ShockFormed(s));
        }
        let mut out = Vec::with_capacity(thetas.len());
        let mut guess = thetas.first().copied().unwrap_or(0.0);
        for &theta in thetas {
            let g = |th0: f64| th0 + self.c * s * sigma0.eval(th0) - theta;
            let mut th0 = guess;
            let mut done = false;
            for _ in 0..60 {
                let gp = 1.0 + self.c * s * dsigma0.eval(th0);
                if gp <= 0.0 {
                    return Err(MachStemError::ShockFormed(theta));
                }
                let step = g(th0) / gp;
                th0 -= step;
                if step.abs() < 1e-12 {
                    done = true;
                    break;
                }
            }
            if !done {
                let (mut lo, mut hi) = (theta - sigma0.period(), theta + sigma0.period());
                if g(lo) > 0.0 || g(hi) < 0.0 {
                    return Err(MachStemError::ShockFormed(theta));
                }
                for _ in 0..200 {
                    th0 = 0.5 * (lo + hi);
                    if g(th0) > 0.0 { hi = th0 } else { lo = th0 }
                }
            }
            guess = th0;
            let value = sigma0.eval(th0);
            let sp = dsigma0.eval(th0);
            let jac = 1.0 + self.c * s * sp;
            let d_theta = sp / jac;
            let d_t0 = self.e_scalar * adt.eval(th0) / jac;
            let d_s = -self.c * value * d_theta;
            // t0 = t - xd/vd, s = xd/vd.
            out.push(SigmaPoint {
                value,
                d_theta,
                d_t: d_t0,
                d_xd: (d_s - d_t0) / self.vd(),
            });
        }
        Ok(out)
    }

    /// σ values only (convenience).
    pub fn values(&self, t: f64, xd: f64, thetas: &[f64]) -> Result<Vec<f64>> {
        Ok(self.slice(t, xd, thetas)?.into_iter().map(|p| p.value).collect())
    }

    /// σ as a band-limited field on a θ-slice (trigonometric interpolation
    /// of `2 kmax + 1` equispaced samples).
    pub fn field(&self, t: f64, xd: f64, period: f64, kmax: usize) -> Result<PeriodicField> {
        let n = 2 * kmax + 1;
        let thetas: Vec<f64> = (0..n).map(|i| period * i as f64 / n as f64).collect();
        let vals = self.values(t, xd, &thetas)?;
        Ok(PeriodicField::from_fn(period, kmax, |th| {
            let idx = (th / period * n as f64).round() as usize % n;
            vals[idx]
        }))
    }
}

/// First shock time of 1D Burgers with data `σ₀`:
/// `T* = 1 / (c · max(0, −min ∂θ σ₀))`, `+∞` when the data is non-steepening.
pub fn shock_time_bound(sigma0: &PeriodicField, c: f64) -> f64 {
    let n = (8 * sigma0.kmax() + 9).next_power_of_two();
    // Characteristics cross once the speed c σ₀ decreases in θ somewhere.
    let rate = sigma0
        .derivative()
        .values(n)
        .into_iter()
        .map(|v| -c * v)
        .fold(0.0_f64, f64::max);
    // Spectral rounding of a non-steepening field leaves O(eps) noise in the
    // derivative; treat it as flat.
    let noise = 1e-13 * c.abs() * sigma0.sup_norm();
    if rate > noise { 1.0 / rate } else { f64::INFINITY }
}
