//! The two nonlocal bilinear operators of the leading-amplitude equations:
//! the periodic Fourier multiplier `F_per` and the pulse integral operator
//! `F_pul`, plus the `s`-parametrized symmetrized family interpolating the
//! half-line and full-line variants.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{MachStemError, Result};
use crate::fields::{PeriodicField, PulseField};
use crate::tolerances::ToleranceSet;

fn check_deltas(delta1: f64, delta3: f64) -> Result<()> {
    if delta1 == 0.0 || delta3 == 0.0 || (delta3 - 1.0 - delta1).abs() > 1e-12 {
        return Err(MachStemError::ValidationError(vec![format!(
            "need nonzero delta1, delta3 with delta3 = 1 + delta1 (got {delta1}, {delta3})"
        )]));
    }
    Ok(())
}

/// `F_per(u, v)_k = Σ_{k1 + k3 = k, k1 k3 != 0} i u_{k1} v_{k3} / (k1 delta1 + k3 delta3)`.
///
/// Since `delta3 = 1 + delta1`, the denominator reorganizes as
/// `delta1 k + k3`, which is how the double sum is evaluated. Direct
/// `O(K^2)` sum: the kernel depends on `(k, k3)` jointly, so this is not a
/// plain convolution and no FFT shortcut is claimed.
pub fn f_per(
    u: &PeriodicField,
    v: &PeriodicField,
    delta1: f64,
    delta3: f64,
    tol: &ToleranceSet,
) -> Result<PeriodicField> {
    check_deltas(delta1, delta3)?;
    if !u.is_zero_mean() {
        return Err(MachStemError::MeanNotZero(u.mean()));
    }
    if !v.is_zero_mean() {
        return Err(MachStemError::MeanNotZero(v.mean()));
    }
    let (ku, kv) = (u.kmax() as i64, v.kmax() as i64);
    let kout = ku + kv;
    let mut coeffs = vec![Complex64::ZERO; 2 * kout as usize + 1];
    for k in -kout..=kout {
        let mut acc = Complex64::ZERO;
        for k3 in -kv..=kv {
            if k3 == 0 || k3 == k {
                continue;
            }
            let k1 = k - k3;
            if k1.abs() > ku {
                continue;
            }
            let c = u.coeff(k1) * v.coeff(k3);
            if c == Complex64::ZERO {
                continue;
            }
            let denom = delta1 * k as f64 + k3 as f64;
            if denom.abs() < tol.kernel_denominator.max(tol.relative) {
                return Err(MachStemError::ResonantKernel { k1, k2: k3, value: denom });
            }
            acc += Complex64::new(0.0, 1.0) * c / denom;
        }
        coeffs[(k + kout) as usize] = acc;
    }
    PeriodicField::from_coeffs(u.period(), coeffs)
}

/// Residuals of the differentiation and integration-by-parts identities of
/// `F_per`, in sup norm:
/// `r_diff = ‖∂F(u,v) - F(∂u,v) - F(u,∂v)‖`,
/// `r_ibp  = ‖F(u,∂v) + (2π/(Θ delta3)) uv + (delta1/delta3) F(∂u,v)‖`.
///
/// The second identity holds with the full pointwise product: at the zero
/// mode the two `F_per` terms combine to exactly `-(2π/(Θ delta3)) (uv)_0`.
pub fn f_per_identity_residuals(
    u: &PeriodicField,
    v: &PeriodicField,
    delta1: f64,
    delta3: f64,
    tol: &ToleranceSet,
) -> Result<(f64, f64)> {
    let du = u.derivative();
    let dv = v.derivative();
    let r_diff = f_per(u, v, delta1, delta3, tol)?
        .derivative()
        .sub(&f_per(&du, v, delta1, delta3, tol)?)
        .sub(&f_per(u, &dv, delta1, delta3, tol)?)
        .sup_norm();
    let two_pi = 2.0 * std::f64::consts::PI;
    let uv = u.product(v);
    let r_ibp = f_per(u, &dv, delta1, delta3, tol)?
        .add(&uv.scaled(two_pi / (u.period() * delta3)))
        .add(&f_per(&du, v, delta1, delta3, tol)?.scaled(delta1 / delta3))
        .sup_norm();
    Ok((r_diff, r_ibp))
}

/// Half-line integral `∫_0^∞ u(theta + d1 X) v(theta + d3 X) dX` at one point,
/// by composite Simpson on the truncated support.
fn half_line_at(u: &PulseField, v: &PulseField, d1: f64, d3: f64, theta: f64, hx: f64) -> f64 {
    let l = u.half_width().max(v.half_width());
    // The integrand vanishes once either argument leaves its support.
    let exit = |d: f64| -> f64 {
        if d > 0.0 {
            (l - theta) / d
        } else {
            (theta + l) / (-d)
        }
    };
    let x_max = exit(d1).min(exit(d3));
    if x_max <= 0.0 {
        return 0.0;
    }
    let n = ((x_max / hx).ceil() as usize).max(2);
    let n = n + n % 2; // Simpson needs an even interval count
    let hx = x_max / n as f64;
    let f = |x: f64| u.eval(theta + d1 * x) * v.eval(theta + d3 * x);
    let mut acc = f(0.0) + f(x_max);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * hx);
    }
    acc * hx / 3.0
}

/// `F_pul(u, v)(theta) = ∫_0^∞ u(theta + delta1 X) v(theta + delta3 X) dX`
/// by composite Simpson quadrature with sixth-order interpolation of the
/// samples.
pub fn f_pul_quadrature(
    u: &PulseField,
    v: &PulseField,
    delta1: f64,
    delta3: f64,
) -> Result<PulseField> {
    check_deltas(delta1, delta3)?;
    u.check_truncation(1e-8)?;
    v.check_truncation(1e-8)?;
    let hx = 0.5 * u.step() / delta1.abs().max(delta3.abs()).max(1.0);
    let mut out = u.zeros_like();
    for i in 0..out.len() {
        let theta = out.grid_point(i);
        out.values_mut()[i] = half_line_at(u, v, delta1, delta3, theta, hx);
    }
    out.decay_order = u.decay_order.min(v.decay_order) - 1.0;
    Ok(out)
}

/// The `s`-family
/// `s ∫_0^∞ u(theta + delta1 X) v(theta + delta3 X) dX
///  - (1 - s) ∫_{-∞}^0 (same integrand) dX`.
/// `s = 1` is the half-line operator `F_pul`; `s = 1/2` is the symmetrized
/// operator `(1/2) ∫ sgn(X) u v dX`.
pub fn f_sym(
    u: &PulseField,
    v: &PulseField,
    s: f64,
    delta1: f64,
    delta3: f64,
) -> Result<PulseField> {
    check_deltas(delta1, delta3)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(MachStemError::ValidationError(vec![format!(
            "s must lie in [0, 1], got {s}"
        )]));
    }
    u.check_truncation(1e-8)?;
    v.check_truncation(1e-8)?;
    let hx = 0.5 * u.step() / delta1.abs().max(delta3.abs()).max(1.0);
    let mut out = u.zeros_like();
    for i in 0..out.len() {
        let theta = out.grid_point(i);
        let plus = if s != 0.0 { half_line_at(u, v, delta1, delta3, theta, hx) } else { 0.0 };
        // X in (-∞, 0]: substitute X -> -X.
        let minus =
            if s != 1.0 { half_line_at(u, v, -delta1, -delta3, theta, hx) } else { 0.0 };
        out.values_mut()[i] = s * plus - (1.0 - s) * minus;
    }
    out.decay_order = u.decay_order.min(v.decay_order) - 1.0;
    Ok(out)
}

/// Sampled continuous Fourier transform with cubic interpolation between the
/// FFT nodes.
struct SampledTransform {
    dxi: f64,
    /// Values at `xi_j = j dxi`, `j = -half..half`, stored at `j + half`.
    values: Vec<Complex64>,
    half: i64,
    /// Largest `|xi|` with non-negligible mass.
    support: f64,
}

impl SampledTransform {
    fn new(u: &PulseField) -> Self {
        let n = u.len();
        let nf = (16 * n).next_power_of_two();
        let mut buf = vec![Complex64::ZERO; nf];
        for (m, &val) in u.values().iter().enumerate() {
            buf[m] = Complex64::new(val, 0.0);
        }
        FftPlanner::new().plan_fft_forward(nf).process(&mut buf);
        let h = u.step();
        let l = u.half_width();
        let dxi = 2.0 * std::f64::consts::PI / (nf as f64 * h);
        let half = (nf / 2) as i64;
        let mut values = vec![Complex64::ZERO; nf + 1];
        for j in -half..=half {
            let xi = j as f64 * dxi;
            // uhat(xi) = h e^{i xi L} Σ_m u_m e^{-2 pi i j m / nf}
            let idx = ((j % nf as i64) + nf as i64) as usize % nf;
            let phase = Complex64::new(0.0, xi * l).exp();
            values[(j + half) as usize] = h * phase * buf[idx];
        }
        let peak = values.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        let mut support = half as f64 * dxi;
        for j in (0..=half).rev() {
            let m = values[(half + j) as usize]
                .norm()
                .max(values[(half - j) as usize].norm());
            if m > 1e-13 * peak {
                support = j as f64 * dxi;
                break;
            }
        }
        Self { dxi, values, half, support }
    }

    /// Cubic (4-point Lagrange) interpolation; zero outside the grid.
    fn eval(&self, xi: f64) -> Complex64 {
        let x = xi / self.dxi + self.half as f64;
        let nmax = self.values.len() as isize - 1;
        if x < 1.0 || x > (nmax - 2) as f64 {
            return Complex64::ZERO;
        }
        let i0 = x.floor() as isize;
        let t = x - i0 as f64;
        let mut acc = Complex64::ZERO;
        for (j, off) in (-1_isize..=2).enumerate() {
            let mut w = 1.0;
            for (l, off2) in (-1_isize..=2).enumerate() {
                if l != j {
                    w *= (t - off2 as f64) / (off as f64 - off2 as f64);
                }
            }
            acc += w * self.values[(i0 + off) as usize];
        }
        acc
    }
}

/// Fourier-side evaluation of the (tilde-normalized) pulse operator
/// `F̃_pul[u, v](theta) = ∫_0^∞ u(theta + (w1 - w2) s) v(theta + (w3 - w2) s) ds`
/// through its transform
/// `(1/(2|w3 - w1|)) û((w3-w2) xi/(w3-w1)) v̂((w2-w1) xi/(w3-w1))
///  - (1/(2 i π)) p.v. ∫ û(eta) v̂(xi - eta) / (eta (w1-w2) + (xi-eta)(w3-w2)) d eta`.
///
/// The principal value is taken by a midpoint rule built symmetrically
/// around the kernel zero `eta_0 = xi (w3-w2)/(w3-w1)`, so the simple pole
/// cancels pairwise and no singular node is ever evaluated.
pub fn f_pul_fourier(u: &PulseField, v: &PulseField, omegas: (f64, f64, f64)) -> Result<PulseField> {
    let (w1, w2, w3) = omegas;
    let (c1, c3) = (w1 - w2, w3 - w2);
    let span = w3 - w1;
    if span == 0.0 || c1 == 0.0 || c3 == 0.0 {
        return Err(MachStemError::ValidationError(vec![format!(
            "need pairwise distinct roots, got ({w1}, {w2}, {w3})"
        )]));
    }
    u.check_truncation(1e-8)?;
    v.check_truncation(1e-8)?;
    let uhat = SampledTransform::new(u);
    let vhat = SampledTransform::new(v);
    let dxi = uhat.dxi;
    // The convolution term carries mass out to the sum of the supports.
    let band = uhat.support + vhat.support;
    // The spectrum is smooth; a coarser output grid than the transform grid
    // is enough for the inverse integral.
    let dxo = 4.0 * dxi;
    let n_xi = (band / dxo).ceil() as i64;
    let d_eta = dxi / 2.0;

    let mut spectrum = Vec::with_capacity((2 * n_xi + 1) as usize);
    for jx in -n_xi..=n_xi {
        let xi = jx as f64 * dxo;
        let product = uhat.eval(c3 * xi / span) * vhat.eval(-c1 * xi / span)
            / (2.0 * span.abs());
        // p.v. part, midpoint pairs around eta0.
        let eta0 = xi * c3 / span;
        let reach = (eta0.abs() + uhat.support)
            .max((xi - eta0).abs() + vhat.support)
            + 1.0;
        let jmax = (reach / d_eta).ceil() as i64;
        let mut pv = Complex64::ZERO;
        for j in 1..=jmax {
            let s = (j as f64 - 0.5) * d_eta;
            for eta in [eta0 + s, eta0 - s] {
                let num = uhat.eval(eta) * vhat.eval(xi - eta);
                if num != Complex64::ZERO {
                    pv += num / (c1 * eta + c3 * (xi - eta));
                }
            }
        }
        pv *= d_eta;
        let total = product - pv / Complex64::new(0.0, 2.0 * std::f64::consts::PI);
        spectrum.push(total);
    }

    // Inverse transform back onto the grid of u.
    let mut out = u.zeros_like();
    for i in 0..out.len() {
        let theta = out.grid_point(i);
        let mut acc = Complex64::ZERO;
        for (idx, val) in spectrum.iter().enumerate() {
            let xi = (idx as i64 - n_xi) as f64 * dxo;
            acc += val * Complex64::new(0.0, xi * theta).exp();
        }
        out.values_mut()[i] = acc.re * dxo / (2.0 * std::f64::consts::PI);
    }
    out.decay_order = u.decay_order.min(v.decay_order) - 1.0;
    Ok(out)
}
