//! Field containers: band-limited periodic fields (Fourier side) and
//! compactly-sampled pulse fields (grid side), with the calculus the
//! bilinear operators and solvers need.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{MachStemError, Result};

/// Real-valued `Theta`-periodic field stored by its Fourier coefficients
/// `a_k`, `|k| <= kmax`, with the Hermitian symmetry `a_{-k} = conj(a_k)`
/// enforced at construction.
#[derive(Debug, Clone)]
pub struct PeriodicField {
    period: f64,
    kmax: usize,
    /// Coefficients indexed `k + kmax` for `k in -kmax..=kmax`.
    coeffs: Vec<Complex64>,
}

impl PeriodicField {
    pub fn zeros(period: f64, kmax: usize) -> Self {
        Self { period, kmax, coeffs: vec![Complex64::ZERO; 2 * kmax + 1] }
    }

    /// Build from a full coefficient slice `a_{-kmax}..a_{kmax}`.
    pub fn from_coeffs(period: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if period <= 0.0 || !period.is_finite() {
            return Err(MachStemError::ValidationError(vec![format!(
                "period must be positive (got {period})"
            )]));
        }
        if coeffs.len() % 2 == 0 {
            return Err(MachStemError::ValidationError(vec![
                "coefficient slice must have odd length 2*kmax + 1".into(),
            ]));
        }
        let kmax = coeffs.len() / 2;
        let scale = coeffs.iter().map(|c| c.norm()).fold(1e-300, f64::max);
        for k in 0..=kmax {
            let d = (coeffs[kmax + k] - coeffs[kmax - k].conj()).norm();
            if d > 1e-12 * scale {
                return Err(MachStemError::ValidationError(vec![format!(
                    "coefficients are not Hermitian at k = {k} (defect {d:.3e})"
                )]));
            }
        }
        let mut f = Self { period, kmax, coeffs };
        // Symmetrize exactly so inverse transforms are real to the last bit.
        for k in 1..=kmax {
            let avg = 0.5 * (f.coeffs[kmax + k] + f.coeffs[kmax - k].conj());
            f.coeffs[kmax + k] = avg;
            f.coeffs[kmax - k] = avg.conj();
        }
        f.coeffs[kmax].im = 0.0;
        Ok(f)
    }

    /// Sample a real function at `2*kmax + 1` equispaced points and take its
    /// trigonometric interpolant.
    pub fn from_fn(period: f64, kmax: usize, f: impl Fn(f64) -> f64) -> Self {
        let n = 2 * kmax + 1;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(f(period * j as f64 / n as f64), 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let mut coeffs = vec![Complex64::ZERO; n];
        for k in 0..=kmax {
            coeffs[kmax + k] = buf[k] / n as f64;
            if k > 0 {
                coeffs[kmax - k] = buf[n - k] / n as f64;
            }
        }
        Self::from_coeffs(period, coeffs).expect("FFT of real samples is Hermitian")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    /// Coefficient `a_k` (zero outside the band).
    pub fn coeff(&self, k: i64) -> Complex64 {
        let idx = k + self.kmax as i64;
        if idx < 0 || idx as usize >= self.coeffs.len() {
            Complex64::ZERO
        } else {
            self.coeffs[idx as usize]
        }
    }

    /// Set `a_k` and `a_{-k}` (Hermitian pair) at once.
    pub fn set_pair(&mut self, k: i64, value: Complex64) {
        assert!(k >= 0 && k as usize <= self.kmax, "mode out of band");
        let kmax = self.kmax as i64;
        self.coeffs[(kmax + k) as usize] = value;
        if k > 0 {
            self.coeffs[(kmax - k) as usize] = value.conj();
        } else {
            self.coeffs[kmax as usize].im = 0.0;
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[self.kmax].re
    }

    pub fn is_zero_mean(&self) -> bool {
        self.coeffs[self.kmax] == Complex64::ZERO
    }

    /// Project out the mean (exactly).
    pub fn zero_mean_part(&self) -> Self {
        let mut out = self.clone();
        out.coeffs[out.kmax] = Complex64::ZERO;
        out
    }

    /// `d/d theta`: multiply `a_k` by `2 pi i k / Theta`.
    pub fn derivative(&self) -> Self {
        let mut out = self.clone();
        let w = 2.0 * std::f64::consts::PI / self.period;
        for k in -(self.kmax as i64)..=(self.kmax as i64) {
            let idx = (k + self.kmax as i64) as usize;
            out.coeffs[idx] = self.coeffs[idx] * Complex64::new(0.0, w * k as f64);
        }
        out
    }

    /// Pointwise value `Σ a_k e^{2 pi i k theta / Theta}`.
    pub fn eval(&self, theta: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * theta / self.period;
        let mut acc = self.coeffs[self.kmax].re;
        for k in 1..=self.kmax {
            let ph = Complex64::new(0.0, w * k as f64).exp();
            acc += 2.0 * (self.coeffs[self.kmax + k] * ph).re;
        }
        acc
    }

    /// Values on `n` equispaced points of one period (inverse FFT).
    pub fn values(&self, n: usize) -> Vec<f64> {
        assert!(n > 2 * self.kmax, "grid must resolve the band");
        let mut buf = vec![Complex64::ZERO; n];
        for k in 0..=self.kmax {
            buf[k] = self.coeffs[self.kmax + k];
            if k > 0 {
                buf[n - k] = self.coeffs[self.kmax - k];
            }
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Sup norm measured on a 4x oversampled grid.
    pub fn sup_norm(&self) -> f64 {
        let n = (8 * self.kmax + 9).next_power_of_two();
        self.values(n).iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.period).sqrt()
    }

    /// Exact pointwise product: spectral convolution on the summed band
    /// (no aliasing at any bandwidth).
    pub fn product(&self, other: &Self) -> Self {
        assert_eq!(self.period, other.period, "period mismatch");
        let kout = self.kmax + other.kmax;
        let mut out = Self::zeros(self.period, kout);
        for k1 in -(self.kmax as i64)..=(self.kmax as i64) {
            let c1 = self.coeff(k1);
            if c1 == Complex64::ZERO {
                continue;
            }
            for k2 in -(other.kmax as i64)..=(other.kmax as i64) {
                let idx = (k1 + k2 + kout as i64) as usize;
                out.coeffs[idx] += c1 * other.coeff(k2);
            }
        }
        out
    }

    /// Restrict/extend the band to `kmax` (coefficients outside are dropped
    /// or zero-filled).
    pub fn truncated(&self, kmax: usize) -> Self {
        let mut out = Self::zeros(self.period, kmax);
        let reach = kmax.min(self.kmax) as i64;
        for k in -reach..=reach {
            let idx = (k + kmax as i64) as usize;
            out.coeffs[idx] = self.coeff(k);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.period, other.period, "period mismatch");
        let kout = self.kmax.max(other.kmax);
        let mut out = Self::zeros(self.period, kout);
        for k in -(kout as i64)..=(kout as i64) {
            let idx = (k + kout as i64) as usize;
            out.coeffs[idx] = self.coeff(k) + other.coeff(k);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-1.0))
    }

    /// Raw coefficient slice, `k = -kmax..=kmax`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
}

/// Real field sampled on the uniform grid `theta_i = -L + i h` of
/// `[-L, L]`, extended by zero outside. Used for pulse (decaying) profiles.
#[derive(Debug, Clone)]
pub struct PulseField {
    half_width: f64,
    step: f64,
    values: Vec<f64>,
    /// Asserted polynomial decay exponent at the truncation radius.
    pub decay_order: f64,
}

impl PulseField {
    pub fn new(half_width: f64, step: f64, values: Vec<f64>, decay_order: f64) -> Result<Self> {
        let n = (2.0 * half_width / step).round() as usize + 1;
        if half_width <= 0.0 || step <= 0.0 {
            return Err(MachStemError::ValidationError(vec![format!(
                "need positive half width and step (got L = {half_width}, h = {step})"
            )]));
        }
        if values.len() != n {
            return Err(MachStemError::ValidationError(vec![format!(
                "value count {} does not match grid size {n}",
                values.len()
            )]));
        }
        Ok(Self { half_width, step, values, decay_order })
    }

    pub fn from_fn(half_width: f64, step: f64, decay_order: f64, f: impl Fn(f64) -> f64) -> Self {
        let n = (2.0 * half_width / step).round() as usize + 1;
        let values = (0..n).map(|i| f(-half_width + i as f64 * step)).collect();
        Self { half_width, step, values, decay_order }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            half_width: self.half_width,
            step: self.step,
            values: vec![0.0; self.values.len()],
            decay_order: self.decay_order,
        }
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    /// Truncation adequacy: the two boundary cells must be below `tol`.
    pub fn check_truncation(&self, tol: f64) -> Result<()> {
        let worst = self.values[0]
            .abs()
            .max(self.values[self.values.len() - 1].abs());
        if worst > tol {
            return Err(MachStemError::TruncationInadequate(worst, tol));
        }
        Ok(())
    }

    /// Sixth-order Lagrange interpolation on the uniform grid (zero outside).
    pub fn eval(&self, theta: f64) -> f64 {
        let n = self.values.len();
        let x = (theta + self.half_width) / self.step;
        if x < -0.5 || x > (n - 1) as f64 + 0.5 {
            return 0.0;
        }
        let i0 = (x.floor() as isize).clamp(2, n as isize - 4) as usize;
        let t = x - i0 as f64;
        // 6-point stencil i0-2..=i0+3; Lagrange weights in the offset t.
        let mut acc = 0.0;
        for (j, off) in (-2_isize..=3).enumerate() {
            let idx = i0 as isize + off;
            let y = if idx < 0 || idx >= n as isize { 0.0 } else { self.values[idx as usize] };
            if y == 0.0 {
                continue;
            }
            let mut w = 1.0;
            for (l, off2) in (-2_isize..=3).enumerate() {
                if l != j {
                    w *= (t - off2 as f64) / (off as f64 - off2 as f64);
                }
            }
            acc += w * y;
        }
        acc
    }

    /// Fourth-order centered finite-difference derivative (one-sided zero
    /// extension at the edges, where pulse fields are negligible anyway).
    pub fn derivative(&self) -> Self {
        let n = self.values.len();
        let v = |i: isize| -> f64 {
            if i < 0 || i >= n as isize { 0.0 } else { self.values[i as usize] }
        };
        let mut out = self.zeros_like();
        for i in 0..n {
            let i = i as isize;
            out.values[i as usize] =
                (-v(i + 2) + 8.0 * v(i + 1) - 8.0 * v(i - 1) + v(i - 2)) / (12.0 * self.step);
        }
        out
    }

    /// `∫ theta^p u dtheta` by the trapezoid rule (spectrally accurate for
    /// decayed fields).
    pub fn moment(&self, p: u32) -> f64 {
        let mut acc = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let w = if i == 0 || i == self.values.len() - 1 { 0.5 } else { 1.0 };
            acc += w * self.grid_point(i).powi(p as i32) * v;
        }
        acc * self.step
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() * self.step).sqrt()
    }

    /// Weighted Sobolev norm `(Σ_{p + q <= k} ‖theta^p d^q u‖_{L2}^2)^{1/2}`,
    /// with spectral derivatives (the field is decayed at the grid ends, so
    /// the periodic transform is accurate).
    pub fn gamma_norm(&self, k: usize) -> f64 {
        assert!(k <= 8, "gamma norm supported for k <= 8");
        let n = self.values.len();
        let mut buf: Vec<Complex64> =
            self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let width = 2.0 * self.half_width + self.step;
        let mut total = 0.0;
        for q in 0..=k {
            // q-th spectral derivative.
            let mut dq = buf.clone();
            for (j, c) in dq.iter_mut().enumerate() {
                let kk = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                let xi = 2.0 * std::f64::consts::PI * kk / width;
                *c *= Complex64::new(0.0, xi).powu(q as u32);
            }
            FftPlanner::new().plan_fft_inverse(n).process(&mut dq);
            let deriv: Vec<f64> = dq.iter().map(|c| c.re / n as f64).collect();
            for p in 0..=(k - q) {
                let mut acc = 0.0;
                for (i, &d) in deriv.iter().enumerate() {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc += w * (self.grid_point(i).powi(p as i32) * d).powi(2);
                }
                total += acc * self.step;
            }
        }
        total.sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.values.len(), other.values.len(), "grid mismatch");
        assert_eq!(self.step, other.step, "grid mismatch");
        let mut out = self.clone();
        for (o, (&a, &b)) in out.values.iter_mut().zip(self.values.iter().zip(&other.values)) {
            *o = f(a, b);
        }
        out
    }
}
