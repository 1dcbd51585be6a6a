//! Centralized numerical tolerances.
//!
//! Every module takes a [`ToleranceSet`] explicitly instead of burying magic
//! numbers in the algorithms, so runs are reproducible and thresholds are
//! auditable in one place.

/// Tolerances shared across the spectral-geometry and solver pipelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSet {
    /// Absolute tolerance for residual checks (matrix identities, kernels).
    pub absolute: f64,
    /// Relative tolerance (root separation, eigenvalue realness, ...).
    pub relative: f64,
    /// Relative gap under which two dispersion roots count as repeated.
    pub root_gap: f64,
    /// |normal group velocity| below which a phase counts as glancing.
    pub glancing: f64,
    /// Base factor of the resonance declaration threshold
    /// `resonance * (1 + |alpha| * scale)^N`, calibrated to the floating-point
    /// noise floor of the determinant evaluation (~10 eps): a true resonance
    /// evaluates below it at every |alpha|, while the best non-resonant
    /// near-misses of quadratic characteristic cones stay above it for the
    /// scan radii used here.
    pub resonance: f64,
    /// Denominator magnitude under which a bilinear kernel entry is resonant.
    pub kernel_denominator: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            absolute: 1e-10,
            relative: 1e-8,
            root_gap: 1e-8,
            glancing: 1e-8,
            resonance: 10.0 * f64::EPSILON,
            kernel_denominator: 1e-12,
        }
    }
}

impl ToleranceSet {
    /// Combined absolute/relative test: `|x| <= absolute + relative * scale`.
    pub fn is_small(&self, x: f64, scale: f64) -> bool {
        x.abs() <= self.absolute + self.relative * scale.abs()
    }
}
