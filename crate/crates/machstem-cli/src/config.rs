//! Run configuration: JSON schema, parsing with defaults, and aggregated
//! validation. Every struct rejects unknown keys so that typos fail loudly
//! instead of silently falling back to a default.

use machstem::euler_example::{build_euler_system, EulerParams};
use machstem::{Frequency, HyperbolicSystem, MachStemError, Result, ToleranceSet};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Interior system + boundary condition: the built-in Euler configuration or
/// explicit matrices (row-major value lists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum SystemConfig {
    Euler {
        #[serde(default = "d_vbar")]
        vbar: f64,
        #[serde(default = "d_ubar")]
        ubar: f64,
        #[serde(default = "d_cbar")]
        cbar: f64,
        #[serde(default = "d_cprime")]
        cprime: f64,
    },
    Matrices {
        /// System size N.
        size: usize,
        /// Flux matrices `A_1 .. A_d`, each N*N row-major.
        a: Vec<Vec<f64>>,
        /// `da[j][i]`: coefficient matrix of the i-th state component in
        /// `dA_{j+1}`, N*N row-major.
        da: Vec<Vec<Vec<f64>>>,
        /// Number of boundary conditions p.
        b_rows: usize,
        /// Boundary matrix, p*N row-major.
        b: Vec<f64>,
        /// Symmetric quadratic boundary forms, one N*N matrix per row of B.
        d2b: Vec<Vec<f64>>,
    },
}

fn d_vbar() -> f64 {
    1.3
}
fn d_ubar() -> f64 {
    0.6
}
fn d_cbar() -> f64 {
    1.1
}
fn d_cprime() -> f64 {
    -0.4
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig::Euler {
            vbar: d_vbar(),
            ubar: d_ubar(),
            cbar: d_cbar(),
            cprime: d_cprime(),
        }
    }
}

/// Boundary frequency (tau, eta).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyConfig {
    pub tau: f64,
    pub eta: Vec<f64>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        // tau = cbar * eta of the default Euler parameters.
        FrequencyConfig { tau: d_cbar() * 0.9, eta: vec![0.9] }
    }
}

/// Fast-variable discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ThetaConfig {
    Periodic {
        #[serde(default = "d_period")]
        period: f64,
        #[serde(default = "d_kmax")]
        kmax: usize,
    },
    Pulse {
        #[serde(default = "d_half_width")]
        half_width: f64,
        #[serde(default = "d_step")]
        step: f64,
    },
}

fn d_period() -> f64 {
    2.0 * std::f64::consts::PI
}
fn d_kmax() -> usize {
    48
}
fn d_half_width() -> f64 {
    14.0
}
fn d_step() -> f64 {
    0.02
}

impl Default for ThetaConfig {
    fn default() -> Self {
        ThetaConfig::Periodic { period: d_period(), kmax: d_kmax() }
    }
}

/// Time integration and grid parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub theta: ThetaConfig,
    /// Number of tangential nodes; `null` = y-independent mode.
    pub n_y: Option<usize>,
    pub y_length: f64,
    pub dt: f64,
    pub t_final: f64,
    pub blowup_cap: f64,
    /// Order of the Gamma^k monitor norm (pulse runs).
    pub gamma_k: usize,
    /// Store every n-th time level as a binary field snapshot; 0 = auto
    /// (about 16 snapshots).
    pub snapshot_stride: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta: ThetaConfig::default(),
            n_y: None,
            y_length: 1.0,
            dt: 2e-3,
            t_final: 1.0,
            blowup_cap: 100.0,
            gamma_k: 2,
            snapshot_stride: 0,
        }
    }
}

/// Named analytic forcing family. All families start from rest through the
/// smooth ramp `t^2 / (1 + t^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "snake_case")]
pub enum ForcingConfig {
    Zero,
    /// `amplitude * ramp(t) * sin(2 pi mode theta / period)` (periodic runs).
    Sine {
        #[serde(default = "d_amplitude")]
        amplitude: f64,
        #[serde(default = "d_mode")]
        mode: i64,
    },
    /// `amplitude * ramp(t) * d/dtheta exp(-(theta/width)^2)` — zero-moment
    /// forcing for pulse runs, usable periodically when `width << period`.
    GaussianDerivative {
        #[serde(default = "d_amplitude")]
        amplitude: f64,
        #[serde(default = "d_width")]
        width: f64,
    },
    /// Seeded random Fourier forcing on modes `1..=modes`, coefficient
    /// magnitudes `amplitude / k^2` (periodic runs).
    RandomModes {
        #[serde(default = "d_amplitude")]
        amplitude: f64,
        #[serde(default = "d_modes")]
        modes: usize,
    },
}

fn d_amplitude() -> f64 {
    0.05
}
fn d_mode() -> i64 {
    1
}
fn d_width() -> f64 {
    1.0
}
fn d_modes() -> usize {
    4
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig::Sine { amplitude: d_amplitude(), mode: d_mode() }
    }
}

/// Parameters of the sweep-style commands (`analyze`, `residual-sweep`,
/// `limit-study`, `euler-demo`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Residual sweep: list of epsilon values.
    pub epsilons: Vec<f64>,
    /// Residual sweep: amplitude of the manufactured solution.
    pub amplitude: f64,
    /// Large-period study: list of periods Theta.
    pub theta_periods: Vec<f64>,
    /// Large-period study: normalization exponent of the limit kernel.
    pub s: f64,
    /// Large-period study: Gaussian widths of the two test pulses and their
    /// common grid (half width, step).
    pub u_width: f64,
    pub v_width: f64,
    pub pulse_half_width: f64,
    pub pulse_step: f64,
    /// Large-period study: comparison window `[-window, window]`, sampled at
    /// `n_window` points.
    pub window: f64,
    pub n_window: usize,
    /// Resonance scan: |alpha|_inf bound.
    pub alpha_bound: i64,
    /// Small-divisor weight exponent.
    pub gamma: f64,
    /// euler-demo: relative tolerance of the reference comparison.
    pub demo_tolerance: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            epsilons: vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0],
            amplitude: 0.1,
            // Stops at 80: the default Euler slope delta1 = -157/85 is
            // exactly rational in double precision, and the kernel guard
            // genuinely fires once the bandwidth reaches 157.
            theta_periods: vec![20.0, 40.0, 80.0],
            s: 0.5,
            u_width: 2.0,
            v_width: 1.9,
            pulse_half_width: 12.0,
            pulse_step: 0.02,
            window: 4.0,
            n_window: 121,
            alpha_bound: 8,
            gamma: 2.5,
            demo_tolerance: 1e-8,
        }
    }
}

/// Top-level run configuration. A missing file or an empty object `{}` means
/// "all defaults": the built-in Euler system at `tau = cbar * eta, eta = 0.9`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub frequency: FrequencyConfig,
    pub solver: SolverConfig,
    pub forcing: ForcingConfig,
    pub sweep: SweepSection,
    /// Output directory; overridden by `--out`.
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
}

impl RunConfig {
    /// Validate every numeric range, reporting all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        match &self.system {
            SystemConfig::Euler { vbar, ubar, cbar, .. } => {
                if !(*vbar > 0.0 && *ubar > 0.0 && *cbar > 0.0) {
                    errs.push("system: vbar, ubar, cbar must be positive".into());
                }
                if ubar >= cbar {
                    errs.push(format!(
                        "system: subsonic normal flow required (ubar = {ubar} >= cbar = {cbar})"
                    ));
                }
            }
            SystemConfig::Matrices { size, a, da, b_rows, b, d2b } => {
                let n = *size;
                if n == 0 {
                    errs.push("system.size must be positive".into());
                }
                if a.len() < 2 {
                    errs.push("system.a: need at least 2 flux matrices".into());
                }
                if a.iter().any(|m| m.len() != n * n) {
                    errs.push(format!("system.a: each matrix needs {} entries", n * n));
                }
                if da.len() != a.len() || da.iter().any(|t| t.len() != n) {
                    errs.push("system.da: need one N-tuple of matrices per direction".into());
                }
                if da.iter().flatten().any(|m| m.len() != n * n) {
                    errs.push(format!("system.da: each matrix needs {} entries", n * n));
                }
                if *b_rows == 0 || *b_rows >= n.max(1) {
                    errs.push(format!("system.b_rows must lie in 1..{}", n.max(1)));
                }
                if b.len() != b_rows * n {
                    errs.push(format!("system.b needs {} entries", b_rows * n));
                }
                if d2b.len() != *b_rows || d2b.iter().any(|m| m.len() != n * n) {
                    errs.push("system.d2b: one N*N matrix per row of B".into());
                }
            }
        }
        if self.frequency.eta.is_empty() {
            errs.push("frequency.eta must be nonempty".into());
        }
        if self.frequency.tau == 0.0 || !self.frequency.tau.is_finite() {
            errs.push(format!(
                "frequency.tau must be finite and nonzero (got {})",
                self.frequency.tau
            ));
        }
        let s = &self.solver;
        if !(s.dt > 0.0) {
            errs.push(format!("solver.dt must be positive (got {})", s.dt));
        }
        if !(s.t_final > 0.0) {
            errs.push(format!("solver.t_final must be positive (got {})", s.t_final));
        }
        if !(s.blowup_cap > 0.0) {
            errs.push(format!("solver.blowup_cap must be positive (got {})", s.blowup_cap));
        }
        match &s.theta {
            ThetaConfig::Periodic { period, kmax } => {
                if !(*period > 0.0) {
                    errs.push(format!("solver.theta.period must be positive (got {period})"));
                }
                if *kmax == 0 {
                    errs.push("solver.theta.kmax must be at least 1".into());
                }
            }
            ThetaConfig::Pulse { half_width, step } => {
                if !(*half_width > 0.0 && *step > 0.0 && step < half_width) {
                    errs.push(format!(
                        "solver.theta: need 0 < step < half_width (got {half_width}, {step})"
                    ));
                }
            }
        }
        if let Some(ny) = s.n_y {
            if ny < 2 {
                errs.push(format!("solver.n_y must be at least 2 (got {ny})"));
            }
            if !(s.y_length > 0.0) {
                errs.push(format!("solver.y_length must be positive (got {})", s.y_length));
            }
        }
        let amp_ok = match &self.forcing {
            ForcingConfig::Zero => true,
            ForcingConfig::Sine { amplitude, .. }
            | ForcingConfig::GaussianDerivative { amplitude, .. }
            | ForcingConfig::RandomModes { amplitude, .. } => amplitude.is_finite(),
        };
        if !amp_ok {
            errs.push("forcing.amplitude must be finite".into());
        }
        if let ForcingConfig::GaussianDerivative { width, .. } = &self.forcing {
            if !(*width > 0.0) {
                errs.push(format!("forcing.width must be positive (got {width})"));
            }
        }
        let sw = &self.sweep;
        if sw.epsilons.is_empty() || sw.epsilons.iter().any(|&e| !(e > 0.0)) {
            errs.push("sweep.epsilons must be a nonempty list of positive values".into());
        }
        if sw.theta_periods.is_empty() || sw.theta_periods.iter().any(|&t| !(t > 0.0)) {
            errs.push("sweep.theta_periods must be a nonempty list of positive values".into());
        }
        if !(sw.amplitude > 0.0) {
            errs.push(format!("sweep.amplitude must be positive (got {})", sw.amplitude));
        }
        if !(sw.u_width > 0.0 && sw.v_width > 0.0) {
            errs.push("sweep.u_width and sweep.v_width must be positive".into());
        }
        if !(sw.pulse_step > 0.0 && sw.pulse_step < sw.pulse_half_width) {
            errs.push("sweep: need 0 < pulse_step < pulse_half_width".into());
        }
        if !(sw.window > 0.0) || sw.n_window < 2 {
            errs.push("sweep: need window > 0 and n_window >= 2".into());
        }
        if sw.alpha_bound < 1 {
            errs.push(format!("sweep.alpha_bound must be at least 1 (got {})", sw.alpha_bound));
        }
        if !(sw.gamma >= 0.0) {
            errs.push(format!("sweep.gamma must be nonnegative (got {})", sw.gamma));
        }
        if !(sw.demo_tolerance > 0.0) {
            errs.push(format!(
                "sweep.demo_tolerance must be positive (got {})",
                sw.demo_tolerance
            ));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(MachStemError::ValidationError(errs))
        }
    }

    /// Build the hyperbolic system; returns the Euler parameters alongside
    /// when the built-in configuration is selected.
    pub fn build_system(&self, tol: &ToleranceSet) -> Result<(HyperbolicSystem, Option<EulerParams>)> {
        match &self.system {
            SystemConfig::Euler { vbar, ubar, cbar, cprime } => {
                let params = EulerParams::new(*vbar, *ubar, *cbar, *cprime)?;
                Ok((build_euler_system(&params, tol)?, Some(params)))
            }
            SystemConfig::Matrices { size, a, da, b_rows, b, d2b } => {
                let n = *size;
                let mat = |v: &Vec<f64>| DMatrix::from_row_slice(n, n, v);
                let a: Vec<DMatrix<f64>> = a.iter().map(&mat).collect();
                let da: Vec<Vec<DMatrix<f64>>> =
                    da.iter().map(|t| t.iter().map(&mat).collect()).collect();
                let b = DMatrix::from_row_slice(*b_rows, n, b);
                let d2b: Vec<DMatrix<f64>> = d2b.iter().map(&mat).collect();
                Ok((HyperbolicSystem::new(a, da, b, d2b, tol)?, None))
            }
        }
    }

    pub fn frequency(&self) -> Result<Frequency> {
        Frequency::new(self.frequency.tau, self.frequency.eta.clone())
    }
}


/// Read, parse and validate a configuration file. I/O and syntax problems
/// are reported as `ParseError`, range violations (all of them at once) as
/// `ValidationError`; both map to the config exit code.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| MachStemError::ParseError(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| MachStemError::ParseError(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}
