//! Error types for the whole toolkit.

use thiserror::Error;

/// Every failure mode a pipeline stage can report.
#[derive(Debug, Error)]
pub enum MachStemError {
    // --- spectral geometry ---
    #[error("dispersion relation has a complex root (frequency outside the hyperbolic region): {0}")]
    ComplexRoot(String),
    #[error("dispersion roots {0} and {1} coincide within tolerance (non-strict or glancing point)")]
    RepeatedRoot(f64, f64),
    #[error("phase {index} is glancing: |normal group velocity| = {speed:.3e}")]
    GlancingPhase { index: usize, speed: f64 },
    #[error("kernel of L(d phi_{index}) is not one-dimensional (sigma_min ratio {ratio:.3e})")]
    DegenerateKernel { index: usize, ratio: f64 },
    #[error("Ker B intersect E^s is trivial: the boundary condition is uniformly stable, not WR")]
    UniformlyStable,
    #[error("dim(Ker B intersect E^s) >= 2: violently unstable boundary condition")]
    ViolentlyUnstable,
    #[error("invalid system: {0}")]
    InvalidSystem(String),

    // --- resonance ---
    #[error("resonant denominator at alpha = {alpha:?}: |det| = {det:.3e} below threshold {threshold:.3e}")]
    ResonanceFound { alpha: Vec<i64>, det: f64, threshold: f64 },
    #[error("bilinear kernel denominator {value:.3e} below tolerance at (k1, k2) = ({k1}, {k2})")]
    ResonantKernel { k1: i64, k2: i64, value: f64 },

    // --- bilinear operators / fields ---
    #[error("operand must have zero mean (a_0 = {0:.3e})")]
    MeanNotZero(f64),
    #[error("pulse truncation inadequate: |boundary value| = {0:.3e} exceeds {1:.3e}")]
    TruncationInadequate(f64, f64),
    #[error("singular frequency {eta0:.6e} within half a grid cell of node {node:.6e}; refine the grid")]
    KernelZeroOffGrid { eta0: f64, node: f64 },

    // --- solvers ---
    #[error("CFL violation: dt = {dt:.3e} exceeds limit {limit:.3e}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("solution blew up: max |a| = {0:.3e} exceeds cap {1:.3e}")]
    BlowUpDetected(f64, f64),
    #[error("shock formed along characteristic solve (Newton found non-unique root at theta = {0})")]
    ShockFormed(f64),
    #[error("phase {0} is outgoing; its interior amplitude is identically zero and is not solved for")]
    OutgoingPhase(usize),

    // --- pulse profile calculus ---
    #[error("profile term outside the representable grammar: {0}")]
    UnsupportedTerm(String),
    #[error("E_Q average of the source is nonzero (max matched coefficient {0:.3e}); R_infinity undefined")]
    NonzeroQAverage(f64),
    #[error("ray integrand tail {0:.3e} above tolerance at truncation point {1}")]
    SlowDecay(f64, f64),
    #[error("constituent moment is nonzero ({0:.3e}); the corrector ray integrals would be unbounded")]
    MomentNotZero(f64),

    // --- assembler ---
    #[error("periodization tail {0:.3e} above tolerance on the comparison window")]
    PeriodizationTail(f64),
    #[error("reference mismatch beyond tolerance:\n{0}")]
    MismatchBeyondTolerance(String),
    #[error("frequency outside the hyperbolic region: {0}")]
    OutsideHyperbolicRegion(String),

    // --- configuration / io ---
    #[error("config parse error: {0}")]
    ParseError(String),
    #[error("config validation failed:\n{}", .0.join("\n"))]
    ValidationError(Vec<String>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, MachStemError>;

impl MachStemError {
    /// Process exit code class for the CLI: 2 config, 3 resonance,
    /// 4 numerical, 5 internal.
    pub fn exit_code(&self) -> i32 {
        use MachStemError::*;
        match self {
            ParseError(_) | ValidationError(_) | InvalidSystem(_) => 2,
            ResonanceFound { .. } | ResonantKernel { .. } => 3,
            ComplexRoot(_) | RepeatedRoot(..) | GlancingPhase { .. } | DegenerateKernel { .. }
            | UniformlyStable | ViolentlyUnstable | MeanNotZero(_) | TruncationInadequate(..)
            | KernelZeroOffGrid { .. } | CflViolation { .. } | BlowUpDetected(..)
            | ShockFormed(_) | OutgoingPhase(_) | UnsupportedTerm(_) | NonzeroQAverage(_)
            | SlowDecay(..) | MomentNotZero(_) | PeriodizationTail(_)
            | MismatchBeyondTolerance(_) | OutsideHyperbolicRegion(_) => 4,
            Io(_) | Internal(_) => 5,
        }
    }
}
