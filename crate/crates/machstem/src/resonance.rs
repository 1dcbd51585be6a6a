//! Resonance diagnostics: exhaustive scans for integer combinations of the
//! phases that make the symbol singular, small-divisor constants, and the
//! closed-form diophantine check for the Euler configuration.

use serde::{Deserialize, Serialize};

use crate::error::{MachStemError, Result};
use crate::spectral_geometry::PhaseSet;
use crate::system::HyperbolicSystem;
use crate::tolerances::ToleranceSet;

/// One near-singular integer mode found by [`resonance_scan`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonantMode {
    pub alpha: Vec<i64>,
    pub det: f64,
    /// Threshold the determinant was compared against.
    pub threshold: f64,
}

/// Outcome of a resonance / small-divisor scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub resonant_modes: Vec<ResonantMode>,
    /// Smallest scanned `|det| * |alpha|^gamma` over incoming-supported
    /// noncharacteristic modes; `+inf` when that set is empty.
    pub c_min: f64,
    pub c_argmin: Option<Vec<i64>>,
    pub gamma: f64,
    pub bound: i64,
}

/// `det L(Σ alpha_m d phi_m)`.
pub fn det_alpha(system: &HyperbolicSystem, phaseset: &PhaseSet, alpha: &[i64]) -> f64 {
    let asum: f64 = alpha.iter().map(|&a| a as f64).sum();
    let tau = asum * phaseset.freq.tau;
    let mut xi: Vec<f64> = phaseset.freq.eta.iter().map(|e| asum * e).collect();
    let wd: f64 = alpha
        .iter()
        .zip(&phaseset.omegas)
        .map(|(&a, &w)| a as f64 * w)
        .sum();
    xi.push(wd);
    system.symbol(tau, &xi).lu().determinant()
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn is_primitive(alpha: &[i64]) -> bool {
    let g = alpha.iter().fold(0, |acc, &a| gcd(acc, a));
    g == 1
}

/// Canonical sign: first nonzero coordinate positive (`alpha` and `-alpha`
/// give the same singularity).
fn is_canonical(alpha: &[i64]) -> bool {
    alpha.iter().find(|&&a| a != 0).map(|&a| a > 0).unwrap_or(false)
}

fn symbol_scale(system: &HyperbolicSystem, phaseset: &PhaseSet) -> f64 {
    (0..phaseset.omegas.len())
        .map(|m| system.l_dphi(&phaseset.freq, phaseset.omegas[m]).abs().max())
        .fold(1.0_f64, f64::max)
}

fn for_each_alpha(
    dims: &[usize],
    m_total: usize,
    bound: i64,
    mut f: impl FnMut(&[i64]),
) {
    // Odometer over the free coordinates; remaining coordinates stay zero.
    let k = dims.len();
    let mut idx = vec![-bound; k];
    let mut alpha = vec![0i64; m_total];
    loop {
        for (slot, &dim) in idx.iter().zip(dims) {
            alpha[dim] = *slot;
        }
        let nonzero = alpha.iter().filter(|&&a| a != 0).count();
        if nonzero >= 2 && is_primitive(&alpha) && is_canonical(&alpha) {
            f(&alpha);
        }
        let mut carry = k;
        for i in (0..k).rev() {
            if idx[i] < bound {
                idx[i] += 1;
                carry = i;
                break;
            }
            idx[i] = -bound;
        }
        if carry == k {
            break;
        }
    }
}

/// Exhaustive scan over primitive noncharacteristic integer modes `alpha`
/// with `|alpha|_inf <= bound`, reporting every near-zero of
/// `det L(Σ alpha_m d phi_m)`.
pub fn resonance_scan(
    system: &HyperbolicSystem,
    phaseset: &PhaseSet,
    bound: i64,
    tol: &ToleranceSet,
) -> ResonanceReport {
    let m_total = phaseset.omegas.len();
    let n = system.size as i32;
    let scale = symbol_scale(system, phaseset);
    let mut modes = Vec::new();
    let dims: Vec<usize> = (0..m_total).collect();
    for_each_alpha(&dims, m_total, bound, |alpha| {
        let det = det_alpha(system, phaseset, alpha);
        let amax = alpha.iter().map(|a| a.abs()).max().unwrap() as f64;
        let threshold = tol.resonance * (1.0 + amax * scale).powi(n);
        if det.abs() < threshold {
            modes.push(ResonantMode { alpha: alpha.to_vec(), det, threshold });
        }
    });
    ResonanceReport {
        resonant_modes: modes,
        c_min: f64::INFINITY,
        c_argmin: None,
        gamma: f64::NAN,
        bound,
    }
}

/// Minimum of `|det L(Σ alpha_m d phi_m)| * |alpha|^gamma` over primitive
/// noncharacteristic modes supported on the incoming phases, with the
/// Euclidean norm in the weight. Returns `(+inf, None)` when fewer than two
/// phases are incoming.
pub fn small_divisor_estimate(
    system: &HyperbolicSystem,
    phaseset: &PhaseSet,
    gamma: f64,
    bound: i64,
    tol: &ToleranceSet,
) -> Result<(f64, Option<Vec<i64>>)> {
    if phaseset.incoming.len() < 2 {
        return Ok((f64::INFINITY, None));
    }
    let m_total = phaseset.omegas.len();
    let n = system.size as i32;
    let scale = symbol_scale(system, phaseset);
    let mut best = f64::INFINITY;
    let mut argmin: Option<Vec<i64>> = None;
    let mut resonant: Option<MachStemError> = None;
    for_each_alpha(&phaseset.incoming, m_total, bound, |alpha| {
        if resonant.is_some() {
            return;
        }
        let det = det_alpha(system, phaseset, alpha);
        let amax = alpha.iter().map(|a| a.abs()).max().unwrap() as f64;
        let threshold = tol.resonance * (1.0 + amax * scale).powi(n);
        if det.abs() < threshold {
            resonant = Some(MachStemError::ResonanceFound {
                alpha: alpha.to_vec(),
                det: det.abs(),
                threshold,
            });
            return;
        }
        let norm = alpha.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt();
        let value = det.abs() * norm.powf(gamma);
        // Deterministic tie-break: lexicographically smallest alpha.
        if value < best || (value == best && argmin.as_deref().is_some_and(|a| alpha < a)) {
            best = value;
            argmin = Some(alpha.to_vec());
        }
    });
    if let Some(err) = resonant {
        return Err(err);
    }
    Ok((best, argmin))
}

/// Closed-form diophantine constant for the Euler configuration:
/// `c = min |p + q m2| * |(p, q)|^gamma` over `0 < |(p,q)|_inf <= bound`,
/// `q != 0`, with the Euclidean norm in the weight.
///
/// The scan is windowed: for each `q`, only `p` near `round(-q m2)` can
/// compete (elsewhere `|p + q m2| >= 5/2`); small `q` blocks are scanned
/// exhaustively, and a full brute-force pass backs the result up in the
/// (practically unreachable) regime where the windowed minimum exceeds the
/// skipped-region lower bound.
pub fn euler_diophantine(m2: f64, gamma: f64, bound: i64) -> Result<f64> {
    if !(m2 > 0.0 && m2 < 1.0) {
        return Err(MachStemError::ValidationError(vec![format!(
            "m2 must lie in (0, 1), got {m2}"
        )]));
    }
    if gamma < 0.0 || bound < 1 {
        return Err(MachStemError::ValidationError(vec![format!(
            "need gamma >= 0 and bound >= 1 (got gamma = {gamma}, bound = {bound})"
        )]));
    }
    let value = |p: i64, q: i64| -> f64 {
        let norm = ((p * p + q * q) as f64).sqrt();
        (p as f64 + q as f64 * m2).abs() * norm.powf(gamma)
    };
    let mut best = f64::INFINITY;
    // By symmetry (p, q) -> (-p, -q), q > 0 suffices.
    let q_full = bound.min(256);
    for q in 1..=q_full {
        for p in -bound..=bound {
            best = best.min(value(p, q));
        }
    }
    for q in (q_full + 1)..=bound {
        let p0 = (-(q as f64) * m2).round() as i64;
        for p in (p0 - 3)..=(p0 + 3) {
            if p.abs() <= bound {
                best = best.min(value(p, q));
            }
        }
    }
    // Skipped points all satisfy |p + q m2| >= 5/2 and |(p,q)| >= 1.
    if best > 2.5 {
        for q in 1..=bound {
            for p in -bound..=bound {
                best = best.min(value(p, q));
            }
        }
    }
    Ok(best)
}
