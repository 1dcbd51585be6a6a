//! Problem data: the constant-coefficient hyperbolic operator, its
//! quadratic corrections, and the boundary condition.

use nalgebra::{DMatrix, DVector};

use crate::error::{MachStemError, Result};
use crate::tolerances::ToleranceSet;

/// A boundary frequency `(tau, eta)` with `eta` of length `d - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequency {
    pub tau: f64,
    pub eta: Vec<f64>,
}

impl Frequency {
    pub fn new(tau: f64, eta: Vec<f64>) -> Result<Self> {
        if tau == 0.0 && eta.iter().all(|e| *e == 0.0) {
            return Err(MachStemError::InvalidSystem(
                "frequency (tau, eta) must be nonzero".into(),
            ));
        }
        Ok(Self { tau, eta })
    }
}

/// First-order quasilinear system
/// `∂_t u + Σ_j A_j(u) ∂_j u = 0` on the half-space `{x_d > 0}`, linearized
/// around the origin: `A_j(u) = A_j(0) + dA_j(0)·u`, with boundary operator
/// `b(u) = B u + ½ d²b(0)·(u, u)` on `{x_d = 0}`.
///
/// `dA_j(0)·v` is stored as the 3-tensor `Σ_i v_i * da[j][i]`, and the `k`-th
/// component of `d²b(0)·(v, w)` as the symmetric quadratic form `vᵀ d2b[k] w`.
#[derive(Debug, Clone)]
pub struct HyperbolicSystem {
    /// Spatial dimension `d >= 2`; the last direction is the boundary normal.
    pub dim_space: usize,
    /// System size `N`.
    pub size: usize,
    /// `A_1(0), ..., A_d(0)`.
    pub a: Vec<DMatrix<f64>>,
    /// `da[j][i]` is the coefficient matrix of `v_i` in `dA_{j+1}(0)·v`.
    pub da: Vec<Vec<DMatrix<f64>>>,
    /// `p x N` boundary matrix `B = db(0)`.
    pub b: DMatrix<f64>,
    /// Symmetric matrices of the components of `d²b(0)`.
    pub d2b: Vec<DMatrix<f64>>,
}

impl HyperbolicSystem {
    pub fn new(
        a: Vec<DMatrix<f64>>,
        da: Vec<Vec<DMatrix<f64>>>,
        b: DMatrix<f64>,
        d2b: Vec<DMatrix<f64>>,
        tol: &ToleranceSet,
    ) -> Result<Self> {
        let d = a.len();
        if d < 2 {
            return Err(MachStemError::InvalidSystem("need d >= 2 flux matrices".into()));
        }
        let n = a[0].nrows();
        for (j, m) in a.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(MachStemError::InvalidSystem(format!("A_{} is not {n}x{n}", j + 1)));
            }
        }
        if da.len() != d {
            return Err(MachStemError::InvalidSystem("need one dA tensor per direction".into()));
        }
        for (j, t) in da.iter().enumerate() {
            if t.len() != n || t.iter().any(|m| m.nrows() != n || m.ncols() != n) {
                return Err(MachStemError::InvalidSystem(format!(
                    "dA_{} must hold {n} matrices of size {n}x{n}",
                    j + 1
                )));
            }
        }
        let p = b.nrows();
        if b.ncols() != n || p == 0 || p >= n {
            return Err(MachStemError::InvalidSystem(format!(
                "B must be p x {n} with 1 <= p <= {}",
                n - 1
            )));
        }
        if b.rank(tol.absolute) != p {
            return Err(MachStemError::InvalidSystem("B does not have full row rank".into()));
        }
        if d2b.len() != p {
            return Err(MachStemError::InvalidSystem("d2b needs one quadratic form per row of B".into()));
        }
        for (k, s) in d2b.iter().enumerate() {
            if s.nrows() != n || s.ncols() != n {
                return Err(MachStemError::InvalidSystem(format!("d2b[{k}] is not {n}x{n}")));
            }
            let asym = (s - s.transpose()).abs().max();
            if asym > tol.absolute * (1.0 + s.abs().max()) {
                return Err(MachStemError::InvalidSystem(format!(
                    "d2b[{k}] is not symmetric (residual {asym:.3e})"
                )));
            }
        }
        // Assumption: the boundary is noncharacteristic.
        let ad = &a[d - 1];
        if ad.clone().lu().determinant().abs() <= tol.absolute * ad.abs().max().powi(n as i32) {
            return Err(MachStemError::InvalidSystem("A_d(0) is singular".into()));
        }
        Ok(Self { dim_space: d, size: n, a, da, b, d2b })
    }

    /// The normal flux matrix `A_d(0)`.
    pub fn ad(&self) -> &DMatrix<f64> {
        &self.a[self.dim_space - 1]
    }

    /// `dA_j(0)·v` (1-based direction index `j`).
    pub fn da_dot(&self, j: usize, v: &DVector<f64>) -> DMatrix<f64> {
        let n = self.size;
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            out += &self.da[j - 1][i] * v[i];
        }
        out
    }

    /// `A_j(u) = A_j(0) + dA_j(0)·u` (1-based `j`).
    pub fn a_at(&self, j: usize, u: &DVector<f64>) -> DMatrix<f64> {
        &self.a[j - 1] + self.da_dot(j, u)
    }

    /// `d²b(0)·(v, w)` as a vector in `R^p`.
    pub fn d2b_dot(&self, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.d2b.len(), self.d2b.iter().map(|s| (v.transpose() * s * w)[0]))
    }

    /// Full symbol `L(tau, xi) = tau I + Σ_j xi_j A_j(0)` with `xi` of length `d`.
    pub fn symbol(&self, tau: f64, xi: &[f64]) -> DMatrix<f64> {
        let n = self.size;
        let mut m = DMatrix::identity(n, n) * tau;
        for (j, x) in xi.iter().enumerate() {
            m += &self.a[j] * *x;
        }
        m
    }

    /// `L(d phi)` for the phase with frequency `freq` and normal wavenumber `omega`.
    pub fn l_dphi(&self, freq: &Frequency, omega: f64) -> DMatrix<f64> {
        let mut xi = freq.eta.clone();
        xi.push(omega);
        self.symbol(freq.tau, &xi)
    }
}
