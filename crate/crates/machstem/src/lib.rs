//! Numerical toolkit for weakly stable hyperbolic boundary value problems:
//! spectral geometry of the boundary phases, resonance diagnostics, the
//! nonlocal bilinear operators of the leading-amplitude equations, periodic
//! and pulse amplitude solvers, interior transport, and an approximate-
//! solution assembler with residual diagnostics. A compressible Euler
//! configuration (Mach stem formation at a planar shock) is built in.

pub mod amplitude_solver;
pub mod bilinear_ops;
pub mod error;
pub mod euler_example;
pub mod fields;
pub mod interior_transport;
pub mod pulse_profiles;
pub mod resonance;
pub mod spectral_geometry;
pub mod system;
pub mod tolerances;
pub mod wkb_assembler;

pub use error::{MachStemError, Result};
pub use system::{Frequency, HyperbolicSystem};
pub use tolerances::ToleranceSet;
