//! Numerical laboratory for quantized Kronecker flows and almost periodic
//! free quantum field theory.
//!
//! The crate is organized by subsystem:
//!
//! - [`frequencies`]: frequency systems ω₁ < ω₂ < … and their generators.
//! - [`apalgebra`]: finite trigonometric polynomials over ℤ[Ω₊], the Bohr
//!   mean and the Kronecker flow.
//! - [`counting`]: exact enumeration of the lattice points of ℕ[Ω₊] below an
//!   energy, i.e. the eigenvalue counting function N(E).
//! - [`tauber`]: θ, φ and derivatives, the saddle point σ_E and the
//!   asymptotic Ñ(E), plus checkers for the growth hypotheses.
//! - [`fock`]: truncated bosonic, fermionic and graded Fock spaces with the
//!   usual operators as sparse matrices.
//! - [`ergodic`]: microcanonical averages τ_E and exact time averages.
//! - [`kms`]: Gibbs states, super-KMS functionals, the Witten index and a
//!   finite-dimensional uniqueness test.
//! - [`classical`]: the classical almost periodic wave equation.
//! - [`report`]: CSV, JSON and SVG emitters shared by the experiment runner.

pub mod apalgebra;
pub mod classical;
pub mod counting;
pub mod ergodic;
mod error;
pub mod fock;
pub mod frequencies;
pub mod kms;
pub mod report;
pub mod sparse;
pub mod special;
pub mod tauber;

pub use error::{Error, Result};

pub use num_complex::Complex64;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
