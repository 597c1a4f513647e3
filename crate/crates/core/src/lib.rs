//! Structured solvers for the nonsymmetric multilevel Toeplitz systems that come
//! out of Grünwald-type discretizations of Riemann–Liouville fractional
//! diffusion equations.
//!
//! The pipeline is: assemble the Kronecker-sum operator `A = νI + Σ (v₊W + v₋Wᵀ)`
//! ([`discretization`]), symmetrize it with the anti-identity `Y`
//! ([`toeplitz::flip`]), precondition with the sine-transform diagonalizable
//! multilevel Tau matrix ([`tau`]), and solve with preconditioned MINRES
//! ([`krylov`]). Dense oracles in [`spectrum`] certify the eigenvalue
//! intervals the method relies on at desk scale.

// Negated comparisons deliberately reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod error;
pub mod krylov;
pub mod pde;
pub mod selftest;
pub mod spectrum;
pub mod tau;
pub mod toeplitz;
pub mod transforms;

pub use discretization::{
    assemble_operator, epsilon_bound, omega_bound, CoefficientTable, ConvergenceBound,
    FractionalParams, GridSpec, Scheme,
};
pub use error::{Error, Result};
pub use krylov::{bound_curve, pminres, MinresConfig, MinresResult};
pub use spectrum::{sym_eig, SpectrumReport};
pub use tau::{build_preconditioner, TauPreconditioner};
pub use toeplitz::{flip, MultilevelOperator, Toeplitz1D};
pub use transforms::TransformPlan;

/// Dense matrix type used by the oracles.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
