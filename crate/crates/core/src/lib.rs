//! Cardinal interpolation by lattice shifts of a kernel.
//!
//! Given a nonsingular matrix `A` and a kernel `K`, the functions
//! `Σ_m c_m K(x - A m)` are splines on the lattice `A Z^n`. This crate
//! builds the fundamental spline, which is 1 at the origin and 0 at every
//! other lattice point, from the Fourier coefficients of the periodized
//! symbol of `K`, and uses it to interpolate lattice data.
//!
//! ```
//! use std::sync::Arc;
//! use skspline::{FundamentalSpline, GaussianKernel, Lattice};
//!
//! let lattice = Lattice::hexagonal();
//! let kernel = Arc::new(GaussianKernel::isotropic(2));
//! let spline = FundamentalSpline::build(&lattice, kernel, 64).unwrap();
//! assert!((spline.eval(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-7);
//! assert!(spline.eval(&[1.0, 0.0]).unwrap().abs() < 1e-7);
//! ```

// NaN has to fail every tolerance check, hence `!(x <= tol)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod format;
pub mod fundamental;
pub mod interpolation;
pub mod kernel;
pub mod lattice;
pub mod quadrature;
pub mod summation;
pub mod symbol;

pub use error::{Result, SkError};
pub use fundamental::{
    cardinal_coefficients, eval_fundamental_integral, eval_fundamental_lattice_series, CardinalCoefficients, CoefficientTable,
    FundamentalSpline, IntegralEvaluator, IntegralForm,
};
pub use interpolation::{gram_solve, interpolate, oracle_discrepancy, GramSolution, Interpolant, LatticeSamples, OracleReport};
pub use kernel::{quadrature_fourier, scaling_identity_residual, GaussianKernel, Kernel};
pub use lattice::{IndexSet, Lattice};
pub use symbol::SymbolFunction;
