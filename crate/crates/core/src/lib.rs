// SPDX-License-Identifier: Apache-2.0

//! Forward and inverse spectral theory for one-dimensional Dirac operators on
//! a finite interval `[0, N]`.
//!
//! The forward direction takes a coefficient measure `μ` to its transfer
//! matrix, de Branges function `E_N`, Weyl function and spectral measure, and
//! extracts the Gelfand-Levitan function `φ`. The inverse direction solves the
//! convolution Fredholm equations for the kernels `j`, `k`, assembles the
//! canonical system `H` from their corner values and converts `H` back to a
//! Dirac potential.

// `!(a <= b)` is used on purpose so that NaN lands in the failure branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod forward;
pub mod fourier;
pub mod gl;
pub mod inverse;
pub mod io;
pub mod matrix;
pub mod quad;
pub mod series;
pub mod types;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use matrix::{g_of, Matrix2C};
pub use types::{
    jump_factor, Antiderivative, CanonicalSystem, DiracMeasure, GLFunction, GridFunction1D, JumpDirection,
    PointMass, SpectralAtom, SpectralMeasure,
};

pub use num_complex::Complex64;
