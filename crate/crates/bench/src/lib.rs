// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the criterion benchmarks.

use dirac_spectral::{DiracMeasure, GLFunction, Result};

/// Smooth coefficient vanishing at both ends of `[0, 1]`.
pub fn bump_measure(count: usize) -> Result<DiracMeasure> {
    DiracMeasure::from_fn(1.0, count, |x| {
        let s = (std::f64::consts::PI * x).sin().powi(2);
        (0.6 * s * (2.0 * x).cos(), 0.8 * s)
    })
}

/// A small real Gaussian GL function on `[−2, 2]`.
pub fn gaussian_phi(samples: usize) -> Result<GLFunction> {
    GLFunction::from_fn(1.0, samples, |x| (-x * x).exp().into())
}
