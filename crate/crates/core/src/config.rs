// SPDX-License-Identifier: Apache-2.0

//! Tolerance constants shared across the forward and inverse pipelines.

use serde::{Deserialize, Serialize};

/// Below this weight the hyperbolic closed forms switch to Taylor series.
pub const TAYLOR_SWITCH: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// |det − 1| allowed for transfer matrices and reconstructed Hamiltonians.
    pub det: f64,
    /// Slack on h11·h22 − h12² ≥ 0.
    pub psd: f64,
    /// Bisection tolerance for eigenvalues.
    pub bisection: f64,
    /// Floor on |E(t)| when forming 1/|E|².
    pub min_modulus: f64,
    /// Mean |g| allowed in the trailing 10% of the Fourier window.
    pub fourier_tail: f64,
    /// Floor on |1 + ĝ| in the Wiener route.
    pub wiener_floor: f64,
    /// Nyström condition number ceiling.
    pub max_condition: f64,
    /// Nyström residual ceiling (sup norm, relative to max(1, ‖g‖∞)).
    pub residual: f64,
    /// Floor on |D(x)| in the Hamiltonian reconstruction.
    pub min_d: f64,
    /// Imaginary residue allowed on reconstructed H before projection.
    pub h_imag: f64,
    /// Symmetric-traceless defect allowed on a recovered μ sample.
    pub structure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            det: 1e-10,
            psd: 1e-9,
            bisection: 1e-11,
            min_modulus: 1e-8,
            fourier_tail: 1e-4,
            wiener_floor: 1e-8,
            max_condition: 1e12,
            residual: 1e-9,
            min_d: 1e-10,
            h_imag: 1e-8,
            structure: 1e-7,
        }
    }
}
