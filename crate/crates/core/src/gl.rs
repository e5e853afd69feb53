// SPDX-License-Identifier: Apache-2.0

//! Gelfand-Levitan functions: extraction from a de Branges function, from the
//! series representation of `E`, and from a discrete spectral measure, plus
//! the positivity test for the class `Φ_N`.
//!
//! Orientation: the returned `φ` satisfies `∫ e^{−its} φ(s) ds = g(t)` with
//! `g = 1/|E(t)|² − 1`, i.e. `φ(s) = (1/2π) ∫ e^{its} g(t) dt`. This is the
//! function the kernel equations consume and it equals half the transform of
//! `dρ − dt/π`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::forward;
use crate::fourier;
use crate::quad;
use crate::types::{DiracMeasure, GLFunction, GridFunction1D, SpectralMeasure};

/// Result of the Nyström positivity test of `1 + T_φ` on `L²(−N, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_eigenvalue: f64,
    pub matrix_dim: usize,
    pub passed: bool,
}

/// Fraction of the window at each end used for the tail test and the taper.
const EDGE_FRACTION: f64 = 0.1;

fn edge_mean(g: &[f64]) -> f64 {
    let m = ((g.len() as f64 * EDGE_FRACTION).ceil() as usize).max(1);
    let lo = g[..m].iter().map(|v| v.abs()).sum::<f64>();
    let hi = g[g.len() - m..].iter().map(|v| v.abs()).sum::<f64>();
    (lo + hi) / (2 * m) as f64
}

/// Tapers `g` on `[−Ω, Ω]` and inverts it onto `out_samples` points of
/// `[−2N, 2N]` in the library orientation.
fn invert_symbol(grid: &GridFunction1D, g: Vec<f64>, n: f64, out_samples: usize) -> Result<GLFunction> {
    let omega = grid.hi().max(-grid.lo());
    let inner = (1.0 - EDGE_FRACTION) * omega;
    let tapered: Vec<Complex64> = grid
        .nodes()
        .zip(g)
        .map(|(t, v)| {
            let a = t.abs();
            let w = if a <= inner {
                1.0
            } else {
                0.5 * (1.0 + (PI * (a - inner) / (omega - inner)).cos())
            };
            Complex64::new(v * w, 0.0)
        })
        .collect();
    let gt = GridFunction1D::new(grid.lo(), grid.hi(), tapered)?;
    let s = fourier::linspace(-2.0 * n, 2.0 * n, out_samples);
    // φ(s) = (1/2π)∫ e^{its} g = inverse transform evaluated at −s
    let neg: Vec<f64> = s.iter().map(|v| -v).collect();
    GLFunction::new(n, fourier::inverse(&gt, &neg))
}

fn check_out_samples(out_samples: usize) -> Result<()> {
    if out_samples < 3 || out_samples.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "out_samples must be odd and >= 3, got {out_samples}"
        )));
    }
    Ok(())
}

/// `φ` from samples of `E_N` on a symmetric real window.
pub fn phi_from_e(e: &GridFunction1D, n: f64, out_samples: usize, tol: &Tolerances) -> Result<GLFunction> {
    check_out_samples(out_samples)?;
    if e.step() > PI / (8.0 * n) * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "E grid step {} exceeds π/(8N) = {}",
            e.step(),
            PI / (8.0 * n)
        )));
    }
    let mut g = Vec::with_capacity(e.len());
    for (t, v) in e.nodes().zip(e.samples()) {
        let m = v.norm();
        if m < tol.min_modulus {
            return Err(Error::SmallModulus { t, modulus: m });
        }
        g.push(1.0 / (m * m) - 1.0);
    }
    let tail = edge_mean(&g);
    if tail > tol.fourier_tail {
        return Err(Error::TailNotMet { omega: e.hi(), tail, limit: tol.fourier_tail });
    }
    invert_symbol(e, g, n, out_samples)
}

/// Parameters of the adaptive `μ → φ` extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractOptions {
    /// Initial half-width of the frequency window.
    pub omega: f64,
    /// Frequency step as a fraction of `π/N`; at most 1/8.
    pub step_fraction: f64,
    pub ode_steps: usize,
    pub out_samples: usize,
    /// Window doublings allowed before the tail test is declared failed.
    pub max_doublings: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { omega: 60.0, step_fraction: 0.0625, ode_steps: 512, out_samples: 513, max_doublings: 4 }
    }
}

/// What the adaptive extraction settled on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub omega: f64,
    pub grid_points: usize,
    pub tail_mean: f64,
    pub max_modulus_deviation: f64,
}

/// Computes `E_N` on a window that doubles until the tail test passes, then
/// extracts `φ`.
pub fn phi_from_measure(
    mu: &DiracMeasure,
    opts: &ExtractOptions,
    tol: &Tolerances,
) -> Result<(GLFunction, ExtractReport)> {
    let n = mu.n();
    let dt = opts.step_fraction.min(0.125) * PI / n;
    let mut omega = opts.omega;
    for attempt in 0..=opts.max_doublings {
        let count = 2 * (omega / dt).ceil() as usize + 1;
        let e = forward::db_grid(mu, omega, count, opts.ode_steps)?;
        match phi_from_e(&e, n, opts.out_samples, tol) {
            Err(Error::TailNotMet { .. }) if attempt < opts.max_doublings => omega *= 2.0,
            Err(err) => return Err(err),
            Ok(phi) => {
                let g: Vec<f64> = e.samples().iter().map(|v| 1.0 / v.norm_sqr() - 1.0).collect();
                let dev = e.samples().iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
                let report = ExtractReport {
                    omega,
                    grid_points: count,
                    tail_mean: edge_mean(&g),
                    max_modulus_deviation: dev,
                };
                return Ok((phi, report));
            }
        }
    }
    unreachable!("loop returns on the last attempt")
}

/// `φ` from the series representation `E_N(t) = e^{−itN}(1 + ρ̂(t))`.
///
/// With `ĝ = ρ̂ + conj ρ̂ + |ρ̂|² = |E|² − 1` the symbol is `−ĝ/(1 + ĝ)`.
pub fn phi_from_series(
    rho_hat: impl Fn(f64) -> Complex64 + Sync,
    n: f64,
    omega: f64,
    count: usize,
    out_samples: usize,
    tol: &Tolerances,
) -> Result<GLFunction> {
    check_out_samples(out_samples)?;
    let ts = fourier::linspace(-omega, omega, count);
    let ghat: Vec<f64> = ts
        .par_iter()
        .map(|&t| {
            let r = rho_hat(t);
            (r + r.conj() + r.norm_sqr()).re
        })
        .collect();
    let mut g = Vec::with_capacity(count);
    for (&t, &gh) in ts.iter().zip(&ghat) {
        let d = (1.0 + gh).abs();
        if !(d >= tol.wiener_floor) {
            return Err(Error::WienerDenominator { t, value: d });
        }
        g.push(-gh / (1.0 + gh));
    }
    let tail = edge_mean(&g);
    if tail > tol.fourier_tail {
        return Err(Error::TailNotMet { omega, tail, limit: tol.fourier_tail });
    }
    let grid = GridFunction1D::new(-omega, omega, vec![Complex64::new(0.0, 0.0); count])?;
    invert_symbol(&grid, g, n, out_samples)
}

/// Nyström matrix of `1 + T_φ` on `[−N, N]` in the symmetric form
/// `δ_ij + √w_i φ(t_i − t_j) √w_j`.
pub fn positivity_matrix(phi: &GLFunction, dim: usize) -> Result<DMatrix<Complex64>> {
    if dim < 16 {
        return Err(Error::InvalidInput(format!("positivity dim {dim} below 16")));
    }
    let n = phi.n();
    let t = fourier::linspace(-n, n, dim);
    let sw: Vec<f64> = quad::trapezoid_weights(dim, 2.0 * n / (dim - 1) as f64)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let k = phi
                .eval(t[i] - t[j])
                .ok_or(Error::OutOfRange { x: t[i] - t[j], n: 2.0 * n })?;
            a[(i, j)] = k * (sw[i] * sw[j]);
        }
        a[(i, i)] += 1.0;
    }
    Ok(a)
}

/// Minimum eigenvalue of the Hermitian part of the Nyström matrix.
pub fn check_phi(phi: &GLFunction, dim: usize) -> Result<PositivityReport> {
    let a = positivity_matrix(phi, dim)?;
    let herm = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = herm.symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::NonFinite("positivity eigenvalues"));
    }
    Ok(PositivityReport { min_eigenvalue: min, matrix_dim: dim, passed: min > 0.0 })
}

/// Gaussian-mollified `φ` from a discrete spectral measure.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifiedPhi {
    pub phi: GLFunction,
    /// True where the sample lies within five widths of `t = 0` or of
    /// `|t| = 2N`, where the regularised distribution is not a function value.
    pub flagged: Vec<bool>,
    pub width: f64,
}

/// `φ(t) = ½[Σ_k w_k e^{itλ_k} G(λ_k) − F(t)]` with `G(λ) = exp(−(wλ)²/2)`
/// and `F(t) = (1/π)∫ G(λ) e^{itλ} dλ`.
///
/// `width` is the Gaussian width in `t`; its frequency cutoff is `1/width`.
/// The atoms must cover `[−Λ, Λ]` with `Λ·width ≥ 5.26`, so that `G(Λ) ≤ 1e−6`.
pub fn phi_from_spectral_measure(
    rho: &SpectralMeasure,
    width: f64,
    out_samples: usize,
) -> Result<MollifiedPhi> {
    check_out_samples(out_samples)?;
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidInput(format!("mollifier width {width} must be positive")));
    }
    let (first, last) = match (rho.atoms.first(), rho.atoms.last()) {
        (Some(a), Some(b)) => (a.lambda, b.lambda),
        _ => return Err(Error::WindowTooSmall { product: 0.0 }),
    };
    let lambda = (-first).min(last);
    let needed = (2.0 * 1e6f64.ln()).sqrt();
    if lambda * width < needed {
        return Err(Error::WindowTooSmall { product: lambda * width });
    }
    let n = rho.n;
    let ts = fourier::linspace(-2.0 * n, 2.0 * n, out_samples);
    let samples: Vec<Complex64> = ts
        .par_iter()
        .map(|&t| {
            let sum: Complex64 = rho
                .atoms
                .iter()
                .map(|a| {
                    let gl = (-(width * a.lambda).powi(2) / 2.0).exp();
                    Complex64::from_polar(a.weight * gl, t * a.lambda)
                })
                .sum();
            let f = (2.0 * PI).sqrt() / (PI * width) * (-t * t / (2.0 * width * width)).exp();
            (sum - f) * 0.5
        })
        .collect();
    let flagged = ts
        .iter()
        .map(|t| t.abs() < 5.0 * width || (t.abs() - 2.0 * n).abs() < 5.0 * width)
        .collect();
    Ok(MollifiedPhi { phi: GLFunction::new(n, samples)?, flagged, width })
}
