// SPDX-License-Identifier: Apache-2.0

//! Discrete Fourier transforms on uniform grids with the convention
//! `f̂(t) = ∫ e^{its} f(s) ds` and inverse `f(s) = (1/2π) ∫ e^{−its} f̂(t) dt`.
//!
//! The transforms are direct trapezoid sums evaluated at arbitrary output
//! points, so input and output grids are independent. Phase factors along the
//! input grid are generated by a complex recurrence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::types::GridFunction1D;

fn phase_sum(g: &GridFunction1D, freq: f64) -> Complex64 {
    let h = g.step();
    let w = g.samples();
    let step = Complex64::from_polar(1.0, freq * h);
    let mut ph = Complex64::from_polar(1.0, freq * g.lo());
    let mut acc = Complex64::new(0.0, 0.0);
    let last = w.len() - 1;
    for (i, &v) in w.iter().enumerate() {
        let c = if i == 0 || i == last { 0.5 } else { 1.0 };
        acc += v * ph * c;
        ph *= step;
        // re-anchor to keep the recurrence drift below roundoff
        if i % 256 == 255 {
            ph = Complex64::from_polar(1.0, freq * g.node(i + 1));
        }
    }
    acc * h
}

/// `f̂(t) = ∫ e^{its} f(s) ds` at each `t` in `at`.
pub fn forward(f: &GridFunction1D, at: &[f64]) -> Vec<Complex64> {
    at.par_iter().map(|&t| phase_sum(f, t)).collect()
}

/// `f(s) = (1/2π) ∫ e^{−its} f̂(t) dt` at each `s` in `at`.
pub fn inverse(fhat: &GridFunction1D, at: &[f64]) -> Vec<Complex64> {
    at.par_iter().map(|&s| phase_sum(fhat, -s) / (2.0 * PI)).collect()
}

/// `count` uniform points on `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let h = (hi - lo) / (count.max(2) - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + i as f64 * h })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_round_trip() {
        // shifted Gaussian: complex transform, pins the sign of the phase
        let f = |s: f64| Complex64::new((-(s - 0.5) * (s - 0.5) / 2.0).exp(), 0.0);
        let fg = GridFunction1D::from_fn(-20.0, 20.0, 801, f).unwrap();
        let ts = linspace(-20.0, 20.0, 801);
        let fhat = forward(&fg, &ts);
        // ∫ e^{its} e^{−(s−a)²/2} ds = √(2π) e^{ita} e^{−t²/2}
        for (t, v) in ts.iter().zip(&fhat) {
            let exact = Complex64::from_polar((2.0 * PI).sqrt() * (-t * t / 2.0).exp(), 0.5 * t);
            assert!((v - exact).norm() < 1e-12, "t = {t}");
        }
        let fh = GridFunction1D::new(-20.0, 20.0, fhat).unwrap();
        let ss = linspace(-3.0, 3.0, 61);
        let back = inverse(&fh, &ss);
        for (s, v) in ss.iter().zip(&back) {
            assert!((v - f(*s)).norm() < 1e-10, "s = {s}");
        }
    }
}
