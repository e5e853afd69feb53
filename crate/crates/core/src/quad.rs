// SPDX-License-Identifier: Apache-2.0

//! Composite quadrature on uniform grids.

use std::ops::{Add, Mul};

/// Composite trapezoid rule for samples spaced `h` apart.
pub fn trapezoid<T>(v: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    match v.len() {
        0 | 1 => T::default(),
        n => {
            let inner = v[1..n - 1].iter().fold(T::default(), |acc, &x| acc + x);
            (inner + (v[0] + v[n - 1]) * 0.5) * h
        }
    }
}

/// Trapezoid weights for `n` nodes spaced `h` apart.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n >= 1 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

/// Composite Simpson rule; falls back to one trapezoid panel at the end when
/// the number of intervals is odd.
pub fn simpson<T>(v: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let n = v.len();
    if n < 3 {
        return trapezoid(v, h);
    }
    let even_end = if (n - 1).is_multiple_of(2) { n - 1 } else { n - 2 };
    let mut acc = v[0] + v[even_end];
    for (i, &x) in v.iter().enumerate().take(even_end).skip(1) {
        acc = acc + x * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let mut total = acc * (h / 3.0);
    if even_end != n - 1 {
        total = total + (v[n - 2] + v[n - 1]) * (0.5 * h);
    }
    total
}

/// Running trapezoid integral, starting at zero.
pub fn cumulative_trapezoid<T>(v: &[T], h: f64) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let mut out = Vec::with_capacity(v.len());
    let mut acc = T::default();
    for (i, &x) in v.iter().enumerate() {
        if i > 0 {
            acc = acc + (v[i - 1] + x) * (0.5 * h);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn rules_on_polynomials() {
        let h = 0.01;
        let v: Vec<f64> = (0..=100).map(|i| (i as f64 * h).powi(3)).collect();
        assert!((simpson(&v, h) - 0.25).abs() < 1e-14);
        assert!((trapezoid(&v, h) - 0.25).abs() < 1e-4);
        let lin: Vec<f64> = (0..=7).map(|i| 2.0 * i as f64).collect();
        assert!((simpson(&lin, 1.0) - 49.0).abs() < 1e-12);
        assert!((trapezoid_weights(5, 0.5).iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cumulative_matches_total() {
        let v: Vec<Complex64> = (0..11).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let c = cumulative_trapezoid(&v, 0.1);
        assert_eq!(c[0], Complex64::new(0.0, 0.0));
        assert!((c[10] - trapezoid(&v, 0.1)).norm() < 1e-14);
    }
}
