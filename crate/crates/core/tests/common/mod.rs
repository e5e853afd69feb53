// SPDX-License-Identifier: Apache-2.0

//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use dirac_spectral::{Complex64, DiracMeasure, Matrix2C, PointMass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix exponential by scaling and squaring of a 24-term Taylor sum.
/// Makes no use of the trace-free structure.
pub fn expm(m: &Matrix2C) -> Matrix2C {
    let norm = m.max_abs() * 2.0;
    let mut s = 0;
    while norm / f64::from(1u32 << s.min(30)) > 0.25 && s < 60 {
        s += 1;
    }
    let a = *m * (0.5f64).powi(s);
    let mut term = Matrix2C::identity();
    let mut sum = Matrix2C::identity();
    for k in 1..=24 {
        term = term * a * (1.0 / k as f64);
        sum += term;
    }
    for _ in 0..s {
        sum = sum * sum;
    }
    sum
}

/// Generator `−J(μ − z)` of the constant-coefficient system.
pub fn constant_generator(mu1: f64, mu2: f64, z: Complex64) -> Matrix2C {
    let mut m = Matrix2C::symmetric_traceless(mu1, mu2);
    m.a11 -= z;
    m.a22 -= z;
    -(Matrix2C::j() * m)
}

/// Free-field transfer matrix `cos(zx)·I + sin(zx)·J`.
pub fn free_transfer(x: f64, z: Complex64) -> Matrix2C {
    Matrix2C::identity() * (z * x).cos() + Matrix2C::j() * (z * x).sin()
}

/// The smooth two-component bump used across the suites; vanishes with its
/// derivative at both ends of `[0, 1]`, L¹ norm about 0.5.
pub fn bump(count: usize) -> DiracMeasure {
    DiracMeasure::from_fn(1.0, count, bump_at).unwrap()
}

pub fn bump_at(x: f64) -> (f64, f64) {
    let s = (PI * x).sin().powi(2);
    (0.6 * s * (2.0 * x).cos(), 0.8 * s)
}

/// Random smooth density: a few low Fourier modes, scaled to `amp`.
pub fn random_smooth(rng: &mut ChaCha8Rng, n: f64, count: usize, amp: f64) -> DiracMeasure {
    let coeffs: Vec<[f64; 4]> = (0..3)
        .map(|_| {
            [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ]
        })
        .collect();
    DiracMeasure::from_fn(n, count, |x| {
        let mut a = 0.0;
        let mut b = 0.0;
        for (k, cf) in coeffs.iter().enumerate() {
            let w = (k + 1) as f64 * PI * x / n;
            a += cf[0] * w.cos() + cf[1] * w.sin();
            b += cf[2] * w.cos() + cf[3] * w.sin();
        }
        (amp * a / 3.0, amp * b / 3.0)
    })
    .unwrap()
}

/// Random smooth bump vanishing at both ends, so that the canonical system
/// built from it is smooth in the interior and flat at the boundary.
pub fn random_bump(rng: &mut ChaCha8Rng, count: usize, amp: f64) -> DiracMeasure {
    let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    DiracMeasure::from_fn(1.0, count, |x| {
        let s = (PI * x).sin().powi(2);
        (amp * s * (a[0] + a[1] * (2.0 * PI * x).cos()), amp * s * (a[2] + a[3] * (PI * x).sin()))
    })
    .unwrap()
}

/// Up to `max` atoms at random positions in `(0, n)`, weights in `(0.05, 1.5)`.
pub fn random_atoms(rng: &mut ChaCha8Rng, n: f64, max: usize) -> Vec<PointMass> {
    let count = rng.random_range(0..=max);
    let mut atoms: Vec<PointMass> = Vec::new();
    while atoms.len() < count {
        let x = rng.random_range(0.02 * n..n);
        if atoms.iter().any(|p| (p.x - x).abs() < 1e-6) {
            continue;
        }
        let t = rng.random_range(0.05..1.5);
        let ang = rng.random_range(0.0..2.0 * PI);
        atoms.push(PointMass::new(x, t * ang.cos(), t * ang.sin()).unwrap());
    }
    atoms
}

/// Brute-force nested trapezoid sum of `v_{n,2}` over the simplex, with
/// explicit loops and per-level trapezoid weights. `dP` density is
/// `p(t) = μ₂ − iμ₁` sampled at the nodes.
pub fn nested_v(p: &[Complex64], h: f64, n: usize, z: Complex64) -> Complex64 {
    let iz2 = c(0.0, 2.0) * z;
    let m = p.len();
    let w = |i: usize, upper: usize| if i == 0 || i == upper { 0.5 * h } else { h };
    // level factor: odd levels conj(p)e^{2izt}, even levels p e^{−2izt}
    let f = |level: usize, i: usize| {
        let t = i as f64 * h;
        if level % 2 == 1 {
            p[i].conj() * (iz2 * t).exp()
        } else {
            p[i] * (-iz2 * t).exp()
        }
    };
    fn rec(
        level: usize,
        n: usize,
        upper: usize,
        f: &dyn Fn(usize, usize) -> Complex64,
        w: &dyn Fn(usize, usize) -> f64,
    ) -> Complex64 {
        if level > n {
            return c(1.0, 0.0);
        }
        if upper == 0 {
            return c(0.0, 0.0);
        }
        (0..=upper).map(|i| f(level, i) * w(i, upper) * rec(level + 1, n, i, f, w)).sum()
    }
    rec(1, n, m - 1, &f, &w) * 0.5
}
