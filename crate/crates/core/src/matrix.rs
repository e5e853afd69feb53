// SPDX-License-Identifier: Apache-2.0

//! 2×2 complex matrices and the closed-form exponentials of sl(2) elements.
//!
//! Every matrix `M` with zero trace satisfies `M² = −det(M)·I`, so its
//! exponential is `cosh(κ)·I + sinh(κ)/κ·M` with `κ² = −det(M)`. The jump
//! factors at point masses and the Magnus steps of the transfer-matrix
//! propagator are both of this form.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::TAYLOR_SWITCH;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Matrix2C {
    pub a11: Complex64,
    pub a12: Complex64,
    pub a21: Complex64,
    pub a22: Complex64,
}

impl Matrix2C {
    pub const fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self { a11, a12, a21, a22 }
    }

    pub fn from_real(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self::new(a11.into(), a12.into(), a21.into(), a22.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    /// The symplectic unit `[[0, −1], [1, 0]]`.
    pub const fn j() -> Self {
        Self::new(ZERO, Complex64::new(-1.0, 0.0), ONE, ZERO)
    }

    /// The symmetric traceless matrix `[[mu1, mu2], [mu2, −mu1]]`.
    pub fn symmetric_traceless(mu1: f64, mu2: f64) -> Self {
        Self::from_real(mu1, mu2, mu2, -mu1)
    }

    pub fn det(&self) -> Complex64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Complex64 {
        self.a11 + self.a22
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.a11, self.a21, self.a12, self.a22)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.a11.conj(), self.a12.conj(), self.a21.conj(), self.a22.conj())
    }

    /// Inverse by the adjugate formula. Returns `None` for a singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Self::new(self.a22 / d, -self.a12 / d, -self.a21 / d, self.a11 / d))
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [self.a11 * v[0] + self.a12 * v[1], self.a21 * v[0] + self.a22 * v[1]]
    }

    pub fn col(&self, k: usize) -> [Complex64; 2] {
        match k {
            0 => [self.a11, self.a21],
            _ => [self.a12, self.a22],
        }
    }

    pub fn max_abs(&self) -> f64 {
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        [self.a11, self.a12, self.a21, self.a22]
            .iter()
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a21.is_finite() && self.a22.is_finite()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    /// Matrix commutator `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }
}

impl Add for Matrix2C {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a11 + o.a11, self.a12 + o.a12, self.a21 + o.a21, self.a22 + o.a22)
    }
}

impl AddAssign for Matrix2C {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Matrix2C {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a11 - o.a11, self.a12 - o.a12, self.a21 - o.a21, self.a22 - o.a22)
    }
}

impl Neg for Matrix2C {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl Mul for Matrix2C {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.a11 * o.a11 + self.a12 * o.a21,
            self.a11 * o.a12 + self.a12 * o.a22,
            self.a21 * o.a11 + self.a22 * o.a21,
            self.a21 * o.a12 + self.a22 * o.a22,
        )
    }
}

impl Mul<Complex64> for Matrix2C {
    type Output = Self;
    fn mul(self, s: Complex64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

impl Mul<f64> for Matrix2C {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }
}

/// `sinh(√k2)/√k2`, even in `√k2` so the branch of the root is irrelevant.
pub fn sinhc(k2: Complex64) -> Complex64 {
    if k2.norm() < TAYLOR_SWITCH * TAYLOR_SWITCH {
        ONE + k2 / 6.0 + k2 * k2 / 120.0 + k2 * k2 * k2 / 5040.0
    } else {
        let k = k2.sqrt();
        k.sinh() / k
    }
}

/// `(cosh(√k2) − 1)/k2` with the limit 1/2 at the origin.
pub fn coshm1c(k2: Complex64) -> Complex64 {
    if k2.norm() < TAYLOR_SWITCH * TAYLOR_SWITCH {
        Complex64::new(0.5, 0.0) + k2 / 24.0 + k2 * k2 / 720.0 + k2 * k2 * k2 / 40320.0
    } else {
        // cosh κ − 1 = 2 sinh²(κ/2) avoids the cancellation near the switch
        let h = sinhc(k2 / 4.0);
        h * h * 0.5
    }
}

fn cosh_sqrt(k2: Complex64) -> Complex64 {
    if k2.norm() < TAYLOR_SWITCH * TAYLOR_SWITCH {
        ONE + k2 * coshm1c(k2)
    } else {
        k2.sqrt().cosh()
    }
}

/// Exponential of a traceless 2×2 matrix. The trace is not checked; callers
/// pass generators that are traceless by construction.
pub fn expm_traceless(m: &Matrix2C) -> Matrix2C {
    let k2 = -m.det();
    Matrix2C::identity() * cosh_sqrt(k2) + *m * sinhc(k2)
}

/// The series `g(D) = Σ_{n≥1} D^{n−1}/n!` for `D` with `D² = s·I`.
///
/// Closed form `sinhc(s)·I + coshm1c(s)·D`; at `D = 0` this is the identity.
pub fn g_of(d: &Matrix2C) -> Matrix2C {
    let s = (*d * *d).a11;
    Matrix2C::identity() * sinhc(s) + *d * coshm1c(s)
}
