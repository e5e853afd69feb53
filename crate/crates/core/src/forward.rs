// SPDX-License-Identifier: Apache-2.0

//! Transfer matrices, de Branges and Weyl functions, and the discrete
//! spectral measure of the regular problem on `[0, N]`.
//!
//! Between atoms the transfer matrix solves `T′ = −J(μ(x) − z)T`. Each step
//! uses the fourth-order Magnus expansion at the two Gauss points, whose
//! generator is traceless, so every step is an exact `SL(2)` matrix and the
//! free field is integrated without error. Steps live on the fixed grid
//! `x_i = i·N/steps` and are split at atom positions and at the target.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{expm_traceless, Matrix2C};
use crate::quad;
use crate::types::{
    jump_factor, CanonicalSystem, DiracMeasure, JumpDirection, SpectralAtom, SpectralMeasure,
};

/// Minimum accepted number of ODE steps on `[0, N]`.
pub const MIN_STEPS: usize = 16;

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
const SQRT3_12: f64 = 0.144_337_567_297_406_4;

/// Snapshot of the transfer matrix after propagation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferState {
    pub x: f64,
    pub z: Complex64,
    pub t: Matrix2C,
}

fn generator(mu: &DiracMeasure, x: f64, z: Complex64) -> Matrix2C {
    let mut m = mu.density_matrix(x);
    m.a11 -= z;
    m.a22 -= z;
    -(Matrix2C::j() * m)
}

/// One Magnus step of `T′ = −J(μ − z)T` from `a` to `b`.
fn magnus_step(mu: &DiracMeasure, a: f64, b: f64, z: Complex64) -> Matrix2C {
    let h = b - a;
    let mid = 0.5 * (a + b);
    let a1 = generator(mu, mid - SQRT3_6 * h, z);
    let a2 = generator(mu, mid + SQRT3_6 * h, z);
    let omega = (a1 + a2) * (0.5 * h) + a2.commutator(&a1) * (SQRT3_12 * h * h);
    expm_traceless(&omega)
}

fn check_args(mu: &DiracMeasure, x: f64, steps: usize) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite("position"));
    }
    if x < 0.0 || x > mu.n() {
        return Err(Error::OutOfRange { x, n: mu.n() });
    }
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!("steps {steps} below minimum {MIN_STEPS}")));
    }
    Ok(())
}

/// Visits every factor of the propagation from `a` to `b` (`a ≤ b`) in order:
/// each sub-step and each atom in `(a, b]`, the latter after the step that
/// ends at it. The callback receives the position reached and the factor.
fn propagate(
    mu: &DiracMeasure,
    a: f64,
    b: f64,
    z: Complex64,
    steps: usize,
    mut visit: impl FnMut(f64, Matrix2C),
) -> Result<()> {
    let h = mu.n() / steps as f64;
    let mut atoms = mu.point_masses().iter().filter(|p| p.x > a && p.x <= b).peekable();
    let mut x = a;
    let mut node = ((a / h).floor() as usize + 1).min(steps);
    while x < b {
        let grid_next = if node >= steps { mu.n() } else { node as f64 * h };
        let mut next = grid_next.min(b);
        let atom_here = atoms.peek().filter(|p| p.x <= next).copied();
        if let Some(pm) = atom_here {
            next = pm.x;
        }
        if next > x {
            visit(next, magnus_step(mu, x, next, z));
        }
        if let Some(pm) = atom_here {
            visit(pm.x, jump_factor(pm, JumpDirection::LeftToRight)?);
            atoms.next();
        }
        if next >= grid_next {
            node += 1;
        }
        x = next;
    }
    Ok(())
}

/// Transfer matrix `T(x, z)` with `T(0, z) = I`.
pub fn transfer_matrix(mu: &DiracMeasure, x: f64, z: Complex64, steps: usize) -> Result<Matrix2C> {
    transfer_between(mu, 0.0, x, z, steps)
}

/// Transfer matrix from `x1` to `x2`: the solution at `x2` of the initial
/// value problem with identity data at `x1`. Atoms in `(x1, x2]` are crossed.
pub fn transfer_between(
    mu: &DiracMeasure,
    x1: f64,
    x2: f64,
    z: Complex64,
    steps: usize,
) -> Result<Matrix2C> {
    check_args(mu, x1, steps)?;
    check_args(mu, x2, steps)?;
    if x2 < x1 {
        return Err(Error::InvalidInput(format!("propagation runs backwards: {x1} > {x2}")));
    }
    if !z.is_finite() {
        return Err(Error::NonFinite("spectral parameter"));
    }
    let mut t = Matrix2C::identity();
    propagate(mu, x1, x2, z, steps, |_, s| t = s * t)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("transfer matrix"));
    }
    Ok(t)
}

/// `T(x, z)` recorded at every break point of the propagation on `[0, N]`.
/// At an atom the path holds two samples with the same `x`: before and after
/// the jump.
pub fn transfer_path(mu: &DiracMeasure, z: Complex64, steps: usize) -> Result<Vec<TransferState>> {
    check_args(mu, mu.n(), steps)?;
    let mut t = Matrix2C::identity();
    let mut path = vec![TransferState { x: 0.0, z, t }];
    propagate(mu, 0.0, mu.n(), z, steps, |x, s| {
        t = s * t;
        path.push(TransferState { x, z, t });
    })?;
    Ok(path)
}

/// `E_N(z) = u₁(N, z) − i·u₂(N, z)`.
pub fn db_function(mu: &DiracMeasure, z: Complex64, steps: usize) -> Result<Complex64> {
    let t = transfer_matrix(mu, mu.n(), z, steps)?;
    Ok(t.a11 - Complex64::i() * t.a21)
}

/// `E_N` on `count` uniform real points of `[−omega, omega]`, in parallel.
pub fn db_grid(
    mu: &DiracMeasure,
    omega: f64,
    count: usize,
    steps: usize,
) -> Result<crate::types::GridFunction1D> {
    if !(omega > 0.0 && omega.is_finite()) || count < 2 {
        return Err(Error::InvalidInput(format!("bad E grid: omega {omega}, count {count}")));
    }
    let h = 2.0 * omega / (count - 1) as f64;
    let samples = (0..count)
        .into_par_iter()
        .map(|i| db_function(mu, Complex64::new(-omega + i as f64 * h, 0.0), steps))
        .collect::<Result<Vec<_>>>()?;
    crate::types::GridFunction1D::new(-omega, omega, samples)
}

/// Möbius action `(a·w1 + b·w2)/(c·w1 + d·w2)` of `m` on the projective
/// point `[w1 : w2]`.
pub fn mobius(m: &Matrix2C, w: [f64; 2]) -> Result<Complex64> {
    let num = m.a11 * w[0] + m.a12 * w[1];
    let den = m.a21 * w[0] + m.a22 * w[1];
    if den.norm() <= 1e-300 || den.norm() < 1e-14 * num.norm() {
        return Err(Error::MobiusDenominator(den.norm()));
    }
    Ok(num / den)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..std::f64::consts::PI).contains(&beta) {
        return Err(Error::InvalidInput(format!("beta {beta} outside [0, π)")));
    }
    Ok(())
}

/// Weyl function `m_N^β(z)`: the Möbius action of `T⁻¹(N, z)` on the
/// boundary direction `(cos β, sin β)` (the projective form of `cot β`).
pub fn weyl_function(mu: &DiracMeasure, beta: f64, z: Complex64, steps: usize) -> Result<Complex64> {
    check_beta(beta)?;
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane { im: z.im });
    }
    let t = transfer_matrix(mu, mu.n(), z, steps)?;
    let inv = t.inverse().ok_or(Error::Singular)?;
    mobius(&inv, [beta.cos(), beta.sin()])
}

/// The boundary function `w(λ) = sin β·u₁(N, λ) − cos β·u₂(N, λ)` whose
/// zeros are the eigenvalues.
pub fn boundary_function(mu: &DiracMeasure, beta: f64, lambda: f64, steps: usize) -> Result<f64> {
    let t = transfer_matrix(mu, mu.n(), Complex64::new(lambda, 0.0), steps)?;
    Ok(beta.sin() * t.a11.re - beta.cos() * t.a21.re)
}

/// Options for the eigenvalue scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenScan {
    pub steps: usize,
    /// Scan cell as a fraction of the free spacing `π/N`.
    pub cell_fraction: f64,
    /// How many times the cell may be halved before giving up.
    pub max_refinements: usize,
    pub bisection_tol: f64,
}

impl Default for EigenScan {
    fn default() -> Self {
        Self {
            steps: 512,
            cell_fraction: 0.125,
            max_refinements: 4,
            bisection_tol: Tolerances::default().bisection,
        }
    }
}

fn sign_changes(values: &[(f64, f64)]) -> Vec<(f64, f64, f64, f64)> {
    values
        .windows(2)
        .filter(|w| w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum() && w[1].1 != 0.0)
        .map(|w| (w[0].0, w[0].1, w[1].0, w[1].1))
        .collect()
}

fn scan(
    mu: &DiracMeasure,
    beta: f64,
    lo: f64,
    hi: f64,
    cells: usize,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    let h = (hi - lo) / cells as f64;
    (0..=cells)
        .into_par_iter()
        .map(|i| {
            let l = if i == cells { hi } else { lo + i as f64 * h };
            boundary_function(mu, beta, l, steps).map(|w| (l, w))
        })
        .collect()
}

/// Eigenvalues of the regular problem with boundary angle `beta` inside
/// `[lo, hi]`, by sign-change scan plus bisection.
///
/// The scan is repeated at half the cell; if the two root counts differ the
/// cell is halved again, up to `max_refinements` times.
pub fn eigenvalues(
    mu: &DiracMeasure,
    beta: f64,
    window: [f64; 2],
    opts: &EigenScan,
) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let [lo, hi] = window;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidInput(format!("bad eigenvalue window [{lo}, {hi}]")));
    }
    let base = opts.cell_fraction * std::f64::consts::PI / mu.n();
    let mut cells = ((hi - lo) / base).ceil().max(1.0) as usize;
    let mut coarse = scan(mu, beta, lo, hi, cells, opts.steps)?;
    let mut stable = None;
    for _ in 0..=opts.max_refinements {
        cells *= 2;
        let fine = scan(mu, beta, lo, hi, cells, opts.steps)?;
        if sign_changes(&fine).len() == sign_changes(&coarse).len() {
            stable = Some(fine);
            break;
        }
        coarse = fine;
    }
    let values = stable.ok_or(Error::ScanTooCoarse { refinements: opts.max_refinements })?;
    sign_changes(&values)
        .into_par_iter()
        .map(|(mut a, mut fa, mut b, _)| {
            if fa == 0.0 {
                return Ok(a);
            }
            while b - a > opts.bisection_tol {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let fm = boundary_function(mu, beta, m, opts.steps)?;
                if fm == 0.0 {
                    return Ok(m);
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            Ok(0.5 * (a + b))
        })
        .collect()
}

/// `∫₀ᴺ |u(s, λ)|² ds` for real `λ`, trapezoid over the propagation path.
pub fn eigenfunction_norm2(mu: &DiracMeasure, lambda: f64, steps: usize) -> Result<f64> {
    let path = transfer_path(mu, Complex64::new(lambda, 0.0), steps)?;
    let sq = |s: &TransferState| s.t.a11.norm_sqr() + s.t.a21.norm_sqr();
    Ok(path
        .windows(2)
        .map(|w| 0.5 * (w[1].x - w[0].x) * (sq(&w[0]) + sq(&w[1])))
        .sum())
}

/// Discrete spectral measure with weights `1/∫|u(·, λ_k)|²`.
pub fn spectral_measure(
    mu: &DiracMeasure,
    beta: f64,
    window: [f64; 2],
    opts: &EigenScan,
    quad_steps: usize,
) -> Result<SpectralMeasure> {
    let lambdas = eigenvalues(mu, beta, window, opts)?;
    let atoms = lambdas
        .into_par_iter()
        .map(|lambda| {
            let n2 = eigenfunction_norm2(mu, lambda, quad_steps)?;
            Ok(SpectralAtom { lambda, weight: 1.0 / n2 })
        })
        .collect::<Result<Vec<_>>>()?;
    SpectralMeasure::new(mu.n(), beta, atoms)
}

/// `τ = ∫₀ᴺ sqrt(det H)`, with negative determinants clipped to zero.
pub fn exponential_type(h: &CanonicalSystem) -> f64 {
    let v: Vec<f64> = (0..h.len()).map(|i| h.det(i).max(0.0).sqrt()).collect();
    quad::trapezoid(&v, h.step())
}

/// Transfer matrix of the canonical system `U′ = zJH(x)U`, `U(0) = I`.
///
/// Classical RK4 with step `2h`, using the odd samples as midpoints when the
/// sample count is odd; otherwise step `h` with linearly interpolated
/// midpoints.
pub fn canonical_transfer(h: &CanonicalSystem, z: Complex64) -> Matrix2C {
    let zj = Matrix2C::j() * z;
    let f = |s: [f64; 3], u: Matrix2C| zj * Matrix2C::from_real(s[0], s[1], s[1], s[2]) * u;
    let mut u = Matrix2C::identity();
    let samples = h.samples();
    let rk4 = |u: Matrix2C, a: [f64; 3], m: [f64; 3], b: [f64; 3], dx: f64| {
        let k1 = f(a, u);
        let k2 = f(m, u + k1 * (0.5 * dx));
        let k3 = f(m, u + k2 * (0.5 * dx));
        let k4 = f(b, u + k3 * dx);
        u + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dx / 6.0)
    };
    if samples.len() % 2 == 1 {
        let dx = 2.0 * h.step();
        for i in (0..samples.len() - 1).step_by(2) {
            u = rk4(u, samples[i], samples[i + 1], samples[i + 2], dx);
        }
    } else {
        let dx = h.step();
        for i in 0..samples.len() - 1 {
            let m = h.at((i as f64 + 0.5) * dx);
            u = rk4(u, samples[i], m, samples[i + 1], dx);
        }
    }
    u
}

/// Weyl function of a canonical system with boundary direction `dir` at `N`:
/// the Möbius action of `U⁻¹(N, z)` on `dir`.
pub fn canonical_weyl_function(h: &CanonicalSystem, dir: [f64; 2], z: Complex64) -> Result<Complex64> {
    if !(z.im > 0.0) {
        return Err(Error::NotUpperHalfPlane { im: z.im });
    }
    let u = canonical_transfer(h, z);
    let inv = u.inverse().ok_or(Error::Singular)?;
    mobius(&inv, dir)
}
