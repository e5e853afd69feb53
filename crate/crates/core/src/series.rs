// SPDX-License-Identifier: Apache-2.0

//! Iterated-integral series for the de Branges function of a small-norm
//! measure, used as an independent oracle for the forward solver.
//!
//! For a measure on `(0, δ]` the solution with `f(0) = (1, 1)/2` expands as
//! `f = f(0) + Σ v_n`, and `E_δ(z) = k(δ)e^{−izδ}(1 + 2Σ v_{n,2}(δ, z))`.
//! The n-th term integrates over the simplex `δ ≥ t₁ ≥ … ≥ t_n ≥ 0` against
//! `dP̄(t₁)e^{2izt₁} dP(t₂)e^{−2izt₂} dP̄(t₃)e^{2izt₃} …`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::types::{DiracMeasure, PointMass};

/// Highest series order implemented.
pub const MAX_ORDER: usize = 4;

/// `ω{x} = cosh t(x) − 1`.
pub fn omega_weight(pm: &PointMass) -> f64 {
    let t = pm.weight();
    // cosh t − 1 = 2 sinh²(t/2), no cancellation for small t
    2.0 * (0.5 * t).sinh().powi(2)
}

/// `k(x) = Π_{x_j ≤ x} 1/cosh t(x_j)`; identically 1 without atoms.
pub fn k_function(mu: &DiracMeasure, x: f64) -> f64 {
    mu.point_masses()
        .iter()
        .take_while(|p| p.x <= x)
        .map(|p| 1.0 / p.weight().cosh())
        .product()
}

/// The measure `dP = tanh(t)/t·(dμ₂ − i dμ₁)`: a density on a uniform grid
/// of `[0, N]` (coefficient 1 for the absolutely continuous part) and atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct PMeasure {
    pub n: f64,
    pub density: Vec<Complex64>,
    pub atoms: Vec<(f64, Complex64)>,
}

impl PMeasure {
    /// Density interpolated linearly; zero when the grid is empty.
    pub fn density_at(&self, x: f64) -> Complex64 {
        if self.density.len() < 2 {
            return Complex64::new(0.0, 0.0);
        }
        let last = self.density.len() - 1;
        let s = (x / self.n * last as f64).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let w = s - i as f64;
        self.density[i] * (1.0 - w) + self.density[i + 1] * w
    }

    /// `|P|([0, N])`: trapezoid of the density modulus plus atom moduli.
    pub fn total_variation(&self) -> f64 {
        let ac = if self.density.len() >= 2 {
            let m: Vec<f64> = self.density.iter().map(|c| c.norm()).collect();
            quad::trapezoid(&m, self.n / (m.len() - 1) as f64)
        } else {
            0.0
        };
        ac + self.atoms.iter().map(|a| a.1.norm()).sum::<f64>()
    }
}

/// `tanh(t)/t`, with the limit 1 at `t = 0`.
pub fn dp_coefficient(t: f64) -> f64 {
    if t < 1e-4 {
        1.0 - t * t / 3.0
    } else {
        t.tanh() / t
    }
}

pub fn dp_density(mu: &DiracMeasure) -> PMeasure {
    let density = mu.grid().iter().map(|g| Complex64::new(g[1], -g[0])).collect();
    let atoms = mu
        .point_masses()
        .iter()
        .map(|p| (p.x, Complex64::new(p.mu2, -p.mu1) * dp_coefficient(p.weight())))
        .collect();
    PMeasure { n: mu.n(), density, atoms }
}

/// `v_{n,2}(δ, z)` by nested cumulative trapezoid sums on `dim` uniform
/// nodes of `[0, δ]` (weight 1/2 on coincident nodes).
///
/// Atoms enter only the first-order term; for `n ≥ 2` the measure must be
/// absolutely continuous.
pub fn iterated_v(p: &PMeasure, n: usize, delta: f64, z: Complex64, dim: usize) -> Result<Complex64> {
    iterated_all(p, n, delta, z, dim).map(|v| v[n - 1])
}

/// `[v_{1,2}, …, v_{n,2}]` in one pass per order.
pub fn iterated_all(p: &PMeasure, n: usize, delta: f64, z: Complex64, dim: usize) -> Result<Vec<Complex64>> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidInput(format!("series order {n} outside 1..={MAX_ORDER}")));
    }
    if n >= 2 && !p.atoms.is_empty() {
        return Err(Error::InvalidInput("series terms beyond first order need an AC measure".into()));
    }
    if !(delta > 0.0 && delta <= p.n * (1.0 + 1e-12)) {
        return Err(Error::OutOfRange { x: delta, n: p.n });
    }
    if dim < 3 {
        return Err(Error::InvalidInput(format!("series grid needs >= 3 nodes, got {dim}")));
    }
    let h = delta / (dim - 1) as f64;
    let ts: Vec<f64> = (0..dim).map(|i| i as f64 * h).collect();
    let iz2 = Complex64::new(0.0, 2.0) * z;
    // level integrands: odd levels conj(P)·e^{2izt}, even levels P·e^{−2izt}
    let odd: Vec<Complex64> = ts.iter().map(|&t| p.density_at(t).conj() * (iz2 * t).exp()).collect();
    let even: Vec<Complex64> = ts.iter().map(|&t| p.density_at(t) * (-iz2 * t).exp()).collect();
    let atom_sum: Complex64 = p
        .atoms
        .iter()
        .filter(|a| a.0 <= delta)
        .map(|a| a.1.conj() * (iz2 * a.0).exp())
        .sum();

    let mut out = Vec::with_capacity(n);
    for order in 1..=n {
        // innermost level first
        let mut g = vec![Complex64::new(1.0, 0.0); dim];
        for level in (1..=order).rev() {
            let q = if level % 2 == 1 { &odd } else { &even };
            let f: Vec<Complex64> = q.iter().zip(&g).map(|(a, b)| a * b).collect();
            g = quad::cumulative_trapezoid(&f, h);
        }
        let mut v = g[dim - 1] * 0.5;
        if order == 1 {
            v += atom_sum * 0.5;
        }
        out.push(v);
    }
    Ok(out)
}

/// `p^n/(2·n!)` times `e^{2·max(0, −Im z)·δ}`: the bound on `|v_{n,2}|`.
pub fn term_bound(total_variation: f64, n: usize, delta: f64, z: Complex64) -> f64 {
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    (2.0 * (-z.im).max(0.0) * delta).exp() * total_variation.powi(n as i32) / (2.0 * fact)
}

/// Truncated series value of `E_δ(z)` with its error bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesExpansion {
    pub delta: f64,
    pub z: Complex64,
    pub terms: Vec<Complex64>,
    pub truncation_order: usize,
    pub value: Complex64,
    /// Bound on `|E_δ − value|` from the factorial estimate of the omitted terms.
    pub tail_bound: f64,
    /// `tail_bound` divided by the lower bound `(k/2)|e^{−izδ}|` on `|E_δ|`,
    /// valid for `Im z ≥ 0`.
    pub relative_tail_bound: f64,
    /// Size of the Richardson correction applied to the nested trapezoid
    /// sums; an estimate of their O(h²) error before extrapolation.
    pub quadrature_correction: f64,
}

/// `E_δ(z) = k(δ)e^{−izδ}(1 + 2Σ_{n≤order} v_{n,2}(δ, z))` with `δ = N`.
///
/// The terms are Richardson-extrapolated from `dim` and `(dim + 1)/2` nodes,
/// so `dim` must be odd. Requires `max_i |μ_i|((0, δ]) < 1/8`.
pub fn e_via_series(mu: &DiracMeasure, z: Complex64, order: usize, dim: usize) -> Result<SeriesExpansion> {
    let delta = mu.n();
    let norm = mu.component_variation(0.0, delta);
    if !(norm < 0.125) {
        return Err(Error::SeriesHypothesis(format!("‖μ‖((0, δ]) = {norm} is not below 1/8")));
    }
    if dim < 5 || dim.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("series dim must be odd and >= 5, got {dim}")));
    }
    let p = dp_density(mu);
    let fine = iterated_all(&p, order, delta, z, dim)?;
    let coarse = iterated_all(&p, order, delta, z, dim.div_ceil(2))?;
    let terms: Vec<Complex64> = fine.iter().zip(&coarse).map(|(f, c)| (f * 4.0 - c) / 3.0).collect();
    let correction: Complex64 = fine.iter().zip(&terms).map(|(f, t)| t - f).sum();
    let k = k_function(mu, delta);
    let front = (-Complex64::i() * z * delta).exp() * k;
    let sum: Complex64 = terms.iter().sum();
    let value = front * (Complex64::new(1.0, 0.0) + sum * 2.0);
    let tv = p.total_variation();
    let grow = (2.0 * (-z.im).max(0.0) * delta).exp();
    let partial: f64 = (0..=order)
        .map(|n| tv.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>())
        .sum();
    let tail = grow * (tv.exp() - partial).max(0.0);
    Ok(SeriesExpansion {
        delta,
        z,
        terms,
        truncation_order: order,
        value,
        tail_bound: front.norm() * tail,
        relative_tail_bound: 2.0 * tail,
        quadrature_correction: (front * correction * 2.0).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn omega_and_k() {
        let pm = PointMass::new(0.5, 0.6, 0.8).unwrap();
        assert!((omega_weight(&pm) - (1f64.cosh() - 1.0)).abs() < 1e-15);
        assert!((omega_weight(&pm) - 0.5430806348152437).abs() < 1e-15);
        let mu = DiracMeasure::zero(1.0).with_point_masses(vec![pm]).unwrap();
        assert_eq!(k_function(&mu, 0.49), 1.0);
        assert!((k_function(&mu, 0.5) - 1.0 / 1f64.cosh()).abs() < 1e-15);
        // recursion k(x) = k(x−)/(1 + ω{x})
        assert!((k_function(&mu, 0.7) - 1.0 / (1.0 + omega_weight(&pm))).abs() < 1e-15);
    }

    #[test]
    fn dp_coefficients() {
        assert!((dp_coefficient(2.0) - 0.48201379003790845).abs() < 1e-15);
        assert_eq!(dp_coefficient(0.0), 1.0);
        let mu = DiracMeasure::from_fn(1.0, 5, |_| (0.0, 0.3)).unwrap();
        assert!(dp_density(&mu).density.iter().all(|v| *v == c(0.3, 0.0)));
    }

    #[test]
    fn first_order_constant_density() {
        let cst = 0.05;
        let mu = DiracMeasure::from_fn(1.0, 3, |_| (0.0, cst)).unwrap();
        let p = dp_density(&mu);
        let z = c(1.3, 0.4);
        let v = iterated_v(&p, 1, 1.0, z, 4097).unwrap();
        let exact = (((Complex64::i() * 2.0 * z).exp() - 1.0) / (Complex64::i() * 4.0 * z)) * cst;
        assert!((v - exact).norm() < 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn zero_measure_series() {
        let mu = DiracMeasure::zero(1.0);
        let z = c(0.7, 0.2);
        let s = e_via_series(&mu, z, 4, 65).unwrap();
        assert!((s.value - (-Complex64::i() * z).exp()).norm() < 1e-15);
        assert!(s.terms.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn hypothesis_and_order_guards() {
        let mu = DiracMeasure::from_fn(1.0, 9, |_| (0.0, 0.2)).unwrap();
        assert!(matches!(e_via_series(&mu, c(1.0, 0.0), 4, 65), Err(Error::SeriesHypothesis(_))));
        let p = dp_density(&DiracMeasure::zero(1.0));
        assert!(iterated_v(&p, 5, 1.0, c(1.0, 0.0), 65).is_err());
    }
}
