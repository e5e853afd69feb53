// SPDX-License-Identifier: Apache-2.0

//! Domain data model: Dirac measures, sampled grid functions, spectral
//! measures, Gelfand-Levitan functions and canonical systems.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::matrix::{coshm1c, sinhc, Matrix2C};

/// An atom `μ{x} = [[mu1, mu2], [mu2, −mu1]]` of a Dirac measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub x: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl PointMass {
    pub fn new(x: f64, mu1: f64, mu2: f64) -> Result<Self> {
        let pm = Self { x, mu1, mu2 };
        pm.validate()?;
        Ok(pm)
    }

    fn validate(&self) -> Result<()> {
        if !(self.x.is_finite() && self.mu1.is_finite() && self.mu2.is_finite()) {
            return Err(Error::NonFinite("point mass"));
        }
        if self.x <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "point mass position {} must be positive",
                self.x
            )));
        }
        if self.weight() == 0.0 {
            return Err(Error::DegeneratePointMass { x: self.x });
        }
        Ok(())
    }

    /// `t(x) = sqrt(mu1² + mu2²)`.
    pub fn weight(&self) -> f64 {
        self.mu1.hypot(self.mu2)
    }

    pub fn matrix(&self) -> Matrix2C {
        Matrix2C::symmetric_traceless(self.mu1, self.mu2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpDirection {
    /// `f(x) = e^{−Jμ{x}} f(x−)`.
    LeftToRight,
    /// `f(x−) = e^{Jμ{x}} f(x)`.
    RightToLeft,
}

/// Closed-form jump factor across an atom, using `(Jμ)² = t²·I`.
pub fn jump_factor(pm: &PointMass, direction: JumpDirection) -> Result<Matrix2C> {
    let t = pm.weight();
    if t == 0.0 || !t.is_finite() {
        return Err(Error::DegeneratePointMass { x: pm.x });
    }
    let t2 = Complex64::new(t * t, 0.0);
    let cosh = Complex64::new(1.0, 0.0) + t2 * coshm1c(t2);
    let jmu = Matrix2C::j() * pm.matrix();
    let sign = match direction {
        JumpDirection::LeftToRight => -1.0,
        JumpDirection::RightToLeft => 1.0,
    };
    Ok(Matrix2C::identity() * cosh + jmu * (sinhc(t2) * sign))
}

#[derive(Debug, Deserialize, Serialize)]
struct DiracMeasureRepr {
    #[serde(rename = "N")]
    n: f64,
    #[serde(default)]
    grid: Vec<[f64; 2]>,
    #[serde(default)]
    point_masses: Vec<PointMass>,
}

/// The coefficient of a Dirac system on `[0, N]`: a sampled absolutely
/// continuous density plus finitely many atoms.
///
/// The density is stored on a uniform grid including both endpoints and is
/// interpolated piecewise linearly. An empty grid means a zero density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiracMeasureRepr", into = "DiracMeasureRepr")]
pub struct DiracMeasure {
    n: f64,
    grid: Vec<[f64; 2]>,
    point_masses: Vec<PointMass>,
}

impl TryFrom<DiracMeasureRepr> for DiracMeasure {
    type Error = Error;
    fn try_from(r: DiracMeasureRepr) -> Result<Self> {
        DiracMeasure::new(r.n, r.grid, r.point_masses)
    }
}

impl From<DiracMeasure> for DiracMeasureRepr {
    fn from(m: DiracMeasure) -> Self {
        Self { n: m.n, grid: m.grid, point_masses: m.point_masses }
    }
}

impl DiracMeasure {
    pub fn new(n: f64, grid: Vec<[f64; 2]>, mut point_masses: Vec<PointMass>) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!("interval length {n} must be positive")));
        }
        if grid.len() == 1 {
            return Err(Error::InvalidInput("density grid needs at least two samples".into()));
        }
        if grid.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("density grid"));
        }
        for pm in &point_masses {
            pm.validate()?;
            if pm.x > n {
                return Err(Error::OutOfRange { x: pm.x, n });
            }
        }
        point_masses.sort_by(|a, b| a.x.total_cmp(&b.x));
        if point_masses.windows(2).any(|w| w[0].x == w[1].x) {
            return Err(Error::InvalidInput("point-mass positions must be distinct".into()));
        }
        Ok(Self { n, grid, point_masses })
    }

    pub fn zero(n: f64) -> Self {
        Self { n, grid: Vec::new(), point_masses: Vec::new() }
    }

    /// Samples `f(x) = (mu1, mu2)` on `count` uniform nodes of `[0, N]`.
    pub fn from_fn(n: f64, count: usize, f: impl Fn(f64) -> (f64, f64)) -> Result<Self> {
        let h = n / (count.max(2) - 1) as f64;
        let grid = (0..count.max(2))
            .map(|i| {
                let (a, b) = f(i as f64 * h);
                [a, b]
            })
            .collect();
        Self::new(n, grid, Vec::new())
    }

    pub fn with_point_masses(self, point_masses: Vec<PointMass>) -> Result<Self> {
        Self::new(self.n, self.grid, point_masses)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn grid(&self) -> &[[f64; 2]] {
        &self.grid
    }

    pub fn point_masses(&self) -> &[PointMass] {
        &self.point_masses
    }

    pub fn is_ac(&self) -> bool {
        self.point_masses.is_empty()
    }

    pub fn grid_step(&self) -> Option<f64> {
        (self.grid.len() >= 2).then(|| self.n / (self.grid.len() - 1) as f64)
    }

    /// Density `(mu1(x), mu2(x))`, clamped to the end samples outside `[0, N]`.
    pub fn density_at(&self, x: f64) -> (f64, f64) {
        let Some(h) = self.grid_step() else {
            return (0.0, 0.0);
        };
        let last = self.grid.len() - 1;
        let s = (x / h).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let w = s - i as f64;
        let (a, b) = (self.grid[i], self.grid[i + 1]);
        (a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1]))
    }

    pub fn density_matrix(&self, x: f64) -> Matrix2C {
        let (a, b) = self.density_at(x);
        Matrix2C::symmetric_traceless(a, b)
    }

    /// `∫₀ᴺ sqrt(mu1² + mu2²) dx` of the density (trapezoid on the samples).
    pub fn l1_norm(&self) -> f64 {
        let Some(h) = self.grid_step() else {
            return 0.0;
        };
        let v: Vec<f64> = self.grid.iter().map(|p| p[0].hypot(p[1])).collect();
        crate::quad::trapezoid(&v, h)
    }

    /// Total variation: atom weights plus the density's L¹ norm.
    pub fn total_variation(&self) -> f64 {
        self.l1_norm() + self.point_masses.iter().map(PointMass::weight).sum::<f64>()
    }

    /// `max_i |μ_i|((a, b])` for the density part, by trapezoid on a fine
    /// resampling of the interpolant.
    pub fn component_variation(&self, a: f64, b: f64) -> f64 {
        let m = 2048;
        let h = (b - a) / m as f64;
        let mut v1 = Vec::with_capacity(m + 1);
        let mut v2 = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let (p, q) = self.density_at(a + i as f64 * h);
            v1.push(p.abs());
            v2.push(q.abs());
        }
        let atoms = |f: fn(&PointMass) -> f64| {
            self.point_masses.iter().filter(|p| p.x > a && p.x <= b).map(f).sum::<f64>()
        };
        let t1 = crate::quad::trapezoid(&v1, h) + atoms(|p| p.mu1.abs());
        let t2 = crate::quad::trapezoid(&v2, h) + atoms(|p| p.mu2.abs());
        t1.max(t2)
    }
}

/// Uniform complex samples on `[lo, hi]`, both endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D {
    lo: f64,
    hi: f64,
    samples: Vec<Complex64>,
}

impl GridFunction1D {
    pub fn new(lo: f64, hi: f64, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("grid function needs at least two samples".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidInput(format!("bad grid range [{lo}, {hi}]")));
        }
        if samples.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("grid samples"));
        }
        Ok(Self { lo, hi, samples })
    }

    pub fn from_fn(lo: f64, hi: f64, count: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let h = (hi - lo) / (count.max(2) - 1) as f64;
        let samples = (0..count.max(2)).map(|i| f(lo + i as f64 * h)).collect();
        Self::new(lo, hi, samples)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.samples.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.samples.len() {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(|i| self.node(i))
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Piecewise-linear interpolation; `None` outside `[lo, hi]` beyond a
    /// relative slack of 1e−12.
    pub fn interpolate(&self, x: f64) -> Option<Complex64> {
        let slack = 1e-12 * (self.hi - self.lo);
        if x < self.lo - slack || x > self.hi + slack {
            return None;
        }
        let last = self.samples.len() - 1;
        let s = ((x - self.lo) / self.step()).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let w = s - i as f64;
        Some(self.samples[i] * (1.0 - w) + self.samples[i + 1] * w)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// A Gelfand-Levitan function on `[−2N, 2N]`, Hermitian-symmetric:
/// `φ(−x) = conj φ(x)` holds exactly at mirrored samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GLFunction {
    n: f64,
    samples: GridFunction1D,
}

impl GLFunction {
    /// Builds from samples on `[−2N, 2N]` (odd count, so 0 is a node) and
    /// symmetrises them.
    pub fn new(n: f64, mut samples: Vec<Complex64>) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!("interval length {n} must be positive")));
        }
        if samples.len() < 3 || samples.len().is_multiple_of(2) {
            return Err(Error::InvalidInput(format!(
                "GL function needs an odd sample count >= 3, got {}",
                samples.len()
            )));
        }
        let m = samples.len();
        for i in 0..=m / 2 {
            let k = m - 1 - i;
            let s = (samples[i] + samples[k].conj()) * 0.5;
            samples[i] = s;
            samples[k] = s.conj();
        }
        Ok(Self { n, samples: GridFunction1D::new(-2.0 * n, 2.0 * n, samples)? })
    }

    pub fn zero(n: f64, count: usize) -> Result<Self> {
        Self::new(n, vec![Complex64::new(0.0, 0.0); count])
    }

    pub fn from_fn(n: f64, count: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let g = GridFunction1D::from_fn(-2.0 * n, 2.0 * n, count, f)?;
        Self::new(n, g.samples)
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn grid(&self) -> &GridFunction1D {
        &self.samples
    }

    pub fn samples(&self) -> &[Complex64] {
        self.samples.samples()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Interpolated value; `None` for `|x| > 2N`.
    pub fn eval(&self, x: f64) -> Option<Complex64> {
        self.samples.interpolate(x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.sup_norm()
    }

    /// Largest `|φ(−x) − conj φ(x)|` over mirrored samples.
    pub fn symmetry_defect(&self) -> f64 {
        let s = self.samples();
        let m = s.len();
        (0..m).map(|i| (s[m - 1 - i] - s[i].conj()).norm()).fold(0.0, f64::max)
    }

    /// `Φ(x) = ∫₀ˣ φ` of the piecewise-linear interpolant.
    pub fn antiderivative(&self) -> Antiderivative {
        let s = self.samples();
        let h = self.samples.step();
        let mid = s.len() / 2;
        let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
        for i in mid + 1..s.len() {
            out[i] = out[i - 1] + (s[i] + s[i - 1]) * (0.5 * h);
        }
        for i in (0..mid).rev() {
            out[i] = out[i + 1] - (s[i] + s[i + 1]) * (0.5 * h);
        }
        let nodes = GridFunction1D { lo: self.samples.lo, hi: self.samples.hi, samples: out };
        Antiderivative { phi: self.samples.clone(), nodes }
    }
}

/// Antiderivative of a piecewise-linear function, exact (piecewise
/// quadratic) between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Antiderivative {
    phi: GridFunction1D,
    nodes: GridFunction1D,
}

impl Antiderivative {
    /// Values at the nodes of the underlying grid.
    pub fn grid(&self) -> &GridFunction1D {
        &self.nodes
    }

    /// `Φ(x)`; `None` outside the grid range.
    pub fn eval(&self, x: f64) -> Option<Complex64> {
        let g = &self.phi;
        let slack = 1e-12 * (g.hi - g.lo);
        if x < g.lo - slack || x > g.hi + slack {
            return None;
        }
        let h = g.step();
        let last = g.samples.len() - 1;
        let s = ((x - g.lo) / h).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let d = x - g.node(i);
        let (a, b) = (g.samples[i], g.samples[i + 1]);
        Some(self.nodes.samples[i] + a * d + (b - a) * (0.5 * d * d / h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralAtom {
    pub lambda: f64,
    pub weight: f64,
}

/// Discrete spectral measure of the regular problem on `[0, N]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    #[serde(rename = "N")]
    pub n: f64,
    pub beta: f64,
    pub atoms: Vec<SpectralAtom>,
}

impl SpectralMeasure {
    pub fn new(n: f64, beta: f64, atoms: Vec<SpectralAtom>) -> Result<Self> {
        if !(0.0..std::f64::consts::PI).contains(&beta) {
            return Err(Error::InvalidInput(format!("beta {beta} outside [0, π)")));
        }
        if atoms.iter().any(|a| !(a.weight > 0.0 && a.weight.is_finite())) {
            return Err(Error::InvalidInput("spectral weights must be positive".into()));
        }
        if atoms.windows(2).any(|w| w[1].lambda <= w[0].lambda) {
            return Err(Error::InvalidInput("eigenvalues must be strictly increasing".into()));
        }
        Ok(Self { n, beta, atoms })
    }
}

/// A canonical system `u′ = zJHu` sampled on a uniform grid of `[0, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    n: f64,
    samples: Vec<[f64; 3]>,
}

impl CanonicalSystem {
    /// Validates finiteness and positive semidefiniteness (slack `tol.psd`).
    pub fn new(n: f64, samples: Vec<[f64; 3]>, tol: &Tolerances) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!("interval length {n} must be positive")));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidInput("canonical system needs at least two samples".into()));
        }
        let h = n / (samples.len() - 1) as f64;
        for (i, s) in samples.iter().enumerate() {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("canonical system"));
            }
            let det = s[0] * s[2] - s[1] * s[1];
            if s[0] < -tol.psd || s[2] < -tol.psd || det < -tol.psd {
                return Err(Error::InvalidInput(format!(
                    "H not positive semidefinite at x = {}",
                    i as f64 * h
                )));
            }
        }
        Ok(Self { n, samples })
    }

    pub fn identity(n: f64, count: usize) -> Self {
        Self { n, samples: vec![[1.0, 0.0, 1.0]; count.max(2)] }
    }

    pub fn n(&self) -> f64 {
        self.n
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.n / (self.samples.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    pub fn det(&self, i: usize) -> f64 {
        let s = self.samples[i];
        s[0] * s[2] - s[1] * s[1]
    }

    pub fn max_det_deviation(&self) -> f64 {
        (0..self.len()).map(|i| (self.det(i) - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn matrix(&self, i: usize) -> Matrix2C {
        let s = self.samples[i];
        Matrix2C::from_real(s[0], s[1], s[1], s[2])
    }

    /// Piecewise-linear interpolation, clamped to `[0, N]`.
    pub fn at(&self, x: f64) -> [f64; 3] {
        let last = self.samples.len() - 1;
        let s = (x / self.step()).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last - 1);
        let w = s - i as f64;
        let (a, b) = (self.samples[i], self.samples[i + 1]);
        [0, 1, 2].map(|k| a[k] + w * (b[k] - a[k]))
    }
}
