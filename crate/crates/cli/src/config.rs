// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::path::PathBuf;

use dirac_spectral::forward::MIN_STEPS;
use dirac_spectral::inverse::MIN_DIM;
use dirac_spectral::Tolerances;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Which way `convert` goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    DiracToH,
    HToDirac,
}

/// Everything a run needs. Unset fields take the defaults below, and the
/// resolved config is echoed into every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: PathBuf,
    /// Interval length for commands that build their own fixture.
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub beta: f64,
    pub ode_steps: usize,
    pub nystrom_dim: usize,
    pub x_count: usize,
    /// Initial half-width of the frequency window for `E_N`.
    pub fourier_window: f64,
    /// Frequency step as a fraction of `π/N`.
    pub fourier_step_fraction: f64,
    pub max_window_doublings: usize,
    pub phi_samples: usize,
    pub positivity_dim: usize,
    pub mollifier_width: f64,
    /// Half-width of the eigenvalue window for `spectrum`.
    pub spectral_window: f64,
    /// Upper-half-plane points `[re, im]` at which Weyl functions are sampled.
    pub weyl_points: Vec<[f64; 2]>,
    /// Number of rungs in the `roundtrip` refinement ladder.
    pub ladder: usize,
    /// Depth of a triangle subtracted from the extracted `φ` in `roundtrip`,
    /// for exercising the positivity guard.
    pub corrupt_phi: f64,
    pub direction: Direction,
    pub series_order: usize,
    pub series_dim: usize,
    pub series_points: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            output: PathBuf::from("out"),
            n: None,
            beta: 0.0,
            ode_steps: 512,
            nystrom_dim: 129,
            x_count: 64,
            fourier_window: 60.0,
            fourier_step_fraction: 0.0625,
            max_window_doublings: 4,
            phi_samples: 513,
            positivity_dim: 129,
            mollifier_width: 0.05,
            spectral_window: 400.0,
            weyl_points: vec![[0.0, 1.0], [1.0, 0.5], [-3.0, 2.0], [10.0, 1.0]],
            ladder: 3,
            corrupt_phi: 0.0,
            direction: Direction::DiracToH,
            series_order: 4,
            series_dim: 4097,
            series_points: 10,
            seed: 0,
            tolerances: Tolerances::default(),
        }
    }
}

fn bad(msg: String) -> Failure {
    Failure::input("config", msg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(n) = self.n {
            if !(n > 0.0 && n.is_finite()) {
                return Err(bad(format!("N must be positive, got {n}")));
            }
        }
        if !(0.0..PI).contains(&self.beta) {
            return Err(bad(format!("beta {} outside [0, π)", self.beta)));
        }
        if self.ode_steps < MIN_STEPS {
            return Err(bad(format!("ode_steps {} below {MIN_STEPS}", self.ode_steps)));
        }
        for (name, v) in [("nystrom_dim", self.nystrom_dim), ("positivity_dim", self.positivity_dim)] {
            if v < MIN_DIM || v % 2 == 0 {
                return Err(bad(format!("{name} must be odd and >= {MIN_DIM}, got {v}")));
            }
        }
        if self.phi_samples < 3 || self.phi_samples.is_multiple_of(2) {
            return Err(bad(format!("phi_samples must be odd and >= 3, got {}", self.phi_samples)));
        }
        if self.x_count < 2 {
            return Err(bad(format!("x_count {} below 2", self.x_count)));
        }
        if !(self.fourier_window > 0.0 && self.mollifier_width > 0.0 && self.spectral_window > 0.0) {
            return Err(bad("fourier_window, mollifier_width and spectral_window must be positive".into()));
        }
        if !(self.fourier_step_fraction > 0.0 && self.fourier_step_fraction <= 0.125) {
            return Err(bad(format!("fourier_step_fraction {} outside (0, 1/8]", self.fourier_step_fraction)));
        }
        if self.ladder == 0 || self.ladder > 4 {
            return Err(bad(format!("ladder {} outside 1..=4", self.ladder)));
        }
        if self.series_order == 0 || self.series_order > dirac_spectral::series::MAX_ORDER {
            return Err(bad(format!("series_order {} out of range", self.series_order)));
        }
        if self.series_dim < 3 {
            return Err(bad(format!("series_dim {} below 3", self.series_dim)));
        }
        if self.weyl_points.iter().any(|p| !(p[1] > 0.0)) {
            return Err(bad("weyl_points must lie in the open upper half plane".into()));
        }
        Ok(())
    }

    pub fn input(&self) -> Result<&std::path::Path, Failure> {
        self.input.as_deref().ok_or_else(|| bad("this command needs an input path".into()))
    }
}
