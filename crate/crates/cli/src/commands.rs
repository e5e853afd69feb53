// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dirac_spectral::forward::{self, EigenScan};
use dirac_spectral::gl::{self, ExtractOptions};
use dirac_spectral::inverse;
use dirac_spectral::series;
use dirac_spectral::{io, quad, Complex64, DiracMeasure, GLFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Direction, RunConfig};
use crate::{Command, Failure};

/// Metrics and files accumulated by a command, flushed to `summary.json`.
#[derive(Default)]
struct Run {
    metrics: Map<String, Value>,
    outputs: Vec<String>,
}

impl Run {
    fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    fn path(&mut self, cfg: &RunConfig, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        cfg.output.join(name)
    }
}

fn core<T>(stage: &'static str, r: dirac_spectral::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| Failure::from_core(stage, e))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Forward => "forward",
        Command::Spectrum => "spectrum",
        Command::Gl => "gl",
        Command::CheckPhi => "check-phi",
        Command::Inverse => "inverse",
        Command::Convert => "convert",
        Command::Roundtrip => "roundtrip",
        Command::SeriesCheck => "series-check",
    }
}

pub fn dispatch(command: Command, cfg: &RunConfig) -> Result<(), Failure> {
    let start = Instant::now();
    let mut run = Run::default();
    let result = match command {
        Command::Forward => cmd_forward(cfg, &mut run),
        Command::Spectrum => cmd_spectrum(cfg, &mut run),
        Command::Gl => cmd_gl(cfg, &mut run),
        Command::CheckPhi => cmd_check_phi(cfg, &mut run),
        Command::Inverse => cmd_inverse(cfg, &mut run),
        Command::Convert => cmd_convert(cfg, &mut run),
        Command::Roundtrip => cmd_roundtrip(cfg, &mut run),
        Command::SeriesCheck => cmd_series_check(cfg, &mut run),
    };
    let (status, error) = match &result {
        Ok(()) => ("ok", Value::Null),
        Err(f) => ("failed", json!({ "stage": f.stage, "exit_code": f.code, "message": f.message })),
    };
    let summary = json!({
        "command": command_name(command),
        "status": status,
        "error": error,
        "config": cfg,
        "metrics": run.metrics,
        "outputs": run.outputs,
        "runtime_seconds": start.elapsed().as_secs_f64(),
    });
    let written = io::write_json(&cfg.output.join("summary.json"), &summary);
    result?;
    core("summary", written)
}

fn read_measure(path: &Path) -> Result<DiracMeasure, Failure> {
    core("input", io::read_json(path))
}

fn write_measure(run: &mut Run, cfg: &RunConfig, stem: &str, mu: &DiracMeasure) -> Result<(), Failure> {
    core("output", io::write_json(&run.path(cfg, &format!("{stem}.json")), mu))?;
    let h = mu.grid_step().unwrap_or(0.0);
    let rows = mu.grid().iter().enumerate().map(|(i, g)| vec![i as f64 * h, g[0], g[1]]);
    core("output", io::write_columns(&run.path(cfg, &format!("{stem}.csv")), &["x", "mu1", "mu2"], rows))
}

fn extract_options(cfg: &RunConfig) -> ExtractOptions {
    ExtractOptions {
        omega: cfg.fourier_window,
        step_fraction: cfg.fourier_step_fraction,
        ode_steps: cfg.ode_steps,
        out_samples: cfg.phi_samples,
        max_doublings: cfg.max_window_doublings,
    }
}

/// Positivity test at `dim` and `2·dim − 1`; fails the run if either is not positive.
fn positivity(run: &mut Run, cfg: &RunConfig, phi: &GLFunction) -> Result<(), Failure> {
    let a = core("check-phi", gl::check_phi(phi, cfg.positivity_dim))?;
    let b = core("check-phi", gl::check_phi(phi, 2 * cfg.positivity_dim - 1))?;
    run.metric("positivity", a);
    run.metric("positivity_doubled", b);
    run.metric("min_eigenvalue_drift", (a.min_eigenvalue - b.min_eigenvalue).abs() / b.min_eigenvalue.abs());
    if !(a.passed && b.passed) {
        let e = dirac_spectral::Error::NotPositive { min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue) };
        return Err(Failure::from_core("check-phi", e));
    }
    Ok(())
}

fn cmd_forward(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let mu = read_measure(cfg.input()?)?;
    let n = mu.n();
    let dt = cfg.fourier_step_fraction * PI / n;
    let count = 2 * (cfg.fourier_window / dt).ceil() as usize + 1;
    let e = core("forward", forward::db_grid(&mu, cfg.fourier_window, count, cfg.ode_steps))?;
    core("output", io::write_grid_csv(&run.path(cfg, "e_grid.csv"), &e))?;

    let modulus_dev = e.samples().iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max);
    let mut det_dev = 0.0f64;
    let stride = (count / 64).max(1);
    let probe: Vec<Complex64> = e
        .nodes()
        .step_by(stride)
        .map(|t| Complex64::new(t, 0.0))
        .chain(cfg.weyl_points.iter().map(|p| Complex64::new(p[0], p[1])))
        .collect();
    for z in probe {
        let t = core("forward", forward::transfer_matrix(&mu, n, z, cfg.ode_steps))?;
        det_dev = det_dev.max((t.det() - 1.0).norm() / t.max_abs().powi(2).max(1.0));
    }

    let mut rows = Vec::new();
    for p in &cfg.weyl_points {
        let z = Complex64::new(p[0], p[1]);
        let m = core("forward", forward::weyl_function(&mu, cfg.beta, z, cfg.ode_steps))?;
        rows.push(vec![p[0], p[1], m.re, m.im]);
    }
    core("output", io::write_columns(&run.path(cfg, "weyl.csv"), &["z_re", "z_im", "m_re", "m_im"], rows))?;

    run.metric("N", n);
    run.metric("e_grid_points", count);
    run.metric("max_modulus_deviation", modulus_dev);
    run.metric("max_det_deviation", det_dev);
    if det_dev > cfg.tolerances.det {
        return Err(Failure::numerical("forward", format!("det T deviation {det_dev:e} exceeds {:e}", cfg.tolerances.det)));
    }
    Ok(())
}

fn cmd_spectrum(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let mu = read_measure(cfg.input()?)?;
    let opts = EigenScan { steps: cfg.ode_steps, bisection_tol: cfg.tolerances.bisection, ..Default::default() };
    let window = [-cfg.spectral_window, cfg.spectral_window];
    let rho = core("spectrum", forward::spectral_measure(&mu, cfg.beta, window, &opts, 2 * cfg.ode_steps))?;
    core("output", io::write_json(&run.path(cfg, "spectrum.json"), &rho))?;
    let rows = rho.atoms.iter().map(|a| vec![a.lambda, a.weight]);
    core("output", io::write_columns(&run.path(cfg, "spectrum.csv"), &["lambda", "weight"], rows))?;

    let m = core("gl", gl::phi_from_spectral_measure(&rho, cfg.mollifier_width, cfg.phi_samples))?;
    core("output", io::write_gl_function(&run.path(cfg, "phi_spectral.csv"), &m.phi))?;
    run.outputs.push("phi_spectral.json".into());
    let flags = m.phi.grid().nodes().zip(&m.flagged).map(|(x, f)| vec![x, f64::from(u8::from(*f))]);
    core("output", io::write_columns(&run.path(cfg, "phi_spectral_flags.csv"), &["x", "flagged"], flags))?;

    let weights: Vec<f64> = rho.atoms.iter().map(|a| a.weight).collect();
    run.metric("eigenvalue_count", rho.atoms.len());
    run.metric("min_weight", weights.iter().copied().fold(f64::INFINITY, f64::min));
    run.metric("max_weight", weights.iter().copied().fold(0.0, f64::max));
    run.metric("flagged_samples", m.flagged.iter().filter(|f| **f).count());
    Ok(())
}

fn cmd_gl(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let input = cfg.input()?;
    let phi = if input.extension().is_some_and(|e| e == "csv") {
        let n = cfg.n.ok_or_else(|| Failure::input("config", "N is required when the input is an E grid"))?;
        let e = core("input", io::read_grid_csv(input))?;
        core("gl", gl::phi_from_e(&e, n, cfg.phi_samples, &cfg.tolerances))?
    } else {
        let mu = read_measure(input)?;
        let (phi, report) = core("gl", gl::phi_from_measure(&mu, &extract_options(cfg), &cfg.tolerances))?;
        run.metric("extraction", report);
        phi
    };
    core("output", io::write_gl_function(&run.path(cfg, "phi.csv"), &phi))?;
    run.outputs.push("phi.json".into());
    run.metric("N", phi.n());
    run.metric("sup_norm", phi.sup_norm());
    run.metric("symmetry_defect", phi.symmetry_defect());
    positivity(run, cfg, &phi)
}

fn cmd_check_phi(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let phi = core("input", io::read_gl_function(cfg.input()?))?;
    run.metric("N", phi.n());
    run.metric("symmetry_defect", phi.symmetry_defect());
    positivity(run, cfg, &phi)
}

fn cmd_inverse(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let phi = core("input", io::read_gl_function(cfg.input()?))?;
    positivity(run, cfg, &phi)?;
    let rec = core("inverse", inverse::reconstruct_h(&phi, cfg.x_count, cfg.nystrom_dim, &cfg.tolerances))?;
    run.metric("reconstruction", rec.report);
    let (d0, _) = core("inverse", inverse::d_limit(&phi, phi.n() / cfg.x_count as f64, cfg.nystrom_dim, &cfg.tolerances))?;
    run.metric("d_limit_deviation", (d0 - Complex64::new(0.0, 0.5)).norm());
    core("output", io::write_canonical_csv(&run.path(cfg, "h.csv"), &rec.h))?;
    let mu = core("h-to-dirac", inverse::h_to_dirac(&rec.h, &cfg.tolerances))?;
    run.metric("recovered_l1_norm", mu.l1_norm());
    write_measure(run, cfg, "mu", &mu)
}

fn cmd_convert(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    match cfg.direction {
        Direction::DiracToH => {
            let mu = read_measure(cfg.input()?)?;
            let h = core("convert", inverse::dirac_to_h(&mu, cfg.ode_steps, &cfg.tolerances))?;
            run.metric("max_det_deviation", h.max_det_deviation());
            run.metric("exponential_type", forward::exponential_type(&h));
            core("output", io::write_canonical_csv(&run.path(cfg, "h.csv"), &h))
        }
        Direction::HToDirac => {
            let h = core("input", io::read_canonical_csv(cfg.input()?, &cfg.tolerances))?;
            let mu = core("convert", inverse::h_to_dirac(&h, &cfg.tolerances))?;
            run.metric("max_det_deviation", h.max_det_deviation());
            run.metric("recovered_l1_norm", mu.l1_norm());
            write_measure(run, cfg, "mu", &mu)
        }
    }
}

#[derive(Serialize)]
struct RungReport {
    ode_steps: usize,
    nystrom_dim: usize,
    x_count: usize,
    fourier_window: f64,
    phi_samples: usize,
    sup_error: f64,
    l1_error: f64,
    max_det_deviation: f64,
    max_identity_residual: f64,
    max_symmetry_defect: f64,
}

fn cmd_roundtrip(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let mu = read_measure(cfg.input()?)?;
    if !mu.is_ac() {
        return Err(Failure::input("input", "roundtrip needs a measure without point masses"));
    }
    let n = mu.n();
    let mut rungs = Vec::new();
    for k in 0..cfg.ladder {
        let s = 1usize << k;
        let opts = ExtractOptions {
            omega: cfg.fourier_window * s as f64,
            ode_steps: cfg.ode_steps * s,
            out_samples: (cfg.phi_samples - 1) * s + 1,
            ..extract_options(cfg)
        };
        let (dim, x_count) = ((cfg.nystrom_dim - 1) * s + 1, cfg.x_count * s);
        let (mut phi, _) = core("gl", gl::phi_from_measure(&mu, &opts, &cfg.tolerances))?;
        if cfg.corrupt_phi != 0.0 {
            let depth = cfg.corrupt_phi;
            let samples = phi
                .grid()
                .nodes()
                .zip(phi.samples())
                .map(|(x, v)| v - depth * (1.0 - x.abs() / n).max(0.0))
                .collect();
            phi = core("gl", GLFunction::new(n, samples))?;
        }
        if k == 0 {
            positivity(run, cfg, &phi)?;
        }
        let rec = core("inverse", inverse::reconstruct_h(&phi, x_count, dim, &cfg.tolerances))?;
        let back = core("h-to-dirac", inverse::h_to_dirac(&rec.h, &cfg.tolerances))?;
        write_measure(run, cfg, &format!("recovered_mu_rung{k}"), &back)?;
        let h = n / x_count as f64;
        let diffs: Vec<f64> = (0..=x_count)
            .map(|i| {
                let x = i as f64 * h;
                let (a, b) = (back.density_at(x), mu.density_at(x));
                (a.0 - b.0).abs().max((a.1 - b.1).abs())
            })
            .collect();
        rungs.push(RungReport {
            ode_steps: opts.ode_steps,
            nystrom_dim: dim,
            x_count,
            fourier_window: opts.omega,
            phi_samples: opts.out_samples,
            sup_error: diffs.iter().copied().fold(0.0, f64::max),
            l1_error: quad::trapezoid(&diffs, h),
            max_det_deviation: rec.report.max_det_deviation,
            max_identity_residual: rec.report.max_identity_residual,
            max_symmetry_defect: rec.report.max_j_symmetry_defect.max(rec.report.max_k_symmetry_defect),
        });
    }
    let orders: Vec<Option<f64>> = rungs
        .windows(2)
        .map(|w| (w[0].sup_error > 0.0 && w[1].sup_error > 0.0).then(|| (w[0].sup_error / w[1].sup_error).log2()))
        .collect();
    run.metric("ladder", &rungs);
    run.metric("empirical_orders", orders);
    Ok(())
}

fn cmd_series_check(cfg: &RunConfig, run: &mut Run) -> Result<(), Failure> {
    let mu = read_measure(cfg.input()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let tv = series::dp_density(&mu).total_variation();
    for _ in 0..cfg.series_points {
        let z = loop {
            let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            if z.norm() <= 3.0 {
                break z;
            }
        };
        let s = core("series", series::e_via_series(&mu, z, cfg.series_order, cfg.series_dim))?;
        let e = core("forward", forward::db_function(&mu, z, cfg.ode_steps))?;
        worst = worst.max((s.value - e).norm() / s.tail_bound);
        for (k, v) in s.terms.iter().enumerate() {
            rows.push(vec![z.re, z.im, (k + 1) as f64, v.norm(), series::term_bound(tv, k + 1, mu.n(), z)]);
        }
    }
    core("output", io::write_columns(&run.path(cfg, "series.csv"), &["z_re", "z_im", "order", "abs_v", "bound"], rows))?;
    run.metric("component_variation", mu.component_variation(0.0, mu.n()));
    run.metric("max_error_over_tail_bound", worst);
    if worst > 1.0 {
        return Err(Failure::numerical("series", format!("series error exceeds its tail bound by {worst:.3}x")));
    }
    Ok(())
}
