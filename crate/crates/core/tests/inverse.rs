// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{bump, c, constant_generator, expm, random_bump, rng};
use dirac_spectral::forward;
use dirac_spectral::gl::{self, ExtractOptions};
use dirac_spectral::inverse::{self, FredholmSystem};
use dirac_spectral::{CanonicalSystem, Complex64, DiracMeasure, Error, GLFunction, Matrix2C, Tolerances};

fn gauss_phi(s: f64) -> Complex64 {
    Complex64::from_polar(0.3 * (-2.0 * s * s).exp(), 1.5 * s)
}

/// Solves `p + ∫_{−x}^{x} φ(t − s)p(s) ds = 1/2` by Neumann iteration with
/// Simpson weights, using the closed-form kernel.
fn neumann_simpson(x: f64, dim: usize) -> Vec<Complex64> {
    let h = 2.0 * x / (dim - 1) as f64;
    let t: Vec<f64> = (0..dim).map(|i| -x + i as f64 * h).collect();
    let w: Vec<f64> = (0..dim)
        .map(|i| {
            let base = if i == 0 || i == dim - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            base * h / 3.0
        })
        .collect();
    let mut p = vec![c(0.5, 0.0); dim];
    for _ in 0..200 {
        let next: Vec<Complex64> = (0..dim)
            .map(|i| c(0.5, 0.0) - (0..dim).map(|j| gauss_phi(t[i] - t[j]) * p[j] * w[j]).sum::<Complex64>())
            .collect();
        let delta = next.iter().zip(&p).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        p = next;
        if delta < 1e-15 {
            break;
        }
    }
    p
}

fn assert_symmetric(ks: &inverse::KernelSolution) {
    assert!(ks.j_symmetry_defect() <= 1e-10, "j defect {}", ks.j_symmetry_defect());
    assert!(ks.k_symmetry_defect() <= 1e-10, "k defect {}", ks.k_symmetry_defect());
}

#[test]
fn nystrom_converges_to_simpson_neumann_oracle() {
    let tol = Tolerances::default();
    let phi = GLFunction::from_fn(1.0, 8193, gauss_phi).unwrap();
    let x = 0.8;
    let oracle = neumann_simpson(x, 1025);
    let err = |dim: usize| {
        let ks = inverse::kernel_pair(&phi, x, dim, &tol).unwrap();
        assert_symmetric(&ks);
        let stride = 1024 / (dim - 1);
        ks.j.iter().enumerate().map(|(i, v)| (v - oracle[i * stride]).norm()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(65), err(129));
    assert!(e2 < 1e-4, "{e2}");
    assert!(e1 / e2 > 3.5, "ratio {}", e1 / e2);
}

#[test]
fn random_hermitian_solves_meet_residual() {
    let tol = Tolerances::default();
    let phi = GLFunction::from_fn(1.0, 513, gauss_phi).unwrap();
    let rhs = |t: f64| c(t.cos(), t * t);
    let sys = FredholmSystem::new(&phi, 1.0, 65, &tol).unwrap();
    let p = sys.solve(&sys.nodes().iter().map(|&t| rhs(t)).collect::<Vec<_>>()).unwrap();
    let p2 = inverse::fredholm_solve(&phi, 1.0, rhs, 129, &tol).unwrap();
    let gap = p.iter().enumerate().map(|(i, v)| (v - p2[2 * i]).norm()).fold(0.0, f64::max);
    // O(h²) with h = 1/32
    assert!(gap < 2e-3, "{gap}");
    assert!(sys.condition() >= 1.0 && sys.condition() < 10.0);
}

#[test]
fn dimension_and_range_guards() {
    let tol = Tolerances::default();
    let phi = GLFunction::zero(1.0, 65).unwrap();
    assert!(matches!(FredholmSystem::new(&phi, 0.5, 16, &tol), Err(Error::InvalidInput(_))));
    assert!(matches!(FredholmSystem::new(&phi, 0.5, 18, &tol), Err(Error::InvalidInput(_))));
    assert!(matches!(FredholmSystem::new(&phi, 1.5, 33, &tol), Err(Error::OutOfRange { .. })));
}

#[test]
fn deep_negative_kernel_is_rejected() {
    // 1 + T_φ with φ ≡ −1/(2x) annihilates constants on [−x, x]
    let tol = Tolerances::default();
    let phi = GLFunction::from_fn(1.0, 129, |_| c(-0.5, 0.0)).unwrap();
    let r = FredholmSystem::new(&phi, 1.0, 33, &tol);
    assert!(matches!(r, Err(Error::IllConditioned { .. }) | Err(Error::Singular)), "{:?}", r.err());
}

#[test]
fn zero_phi_reconstructs_identity() {
    let tol = Tolerances::default();
    let phi = GLFunction::zero(1.0, 129).unwrap();
    let rec = inverse::reconstruct_h(&phi, 16, 33, &tol).unwrap();
    for s in rec.h.samples() {
        assert!((s[0] - 1.0).abs() < 1e-14 && s[1].abs() < 1e-14 && (s[2] - 1.0).abs() < 1e-14);
    }
    let mu = inverse::h_to_dirac(&rec.h, &tol).unwrap();
    assert!(mu.grid().iter().all(|g| g[0].abs() < 1e-12 && g[1].abs() < 1e-12));
}

#[test]
fn reconstruction_from_extracted_phi() {
    let tol = Tolerances::default();
    let (phi, _) = gl::phi_from_measure(&bump(129), &ExtractOptions::default(), &tol).unwrap();
    let rec = inverse::reconstruct_h(&phi, 32, 129, &tol).unwrap();
    let r = rec.report;
    assert!(r.max_det_deviation < 1e-9, "{r:?}");
    assert!(r.max_identity_residual < 1e-9);
    assert!(r.max_j_symmetry_defect <= 1e-10 && r.max_k_symmetry_defect <= 1e-10);
    assert!(r.min_abs_d > 1e-3);
    for i in 0..rec.h.len() {
        let s = rec.h.samples()[i];
        assert!(s[0] > 0.0 && s[2] > 0.0 && s[0] + s[2] >= 2.0 - 1e-9);
    }
    // the reconstruction reproduces H = T₀ᵀT₀ of the generating measure
    let h_ref = inverse::dirac_to_h(&bump(129), 1024, &tol).unwrap();
    for i in 0..rec.h.len() {
        let x = rec.h.x(i);
        let (a, b) = (rec.h.samples()[i], h_ref.at(x));
        let d = (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
        assert!(d < 5e-4, "x={x}: {a:?} vs {b:?}");
    }
}

#[test]
fn d_tends_to_half_i() {
    let tol = Tolerances::default();
    let (phi, _) = gl::phi_from_measure(&bump(129), &ExtractOptions::default(), &tol).unwrap();
    let (d0, ds) = inverse::d_limit(&phi, 0.1, 65, &tol).unwrap();
    assert!((d0 - c(0.0, 0.5)).norm() < 1e-4, "{d0} from {ds:?}");
}

#[test]
fn derivative_form_and_moment_route_match() {
    let tol = Tolerances::default();
    let (phi, _) = gl::phi_from_measure(&bump(129), &ExtractOptions::default(), &tol).unwrap();
    let dim = 129;
    for &x in &[0.25, 0.5, 0.75] {
        let direct = inverse::kernel_pair(&phi, x, dim, &tol).unwrap();
        assert_symmetric(&direct);
        let h = direct.intermediates().h();
        let deriv = inverse::reconstruct_h_derivative_form(&phi, x, dim, &tol).unwrap();
        assert!((deriv[0][0] - h.a11.re).abs() < 1e-4, "{deriv:?} vs {h:?}");
        assert!((deriv[0][1] - h.a12.re).abs() < 1e-4);
        assert!((deriv[1][1] - h.a22.re).abs() < 1e-4);
        let dx = 0.01;
        let plus = inverse::psi_moment(&phi, x + dx, dim, &tol).unwrap();
        let minus = inverse::psi_moment(&phi, x - dx, dim, &tol).unwrap();
        let h12 = (plus - minus) / (2.0 * dx);
        assert!((h12.re - h.a12.re).abs() < 1e-3, "{h12} vs {}", h.a12.re);
    }
}

#[test]
fn dirac_to_h_matches_constant_oracle() {
    let tol = Tolerances::default();
    let (m1, m2) = (0.4, -0.3);
    let mu = DiracMeasure::from_fn(1.0, 3, |_| (m1, m2)).unwrap();
    let h = inverse::dirac_to_h(&mu, 64, &tol).unwrap();
    for i in [0, 17, 40, 64] {
        let t0 = expm(&(constant_generator(m1, m2, c(0.0, 0.0)) * h.x(i)));
        let ref_h = t0.transpose() * t0;
        assert!(h.matrix(i).dist(&ref_h) < 1e-12);
    }
    let zero = inverse::dirac_to_h(&DiracMeasure::zero(2.0), 32, &tol).unwrap();
    assert_eq!(zero.max_det_deviation(), 0.0);
    assert!(zero.samples().iter().all(|s| *s == [1.0, 0.0, 1.0]));
}

#[test]
fn h_to_dirac_inverts_dirac_to_h() {
    let tol = Tolerances::default();
    let mu = bump(257);
    let err = |steps: usize| {
        let h = inverse::dirac_to_h(&mu, steps, &tol).unwrap();
        let back = inverse::h_to_dirac(&h, &tol).unwrap();
        (0..=steps)
            .map(|i| {
                let x = i as f64 / steps as f64;
                let (a, b) = (back.density_at(x), mu.density_at(x));
                (a.0 - b.0).abs().max((a.1 - b.1).abs())
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(128), err(256));
    assert!(e2 < 1e-3 && e1 / e2 > 3.0, "{e1} {e2}");
}

#[test]
fn canonical_weyl_function_matches_dirac_weyl_function() {
    let tol = Tolerances::default();
    let mut r = rng(3);
    let mu = random_bump(&mut r, 129, 0.8);
    let h = inverse::dirac_to_h(&mu, 2048, &tol).unwrap();
    let t0 = inverse::endpoint_transfer(&mu, 2048).unwrap().inverse().unwrap();
    let beta: f64 = 1.1;
    let v = t0.apply([c(beta.cos(), 0.0), c(beta.sin(), 0.0)]);
    let dir = [v[0].re, v[1].re];
    for &z in &[c(0.5, 1.0), c(-4.0, 0.3), c(9.0, 2.0)] {
        let a = forward::weyl_function(&mu, beta, z, 1024).unwrap();
        let b = forward::canonical_weyl_function(&h, dir, z).unwrap();
        assert!((a - b).norm() < 1e-8 * a.norm().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn canonical_transfer_of_identity_is_free() {
    // U' = zJU gives exp(zJx) = cos(zx) + sin(zx) J
    let z = c(2.0, 0.5);
    let free = Matrix2C::identity() * z.cos() + Matrix2C::j() * z.sin();
    let err = |count| forward::canonical_transfer(&CanonicalSystem::identity(1.0, count), z).dist(&free);
    let (e1, e2) = (err(65), err(129));
    assert!(e2 < 1e-7 && e1 / e2 > 14.0, "{e1} {e2}");
}
