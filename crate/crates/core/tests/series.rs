// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{c, nested_v, random_bump, rng};
use dirac_spectral::forward;
use dirac_spectral::series::{self, dp_density, iterated_all, term_bound};
use dirac_spectral::{Complex64, DiracMeasure, PointMass};
use rand::Rng;

#[test]
fn cumulative_levels_match_brute_force_simplex_sum() {
    let mut r = rng(8);
    let mu = random_bump(&mut r, 65, 0.1);
    let p = dp_density(&mu);
    let dim = 25;
    let h = 1.0 / (dim - 1) as f64;
    let samples: Vec<Complex64> = (0..dim).map(|i| p.density_at(i as f64 * h)).collect();
    let z = c(1.7, 0.3);
    let v = iterated_all(&p, 3, 1.0, z, dim).unwrap();
    for n in 1..=3 {
        let brute = nested_v(&samples, h, n, z);
        assert!((v[n - 1] - brute).norm() < 1e-15 + 1e-12 * brute.norm(), "n={n}: {} vs {brute}", v[n - 1]);
    }
}

#[test]
fn first_order_closed_form_converges() {
    let cst = 0.05;
    let mu = DiracMeasure::from_fn(1.0, 3, |_| (0.0, cst)).unwrap();
    let p = dp_density(&mu);
    let z = c(-2.0, 0.6);
    let exact = ((Complex64::i() * 2.0 * z).exp() - 1.0) / (Complex64::i() * 4.0 * z) * cst;
    let err = |dim| (series::iterated_v(&p, 1, 1.0, z, dim).unwrap() - exact).norm();
    let (e1, e2) = (err(129), err(257));
    assert!(e1 / e2 > 3.8 && e1 / e2 < 4.2);
}

#[test]
fn terms_respect_factorial_bound() {
    let mut r = rng(2);
    let mu = random_bump(&mut r, 129, 0.12);
    let p = dp_density(&mu);
    let tv = p.total_variation();
    for _ in 0..10 {
        let t = r.random_range(-3.0..3.0);
        let v = iterated_all(&p, 4, 1.0, c(t, 0.0), 513).unwrap();
        for (n, vn) in v.iter().enumerate() {
            assert!(vn.norm() <= term_bound(tv, n + 1, 1.0, c(t, 0.0)) * (1.0 + 1e-9));
        }
    }
}

#[test]
fn series_matches_ode_within_tail_bound() {
    let mut r = rng(31);
    let mu = random_bump(&mut r, 129, 0.1);
    assert!(mu.component_variation(0.0, 1.0) < 0.125);
    for _ in 0..10 {
        let z = loop {
            let z = c(r.random_range(-3.0..3.0), r.random_range(0.0..3.0));
            if z.norm() <= 3.0 {
                break z;
            }
        };
        let s = series::e_via_series(&mu, z, 4, 4097).unwrap();
        let e = forward::db_function(&mu, z, 1024).unwrap();
        let rel = (s.value - e).norm() / e.norm();
        assert!(rel <= s.relative_tail_bound, "z={z}: {rel} vs {}", s.relative_tail_bound);
        // modulus sandwich on the closed upper half plane
        let base = (-Complex64::i() * z).exp().norm();
        assert!(e.norm() >= 0.5 * base && e.norm() <= 1.5 * base);
    }
}

#[test]
fn atoms_enter_k_and_first_order_only() {
    let pm = PointMass::new(0.5, 0.01, 0.02).unwrap();
    let mu = DiracMeasure::zero(1.0).with_point_masses(vec![pm]).unwrap();
    let p = dp_density(&mu);
    assert!(iterated_all(&p, 2, 1.0, c(1.0, 0.0), 33).is_err());
    let s = series::e_via_series(&mu, c(1.0, 0.5), 1, 33).unwrap();
    let e = forward::db_function(&mu, c(1.0, 0.5), 64).unwrap();
    assert!((s.value - e).norm() / e.norm() <= s.relative_tail_bound);
}
