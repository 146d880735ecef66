use std::f64::consts::PI;

use dfwave::oracle::*;
use dfwave::sampling::{standard_offsets, StaggeredField};
use ndarray::{ArrayD, Dimension, IxDyn};
use num_complex::Complex64;
use proptest::prelude::*;

fn max_abs(a: &ArrayD<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn max_div(u: &SpectralField) -> f64 {
    u.divergence().components[0].iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn single_mode(n: usize, k: [usize; 2], amp: [f64; 2]) -> SpectralField {
    let mut u = SpectralField::zeros(n, 2, 2);
    u.real = false;
    for c in 0..2 {
        u.components[c][k.as_ref()] = Complex64::new(amp[c], 0.0);
    }
    u
}

#[test]
fn leray_examples() {
    let p = leray_project(&single_mode(8, [1, 0], [1.0, 0.0]));
    assert!(p.norm() < 1e-15);
    let u = single_mode(8, [1, 0], [0.0, 1.0]);
    let p = leray_project(&u);
    assert!(p.add(&u.scaled(-1.0)).unwrap().norm() < 1e-15);
    // the mean is untouched
    let m = single_mode(8, [0, 0], [0.7, -0.2]);
    assert!(leray_project(&m).add(&m.scaled(-1.0)).unwrap().norm() < 1e-15);
}

#[test]
fn leray_output_is_divergence_free() {
    let u = random_spectrum(32, 2, 2, 2.0, 3).unwrap();
    assert!(max_div(&leray_project(&u)) < 1e-12);
    let u3 = random_spectrum(16, 3, 3, 2.0, 3).unwrap();
    assert!(max_div(&leray_project(&u3)) < 1e-12);
}

#[test]
fn dft_roundtrip_on_staggered_points() {
    let (f, u) = gen_compressible_random(32, 2, 2.0, 5).unwrap();
    let g = SpectralField::from_field(&f).unwrap();
    assert!(g.add(&u.scaled(-1.0)).unwrap().norm() < 1e-12 * u.norm());
    let back = g.to_staggered().unwrap();
    assert!(back.sub(&f).unwrap().norm() < 1e-12 * f.norm());
}

#[test]
fn trigonometric_evaluation_at_offsets() {
    // û for sin 2π(x + 2y), evaluated at the staggered points directly
    let n = 16;
    let grid = ArrayD::from_shape_fn(IxDyn(&[n, n]), |i| (2.0 * PI * (i[0] as f64 + 2.0 * i[1] as f64) / n as f64).sin());
    let s = SpectralField::from_scalar(&grid).unwrap();
    let vals = s.sample(&[vec![0.5, 0.25]]).remove(0);
    for i in 0..n {
        for j in 0..n {
            let want = (2.0 * PI * (i as f64 + 0.5 + 2.0 * (j as f64 + 0.25)) / n as f64).sin();
            assert!((vals[[i, j].as_ref()] - want).abs() < 1e-13);
        }
    }
}

#[test]
fn generators_are_divergence_free_and_deterministic() {
    let (f1, u1) = gen_divfree_random(32, 2, 3.0, 7).unwrap();
    let (f2, _) = gen_divfree_random(32, 2, 3.0, 7).unwrap();
    assert!(max_div(&u1) < 1e-12);
    assert_eq!(f1, f2);
    let (f3, _) = gen_divfree_random(32, 2, 3.0, 8).unwrap();
    assert_ne!(f1, f3);
    let (v1, w) = gen_vortices(32, &default_vortices()).unwrap();
    let (v2, _) = gen_vortices(32, &default_vortices()).unwrap();
    assert!(max_div(&w) < 1e-12);
    assert_eq!(v1, v2);
    let (c1, _) = gen_compressible_random(16, 3, 2.0, 1).unwrap();
    let (c2, _) = gen_compressible_random(16, 3, 2.0, 1).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn random_spectrum_slope() {
    // shell-summed energy E(k) ∝ k^{1−exponent} in 2D
    let n = 128;
    let exponent = 3.0;
    let u = random_spectrum(n, 2, 2, exponent, 4).unwrap();
    let mut shells = vec![0.0f64; n / 2];
    for (idx, _) in u.components[0].indexed_iter() {
        let k = u.k_of(idx.slice());
        let r = (k[0] * k[0] + k[1] * k[1]).sqrt().round() as usize;
        if r > 0 && r < n / 2 {
            shells[r] += u.components.iter().map(|c| c[idx.slice()].norm_sqr()).sum::<f64>();
        }
    }
    let pts: Vec<(f64, f64)> = (4..40).map(|k| ((k as f64).ln(), shells[k].ln())).collect();
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - (1.0 - exponent)).abs() < 0.2, "slope {slope}");
}

#[test]
fn gradient_examples() {
    let n = 32;
    let p = ArrayD::from_shape_fn(IxDyn(&[n, n]), |i| (2.0 * PI * i[0] as f64 / n as f64).cos());
    let (g, pc) = gen_gradient(&SpectralField::from_scalar(&p).unwrap()).unwrap();
    assert!(max_abs(&(&pc - &p)) < 1e-13);
    for i in 0..n {
        for j in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            assert!((g.components[0][[i, j].as_ref()] + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-12);
            assert!(g.components[1][[i, j].as_ref()].abs() < 1e-12);
        }
    }
    let (z, _) = gen_gradient(&SpectralField::from_scalar(&ArrayD::from_elem(IxDyn(&[n, n]), 3.0)).unwrap()).unwrap();
    assert!(z.norm() < 1e-12);
    let s = random_scalar(n, 2, 4.0, 9).unwrap();
    let gs = s.gradient();
    assert!(leray_project(&gs).norm() < 1e-12 * gs.norm());
    assert_eq!(g.offsets, standard_offsets(2));
}

#[test]
fn vorticity_examples() {
    let s = random_scalar(32, 2, 4.0, 2).unwrap();
    let w = vorticity(&s.gradient()).unwrap();
    assert!(max_abs(&w[0]) < 1e-10);
    let v = [Vortex { center: [0.5, 0.5], radius: 0.1, circulation: 1.0 }];
    let n = 64;
    let omega = vortex_vorticity(n, &v);
    let (_, u) = gen_vortices(n, &v).unwrap();
    let back = vorticity(&u).unwrap().remove(0);
    let mean = omega.mean().unwrap();
    // the Nyquist line is dropped by the generator; a broad vortex has nothing there
    assert!(max_abs(&(&back - &omega.mapv(|x| x - mean))) < 1e-10);
    // total circulation by Riemann sum
    let total = omega.sum() / (n * n) as f64;
    assert!((total - 1.0).abs() < 1e-10);
}

#[test]
fn single_vortex_speed_is_radial() {
    let n = 64;
    let (f, u) = gen_vortices(n, &[Vortex { center: [0.5, 0.5], radius: 0.08, circulation: 1.0 }]).unwrap();
    let c = u.to_collocated();
    for c in &c {
        assert!(c.mean().unwrap().abs() < 1e-14);
    }
    let speed = |i: usize, j: usize| (c[0][[i, j].as_ref()].powi(2) + c[1][[i, j].as_ref()].powi(2)).sqrt();
    // quarter turns about the centre (32, 32)
    for (i, j) in [(40, 35), (36, 44), (33, 50)] {
        let (a, b) = (i as i64 - 32, j as i64 - 32);
        let rot = ((32 - b) as usize, (32 + a) as usize);
        assert!((speed(i, j) - speed(rot.0, rot.1)).abs() < 1e-12);
    }
    assert!(f.norm() > 0.0);
}

#[test]
fn taylor_green_nonlinear_is_gradient() {
    let u = taylor_green(32).unwrap();
    let c = u.to_collocated();
    let n = 32;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64);
            assert!((c[0][[i, j].as_ref()] - x.sin() * y.cos()).abs() < 1e-13);
            assert!((c[1][[i, j].as_ref()] + x.cos() * y.sin()).abs() < 1e-13);
        }
    }
    let nl = nonlinear_term(&u, true).unwrap();
    assert!(nl.norm() > 1.0);
    assert!(leray_project(&nl).norm() < 1e-10 * nl.norm());
}

#[test]
fn nonlinear_zero_and_dealias_band() {
    let z = SpectralField::zeros(16, 2, 2);
    assert_eq!(nonlinear_term(&z, true).unwrap().norm(), 0.0);
    let (_, u) = gen_divfree_random(32, 2, 3.0, 1).unwrap();
    let a = nonlinear_term(&u, true).unwrap();
    let b = nonlinear_term(&u, false).unwrap();
    let cut = 32.0 / 3.0;
    for (idx, v) in a.components[0].indexed_iter() {
        let k = a.k_of(idx.slice());
        if k.iter().any(|x| x.abs() > cut) {
            assert_eq!(*v, Complex64::new(0.0, 0.0));
        }
    }
    // inputs with no modes above N/3 give identical results below the cut
    let lo = u.truncate(cut / 2.0);
    let (a, b2) = (nonlinear_term(&lo, true).unwrap(), nonlinear_term(&lo, false).unwrap());
    assert!(a.add(&b2.scaled(-1.0)).unwrap().norm() < 1e-12 * b2.norm());
    assert!(b.norm() > 0.0);
}

#[test]
fn staggered_field_layout_checks() {
    let a = StaggeredField::zeros(8, 2).unwrap();
    let b = StaggeredField::collocated(vec![ArrayD::zeros(IxDyn(&[8, 8])); 2]).unwrap();
    assert!(a.sub(&b).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn leray_idempotent(seed in 0u64..10_000) {
        let u = random_spectrum(16, 2, 2, 1.0, seed).unwrap();
        let p = leray_project(&u);
        let pp = leray_project(&p);
        prop_assert!(pp.add(&p.scaled(-1.0)).unwrap().norm() < 1e-14 * u.norm().max(1e-300));
    }

    #[test]
    fn leray_self_adjoint(seed in 0u64..10_000) {
        let u = random_spectrum(16, 2, 2, 1.0, seed).unwrap();
        let v = random_spectrum(16, 2, 2, 1.0, seed + 17).unwrap();
        let a = leray_project(&u).inner(&v);
        let b = u.inner(&leray_project(&v));
        prop_assert!((a - b).norm() < 1e-12 * u.norm() * v.norm());
    }

    #[test]
    fn leray_split_orthogonal(seed in 0u64..10_000) {
        let u = random_spectrum(16, 3, 3, 1.0, seed).unwrap();
        let p = leray_project(&u);
        let q = u.add(&p.scaled(-1.0)).unwrap();
        prop_assert!(p.inner(&q).norm() < 1e-10 * u.norm().powi(2));
    }

    #[test]
    fn vorticity_linear(seed in 0u64..10_000, a in -2.0f64..2.0) {
        let u = random_spectrum(16, 2, 2, 2.0, seed).unwrap();
        let v = random_spectrum(16, 2, 2, 2.0, seed + 1).unwrap();
        let lhs = vorticity(&u.add(&v.scaled(a)).unwrap()).unwrap().remove(0);
        let rhs = &vorticity(&u).unwrap()[0] + &(&vorticity(&v).unwrap()[0] * a);
        prop_assert!(max_abs(&(&lhs - &rhs)) < 1e-10 * (1.0 + max_abs(&rhs)));
    }
}
