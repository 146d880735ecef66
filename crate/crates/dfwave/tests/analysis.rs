use dfwave::analysis::*;
use dfwave::divfree::{to_divfree, DivBlock, DivFreeCoeffs, VectorCoeffs};
use dfwave::fwt::{BlockKey, TransformMode, WaveletPyramid};
use dfwave::oracle::{default_vortices, gen_vortices};
use dfwave::sampling::{component_degrees, fourier_project, ShiftedSpaceTag};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zero_div(n: usize, mode: TransformMode, levels: usize) -> DivFreeCoeffs {
    let comps = (0..2)
        .map(|i| WaveletPyramid::zeros(mode, &[n, n], &component_degrees(ShiftedSpaceTag::Plain, 2, i), &[levels, levels]).unwrap())
        .collect();
    to_divfree(&VectorCoeffs::new(ShiftedSpaceTag::Plain, comps).unwrap()).unwrap()
}

fn positions(c: &DivFreeCoeffs) -> Vec<(BlockKey, usize, usize)> {
    let mut out = vec![];
    for (k, b) in &c.blocks {
        if let DivBlock::Split { div, .. } = b {
            for (i, a) in div.iter().enumerate() {
                out.extend((0..a.len()).map(|f| (k.clone(), i, f)));
            }
        }
    }
    out
}

fn put(c: &mut DivFreeCoeffs, k: &BlockKey, i: usize, f: usize, v: f64) {
    if let Some(DivBlock::Split { div, .. }) = c.blocks.get_mut(k) {
        div[i].as_slice_mut().unwrap()[f] = v;
    }
}

/// Div-free coefficients whose ranked weighted magnitudes are exactly i^{−(s+1/2)},
/// at shuffled positions with random signs.
fn planted(n: usize, s: f64, seed: u64) -> DivFreeCoeffs {
    let j = n.trailing_zeros() as usize;
    let mut c = zero_div(n, TransformMode::Anisotropic, j);
    let mut pos = positions(&c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    for (rank, (k, i, f)) in pos.iter().enumerate() {
        let w = div_weights(&c, k)[*i];
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        put(&mut c, k, *i, *f, sign * ((rank + 1) as f64).powf(-(s + 0.5)) / w);
    }
    c
}

fn same(a: &DivFreeCoeffs, b: &DivFreeCoeffs) -> bool {
    let mut d = a.clone();
    d.axpy(-1.0, b).unwrap();
    d.norm() == 0.0
}

#[test]
fn nbest_extremes() {
    let c = planted(16, 1.0, 1);
    let total = c.num_div_coeffs();
    assert_eq!(total, 16 * 16 - 1);
    assert!(same(&nbest_select(&c, total), &c));
    assert!(same(&nbest_select(&c, total + 10), &c));
    let zero = nbest_select(&c, 0);
    assert!(ranked(&zero).iter().all(|r| r.magnitude == 0.0));
    // scaling block survives
    let mut with_mean = c.clone();
    for b in with_mean.blocks.values_mut() {
        if let DivBlock::Scaling(s) = b {
            s[0].fill(0.3);
        }
    }
    let kept = nbest_select(&with_mean, 0);
    assert!(kept.blocks.values().any(|b| matches!(b, DivBlock::Scaling(s) if s[0].iter().all(|v| *v == 0.3))));
}

#[test]
fn single_detail_is_reproduced_by_one_term() {
    let mut c = zero_div(32, TransformMode::Anisotropic, 5);
    let pos = positions(&c);
    let (k, i, f) = &pos[pos.len() / 3];
    put(&mut c, k, *i, *f, 0.7);
    let full = reconstruct(&c).unwrap();
    let one = reconstruct(&nbest_select(&c, 1)).unwrap();
    assert_eq!(one.sub(&full).unwrap().norm(), 0.0);
    assert!(full.norm() > 0.0);
}

#[test]
fn ranking_weights_match_frame_lengths() {
    let c = zero_div(16, TransformMode::Anisotropic, 4);
    for k in c.blocks.keys() {
        let scales = k.axis_scales();
        if scales.iter().all(|s| s.is_detail()) {
            let w: Vec<f64> = scales
                .iter()
                .map(|s| match s {
                    dfwave::fwt::Scale::Detail(j) => 2f64.powi(*j as i32),
                    _ => unreachable!(),
                })
                .collect();
            assert_eq!(div_weights(&c, k), vec![(w[0] * w[0] + w[1] * w[1]).sqrt()]);
        } else if !k.is_scaling() {
            assert_eq!(div_weights(&c, k), vec![1.0]);
        }
    }
    let iso = zero_div(16, TransformMode::Isotropic, 2);
    for k in iso.blocks.keys().filter(|k| !k.is_scaling()) {
        assert_eq!(div_weights(&iso, k), vec![1.0]);
    }
}

#[test]
fn ties_break_in_block_order() {
    let mut c = zero_div(8, TransformMode::Isotropic, 1);
    let pos = positions(&c);
    for (k, i, f) in &pos {
        put(&mut c, k, *i, *f, 1.0);
    }
    let r = ranked(&c);
    let order: Vec<(BlockKey, usize, usize)> = r.iter().map(|r| (r.key.clone(), r.array, r.flat)).collect();
    assert_eq!(order, pos);
    let kept = nbest_select(&c, 5);
    let r = ranked(&kept);
    assert!(r[..5].iter().zip(&pos[..5]).all(|(a, p)| a.magnitude == 1.0 && (a.key.clone(), a.array, a.flat) == *p));
}

#[test]
fn planted_slopes_are_recovered() {
    for s in [0.75, 1.0, 1.5] {
        let c = planted(64, s, 3);
        let pts = log_spaced_points(c.num_div_coeffs(), 40);
        let curve = compression_curve_with_fit(&c, &pts, (0.2, 0.7)).unwrap();
        let got = curve.slope.unwrap();
        assert!((got - s).abs() <= 0.15, "planted {s}, fitted {got}");
        let (a, b) = curve.region.unwrap();
        assert!(b - a + 1 >= 3);
        for w in curve.points.windows(2) {
            assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12), "not monotone at {:?}", w);
        }
        assert!(curve.points.last().unwrap().1 < 1e-12);
    }
}

#[test]
fn white_coefficients_follow_the_analytic_tail() {
    // equal magnitudes: ‖u − Σ_N u‖/‖u‖ ≈ √(1 − N/M) in coefficient space
    let n = 64;
    let mut c = zero_div(n, TransformMode::Anisotropic, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (k, i, f) in positions(&c) {
        let w = div_weights(&c, &k)[i];
        put(&mut c, &k, i, f, if rng.gen::<bool>() { 1.0 } else { -1.0 } / w);
    }
    let m = c.num_div_coeffs();
    let pts: Vec<usize> = (1..10).map(|q| q * m / 10).collect();
    let curve = compression_curve(&c, &pts).unwrap();
    for (nn, e) in &curve.points {
        let want = (1.0 - *nn as f64 / m as f64).sqrt();
        assert!((e / want - 1.0).abs() < 0.2, "N={nn}: {e} vs {want}");
    }
}

#[test]
fn fit_slope_on_synthetic_curves() {
    let mk = |f: &dyn Fn(f64) -> f64| CompressionCurve {
        points: (0..20).map(|i| (1usize << i, f((1usize << i) as f64))).collect(),
        total_coeffs: 1 << 19,
        slope: None,
        region: None,
    };
    let c1 = mk(&|n| 3.0 * n.powf(-1.0));
    assert!((fit_slope(&c1, (0.0, 1.0)).unwrap() - 1.0).abs() < 1e-12);
    let c2 = mk(&|n| n.powf(-2.0));
    assert!((fit_slope(&c2, (0.3, 0.6)).unwrap() - 2.0).abs() < 1e-12);
    let flat = mk(&|_| 0.5);
    assert_eq!(fit_slope(&flat, (0.1, 0.9)).unwrap(), 0.0);
    let rising = mk(&|n| n);
    assert_eq!(fit_slope(&rising, (0.1, 0.9)).unwrap(), 0.0);
    assert!(fit_slope(&c1, (0.5, 0.55)).is_err());
    assert!(fit_slope(&c1, (0.6, 0.4)).is_err());
    assert!(fit_slope(&c1, (-0.1, 0.4)).is_err());
    assert!(fit_slope(&c1, (0.2, 1.5)).is_err());
    let short = CompressionCurve { points: vec![(1, 1.0), (2, 0.5)], total_coeffs: 2, slope: None, region: None };
    assert!(fit_slope(&short, (0.0, 1.0)).is_err());
}

#[test]
fn threshold_selection() {
    let c = planted(16, 1.0, 4);
    let r = ranked(&c);
    assert!(same(&threshold_select(&c, 0.0), &c));
    assert!(ranked(&threshold_select(&c, r[0].magnitude)).iter().all(|x| x.magnitude == 0.0));
    let t = threshold_select(&c, r[9].magnitude);
    assert!(same(&t, &nbest_select(&c, 9)));
}

#[test]
fn log_spacing() {
    let p = log_spaced_points(1000, 4);
    assert_eq!(p, vec![1, 10, 100, 1000]);
    assert_eq!(log_spaced_points(0, 5), vec![0]);
    let q = log_spaced_points(50, 200);
    assert!(q.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(*q.last().unwrap(), 50);
}

#[test]
fn zero_field_has_no_curve() {
    let c = zero_div(16, TransformMode::Anisotropic, 4);
    assert!(compression_curve(&c, &[1, 2, 3]).is_err());
}

fn vortex_coeffs(n: usize, mode: TransformMode) -> DivFreeCoeffs {
    let (_, u) = gen_vortices(n, &default_vortices()).unwrap();
    let s = fourier_project(&u).unwrap();
    let j = n.trailing_zeros() as usize;
    let levels = if mode == TransformMode::Anisotropic { j } else { j - 2 };
    to_divfree(&VectorCoeffs::analyze(&s, mode, &[levels, levels]).unwrap()).unwrap()
}

#[test]
fn vortices_are_sparse() {
    for mode in [TransformMode::Anisotropic, TransformMode::Isotropic] {
        let c = vortex_coeffs(128, mode);
        let f = energy_fraction(&c, &[0.01, 0.05, 1.0]).unwrap();
        assert!(f[1] >= 0.99, "{mode:?}: {f:?}");
        assert!(f[0] <= f[1] && f[1] <= f[2]);
        assert!((f[2] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn smooth_field_slope_is_large() {
    let c = vortex_coeffs(128, TransformMode::Anisotropic);
    let pts = log_spaced_points(c.num_div_coeffs(), 40);
    let curve = compression_curve_with_fit(&c, &pts, (0.3, 0.7)).unwrap();
    let s = curve.slope.unwrap();
    assert!(s > 1.0, "{s}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn nbest_equals_threshold_at_next_magnitude(seed in 0u64..100_000, nn in 0usize..200) {
        let mut c = zero_div(16, TransformMode::Anisotropic, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (k, i, f) in positions(&c) {
            put(&mut c, &k, i, f, rng.gen_range(-1.0..1.0));
        }
        let r = ranked(&c);
        prop_assume!(r[nn].magnitude < r[nn.saturating_sub(1)].magnitude || nn == 0);
        prop_assert!(same(&nbest_select(&c, nn), &threshold_select(&c, r[nn].magnitude)));
    }

    #[test]
    fn curve_is_non_increasing(seed in 0u64..100_000, s in 0.6f64..2.0) {
        let c = planted(16, s, seed);
        let curve = compression_curve(&c, &log_spaced_points(c.num_div_coeffs(), 25)).unwrap();
        for w in curve.points.windows(2) {
            prop_assert!(w[1].1 <= w[0].1 * (1.0 + 1e-12));
        }
    }
}
