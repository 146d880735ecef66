use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dfwave::analysis::reconstruct;
use dfwave::divfree::{from_divfree, to_divfree, DivBlock, VectorCoeffs};
use dfwave::fwt::{TransformMode, WaveletPyramid};
use dfwave::oracle::{gen_compressible_random, leray_project, SpectralField};
use dfwave::sampling::{component_degrees, eval_at_grid, interp_field, ShiftedSpaceTag};
use dfwave_cli::files::{parse_curve, FieldFile};

fn dfw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dfw")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = dfw(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    dfw(args).status.code().unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn p(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.p(name).to_str().unwrap().to_string()
    }
}

fn write_field(path: &Path, f: &dfwave::sampling::StaggeredField) {
    FieldFile::from_staggered(f).write(path).unwrap();
}

#[test]
fn gen_gradient_has_null_leray_projection() {
    let d = Dir::new();
    ok(&["gen", "--type", "gradient", "--n", "64", "-o", &d.s("g.dfw")]);
    let f = FieldFile::read(&d.p("g.dfw")).unwrap().to_staggered().unwrap();
    let u = SpectralField::from_field(&f).unwrap();
    assert!(u.norm() > 0.0);
    assert!(leray_project(&u).norm() < 1e-12 * u.norm());
}

#[test]
fn gen_is_deterministic() {
    let d = Dir::new();
    for (name, seed) in [("a", "7"), ("b", "7"), ("c", "8")] {
        ok(&["gen", "--type", "divfree-random", "--n", "128", "--exponent", "3", "--seed", seed, "-o", &d.s(name)]);
    }
    let r = |n: &str| std::fs::read(d.p(n)).unwrap();
    assert_eq!(r("a"), r("b"));
    assert_ne!(r("a"), r("c"));
    for t in ["vortices", "nonlinear", "compressible-random"] {
        ok(&["gen", "--type", t, "--n", "16", "-o", &d.s(t)]);
    }
    ok(&["gen", "--type", "divfree-random", "--n", "8", "--dim", "3", "-o", &d.s("u3")]);
    assert_eq!(FieldFile::read(&d.p("u3")).unwrap().components.len(), 3);
}

#[test]
fn gen_rejects_bad_input() {
    let d = Dir::new();
    let o = dfw(&["gen", "--type", "vortices", "--n", "100", "-o", &d.s("x")]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("power of two"));
    assert!(!d.p("x").exists());
    assert_eq!(code(&["gen", "--type", "vortices", "--n", "16", "--dim", "3", "-o", &d.s("x")]), 2);
    assert_eq!(code(&["gen", "--type", "nope", "--n", "16", "-o", &d.s("x")]), 2);
    assert_eq!(code(&["gen", "--n", "16", "-o", &d.s("x")]), 2);
}

#[test]
fn analyze_reports_complement_norm() {
    let d = Dir::new();
    ok(&["gen", "--type", "divfree-random", "--n", "64", "--seed", "3", "-o", &d.s("u")]);
    ok(&["gen", "--type", "compressible-random", "--n", "64", "--seed", "3", "-o", &d.s("c")]);
    for basis in ["iso2d", "aniso2d"] {
        ok(&["analyze", &d.s("u"), "--basis", basis, "--summary", &d.s("s.txt"), "--mosaic", &d.s("m")]);
        let s = std::fs::read_to_string(d.p("s.txt")).unwrap();
        assert!(value(&s, "dn_relative_norm") < 1e-6, "{s}");
        assert_eq!(value(&s, "coefficients"), 2.0 * 64.0 * 64.0);
        let total = value(&s, "div_coefficients") + value(&s, "complement_coefficients") + value(&s, "scaling_coefficients");
        assert_eq!(total, 2.0 * 64.0 * 64.0);
        let m = FieldFile::read(&d.p("m.div1.dfw")).unwrap();
        assert_eq!((m.components.len(), m.dims.clone()), (1, vec![64, 64]));
        assert!(m.components[0].iter().all(|v| *v >= 0.0));
        assert!(m.components[0].iter().any(|v| *v > 0.0));
        let out = ok(&["analyze", &d.s("c"), "--basis", basis]);
        assert!(value(&out, "dn_relative_norm") > 1e-2, "{out}");
    }
}

#[test]
fn analyze_3d_writes_two_mosaics() {
    let d = Dir::new();
    ok(&["gen", "--type", "divfree-random", "--n", "16", "--dim", "3", "-o", &d.s("u")]);
    for basis in ["iso3d", "aniso3d"] {
        let out = ok(&["analyze", &d.s("u"), "--basis", basis, "--levels", "2", "--mosaic", &d.s(basis)]);
        assert!(value(&out, "dn_relative_norm") < 1e-6);
        assert_eq!(value(&out, "levels"), 2.0);
        for i in 1..=2 {
            assert_eq!(FieldFile::read(&d.p(&format!("{basis}.div{i}.dfw"))).unwrap().dims, vec![16; 3]);
        }
    }
}

#[test]
fn analyze_rejects_bad_input() {
    let d = Dir::new();
    std::fs::write(d.p("empty"), b"").unwrap();
    assert_eq!(code(&["analyze", &d.s("empty"), "--basis", "iso2d"]), 2);
    assert_eq!(code(&["analyze", &d.s("missing"), "--basis", "iso2d"]), 2);
    ok(&["gen", "--type", "vortices", "--n", "16", "-o", &d.s("v")]);
    assert_eq!(code(&["analyze", &d.s("v"), "--basis", "aniso3d"]), 2);
    assert_eq!(code(&["analyze", &d.s("v"), "--basis", "aniso2d", "--levels", "5"]), 2);
    assert_eq!(code(&["analyze", &d.s("v"), "--basis", "aniso2d", "--levels", "0"]), 2);
    // a scalar file is not a staggered vector field
    FieldFile::scalar(ndarray::ArrayD::zeros(ndarray::IxDyn(&[16, 16]))).write(&d.p("s")).unwrap();
    assert_eq!(code(&["analyze", &d.s("s"), "--basis", "aniso2d"]), 2);
}

#[test]
fn compress_writes_monotone_curve() {
    let d = Dir::new();
    ok(&["gen", "--type", "vortices", "--n", "64", "-o", &d.s("v")]);
    let out = ok(&["compress", &d.s("v"), "-o", &d.s("c.csv"), "--fit-region", "0.2,0.7"]);
    assert!(value(&out, "slope") > 0.5, "{out}");
    let text = std::fs::read_to_string(d.p("c.csv")).unwrap();
    let (header, rows) = parse_curve(&text).unwrap();
    assert_eq!(header, "N,rel_l2_error");
    assert!(rows.len() >= 20);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[1].1 <= w[0].1 * (1.0 + 1e-12)));
    // 17 significant digits in every error entry
    let first = text.lines().nth(1).unwrap();
    assert_eq!(first.split(',').nth(1).unwrap().split('e').next().unwrap().replace('.', "").len(), 17);
    ok(&["compress", &d.s("v"), "-o", &d.s("p.csv"), "--points", "1,10,100"]);
    let (_, rows) = parse_curve(&std::fs::read_to_string(d.p("p.csv")).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 10, 100]);
}

#[test]
fn compress_recovers_planted_decay() {
    // coefficients with ranked weighted magnitudes i^{−(s+1/2)}, scattered by a fixed permutation
    let n = 64;
    let s = 1.0;
    let comps = (0..2)
        .map(|i| WaveletPyramid::zeros(TransformMode::Anisotropic, &[n, n], &component_degrees(ShiftedSpaceTag::Plain, 2, i), &[6, 6]).unwrap())
        .collect();
    let mut c = to_divfree(&VectorCoeffs::new(ShiftedSpaceTag::Plain, comps).unwrap()).unwrap();
    let keys: Vec<_> = c.blocks.keys().cloned().collect();
    let mut slots = vec![];
    for k in &keys {
        if let DivBlock::Split { div, .. } = &c.blocks[k] {
            slots.extend((0..div[0].len()).map(|f| (k.clone(), f)));
        }
    }
    let m = slots.len();
    for (rank, slot) in (0..m).map(|i| (i * 2654435761) % m).enumerate() {
        let (k, f) = &slots[slot];
        let w = dfwave::analysis::div_weights(&c, k)[0];
        let sign = if rank % 3 == 0 { -1.0 } else { 1.0 };
        if let Some(DivBlock::Split { div, .. }) = c.blocks.get_mut(k) {
            div[0].as_slice_mut().unwrap()[*f] = sign * ((rank + 1) as f64).powf(-(s + 0.5)) / w;
        }
    }
    let d = Dir::new();
    write_field(&d.p("planted"), &reconstruct(&c).unwrap());
    let out = ok(&["compress", &d.s("planted"), "--interp", "exact", "-o", &d.s("c.csv"), "--fit-region", "0.2,0.7"]);
    let got = value(&out, "slope");
    assert!((got - s).abs() <= 0.15, "{got}");
    assert_eq!(value(&out, "div coefficients"), m as f64);
    // a region too narrow to fit, and a malformed one
    assert_eq!(code(&["compress", &d.s("planted"), "-o", &d.s("x.csv"), "--fit-region", "0.96,0.99"]), 2);
    assert_eq!(code(&["compress", &d.s("planted"), "-o", &d.s("x.csv"), "--fit-region", "0.7,0.2"]), 2);
    assert_eq!(code(&["compress", &d.s("planted"), "-o", &d.s("x.csv"), "--fit-region", "0.2"]), 2);
}

#[test]
fn hodge_on_gradient_input() {
    let d = Dir::new();
    ok(&["gen", "--type", "gradient", "--n", "64", "-o", &d.s("g")]);
    let out = ok(&[
        "hodge", &d.s("g"), "--out-div", &d.s("ud"), "--out-curl", &d.s("uc"), "--pressure", &d.s("p"), "--history", &d.s("h.csv"),
    ]);
    assert!(value(&out, "div_norm_ratio") < 1e-3, "{out}");
    assert!(value(&out, "final_residual") < 1e-8);
    let f = FieldFile::read(&d.p("g")).unwrap().to_staggered().unwrap();
    let ud = FieldFile::read(&d.p("ud")).unwrap().to_staggered().unwrap();
    let uc = FieldFile::read(&d.p("uc")).unwrap().to_staggered().unwrap();
    assert!(f.sub(&ud).unwrap().sub(&uc).unwrap().norm() < 1e-8 * f.norm());
    let p = FieldFile::read(&d.p("p")).unwrap();
    assert_eq!((p.mode, p.components.len()), (0, 1));
    assert!(p.components[0].mean().unwrap().abs() < 1e-12);
    let (header, rows) = parse_curve(&std::fs::read_to_string(d.p("h.csv")).unwrap()).unwrap();
    assert_eq!(header, "iter,residual");
    assert_eq!(rows.len() as f64, value(&out, "iterations"));
    assert_eq!(rows.last().unwrap().1, value(&out, "final_residual"));
}

#[test]
fn hodge_divfree_spline_converges_in_one_iteration() {
    let d = Dir::new();
    let (w, _) = gen_compressible_random(32, 2, 3.0, 4).unwrap();
    let s = interp_field(&w, ShiftedSpaceTag::Plain).unwrap();
    let c = to_divfree(&VectorCoeffs::analyze(&s, TransformMode::Anisotropic, &[5, 5]).unwrap()).unwrap().without_complement();
    write_field(&d.p("u"), &eval_at_grid(&from_divfree(&c).unwrap().synthesize().unwrap()).unwrap());
    let out = ok(&["hodge", &d.s("u"), "--interp", "exact"]);
    assert_eq!(value(&out, "iterations"), 1.0, "{out}");
    assert!(value(&out, "curl_norm_ratio") < 1e-8);
}

#[test]
fn hodge_exit_codes() {
    let d = Dir::new();
    ok(&["gen", "--type", "compressible-random", "--n", "32", "-o", &d.s("c")]);
    assert_eq!(code(&["hodge", &d.s("c"), "--eps", "0"]), 2);
    assert_eq!(code(&["hodge", &d.s("c"), "--max-iter", "0"]), 2);
    assert_eq!(code(&["hodge", &d.s("c"), "--max-iter", "2", "--out-div", &d.s("ud"), "--history", &d.s("h")]), 3);
    assert!(d.p("ud").exists());
    assert_eq!(parse_curve(&std::fs::read_to_string(d.p("h")).unwrap()).unwrap().1.len(), 2);
    ok(&["gen", "--type", "compressible-random", "--n", "8", "--dim", "3", "-o", &d.s("c3")]);
    assert_eq!(code(&["hodge", &d.s("c3"), "--pressure", &d.s("p3")]), 2);
    assert!(!d.p("p3").exists());
    let out = ok(&["hodge", &d.s("c3"), "--out-div", &d.s("ud3"), "--out-curl", &d.s("uc3")]);
    assert!(out.contains("converged: true"), "{out}");
    let f = FieldFile::read(&d.p("c3")).unwrap().to_staggered().unwrap();
    let ud = FieldFile::read(&d.p("ud3")).unwrap().to_staggered().unwrap();
    let uc = FieldFile::read(&d.p("uc3")).unwrap().to_staggered().unwrap();
    assert!(ud.add(&uc).unwrap().sub(&f).unwrap().norm() < 1e-12 * f.norm());
}

#[test]
fn pipeline_is_reproducible() {
    let d = Dir::new();
    let run = |tag: &str, threads: &str| {
        let mut cmds: Vec<Vec<String>> = vec![
            vec!["gen".into(), "--type".into(), "nonlinear".into(), "--n".into(), "32".into(), "--seed".into(), "5".into(), "-o".into(), d.s(&format!("f{tag}"))],
            vec!["hodge".into(), d.s(&format!("f{tag}")), "--out-div".into(), d.s(&format!("ud{tag}")), "--history".into(), d.s(&format!("h{tag}"))],
            vec!["analyze".into(), d.s(&format!("ud{tag}")), "--basis".into(), "aniso2d".into(), "--interp".into(), "quasi".into(), "--mosaic".into(), d.s(&format!("m{tag}"))],
        ];
        for c in cmds.iter_mut() {
            let o = Command::new(env!("CARGO_BIN_EXE_dfw")).args(c.iter()).env("DFW_THREADS", threads).output().unwrap();
            assert!(o.status.success(), "{c:?}");
        }
    };
    run("a", "1");
    run("b", "4");
    for f in ["f", "ud", "h", "m"] {
        let name = |t: &str| if f == "m" { format!("m{t}.div1.dfw") } else { format!("{f}{t}") };
        assert_eq!(std::fs::read(d.p(&name("a"))).unwrap(), std::fs::read(d.p(&name("b"))).unwrap(), "{f}");
    }
}
