use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dfwave::analysis::{compression_curve, div_weights, fit_slope, log_spaced_points};
use dfwave::divfree::{to_divfree, DivBlock, DivFreeCoeffs, VectorCoeffs};
use dfwave::fwt::TransformMode;
use dfwave::hodge::{hodge_decompose, hodge_divfree_3d, pressure, reconstruct_div_3d, reconstruct_parts, HodgeConfig, InterpKind};
use dfwave::oracle::{
    default_vortices, gen_compressible_random, gen_divfree_random, gen_gradient, gen_vortices, nonlinear_term, random_scalar,
};
use dfwave::sampling::{fourier_project_field, interp_exact_field, interp_field, ShiftedSpaceTag, SplineField, StaggeredField};
use dfwave_cli::files::{curve_csv, write_atomic, FieldFile};

#[derive(Parser)]
#[command(name = "dfw", version, about = "Divergence-free wavelet analysis and Hodge decomposition of periodic vector fields")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic field on the staggered grid.
    Gen {
        #[arg(long = "type", value_enum)]
        kind: GenKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Spectrum exponent: |û(k)|² ∝ |k|^(−exponent). Default 8 for gradient, 3 otherwise.
        #[arg(long)]
        exponent: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Div-free wavelet coefficients: magnitude mosaics and a summary.
    Analyze {
        input: PathBuf,
        #[arg(long, value_enum)]
        basis: Basis,
        /// Decomposition depth (default: full).
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, value_enum, default_value_t = Interp::Fourier)]
        interp: Interp,
        /// Writes PREFIX.div1.dfw (and PREFIX.div2.dfw in 3D).
        #[arg(long)]
        mosaic: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Best-N-term compression curve of the div-free part.
    Compress {
        input: PathBuf,
        #[arg(long, value_enum)]
        basis: Option<Basis>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, value_enum, default_value_t = Interp::Fourier)]
        interp: Interp,
        /// Comma-separated N values (default: 40 log-spaced points).
        #[arg(long, value_delimiter = ',')]
        points: Option<Vec<usize>>,
        /// Fraction pair a,b of the log N span used for the slope fit.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        fit_region: Option<Vec<f64>>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Iterative wavelet Hodge decomposition.
    Hodge {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value_t = 500)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = HodgeInterp::Quasi)]
        interp: HodgeInterp,
        #[arg(long)]
        out_div: Option<PathBuf>,
        /// Gradient part (in 3D: everything not div-free).
        #[arg(long)]
        out_curl: Option<PathBuf>,
        /// Pressure at the collocation points, mean zero (2D only).
        #[arg(long)]
        pressure: Option<PathBuf>,
        #[arg(long)]
        history: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum GenKind {
    DivfreeRandom,
    CompressibleRandom,
    Vortices,
    Gradient,
    Nonlinear,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum Basis {
    Iso2d,
    Aniso2d,
    Iso3d,
    Aniso3d,
}

#[derive(Copy, Clone, ValueEnum)]
enum Interp {
    Fourier,
    Quasi,
    Exact,
}

#[derive(Copy, Clone, ValueEnum)]
enum HodgeInterp {
    Quasi,
    FourierFirst,
    Exact,
}

enum Fail {
    Input(String),
    NotConverged,
}

impl<E: std::fmt::Display> From<E> for Fail {
    fn from(e: E) -> Self {
        Fail::Input(e.to_string())
    }
}

type Res<T> = Result<T, Fail>;

fn input(msg: impl Into<String>) -> Fail {
    Fail::Input(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = std::env::var("DFW_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    let r = match cli.cmd {
        Cmd::Gen { kind, n, dim, exponent, seed, out } => gen(kind, n, dim, exponent, seed, &out),
        Cmd::Analyze { input, basis, levels, interp, mosaic, summary } => {
            analyze(&input, basis, levels, interp, mosaic.as_deref(), summary.as_deref())
        }
        Cmd::Compress { input, basis, levels, interp, points, fit_region, out } => {
            compress(&input, basis, levels, interp, points, fit_region, &out)
        }
        Cmd::Hodge { input, eps, max_iter, interp, out_div, out_curl, pressure, history } => {
            let kind = match interp {
                HodgeInterp::Quasi => InterpKind::Quasi,
                HodgeInterp::FourierFirst => InterpKind::FourierFirstStep,
                HodgeInterp::Exact => InterpKind::Exact,
            };
            let cfg = HodgeConfig { epsilon: eps, max_iter, interp: kind, record_history: true };
            hodge(&input, &cfg, out_div.as_deref(), out_curl.as_deref(), pressure.as_deref(), history.as_deref())
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Fail::NotConverged) => {
            eprintln!("error: no convergence within the iteration limit");
            ExitCode::from(3)
        }
    }
}

fn gen(kind: GenKind, n: usize, dim: usize, exponent: Option<f64>, seed: u64, out: &Path) -> Res<()> {
    // a smooth default pressure keeps the sampled gradient well resolved
    let exponent = exponent.unwrap_or(if matches!(kind, GenKind::Gradient) { 8.0 } else { 3.0 });
    if !n.is_power_of_two() || n < 4 {
        return Err(input(format!("size {n} must be a power of two, at least 4")));
    }
    if !(2..=3).contains(&dim) {
        return Err(input(format!("dimension {dim} must be 2 or 3")));
    }
    let field = match kind {
        GenKind::DivfreeRandom => gen_divfree_random(n, dim, exponent, seed)?.0,
        GenKind::CompressibleRandom => gen_compressible_random(n, dim, exponent, seed)?.0,
        GenKind::Vortices => {
            if dim != 2 {
                return Err(input("vortices are 2D only"));
            }
            gen_vortices(n, &default_vortices())?.0
        }
        GenKind::Gradient => gen_gradient(&random_scalar(n, dim, exponent, seed)?)?.0,
        GenKind::Nonlinear => nonlinear_term(&gen_divfree_random(n, dim, exponent, seed)?.1, true)?.to_staggered()?,
    };
    FieldFile::from_staggered(&field).write(out)?;
    println!("wrote {} ({dim}D, n = {n}, norm {:.6e})", out.display(), field.norm());
    Ok(())
}

fn read_field(path: &Path) -> Res<StaggeredField> {
    let f = FieldFile::read(path)?.to_staggered()?;
    if !f.is_staggered() {
        return Err(input(format!("{}: expected a vector field on the staggered grid", path.display())));
    }
    Ok(f)
}

fn basis_parts(b: Basis) -> (usize, TransformMode) {
    match b {
        Basis::Iso2d => (2, TransformMode::Isotropic),
        Basis::Aniso2d => (2, TransformMode::Anisotropic),
        Basis::Iso3d => (3, TransformMode::Isotropic),
        Basis::Aniso3d => (3, TransformMode::Anisotropic),
    }
}

fn spline(f: &StaggeredField, interp: Interp) -> Res<SplineField> {
    Ok(match interp {
        Interp::Fourier => fourier_project_field(f)?,
        Interp::Quasi => interp_field(f, ShiftedSpaceTag::Plain)?,
        Interp::Exact => interp_exact_field(f, ShiftedSpaceTag::Plain)?,
    })
}

/// Div-free coefficients of the file's field in the requested basis.
fn divfree_coeffs(path: &Path, basis: Option<Basis>, levels: Option<usize>, interp: Interp) -> Res<(VectorCoeffs, DivFreeCoeffs)> {
    let f = read_field(path)?;
    let basis = basis.unwrap_or(if f.ndim() == 2 { Basis::Aniso2d } else { Basis::Aniso3d });
    let (nd, mode) = basis_parts(basis);
    if f.ndim() != nd {
        return Err(input(format!("{}D field does not match the {nd}D basis", f.ndim())));
    }
    let full = f.n.trailing_zeros() as usize;
    let lv = levels.unwrap_or(full);
    if lv == 0 || lv > full {
        return Err(input(format!("levels must be in 1..={full}")));
    }
    let vc = VectorCoeffs::analyze(&spline(&f, interp)?, mode, &vec![lv; nd])?;
    let dc = to_divfree(&vc)?;
    Ok((vc, dc))
}

fn analyze(path: &Path, basis: Basis, levels: Option<usize>, interp: Interp, mosaic: Option<&Path>, summary: Option<&Path>) -> Res<()> {
    let (vc, dc) = divfree_coeffs(path, Some(basis), levels, interp)?;
    let nd = dc.ndim();
    let total = vc
        .components
        .iter()
        .flat_map(|p| p.blocks.values())
        .map(|b| b.mapv(|x| x * x).sum())
        .sum::<f64>()
        .sqrt();
    let (mut n_comp, mut n_scaling) = (0, 0);
    for b in dc.blocks.values() {
        match b {
            DivBlock::Split { complement, .. } => n_comp += complement.len(),
            DivBlock::Scaling(c) => n_scaling += c.iter().map(|a| a.len()).sum::<usize>(),
        }
    }
    let rel = |x: f64| if total > 0.0 { x / total } else { 0.0 };
    let mut text = String::new();
    text.push_str(&format!("basis: {}\n", basis.to_possible_value().unwrap().get_name()));
    text.push_str(&format!("n: {}\nlevels: {}\n", vc.shape()[0], vc.levels()[0]));
    text.push_str(&format!("coefficients: {}\n", vc.components.iter().map(|p| p.num_coeffs()).sum::<usize>()));
    text.push_str(&format!("div_coefficients: {}\n", dc.num_div_coeffs()));
    text.push_str(&format!("complement_coefficients: {n_comp}\n"));
    text.push_str(&format!("scaling_coefficients: {n_scaling}\n"));
    text.push_str(&format!("coefficient_norm: {total:.16e}\n"));
    text.push_str(&format!("dn_relative_norm: {:.16e}\n", rel(dc.complement_norm())));
    print!("{text}");
    if let Some(p) = summary {
        write_atomic(p, text.as_bytes())?;
    }
    if let Some(prefix) = mosaic {
        for i in 0..nd - 1 {
            let mut m = vc.components[0].zeros_like();
            for (k, b) in &dc.blocks {
                if let DivBlock::Split { div, .. } = b {
                    let w = div_weights(&dc, k)[i];
                    m.blocks.insert(k.clone(), div[i].mapv(|x| x.abs() * w));
                }
            }
            let mut name = prefix.as_os_str().to_owned();
            name.push(format!(".div{}.dfw", i + 1));
            FieldFile::scalar(m.to_mallat()).write(Path::new(&name))?;
        }
    }
    Ok(())
}

fn compress(
    path: &Path,
    basis: Option<Basis>,
    levels: Option<usize>,
    interp: Interp,
    points: Option<Vec<usize>>,
    fit_region: Option<Vec<f64>>,
    out: &Path,
) -> Res<()> {
    let region = match fit_region.as_deref() {
        None => None,
        Some(&[a, b]) => Some((a, b)),
        Some(_) => return Err(input("--fit-region takes two numbers a,b")),
    };
    let (_, dc) = divfree_coeffs(path, basis, levels, interp)?;
    let pts = points.unwrap_or_else(|| log_spaced_points(dc.num_div_coeffs(), 40));
    let curve = compression_curve(&dc, &pts)?;
    let slope = region.map(|r| fit_slope(&curve, r)).transpose()?;
    write_atomic(out, curve_csv("N,rel_l2_error", &curve.points).as_bytes())?;
    println!("div coefficients: {}", curve.total_coeffs);
    println!("points: {}", curve.points.len());
    if let Some(s) = slope {
        println!("slope: {s:.6}");
    }
    Ok(())
}

fn hodge(
    path: &Path,
    cfg: &HodgeConfig,
    out_div: Option<&Path>,
    out_curl: Option<&Path>,
    pressure_out: Option<&Path>,
    history: Option<&Path>,
) -> Res<()> {
    cfg.validate()?;
    let f = read_field(path)?;
    let norm = f.norm();
    let ratio = |x: f64| if norm > 0.0 { x / norm } else { 0.0 };
    let (ud, uc, hist, iterations, converged) = match f.ndim() {
        2 => {
            let r = hodge_decompose(&f, cfg)?;
            let (ud, uc) = reconstruct_parts(&r)?;
            if let Some(p) = pressure_out {
                FieldFile::scalar(pressure(&r)?).write(p)?;
            }
            (ud, uc, r.residual_history, r.iterations, r.converged)
        }
        3 => {
            if pressure_out.is_some() {
                return Err(input("--pressure is only supported for 2D fields"));
            }
            let r = hodge_divfree_3d(&f, cfg)?;
            let ud = reconstruct_div_3d(&r)?;
            let uc = f.sub(&ud)?;
            (ud, uc, r.increment_history, r.iterations, r.converged)
        }
        d => return Err(input(format!("{d}D fields are not supported"))),
    };
    if let Some(p) = out_div {
        FieldFile::from_staggered(&ud).write(p)?;
    }
    if let Some(p) = out_curl {
        FieldFile::from_staggered(&uc).write(p)?;
    }
    if let Some(p) = history {
        let rows: Vec<(usize, f64)> = hist.iter().enumerate().map(|(i, r)| (i + 1, *r)).collect();
        write_atomic(p, curve_csv("iter,residual", &rows).as_bytes())?;
    }
    println!("iterations: {iterations}");
    println!("converged: {converged}");
    println!("final_residual: {:.16e}", hist.last().copied().unwrap_or(0.0));
    println!("div_norm_ratio: {:.16e}", ratio(ud.norm()));
    println!("curl_norm_ratio: {:.16e}", ratio(uc.norm()));
    if converged {
        Ok(())
    } else {
        Err(Fail::NotConverged)
    }
}
