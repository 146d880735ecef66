//! Best-N-term approximation of div-free coefficient sets and compression curves.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::divfree::{axis_ops, from_divfree, AxisOp, DivBlock, DivFreeCoeffs};
use crate::error::{Error, Result};
use crate::fwt::{BlockKey, TransformMode};
use crate::sampling::{eval_at_grid, StaggeredField};

/// Ranking weight of each div-free array of a block: the Euclidean length of the
/// frame vector that multiplies the (L²-normalised) component wavelets.
pub fn div_weights(c: &DivFreeCoeffs, key: &BlockKey) -> Vec<f64> {
    let ops = axis_ops(&c.template.components[0], key);
    let wav: Vec<usize> = (0..ops.len()).filter(|&a| ops[a].is_wavelet()).collect();
    let len = |a: f64, b: f64| (a * a + b * b).sqrt();
    let w = |a: usize| ops[a].weight();
    if c.mode() == TransformMode::Isotropic || wav.len() <= 1 {
        return vec![1.0; ops.len() - 1];
    }
    match (ops.len(), wav.len()) {
        (2, 2) => vec![len(w(0), w(1))],
        (3, 2) => {
            let s = (0..3).find(|a| !matches!(ops[*a], AxisOp::Wavelet(_))).unwrap();
            let (p, q) = ((s + 1) % 3, (s + 2) % 3);
            vec![len(w(p), w(q)), 1.0]
        }
        _ => vec![len(w(0), w(1)), len(w(1), w(2))],
    }
}

/// Location of one div-free coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct CoeffRef {
    pub key: BlockKey,
    pub array: usize,
    pub flat: usize,
    /// Weighted magnitude used for ranking.
    pub magnitude: f64,
}

/// All div-free coefficients outside the scaling block, largest weighted magnitude
/// first; ties keep the (block, array, index) order.
pub fn ranked(c: &DivFreeCoeffs) -> Vec<CoeffRef> {
    let mut out = Vec::new();
    for (k, b) in &c.blocks {
        if let DivBlock::Split { div, .. } = b {
            let weights = div_weights(c, k);
            for (i, (a, w)) in div.iter().zip(weights).enumerate() {
                for (flat, v) in a.iter().enumerate() {
                    out.push(CoeffRef {
                        key: k.clone(),
                        array: i,
                        flat,
                        magnitude: v.abs() * w,
                    });
                }
            }
        }
    }
    // stable sort keeps the lexicographic order among equal magnitudes
    out.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap_or(Ordering::Equal));
    out
}

fn keep_only(c: &DivFreeCoeffs, keep: &[CoeffRef]) -> DivFreeCoeffs {
    let mut sel: BTreeMap<(&BlockKey, usize), Vec<usize>> = BTreeMap::new();
    for r in keep {
        sel.entry((&r.key, r.array)).or_default().push(r.flat);
    }
    let mut out = c.clone();
    for (k, b) in out.blocks.iter_mut() {
        if let DivBlock::Split { div, .. } = b {
            for (i, a) in div.iter_mut().enumerate() {
                let mut mask = vec![false; a.len()];
                for &f in sel.get(&(k, i)).map(|v| v.as_slice()).unwrap_or(&[]) {
                    mask[f] = true;
                }
                a.iter_mut().zip(mask).for_each(|(v, m)| {
                    if !m {
                        *v = 0.0
                    }
                });
            }
        }
    }
    out
}

/// Keeps the `n` largest div-free coefficients. The scaling block and the
/// complement coefficients are left untouched.
pub fn nbest_select(c: &DivFreeCoeffs, n: usize) -> DivFreeCoeffs {
    let r = ranked(c);
    keep_only(c, &r[..n.min(r.len())])
}

/// Keeps the div-free coefficients whose weighted magnitude exceeds `threshold`.
pub fn threshold_select(c: &DivFreeCoeffs, threshold: f64) -> DivFreeCoeffs {
    let keep: Vec<CoeffRef> = ranked(c).into_iter().filter(|r| r.magnitude > threshold).collect();
    keep_only(c, &keep)
}

/// Values of a div-free expansion at the staggered sample points.
pub fn reconstruct(c: &DivFreeCoeffs) -> Result<StaggeredField> {
    eval_at_grid(&from_divfree(c)?.synthesize()?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionCurve {
    /// (N, relative L² error) pairs in increasing N.
    pub points: Vec<(usize, f64)>,
    pub total_coeffs: usize,
    pub slope: Option<f64>,
    /// Index range of `points` used for the fit.
    pub region: Option<(usize, usize)>,
}

/// About `count` distinct integers log-spaced over [1, total].
pub fn log_spaced_points(total: usize, count: usize) -> Vec<usize> {
    if total == 0 || count == 0 {
        return vec![0];
    }
    let mut pts: Vec<usize> = (0..count)
        .map(|i| {
            let t = i as f64 / (count.max(2) - 1) as f64;
            (total as f64).powf(t).round() as usize
        })
        .collect();
    pts.dedup();
    pts
}

/// Relative ℓ² error of the best-N-term reconstruction against the full one.
pub fn compression_curve(c: &DivFreeCoeffs, grid_points: &[usize]) -> Result<CompressionCurve> {
    let full = reconstruct(c)?;
    let norm = full.norm();
    if norm == 0.0 {
        return Err(Error::InvalidParameter("zero field has no compression curve".into()));
    }
    let r = ranked(c);
    let mut pts: Vec<usize> = grid_points.iter().map(|&n| n.min(r.len())).collect();
    pts.sort_unstable();
    pts.dedup();
    let points = pts
        .into_iter()
        .map(|n| {
            let approx = reconstruct(&keep_only(c, &r[..n]))?;
            Ok((n, approx.sub(&full)?.norm() / norm))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompressionCurve {
        points,
        total_coeffs: r.len(),
        slope: None,
        region: None,
    })
}

/// Least-squares decay rate s of log err against log N over the fraction `region`
/// of the curve's log N span. Returns s ≥ 0.
pub fn fit_slope(curve: &CompressionCurve, region: (f64, f64)) -> Result<f64> {
    let (a, b) = region;
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a >= b {
        return Err(Error::InvalidParameter(format!("fit region ({a}, {b}) must satisfy 0 <= a < b <= 1")));
    }
    let usable: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|(n, e)| *n > 0 && *e > 0.0)
        .map(|(n, e)| ((*n as f64).ln(), e.ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InvalidParameter("too few positive points to fit".into()));
    }
    let lo = usable.first().unwrap().0;
    let hi = usable.last().unwrap().0;
    let (x0, x1) = (lo + a * (hi - lo), lo + b * (hi - lo));
    let sel: Vec<(f64, f64)> = usable
        .into_iter()
        .filter(|(x, _)| *x >= x0 - 1e-12 && *x <= x1 + 1e-12)
        .collect();
    if sel.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "fit region holds {} points, need at least 3",
            sel.len()
        )));
    }
    let m = sel.len() as f64;
    let mx = sel.iter().map(|p| p.0).sum::<f64>() / m;
    let my = sel.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = sel.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = sel.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("fit region spans a single N".into()));
    }
    Ok((-sxy / sxx).max(0.0))
}

/// Curve plus fitted slope over `region`.
pub fn compression_curve_with_fit(
    c: &DivFreeCoeffs,
    grid_points: &[usize],
    region: (f64, f64),
) -> Result<CompressionCurve> {
    let mut curve = compression_curve(c, grid_points)?;
    let s = fit_slope(&curve, region)?;
    let logs: Vec<f64> = curve.points.iter().map(|(n, _)| (*n.max(&1) as f64).ln()).collect();
    let (lo, hi) = (logs[0], *logs.last().unwrap());
    let inside: Vec<usize> = (0..logs.len())
        .filter(|&i| {
            let t = if hi > lo { (logs[i] - lo) / (hi - lo) } else { 0.0 };
            t >= region.0 - 1e-12 && t <= region.1 + 1e-12
        })
        .collect();
    curve.slope = Some(s);
    curve.region = inside.first().zip(inside.last()).map(|(a, b)| (*a, *b));
    Ok(curve)
}

/// Fraction 1 − ‖u − Σ_N u‖/‖u‖ of the norm captured when keeping the given
/// fractions of the div-free coefficients.
pub fn energy_fraction(c: &DivFreeCoeffs, fractions: &[f64]) -> Result<Vec<f64>> {
    let total = c.num_div_coeffs();
    let pts: Vec<usize> = fractions
        .iter()
        .map(|f| ((f.clamp(0.0, 1.0)) * total as f64).round() as usize)
        .collect();
    let curve = compression_curve(c, &pts)?;
    Ok(pts
        .iter()
        .map(|n| {
            let n = (*n).min(curve.total_coeffs);
            let e = curve.points.iter().find(|(m, _)| *m == n).map(|p| p.1).unwrap_or(1.0);
            1.0 - e
        })
        .collect())
}
