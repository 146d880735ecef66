//! Point samples on staggered grids and level-J spline coefficients.
//!
//! Coefficients are unnormalised: a component is Σ_k c_k Π_α φ_{d_α}(N x_α − σ_α − k_α),
//! with σ_α = 1/2 on the half-shifted ("sharp") spaces and 0 otherwise.

use std::f64::consts::PI;

use ndarray::{ArrayD, Axis, IxDyn, Zip};
use num_complex::Complex64;

use crate::error::{log2_exact, Error, Result};
use crate::oracle::{fft_axis, fft_nd, wavenumber, SpectralField};
use crate::splines::SplineDegree;

/// Default truncation depth of the dual scaling function product.
pub const DUAL_PRODUCT_DEPTH: usize = 40;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ShiftedSpaceTag {
    /// (V¹⊗V⁰)×(V⁰⊗V¹) and its 3D analogue.
    Plain,
    /// Half-shifted spaces (Ṽ⁰⊗Ṽ¹)×(Ṽ¹⊗Ṽ⁰).
    Sharp,
}

/// Per-axis degrees of component `i` in an `ndim`-dimensional vector space.
pub fn component_degrees(space: ShiftedSpaceTag, ndim: usize, i: usize) -> Vec<SplineDegree> {
    let (own, other) = match space {
        ShiftedSpaceTag::Plain => (SplineDegree::Deg2, SplineDegree::Deg1),
        ShiftedSpaceTag::Sharp => (SplineDegree::Deg1, SplineDegree::Deg2),
    };
    (0..ndim).map(|a| if a == i { own } else { other }).collect()
}

/// Stagger offsets (grid units) where component `i` is sampled: 1/2 along axis `i`.
pub fn standard_offsets(ndim: usize) -> Vec<Vec<f64>> {
    (0..ndim)
        .map(|i| (0..ndim).map(|a| if a == i { 0.5 } else { 0.0 }).collect())
        .collect()
}

/// Sample offset of the basis-function centre for one axis.
fn centre_offset(degree: SplineDegree, space: ShiftedSpaceTag) -> f64 {
    match (degree, space) {
        (SplineDegree::Deg1, ShiftedSpaceTag::Plain) => 0.0,
        (SplineDegree::Deg2, ShiftedSpaceTag::Plain) => 0.5,
        (SplineDegree::Deg1, ShiftedSpaceTag::Sharp) => 0.5,
        (SplineDegree::Deg2, ShiftedSpaceTag::Sharp) => 0.0,
    }
}

/// Index shift between coefficient `k` and the sample nearest its centre.
fn index_shift(degree: SplineDegree, space: ShiftedSpaceTag) -> i64 {
    match (degree, space) {
        (SplineDegree::Deg2, ShiftedSpaceTag::Sharp) => 1,
        _ => 0,
    }
}

/// Periodic samples of an n-component field; component `c` sits at `(m + offsets[c])/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct StaggeredField {
    pub n: usize,
    pub components: Vec<ArrayD<f64>>,
    pub offsets: Vec<Vec<f64>>,
}

impl StaggeredField {
    pub fn new(components: Vec<ArrayD<f64>>, offsets: Vec<Vec<f64>>) -> Result<Self> {
        let first = components.first().ok_or_else(|| Error::Shape("no components".into()))?;
        let n = first.shape().first().copied().unwrap_or(0);
        log2_exact(n)?;
        let ndim = first.ndim();
        if components.len() != offsets.len() {
            return Err(Error::Shape("one offset vector per component".into()));
        }
        for (c, o) in components.iter().zip(&offsets) {
            if c.ndim() != ndim || c.shape().iter().any(|&d| d != n) || o.len() != ndim {
                return Err(Error::Shape("components must share a square grid".into()));
            }
        }
        Ok(StaggeredField { n, components, offsets })
    }

    /// Vector field on the standard staggered layout.
    pub fn staggered(components: Vec<ArrayD<f64>>) -> Result<Self> {
        let nd = components.first().map(|c| c.ndim()).unwrap_or(0);
        if components.len() != nd {
            return Err(Error::Shape("staggered field needs ndim components".into()));
        }
        Self::new(components, standard_offsets(nd))
    }

    pub fn collocated(components: Vec<ArrayD<f64>>) -> Result<Self> {
        let nd = components.first().map(|c| c.ndim()).unwrap_or(0);
        let offs = vec![vec![0.0; nd]; components.len()];
        Self::new(components, offs)
    }

    pub fn zeros(n: usize, ndim: usize) -> Result<Self> {
        Self::staggered(vec![ArrayD::zeros(IxDyn(&vec![n; ndim])); ndim])
    }

    pub fn ndim(&self) -> usize {
        self.components[0].ndim()
    }

    pub fn ncomp(&self) -> usize {
        self.components.len()
    }

    pub fn is_staggered(&self) -> bool {
        self.ncomp() == self.ndim() && self.offsets == standard_offsets(self.ndim())
    }

    /// ℓ² norm over all samples of all components.
    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    fn same_layout(&self, other: &Self) -> Result<()> {
        if self.n != other.n || self.offsets != other.offsets {
            return Err(Error::Shape("fields differ in size or stagger".into()));
        }
        Ok(())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.same_layout(other)?;
        let mut out = self.clone();
        for (a, b) in out.components.iter_mut().zip(&other.components) {
            a.scaled_add(alpha, b);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        for c in out.components.iter_mut() {
            c.mapv_inplace(|v| v * alpha);
        }
        out
    }
}

/// Level-J scaling coefficients of a vector field in a plain or sharp space.
#[derive(Clone, Debug, PartialEq)]
pub struct SplineField {
    pub space: ShiftedSpaceTag,
    pub coeffs: Vec<ArrayD<f64>>,
}

impl SplineField {
    pub fn ndim(&self) -> usize {
        self.coeffs[0].ndim()
    }

    pub fn n(&self) -> usize {
        self.coeffs[0].shape()[0]
    }

    pub fn degrees(&self, i: usize) -> Vec<SplineDegree> {
        component_degrees(self.space, self.ndim(), i)
    }
}

/// `out[m] = Σ w · a[m + o]` along `axis`, periodic.
pub(crate) fn stencil_axis(a: &ArrayD<f64>, axis: usize, taps: &[(i64, f64)]) -> ArrayD<f64> {
    let n = a.shape()[axis] as i64;
    let mut out = ArrayD::zeros(a.raw_dim());
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(a.lanes(Axis(axis)))
        .for_each(|mut o, x| {
            for m in 0..n {
                o[m as usize] = taps
                    .iter()
                    .map(|&(off, w)| w * x[(m + off).rem_euclid(n) as usize])
                    .sum();
            }
        });
    out
}

/// Periodic backward difference `a[k] − a[k − 1]` along `axis`.
pub fn backward_diff(a: &ArrayD<f64>, axis: usize) -> ArrayD<f64> {
    stencil_axis(a, axis, &[(0, 1.0), (-1, -1.0)])
}

/// Knot-sample quasi-interpolation. `samples[ℓ] = f(ℓ/N)`; for `Deg2` returns
/// c̃_ℓ = 5/8 (f_ℓ + f_{ℓ+1}) − 1/8 (f_{ℓ−1} + f_{ℓ+2}) for Σ c̃_ℓ φ₁(Nx − ℓ).
/// `Deg1` is nodal interpolation.
pub fn quasi_interp_1d(samples: &[f64], degree: SplineDegree) -> Vec<f64> {
    let n = samples.len() as i64;
    let f = |i: i64| samples[i.rem_euclid(n) as usize];
    match degree {
        SplineDegree::Deg1 => samples.to_vec(),
        SplineDegree::Deg2 => (0..n)
            .map(|l| 0.625 * (f(l) + f(l + 1)) - 0.125 * (f(l - 1) + f(l + 2)))
            .collect(),
    }
}

/// Values of Σ c_ℓ φ(Nx − ℓ) at the knots x = m/N.
pub fn eval_1d_at_knots(coeffs: &[f64], degree: SplineDegree) -> Vec<f64> {
    let n = coeffs.len();
    match degree {
        SplineDegree::Deg1 => coeffs.to_vec(),
        SplineDegree::Deg2 => (0..n).map(|m| 0.5 * (coeffs[m] + coeffs[(m + n - 1) % n])).collect(),
    }
}

/// Quasi-interpolation along one axis with samples at basis centres:
/// Deg2 uses c_k = 5/4 f − 1/8 (left + right neighbour), Deg1 is nodal.
fn interp_axis(a: &ArrayD<f64>, axis: usize, degree: SplineDegree, space: ShiftedSpaceTag) -> ArrayD<f64> {
    match degree {
        SplineDegree::Deg1 => a.clone(),
        SplineDegree::Deg2 => {
            let s = index_shift(degree, space);
            stencil_axis(a, axis, &[(s - 1, -0.125), (s, 1.25), (s + 1, -0.125)])
        }
    }
}

fn eval_axis(c: &ArrayD<f64>, axis: usize, degree: SplineDegree, space: ShiftedSpaceTag) -> ArrayD<f64> {
    match degree {
        SplineDegree::Deg1 => c.clone(),
        SplineDegree::Deg2 => {
            let s = index_shift(degree, space);
            stencil_axis(c, axis, &[(-s - 1, 0.125), (-s, 0.75), (-s + 1, 0.125)])
        }
    }
}

fn check_centres(field: &StaggeredField, space: ShiftedSpaceTag) -> Result<()> {
    let nd = field.ndim();
    if !(2..=3).contains(&nd) || field.ncomp() != nd {
        return Err(Error::Shape("expected a 2D or 3D vector field".into()));
    }
    for i in 0..nd {
        for (a, &d) in component_degrees(space, nd, i).iter().enumerate() {
            if (field.offsets[i][a] - centre_offset(d, space)).abs() > 1e-12 {
                return Err(Error::Layout(format!(
                    "component {i} axis {a}: samples at offset {} but basis centres at {}",
                    field.offsets[i][a],
                    centre_offset(d, space)
                )));
            }
        }
    }
    Ok(())
}

fn per_axis(
    field: &StaggeredField,
    space: ShiftedSpaceTag,
    op: fn(&ArrayD<f64>, usize, SplineDegree, ShiftedSpaceTag) -> ArrayD<f64>,
) -> Result<SplineField> {
    check_centres(field, space)?;
    let coeffs = field
        .components
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let mut c = comp.clone();
            for (a, &d) in component_degrees(space, field.ndim(), i).iter().enumerate() {
                c = op(&c, a, d, space);
            }
            c
        })
        .collect();
    Ok(SplineField { space, coeffs })
}

/// Quasi-interpolation I_J (plain) or I_J^# (sharp) of a staggered field.
pub fn interp_field(field: &StaggeredField, space: ShiftedSpaceTag) -> Result<SplineField> {
    per_axis(field, space, interp_axis)
}

/// Inverse of the evaluation stencil along one axis, by division of its symbol.
fn deconvolve_axis(a: &ArrayD<f64>, axis: usize, degree: SplineDegree, space: ShiftedSpaceTag) -> ArrayD<f64> {
    if degree == SplineDegree::Deg1 {
        return a.clone();
    }
    let n = a.shape()[axis];
    let s = index_shift(degree, space) as f64;
    let mut z = a.mapv(|v| Complex64::new(v, 0.0));
    fft_axis(&mut z, axis, false);
    for (idx, v) in z.indexed_iter_mut() {
        let t = 2.0 * PI * idx[axis] as f64 / n as f64;
        *v *= Complex64::from_polar(1.0, t * s) / (0.75 + 0.25 * t.cos()) / n as f64;
    }
    fft_axis(&mut z, axis, true);
    z.mapv(|v| v.re)
}

/// Exact interpolation: the spline whose values at the basis centres are the samples.
pub fn interp_exact_field(field: &StaggeredField, space: ShiftedSpaceTag) -> Result<SplineField> {
    per_axis(field, space, deconvolve_axis)
}

/// Evaluates the spline expansion at the basis centres (the standard staggered points).
pub fn eval_at_grid(spline: &SplineField) -> Result<StaggeredField> {
    let nd = spline.ndim();
    let comps = spline
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut v = c.clone();
            for (a, &d) in spline.degrees(i).iter().enumerate() {
                v = eval_axis(&v, a, d, spline.space);
            }
            v
        })
        .collect();
    let offsets = (0..nd)
        .map(|i| {
            spline
                .degrees(i)
                .iter()
                .map(|&d| centre_offset(d, spline.space))
                .collect()
        })
        .collect();
    StaggeredField::new(comps, offsets)
}

/// Evaluates a scalar tensor spline with per-axis `degrees` at its basis centres.
/// Returns the values and the sample offsets (grid units) of those centres.
pub fn eval_scalar(coeffs: &ArrayD<f64>, degrees: &[SplineDegree], space: ShiftedSpaceTag) -> (ArrayD<f64>, Vec<f64>) {
    let mut v = coeffs.clone();
    for (a, &d) in degrees.iter().enumerate() {
        v = eval_axis(&v, a, d, space);
    }
    (v, degrees.iter().map(|&d| centre_offset(d, space)).collect())
}

fn sinc_half(xi: f64) -> f64 {
    if xi == 0.0 {
        1.0
    } else {
        (xi / 2.0).sin() / (xi / 2.0)
    }
}

/// Fourier transform ∫ φ*(x) e^{−iξx} dx of the dual scaling function,
/// with the infinite product truncated at `depth` factors.
pub fn dual_scaling_fourier_depth(degree: SplineDegree, xi: f64, depth: usize) -> Complex64 {
    let s = sinc_half(xi);
    let prod: f64 = (1..=depth).map(|j| 2.0 - (xi / 2f64.powi(j as i32)).cos()).product();
    let p0 = s * s * prod;
    match degree {
        SplineDegree::Deg1 => Complex64::new(p0, 0.0),
        // φ₁*' = φ₀*(·+1) − φ₀*, so iξ φ̂₁* = (e^{iξ} − 1) φ̂₀*
        SplineDegree::Deg2 => Complex64::from_polar(p0 / s, -xi / 2.0),
    }
}

pub fn dual_scaling_fourier(degree: SplineDegree, xi: f64) -> Complex64 {
    dual_scaling_fourier_depth(degree, xi, DUAL_PRODUCT_DEPTH)
}

/// Per-axis symbol of the biorthogonal projection on an `n`-point grid.
fn projection_symbol(degree: SplineDegree, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|m| {
            let s = dual_scaling_fourier(degree, 2.0 * PI * wavenumber(m, n) / n as f64).conj();
            // at Nyquist ±π alias; the real part is the symmetric average
            if 2 * m == n {
                Complex64::new(s.re, 0.0)
            } else {
                s
            }
        })
        .collect()
}

fn project_modes(u: &SpectralField) -> Result<Vec<ArrayD<Complex64>>> {
    log2_exact(u.n)?;
    if u.ncomp() != u.ndim || !(2..=3).contains(&u.ndim) {
        return Err(Error::Shape("expected a 2D or 3D vector field".into()));
    }
    let syms = [
        projection_symbol(SplineDegree::Deg1, u.n),
        projection_symbol(SplineDegree::Deg2, u.n),
    ];
    Ok(u.components
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let degs = component_degrees(ShiftedSpaceTag::Plain, u.ndim, i);
            let mut a = c.clone();
            a.indexed_iter_mut().for_each(|(idx, v)| {
                for (ax, &d) in degs.iter().enumerate() {
                    *v *= syms[(d == SplineDegree::Deg2) as usize][idx[ax]];
                }
            });
            fft_nd(&mut a, true);
            a
        })
        .collect())
}

/// Biorthogonal projection onto the plain spline space computed from the spectrum:
/// c_k = N^n ∫ u(x) Π φ*(N x − k) dx, evaluated mode by mode.
pub fn fourier_project(u: &SpectralField) -> Result<SplineField> {
    Ok(SplineField {
        space: ShiftedSpaceTag::Plain,
        coeffs: project_modes(u)?.into_iter().map(|a| a.mapv(|v| v.re)).collect(),
    })
}

/// Fourier projection of sampled data (any stagger), through the DFT.
pub fn fourier_project_field(field: &StaggeredField) -> Result<SplineField> {
    fourier_project(&SpectralField::from_field(field)?)
}

/// Largest imaginary part the projection discards when taking the real part.
pub fn fourier_project_imag_residue(u: &SpectralField) -> Result<f64> {
    Ok(project_modes(u)?
        .iter()
        .flat_map(|a| a.iter().map(|v| v.im.abs()))
        .fold(0.0, f64::max))
}
