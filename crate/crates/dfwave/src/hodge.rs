//! Iterative wavelet Hodge decomposition on staggered periodic grids.
//!
//! Each iteration extracts a div-free part in the plain MRA and a gradient part in
//! the half-shifted MRA, both evaluated back at the sample points, and continues
//! on the pointwise remainder. Transforms run at full depth so the pure scaling
//! block is the field mean, which is assigned to the div-free part.

use crate::curlfree::{from_curlfree_aniso2d, reconstruct_pressure, to_curlfree_aniso2d, CurlFreeCoeffs};
use crate::divfree::{from_divfree, to_divfree, DivFreeCoeffs, VectorCoeffs};
use crate::error::{log2_exact, Error, Result};
use crate::fwt::TransformMode;
use crate::sampling::{
    eval_at_grid, fourier_project_field, interp_exact_field, interp_field, ShiftedSpaceTag, SplineField, StaggeredField,
};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InterpKind {
    /// Quasi-interpolation at every step.
    Quasi,
    /// Fourier projection for the first div-free step, quasi-interpolation afterwards.
    FourierFirstStep,
    /// Exact spline interpolation of the samples at every step.
    Exact,
}

fn to_spline(v: &StaggeredField, space: ShiftedSpaceTag, kind: InterpKind, first: bool) -> Result<SplineField> {
    match kind {
        InterpKind::Exact => interp_exact_field(v, space),
        InterpKind::FourierFirstStep if first && space == ShiftedSpaceTag::Plain => fourier_project_field(v),
        _ => interp_field(v, space),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HodgeConfig {
    /// Stop once ‖vᵖ‖ < epsilon · ‖v⁰‖.
    pub epsilon: f64,
    pub max_iter: usize,
    pub interp: InterpKind,
    pub record_history: bool,
}

impl Default for HodgeConfig {
    fn default() -> Self {
        HodgeConfig {
            epsilon: 1e-8,
            max_iter: 500,
            interp: InterpKind::Quasi,
            record_history: true,
        }
    }
}

impl HodgeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.epsilon.is_infinite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct HodgeResult {
    /// Σ_p of the div-free coefficients (complements zero), mean included.
    pub div_coeffs: DivFreeCoeffs,
    /// Σ_p of the curl-free coefficients (complements zero).
    pub curl_coeffs: CurlFreeCoeffs,
    /// Relative residual ‖vᵖ‖/‖v⁰‖ after each iteration.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Pointwise remainder after the last iteration.
    pub remainder: StaggeredField,
}

impl HodgeResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

fn full_levels(field: &StaggeredField) -> Result<Vec<usize>> {
    let j = log2_exact(field.n)? as usize;
    Ok(vec![j; field.ndim()])
}

fn check_input(field: &StaggeredField, nd: usize) -> Result<()> {
    if field.ndim() != nd || !field.is_staggered() {
        return Err(Error::Layout(format!("expected a {nd}D field on the staggered grid")));
    }
    Ok(())
}

fn div_step(v: &StaggeredField, levels: &[usize], kind: InterpKind, first: bool) -> Result<(DivFreeCoeffs, StaggeredField)> {
    let spline = to_spline(v, ShiftedSpaceTag::Plain, kind, first)?;
    let vc = VectorCoeffs::analyze(&spline, TransformMode::Anisotropic, levels)?;
    let dc = to_divfree(&vc)?.without_complement();
    let vdiv = eval_at_grid(&from_divfree(&dc)?.synthesize()?)?;
    Ok((dc, vdiv))
}

fn curl_step(r: &StaggeredField, levels: &[usize], kind: InterpKind) -> Result<(CurlFreeCoeffs, StaggeredField)> {
    let spline = to_spline(r, ShiftedSpaceTag::Sharp, kind, false)?;
    let gc = VectorCoeffs::analyze(&spline, TransformMode::Anisotropic, levels)?;
    let cc = to_curlfree_aniso2d(&gc)?.curl_only();
    let vcurl = eval_at_grid(&from_curlfree_aniso2d(&cc)?.synthesize()?)?;
    Ok((cc, vcurl))
}

/// 2D decomposition v ≈ Σ v_divᵖ + Σ v_curlᵖ.
pub fn hodge_decompose(field: &StaggeredField, cfg: &HodgeConfig) -> Result<HodgeResult> {
    cfg.validate()?;
    check_input(field, 2)?;
    let levels = full_levels(field)?;
    let zero = StaggeredField::zeros(field.n, 2)?;
    let zero_spline = interp_field(&zero, ShiftedSpaceTag::Plain)?;
    let mut div_acc = to_divfree(&VectorCoeffs::analyze(&zero_spline, TransformMode::Anisotropic, &levels)?)?;
    let zero_grad = interp_field(&zero, ShiftedSpaceTag::Sharp)?;
    let mut curl_acc = to_curlfree_aniso2d(&VectorCoeffs::analyze(&zero_grad, TransformMode::Anisotropic, &levels)?)?;

    let n0 = field.norm();
    let mut history = Vec::new();
    let mut v = field.clone();
    let mut iterations = 0;
    let mut converged = n0 == 0.0;
    while !converged && iterations < cfg.max_iter {
        let (dc, vdiv) = div_step(&v, &levels, cfg.interp, iterations == 0)?;
        let r = v.sub(&vdiv)?;
        let (cc, vcurl) = curl_step(&r, &levels, cfg.interp)?;
        v = r.sub(&vcurl)?;
        div_acc.axpy(1.0, &dc)?;
        curl_acc.axpy(1.0, &cc)?;
        iterations += 1;
        let res = v.norm() / n0;
        if !res.is_finite() {
            return Err(Error::InvalidParameter("residual is not finite".into()));
        }
        if cfg.record_history || iterations == 1 {
            history.push(res);
        } else {
            history[0] = res;
        }
        converged = res < cfg.epsilon;
    }
    Ok(HodgeResult {
        div_coeffs: div_acc,
        curl_coeffs: curl_acc,
        residual_history: history,
        iterations,
        converged,
        remainder: v,
    })
}

/// (u_div, u_curl) at the staggered sample points.
pub fn reconstruct_parts(result: &HodgeResult) -> Result<(StaggeredField, StaggeredField)> {
    let u_div = eval_at_grid(&from_divfree(&result.div_coeffs)?.synthesize()?)?;
    let u_curl = eval_at_grid(&from_curlfree_aniso2d(&result.curl_coeffs)?.synthesize()?)?;
    Ok((u_div, u_curl))
}

/// Pressure at collocation points (zero mean) from the accumulated curl-free part.
pub fn pressure(result: &HodgeResult) -> Result<ndarray::ArrayD<f64>> {
    reconstruct_pressure(&result.curl_coeffs)
}

#[derive(Clone, Debug)]
pub struct HodgeResult3d {
    pub div_coeffs: DivFreeCoeffs,
    /// Relative size ‖v_divᵖ‖/‖v⁰‖ of each extracted increment.
    pub increment_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Pointwise remainder v − u_div.
    pub remainder: StaggeredField,
}

/// 3D div-free extraction loop: v^{p+1} = vᵖ − v_divᵖ until the increment drops below ε.
pub fn hodge_divfree_3d(field: &StaggeredField, cfg: &HodgeConfig) -> Result<HodgeResult3d> {
    cfg.validate()?;
    check_input(field, 3)?;
    let levels = full_levels(field)?;
    let zero = interp_field(&StaggeredField::zeros(field.n, 3)?, ShiftedSpaceTag::Plain)?;
    let mut div_acc = to_divfree(&VectorCoeffs::analyze(&zero, TransformMode::Anisotropic, &levels)?)?;
    let n0 = field.norm();
    let mut v = field.clone();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = n0 == 0.0;
    while !converged && iterations < cfg.max_iter {
        let (dc, vdiv) = div_step(&v, &levels, cfg.interp, iterations == 0)?;
        v = v.sub(&vdiv)?;
        div_acc.axpy(1.0, &dc)?;
        iterations += 1;
        let inc = vdiv.norm() / n0;
        if cfg.record_history || iterations == 1 {
            history.push(inc);
        } else {
            history[0] = inc;
        }
        converged = inc < cfg.epsilon;
    }
    Ok(HodgeResult3d {
        div_coeffs: div_acc,
        increment_history: history,
        iterations,
        converged,
        remainder: v,
    })
}

/// u_div of a 3D run at the staggered points.
pub fn reconstruct_div_3d(result: &HodgeResult3d) -> Result<StaggeredField> {
    eval_at_grid(&from_divfree(&result.div_coeffs)?.synthesize()?)
}
