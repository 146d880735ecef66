//! Anisotropic curl-free (gradient) wavelets in 2D and pressure recovery.
//!
//! The gradient MRA is the half-shifted (Ṽ⁰⊗Ṽ¹)×(Ṽ¹⊗Ṽ⁰). A pressure coefficient P of
//! ψ₁⊗ψ₁ at levels (j₁, j₂) has gradient coefficients (4·2^{j₁} P, 4·2^{j₂} P), so
//! d_curl = 4P. Blocks with one scaling axis are the 1D edge blocks; the pure scaling
//! block holds only harmonic content and is kept aside.

use std::collections::BTreeMap;

use ndarray::ArrayD;

use crate::divfree::{axis_ops, AxisOp, VectorCoeffs};
use crate::error::{Error, Result};
use crate::fwt::{self, BlockKey, Scale, TransformMode, WaveletPyramid};
use crate::sampling::{eval_scalar, ShiftedSpaceTag};
use crate::splines::SplineDegree;

/// Component pyramids in the gradient MRA (`space == Sharp`).
pub type GradVectorCoeffs = VectorCoeffs;

#[derive(Clone, Debug, PartialEq)]
pub enum CurlBlock {
    Split {
        curl: ArrayD<f64>,
        complement: ArrayD<f64>,
    },
    /// Pure scaling block, outside the gradient part.
    Scaling(Vec<ArrayD<f64>>),
}

impl CurlBlock {
    fn arrays(&self) -> Vec<&ArrayD<f64>> {
        match self {
            CurlBlock::Split { curl, complement } => vec![curl, complement],
            CurlBlock::Scaling(c) => c.iter().collect(),
        }
    }

    fn arrays_mut(&mut self) -> Vec<&mut ArrayD<f64>> {
        match self {
            CurlBlock::Split { curl, complement } => vec![curl, complement],
            CurlBlock::Scaling(c) => c.iter_mut().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurlFreeCoeffs {
    pub template: GradVectorCoeffs,
    pub blocks: BTreeMap<BlockKey, CurlBlock>,
}

impl CurlFreeCoeffs {
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            b.arrays_mut().into_iter().for_each(|a| a.fill(0.0));
        }
        out
    }

    /// Keeps only the d_curl coefficients.
    pub fn curl_only(&self) -> Self {
        let mut out = self.clone();
        for b in out.blocks.values_mut() {
            match b {
                CurlBlock::Split { complement, .. } => complement.fill(0.0),
                CurlBlock::Scaling(c) => c.iter_mut().for_each(|a| a.fill(0.0)),
            }
        }
        out
    }

    pub fn complement_norm(&self) -> f64 {
        self.blocks
            .values()
            .filter_map(|b| match b {
                CurlBlock::Split { complement, .. } => Some(complement.iter().map(|v| v * v).sum::<f64>()),
                CurlBlock::Scaling(_) => None,
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn curl_norm(&self) -> f64 {
        self.blocks
            .values()
            .filter_map(|b| match b {
                CurlBlock::Split { curl, .. } => Some(curl.iter().map(|v| v * v).sum::<f64>()),
                CurlBlock::Scaling(_) => None,
            })
            .sum::<f64>()
            .sqrt()
    }

    /// d_curl of the 1D edge blocks along `axis` (wavelet along `axis`, scaling along the other).
    pub fn edge_blocks(&self, axis: usize) -> Vec<(&BlockKey, &ArrayD<f64>)> {
        self.blocks
            .iter()
            .filter_map(|(k, b)| match (k, b) {
                (BlockKey::Aniso(s), CurlBlock::Split { curl, .. })
                    if s[axis].is_detail() && s.iter().enumerate().all(|(a, x)| a == axis || *x == Scale::Coarse) =>
                {
                    Some((k, curl))
                }
                _ => None,
            })
            .collect()
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) -> Result<()> {
        if self.blocks.len() != other.blocks.len() {
            return Err(Error::Shape("curl-free coefficient layouts differ".into()));
        }
        for (k, b) in self.blocks.iter_mut() {
            let o = other
                .blocks
                .get(k)
                .ok_or_else(|| Error::Shape(format!("missing block {k:?}")))?;
            let (mine, theirs) = (b.arrays_mut(), o.arrays());
            if mine.len() != theirs.len() {
                return Err(Error::Shape(format!("block {k:?} differs in kind")));
            }
            for (m, t) in mine.into_iter().zip(theirs) {
                m.scaled_add(alpha, t);
            }
        }
        Ok(())
    }
}

fn split_block(ops: &[AxisOp], d: &[ArrayD<f64>]) -> CurlBlock {
    match (ops[0], ops[1]) {
        (AxisOp::Wavelet(w1), AxisOp::Wavelet(w2)) => {
            let s = w1 * w1 + w2 * w2;
            CurlBlock::Split {
                curl: (&d[0] * w1 + &d[1] * w2) / s,
                complement: (&d[0] * w2 - &d[1] * w1) / s,
            }
        }
        (AxisOp::Scaling(_), AxisOp::Scaling(_)) => CurlBlock::Scaling(d.to_vec()),
        _ => {
            let p = if ops[0].is_wavelet() { 0 } else { 1 };
            let q = 1 - p;
            let wp = ops[p].weight();
            CurlBlock::Split {
                curl: &d[p] / wp,
                complement: &d[q] - ops[q].apply(&d[p], q) / (4.0 * wp),
            }
        }
    }
}

fn merge_block(ops: &[AxisOp], b: &CurlBlock) -> Vec<ArrayD<f64>> {
    let (c, n) = match b {
        CurlBlock::Scaling(d) => return d.clone(),
        CurlBlock::Split { curl, complement } => (curl, complement),
    };
    match (ops[0], ops[1]) {
        (AxisOp::Wavelet(w1), AxisOp::Wavelet(w2)) => vec![c * w1 + n * w2, c * w2 - n * w1],
        _ => {
            let p = if ops[0].is_wavelet() { 0 } else { 1 };
            let q = 1 - p;
            let wp = ops[p].weight();
            let dp = c * wp;
            let dq = n + &(ops[q].apply(&dp, q) / (4.0 * wp));
            if p == 0 {
                vec![dp, dq]
            } else {
                vec![dq, dp]
            }
        }
    }
}

fn check_grad(v: &GradVectorCoeffs) -> Result<()> {
    if v.space != ShiftedSpaceTag::Sharp {
        return Err(Error::Layout("curl-free splitting needs the half-shifted gradient MRA".into()));
    }
    if v.ndim() != 2 || v.mode() != TransformMode::Anisotropic {
        return Err(Error::Layout("curl-free wavelets are 2D anisotropic only".into()));
    }
    Ok(())
}

pub fn to_curlfree_aniso2d(v: &GradVectorCoeffs) -> Result<CurlFreeCoeffs> {
    check_grad(v)?;
    let blocks = v.components[0]
        .blocks
        .keys()
        .map(|k| {
            let ops = axis_ops(&v.components[0], k);
            let d: Vec<ArrayD<f64>> = v.components.iter().map(|c| c.blocks[k].clone()).collect();
            (k.clone(), split_block(&ops, &d))
        })
        .collect();
    Ok(CurlFreeCoeffs {
        template: v.zeros_like(),
        blocks,
    })
}

pub fn from_curlfree_aniso2d(c: &CurlFreeCoeffs) -> Result<GradVectorCoeffs> {
    check_grad(&c.template)?;
    let mut out = c.template.clone();
    let keys: Vec<BlockKey> = out.components[0].blocks.keys().cloned().collect();
    for k in keys {
        let b = c
            .blocks
            .get(&k)
            .ok_or_else(|| Error::Shape(format!("missing block {k:?}")))?;
        let want = out.components[0].blocks[&k].shape().to_vec();
        if b.arrays().iter().any(|a| a.shape() != want.as_slice()) {
            return Err(Error::Shape(format!("block {k:?} has the wrong shape")));
        }
        let ops = axis_ops(&out.components[0], &k);
        for (comp, arr) in out.components.iter_mut().zip(merge_block(&ops, b)) {
            *comp.blocks.get_mut(&k).unwrap() = arr;
        }
    }
    Ok(out)
}

/// Wavelet coefficients of the pressure in V¹⊗V¹ (half-shifted), P = d_curl / 4.
pub fn pressure_coeffs(c: &CurlFreeCoeffs) -> Result<WaveletPyramid> {
    check_grad(&c.template)?;
    let t = &c.template.components[0];
    let mut p = WaveletPyramid::zeros(
        TransformMode::Anisotropic,
        &t.shape,
        &[SplineDegree::Deg2, SplineDegree::Deg2],
        &t.levels,
    )?;
    for (k, b) in p.blocks.iter_mut() {
        if let Some(CurlBlock::Split { curl, .. }) = c.blocks.get(k) {
            *b = curl * 0.25;
        }
    }
    Ok(p)
}

/// Pressure at the collocation points m/N, normalised to zero mean.
pub fn reconstruct_pressure(c: &CurlFreeCoeffs) -> Result<ArrayD<f64>> {
    let coeffs = fwt::anisotropic_inverse(&pressure_coeffs(c)?)?;
    let (mut p, _) = eval_scalar(&coeffs, &[SplineDegree::Deg2, SplineDegree::Deg2], ShiftedSpaceTag::Sharp);
    let mean = p.mean().unwrap_or(0.0);
    p.mapv_inplace(|v| v - mean);
    Ok(p)
}
